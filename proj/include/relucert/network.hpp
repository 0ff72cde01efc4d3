#ifndef RELUCERT_NETWORK_HPP_
#define RELUCERT_NETWORK_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace relucert {

// Fully connected ReLU layer. Row j of `weights` is the weight vector of
// unit j; `biases[j]` is its bias.
struct DenseLayer {
  Eigen::MatrixXd weights;
  Eigen::VectorXd biases;
};

// ReLU network with a single Heaviside output unit. `hidden` may be empty,
// in which case the output unit acts directly on the input (a bare
// Heaviside perceptron).
//
// Convention pinned once for the whole project: the Heaviside step maps
// t > 0 to class 1 and t <= 0 to class 0, so ties fall to the closed
// half-space, consistent with relu(0) = 0.
struct ReluNetwork {
  int input_dim = 0;
  std::vector<DenseLayer> hidden;
  Eigen::VectorXd output_weights;
  double output_bias = 0.0;

  // Number of layers L (hidden layers plus the output unit).
  int depth() const { return static_cast<int>(hidden.size()) + 1; }

  // Total unit count n: all hidden units plus the output Heaviside unit.
  int total_units() const;
};

inline int heaviside_label(double t) { return t > 0.0 ? 1 : 0; }

// Per-hidden-layer activity flags; entry (l, j) is true iff unit j of hidden
// layer l has strictly positive pre-activation.
struct ActivationPattern {
  std::vector<std::vector<bool>> active;

  bool operator==(const ActivationPattern&) const = default;
};

struct ForwardResult {
  int label = 0;
  std::vector<Eigen::VectorXd> layer_outputs;  // y_1 .. y_{L-1}
  double output_preactivation = 0.0;
};

// Evaluates the network. Throws std::invalid_argument on dimension mismatch
// or non-finite input.
ForwardResult forward(const ReluNetwork& net, const Eigen::VectorXd& x);

ActivationPattern activation_pattern(const ReluNetwork& net,
                                     const Eigen::VectorXd& x);

struct ShapeError {
  int layer;  // 1-based hidden layer index; 0 for the output unit / global
  std::string message;
};

// Checks all shape invariants; an empty result means the network is valid.
std::vector<ShapeError> validate(const ReluNetwork& net);

// JSON form used on disk:
//   {"input_dim": d,
//    "hidden": [{"weights": [[...], ...], "biases": [...]}, ...],
//    "output": {"weights": [...], "bias": s}}
// Weights are row-major; all numbers are JSON doubles at full precision so
// load(save(net)) reproduces the network exactly.
nlohmann::json save_network(const ReluNetwork& net);

// Throws NetworkFormatError on malformed documents, shape violations or
// non-finite parameters.
ReluNetwork load_network(const nlohmann::json& doc);
ReluNetwork load_network_file(const std::string& path);

class NetworkFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Seeded random network: weights and biases i.i.d. normal scaled by
// 1/sqrt(fan-in). Deterministic per seed. Throws on non-positive widths
// or dimension.
ReluNetwork generate_network(int input_dim, const std::vector<int>& widths,
                             std::uint64_t seed);

}  // namespace relucert

#endif  // RELUCERT_NETWORK_HPP_
