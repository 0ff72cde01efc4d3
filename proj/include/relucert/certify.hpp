#ifndef RELUCERT_CERTIFY_HPP_
#define RELUCERT_CERTIFY_HPP_

#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "relucert/geometry.hpp"
#include "relucert/network.hpp"
#include "relucert/region.hpp"

namespace relucert {

// Thrown when the queried point lies on a boundary hyperplane (margin 0),
// the measure-zero set for which no probabilistic guarantee exists.
class SusceptibleInputError : public std::runtime_error {
 public:
  SusceptibleInputError(std::string message, int layer_in, int index_in)
      : std::runtime_error(std::move(message)), layer(layer_in), index(index_in) {}

  int layer;  // offending hyperplane; -1 when not applicable
  int index;
};

enum class PerceptronCase {
  within_radius,  // 0 < a <= r: probabilistic lower bound
  on_hyperplane,  // a = 0: exact value 1/2
  beyond_radius,  // a > r: exact value 1
};

struct CaseResult {
  PerceptronCase which;
  double value = 0.0;
  bool exact = false;
};

// Robustness of a single Heaviside perceptron at x under uniform random
// perturbations of size r. With a the distance from x to the hyperplane:
// a = 0 gives exactly 1/2, a > r gives exactly 1, and 0 < a <= r gives the
// lower bound 1 - exp(-a^2 d / (2 r^2)).
CaseResult perceptron_robustness(const Hyperplane& h, const Eigen::VectorXd& x,
                                 double r);

// Union bound for a shallow network of n Heaviside perceptrons:
// max(0, 1 - n exp(-a^2 d / (2 r^2))) with a the minimum distance over the
// hyperplanes. Throws SusceptibleInputError when x lies on one of them.
double shallow_bound(const std::vector<Hyperplane>& hyperplanes,
                     const Eigen::VectorXd& x, double r);

struct RobustnessCertificate {
  Eigen::VectorXd x;
  double r = 0.0;
  int d = 0;
  int n = 0;             // total unit count, output unit included
  double margin = 0.0;   // +infinity when the region has no hyperplanes
  std::vector<HyperplaneDistance> per_hyperplane;
  double bound_paper = 0.0;      // n-times-exponential form on the min margin
  double bound_sum_exp = 0.0;    // per-hyperplane exponential union bound
  double bound_exact_cap = 0.0;  // per-hyperplane exact cap union bound
  int label = 0;
  std::string notes;
};

// Builds the linear region of x, computes its margin and fills all three
// lower bounds. Hyperplanes farther than r cannot be crossed and contribute
// nothing to the union bounds; when even the nearest one is farther than r
// every bound is exactly 1. Bounds are clamped to [0, 1].
// Throws SusceptibleInputError when x lies on a region hyperplane.
RobustnessCertificate deep_certificate(const ReluNetwork& net,
                                       const Eigen::VectorXd& x, double r);

// Smallest margin a such that 1 - n exp(-a^2 d / (2 r^2)) >= 1 - epsilon:
// a = r sqrt(2 ln(n / epsilon) / d).
double required_margin(double epsilon, double r, int d, int n);

nlohmann::json certificate_to_json(const RobustnessCertificate& cert);
RobustnessCertificate certificate_from_json(const nlohmann::json& doc);

}  // namespace relucert

#endif  // RELUCERT_CERTIFY_HPP_
