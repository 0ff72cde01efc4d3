#ifndef RELUCERT_REGION_HPP_
#define RELUCERT_REGION_HPP_

#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "relucert/network.hpp"

namespace relucert {

// Hidden unit (layer, index) collapsed onto input space: on the region its
// pre-activation equals w.x + c. Degenerate units (w vanishes, e.g. all
// upstream units inactive) contribute no hyperplane but keep their exact
// (w, c) so downstream propagation stays bit-consistent with forward().
struct PropagatedUnit {
  int layer = 0;  // 1-based hidden layer
  int index = 0;  // 0-based unit within the layer
  Eigen::VectorXd w;
  double c = 0.0;
  bool active = false;
  bool degenerate = false;
};

// Convex cell of the input-space partition containing a given anchor point.
// The cell is the intersection of half-spaces of the non-degenerate unit
// hyperplanes (open side when the unit is active, closed side otherwise)
// and of the decision hyperplane (open side iff label is 1).
struct LinearRegion {
  Eigen::VectorXd anchor;
  ActivationPattern pattern;
  std::vector<PropagatedUnit> units;  // all hidden units, (layer, index) order
  Eigen::VectorXd decision_w;
  double decision_c = 0.0;
  bool decision_degenerate = false;
  int label = 0;
  int hidden_layers = 0;

  int input_dim() const { return static_cast<int>(anchor.size()); }

  // Stored hyperplanes: non-degenerate units plus the decision hyperplane.
  int hyperplane_count() const;
};

// Builds the cell containing x_star together with its propagated
// hyperplanes, activity flags and collapsed decision pair. Layer 1 copies
// the network parameters; deeper layers and the decision pair accumulate
//   w_{l,k} = sum_{j active} v_{l,k,j} w_{l-1,j}
//   c_{l,k} = sum_{j active} v_{l,k,j} c_{l-1,j} + b_{l,k}
// so that on the cell every active unit's pre-activation is exactly
// w_{l,k}.x + c_{l,k}. Activity is decided by the sign of that collapsed
// pre-activation at x_star, ties falling to inactive.
LinearRegion build_region(const ReluNetwork& net, const Eigen::VectorXd& x_star);

// True iff x satisfies every stored half-space constraint with the anchor's
// signs: strict > 0 on active/open sides, <= 0 on inactive/closed sides.
bool contains(const LinearRegion& region, const Eigen::VectorXd& x);

struct HyperplaneDistance {
  int layer = 0;  // hidden layer, or hidden_layers + 1 for the decision hyperplane
  int index = 0;
  double distance = 0.0;
};

struct MarginReport {
  // Minimum distance over all stored hyperplanes; +infinity when the region
  // has none (constant classifier).
  double value = 0.0;
  std::vector<HyperplaneDistance> per_hyperplane;

  bool unbounded() const { return !std::isfinite(value); }
};

class RegionMembershipError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Distances from x to every stored hyperplane. Throws RegionMembershipError
// when x is not in the region.
MarginReport margin(const LinearRegion& region, const Eigen::VectorXd& x);

// Collapsed layer map: entry k is w_{l,k}.x + c_{l,k} for active units and 0
// otherwise; equals forward()'s layer output on the region. `layer` is
// 1-based. Throws on out-of-range layer or x outside the region.
Eigen::VectorXd collapsed_affine_eval(const LinearRegion& region, int layer,
                                      const Eigen::VectorXd& x);

// Region report as emitted by the CLI `region` command.
nlohmann::json region_report_json(const LinearRegion& region);

}  // namespace relucert

#endif  // RELUCERT_REGION_HPP_
