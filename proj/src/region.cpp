#include "relucert/region.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace relucert {

namespace {

// Propagated normals below this norm are treated as zero. Exact zeros come
// from fully inactive upstream paths; anything this small would only produce
// meaningless distances.
double degenerate_threshold(const Eigen::VectorXd& anchor) {
  return 1e-12 * std::max(1.0, anchor.norm());
}

}  // namespace

int LinearRegion::hyperplane_count() const {
  int count = decision_degenerate ? 0 : 1;
  for (const auto& unit : units) {
    if (!unit.degenerate) ++count;
  }
  return count;
}

LinearRegion build_region(const ReluNetwork& net, const Eigen::VectorXd& x_star) {
  if (x_star.size() != net.input_dim) {
    throw std::invalid_argument("build_region: anchor has " +
                                std::to_string(x_star.size()) +
                                " entries, network expects " +
                                std::to_string(net.input_dim));
  }

  LinearRegion region;
  region.anchor = x_star;
  region.hidden_layers = static_cast<int>(net.hidden.size());
  const double w_tol = degenerate_threshold(x_star);

  // Collapsed affine map of the previous layer restricted to the cell:
  // row j of `w_prev` and entry j of `c_prev`, with inactive rows zeroed.
  Eigen::MatrixXd w_prev;
  Eigen::VectorXd c_prev;
  bool first = true;

  for (std::size_t l = 0; l < net.hidden.size(); ++l) {
    const auto& layer = net.hidden[l];
    Eigen::MatrixXd w_layer;
    Eigen::VectorXd c_layer;
    if (first) {
      w_layer = layer.weights;
      c_layer = layer.biases;
      first = false;
    } else {
      w_layer = layer.weights * w_prev;
      c_layer = layer.weights * c_prev + layer.biases;
    }

    const Eigen::Index n_l = w_layer.rows();
    std::vector<bool> flags(static_cast<std::size_t>(n_l));
    for (Eigen::Index k = 0; k < n_l; ++k) {
      PropagatedUnit unit;
      unit.layer = static_cast<int>(l) + 1;
      unit.index = static_cast<int>(k);
      unit.w = w_layer.row(k).transpose();
      unit.c = c_layer[k];
      unit.active = unit.w.dot(x_star) + unit.c > 0.0;
      unit.degenerate = unit.w.norm() < w_tol;
      flags[static_cast<std::size_t>(k)] = unit.active;
      region.units.push_back(std::move(unit));
    }
    region.pattern.active.push_back(flags);

    // Zero out inactive rows before feeding the next layer.
    for (Eigen::Index k = 0; k < n_l; ++k) {
      if (!flags[static_cast<std::size_t>(k)]) {
        w_layer.row(k).setZero();
        c_layer[k] = 0.0;
      }
    }
    w_prev = std::move(w_layer);
    c_prev = std::move(c_layer);
  }

  if (first) {
    // No hidden layers: the output unit acts on the input directly.
    region.decision_w = net.output_weights;
    region.decision_c = net.output_bias;
  } else {
    region.decision_w = w_prev.transpose() * net.output_weights;
    region.decision_c = net.output_weights.dot(c_prev) + net.output_bias;
  }
  region.decision_degenerate = region.decision_w.norm() < w_tol;
  region.label =
      heaviside_label(region.decision_w.dot(x_star) + region.decision_c);
  return region;
}

namespace {

void check_query_dims(const LinearRegion& region, const Eigen::VectorXd& x) {
  if (x.size() != region.anchor.size()) {
    throw std::invalid_argument("region query: dimension mismatch");
  }
}

bool side_matches(double value, bool open_side) {
  return open_side ? value > 0.0 : value <= 0.0;
}

}  // namespace

bool contains(const LinearRegion& region, const Eigen::VectorXd& x) {
  check_query_dims(region, x);
  for (const auto& unit : region.units) {
    if (unit.degenerate) continue;
    if (!side_matches(unit.w.dot(x) + unit.c, unit.active)) return false;
  }
  if (!region.decision_degenerate) {
    if (!side_matches(region.decision_w.dot(x) + region.decision_c,
                      region.label == 1)) {
      return false;
    }
  }
  return true;
}

MarginReport margin(const LinearRegion& region, const Eigen::VectorXd& x) {
  if (!contains(region, x)) {
    throw RegionMembershipError("margin: point is not in the region");
  }
  MarginReport report;
  report.value = std::numeric_limits<double>::infinity();
  for (const auto& unit : region.units) {
    if (unit.degenerate) continue;
    const double a_i = std::abs(unit.w.dot(x) + unit.c) / unit.w.norm();
    report.per_hyperplane.push_back({unit.layer, unit.index, a_i});
    report.value = std::min(report.value, a_i);
  }
  if (!region.decision_degenerate) {
    const double a_i = std::abs(region.decision_w.dot(x) + region.decision_c) /
                       region.decision_w.norm();
    report.per_hyperplane.push_back({region.hidden_layers + 1, 0, a_i});
    report.value = std::min(report.value, a_i);
  }
  return report;
}

Eigen::VectorXd collapsed_affine_eval(const LinearRegion& region, int layer,
                                      const Eigen::VectorXd& x) {
  if (layer < 1 || layer > region.hidden_layers) {
    throw std::out_of_range("collapsed_affine_eval: layer " +
                            std::to_string(layer) + " out of range");
  }
  if (!contains(region, x)) {
    throw RegionMembershipError("collapsed_affine_eval: point is not in the region");
  }
  std::vector<const PropagatedUnit*> layer_units;
  for (const auto& unit : region.units) {
    if (unit.layer == layer) layer_units.push_back(&unit);
  }
  Eigen::VectorXd y(static_cast<Eigen::Index>(layer_units.size()));
  for (std::size_t k = 0; k < layer_units.size(); ++k) {
    const auto& unit = *layer_units[k];
    y[static_cast<Eigen::Index>(k)] =
        unit.active ? unit.w.dot(x) + unit.c : 0.0;
  }
  return y;
}

nlohmann::json region_report_json(const LinearRegion& region) {
  nlohmann::json doc;
  nlohmann::json anchor = nlohmann::json::array();
  for (Eigen::Index i = 0; i < region.anchor.size(); ++i) {
    anchor.push_back(region.anchor[i]);
  }
  doc["anchor"] = std::move(anchor);
  doc["label"] = region.label;
  doc["pattern"] = region.pattern.active;
  doc["hyperplane_count"] = region.hyperplane_count();

  const MarginReport report = margin(region, region.anchor);
  doc["margin"] = report.unbounded() ? nlohmann::json(nullptr)
                                     : nlohmann::json(report.value);

  auto vec_json = [](const Eigen::VectorXd& v) {
    nlohmann::json arr = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
    return arr;
  };

  doc["units"] = nlohmann::json::array();
  for (const auto& unit : region.units) {
    nlohmann::json u;
    u["layer"] = unit.layer;
    u["index"] = unit.index;
    u["w"] = vec_json(unit.w);
    u["c"] = unit.c;
    u["active"] = unit.active;
    u["degenerate"] = unit.degenerate;
    if (!unit.degenerate) {
      u["distance"] =
          std::abs(unit.w.dot(region.anchor) + unit.c) / unit.w.norm();
    }
    doc["units"].push_back(std::move(u));
  }

  nlohmann::json decision;
  decision["w"] = vec_json(region.decision_w);
  decision["c"] = region.decision_c;
  decision["degenerate"] = region.decision_degenerate;
  if (!region.decision_degenerate) {
    decision["distance"] =
        std::abs(region.decision_w.dot(region.anchor) + region.decision_c) /
        region.decision_w.norm();
  }
  doc["decision"] = std::move(decision);
  return doc;
}

}  // namespace relucert
