#include "relucert/certify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace relucert {

namespace {

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

double exp_term(double a, double r, int d) {
  return std::exp(-0.5 * a * a * static_cast<double>(d) / (r * r));
}

void require_positive_radius(double r) {
  if (!(r > 0.0)) throw std::invalid_argument("perturbation radius must be positive");
}

}  // namespace

CaseResult perceptron_robustness(const Hyperplane& h, const Eigen::VectorXd& x,
                                 double r) {
  require_positive_radius(r);
  const double a = distance_to_hyperplane(h, x);
  const int d = static_cast<int>(x.size());
  if (a == 0.0) {
    return {PerceptronCase::on_hyperplane, 0.5, true};
  }
  if (a > r) {
    return {PerceptronCase::beyond_radius, 1.0, true};
  }
  return {PerceptronCase::within_radius, 1.0 - exp_term(a, r, d), false};
}

double shallow_bound(const std::vector<Hyperplane>& hyperplanes,
                     const Eigen::VectorXd& x, double r) {
  require_positive_radius(r);
  if (hyperplanes.empty()) {
    throw std::invalid_argument("shallow_bound: empty hyperplane list");
  }
  double a = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < hyperplanes.size(); ++i) {
    const double a_i = distance_to_hyperplane(hyperplanes[i], x);
    if (a_i == 0.0) {
      throw SusceptibleInputError(
          "shallow_bound: x lies on hyperplane " + std::to_string(i) +
              " (susceptible set, no guarantee)",
          -1, static_cast<int>(i));
    }
    a = std::min(a, a_i);
  }
  const double n = static_cast<double>(hyperplanes.size());
  return clamp01(1.0 - n * exp_term(a, r, static_cast<int>(x.size())));
}

RobustnessCertificate deep_certificate(const ReluNetwork& net,
                                       const Eigen::VectorXd& x, double r) {
  require_positive_radius(r);
  const LinearRegion region = build_region(net, x);
  const MarginReport report = margin(region, x);

  for (const auto& hd : report.per_hyperplane) {
    if (hd.distance == 0.0) {
      throw SusceptibleInputError(
          "x lies on the hyperplane of unit (layer " + std::to_string(hd.layer) +
              ", index " + std::to_string(hd.index) +
              "): susceptible set, no guarantee",
          hd.layer, hd.index);
    }
  }

  RobustnessCertificate cert;
  cert.x = x;
  cert.r = r;
  cert.d = net.input_dim;
  cert.n = net.total_units();
  cert.margin = report.value;
  cert.per_hyperplane = report.per_hyperplane;
  cert.label = region.label;

  const int d = cert.d;
  if (report.value > r) {
    // No hyperplane is reachable within radius r; the label cannot change.
    cert.bound_paper = 1.0;
    cert.bound_sum_exp = 1.0;
    cert.bound_exact_cap = 1.0;
    cert.notes = report.unbounded()
                     ? "constant region: no boundary hyperplanes"
                     : "margin exceeds radius: exact certificate";
    return cert;
  }

  cert.bound_paper =
      clamp01(1.0 - static_cast<double>(cert.n) * exp_term(report.value, r, d));

  double sum_exp = 0.0;
  double sum_cap = 0.0;
  for (const auto& hd : report.per_hyperplane) {
    if (hd.distance > r) continue;  // unreachable, crossing probability 0
    const double t = exp_term(hd.distance, r, d);
    sum_exp += t;
    // The exact cap measure needs d >= 2; in d = 1 fall back to the
    // exponential term, which dominates it.
    sum_cap += d >= 2 ? cap_fraction_exact(hd.distance / r, d) : t;
  }
  cert.bound_sum_exp = clamp01(1.0 - sum_exp);
  cert.bound_exact_cap = clamp01(1.0 - sum_cap);
  cert.notes = "union bound over " +
               std::to_string(report.per_hyperplane.size()) +
               " region hyperplanes";
  return cert;
}

double required_margin(double epsilon, double r, int d, int n) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) {
    throw std::domain_error("required_margin: epsilon must be in (0, 1)");
  }
  require_positive_radius(r);
  if (d < 1) throw std::domain_error("required_margin: d must be >= 1");
  if (n < 1) throw std::domain_error("required_margin: n must be >= 1");
  const double t =
      2.0 * std::log(static_cast<double>(n) / epsilon) / static_cast<double>(d);
  return t <= 0.0 ? 0.0 : r * std::sqrt(t);
}

nlohmann::json certificate_to_json(const RobustnessCertificate& cert) {
  nlohmann::json doc;
  nlohmann::json x = nlohmann::json::array();
  for (Eigen::Index i = 0; i < cert.x.size(); ++i) x.push_back(cert.x[i]);
  doc["x"] = std::move(x);
  doc["r"] = cert.r;
  doc["d"] = cert.d;
  doc["n"] = cert.n;
  doc["label"] = cert.label;
  doc["margin"] = std::isfinite(cert.margin) ? nlohmann::json(cert.margin)
                                             : nlohmann::json(nullptr);
  doc["per_hyperplane"] = nlohmann::json::array();
  for (const auto& hd : cert.per_hyperplane) {
    doc["per_hyperplane"].push_back(
        {{"layer", hd.layer}, {"index", hd.index}, {"distance", hd.distance}});
  }
  doc["bound_paper"] = cert.bound_paper;
  doc["bound_sum_exp"] = cert.bound_sum_exp;
  doc["bound_exact_cap"] = cert.bound_exact_cap;
  doc["notes"] = cert.notes;
  return doc;
}

RobustnessCertificate certificate_from_json(const nlohmann::json& doc) {
  RobustnessCertificate cert;
  const auto& x = doc.at("x");
  cert.x.resize(static_cast<Eigen::Index>(x.size()));
  Eigen::Index i = 0;
  for (const auto& v : x) cert.x[i++] = v.get<double>();
  cert.r = doc.at("r").get<double>();
  cert.d = doc.at("d").get<int>();
  cert.n = doc.at("n").get<int>();
  cert.label = doc.at("label").get<int>();
  cert.margin = doc.at("margin").is_null()
                    ? std::numeric_limits<double>::infinity()
                    : doc.at("margin").get<double>();
  for (const auto& hd : doc.at("per_hyperplane")) {
    cert.per_hyperplane.push_back({hd.at("layer").get<int>(),
                                   hd.at("index").get<int>(),
                                   hd.at("distance").get<double>()});
  }
  cert.bound_paper = doc.at("bound_paper").get<double>();
  cert.bound_sum_exp = doc.at("bound_sum_exp").get<double>();
  cert.bound_exact_cap = doc.at("bound_exact_cap").get<double>();
  if (doc.contains("notes")) cert.notes = doc["notes"].get<std::string>();
  return cert;
}

}  // namespace relucert
