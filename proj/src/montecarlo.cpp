#include "relucert/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <thread>

#include <boost/math/distributions/normal.hpp>

#include "relucert/rng.hpp"

namespace relucert {

std::pair<double, double> wilson_interval(std::uint64_t successes,
                                          std::uint64_t n, double z) {
  if (n == 0) throw std::domain_error("wilson_interval: n must be >= 1");
  if (successes > n) throw std::domain_error("wilson_interval: successes > n");
  if (!(z > 0.0)) throw std::domain_error("wilson_interval: z must be positive");
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(successes) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double center = (p + z2 / (2.0 * nn)) / denom;
  const double half =
      z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
  // At the boundary counts the interval ends are algebraically exact;
  // return them without rounding noise.
  const double low = successes == 0 ? 0.0 : std::max(0.0, center - half);
  const double high = successes == n ? 1.0 : std::min(1.0, center + half);
  return {low, high};
}

double normal_quantile_two_sided(double confidence) {
  if (!(confidence > 0.0 && confidence < 1.0)) {
    throw std::domain_error("confidence must be in (0, 1)");
  }
  const boost::math::normal_distribution<double> standard_normal;
  return boost::math::quantile(standard_normal, 0.5 * (1.0 + confidence));
}

namespace {

// Label evaluation with reusable per-layer buffers; the Monte Carlo loop
// must not allocate per sample.
struct ForwardWorkspace {
  std::vector<Eigen::VectorXd> layers;

  explicit ForwardWorkspace(const ReluNetwork& net) {
    layers.reserve(net.hidden.size());
    for (const auto& layer : net.hidden) {
      layers.emplace_back(layer.weights.rows());
    }
  }
};

int label_at(const ReluNetwork& net, const Eigen::VectorXd& point,
             ForwardWorkspace& ws) {
  const Eigen::VectorXd* prev = &point;
  for (std::size_t l = 0; l < net.hidden.size(); ++l) {
    ws.layers[l].noalias() = net.hidden[l].weights * (*prev);
    ws.layers[l] = (ws.layers[l] + net.hidden[l].biases).cwiseMax(0.0);
    prev = &ws.layers[l];
  }
  return heaviside_label(net.output_weights.dot(*prev) + net.output_bias);
}

// Runs fn(first, last, worker_slot) across `workers` threads partitioning
// [0, n). Each index must be processed independently of the partition.
template <typename Fn>
void parallel_chunks(std::uint64_t n, int workers, Fn fn) {
  workers = std::max(1, workers);
  if (workers == 1 || n < 2) {
    fn(std::uint64_t{0}, n, 0);
    return;
  }
  const std::uint64_t chunk = (n + workers - 1) / static_cast<std::uint64_t>(workers);
  std::vector<std::thread> threads;
  std::uint64_t first = 0;
  int slot = 0;
  while (first < n) {
    const std::uint64_t last = std::min(n, first + chunk);
    threads.emplace_back([=] { fn(first, last, slot); });
    first = last;
    ++slot;
  }
  for (auto& t : threads) t.join();
}

}  // namespace

McEstimate estimate_local_robustness(const ReluNetwork& net,
                                     const Eigen::VectorXd& x, double r,
                                     std::uint64_t n_samples,
                                     std::uint64_t seed, double confidence,
                                     int workers) {
  if (!(r > 0.0)) throw std::invalid_argument("estimate: radius must be positive");
  if (n_samples == 0) throw std::invalid_argument("estimate: need at least one sample");
  const int base_label = forward(net, x).label;
  const Eigen::Index d = x.size();

  workers = std::max(1, workers);
  std::vector<std::uint64_t> agree_per_worker(
      static_cast<std::size_t>(workers) + 1, 0);
  parallel_chunks(n_samples, workers,
                  [&](std::uint64_t first, std::uint64_t last, int slot) {
                    ForwardWorkspace ws(net);
                    Eigen::VectorXd g(d);
                    Eigen::VectorXd point(d);
                    std::uint64_t agree = 0;
                    for (std::uint64_t i = first; i < last; ++i) {
                      RngStream stream(seed, i);
                      double norm2 = 0.0;
                      do {
                        for (Eigen::Index k = 0; k < d; ++k) {
                          g[k] = stream.next_normal();
                        }
                        norm2 = g.squaredNorm();
                      } while (norm2 == 0.0);
                      point = x + (r / std::sqrt(norm2)) * g;
                      agree += label_at(net, point, ws) == base_label;
                    }
                    agree_per_worker[static_cast<std::size_t>(slot)] = agree;
                  });

  McEstimate est;
  est.samples = n_samples;
  for (std::uint64_t a : agree_per_worker) est.agreements += a;
  est.point_estimate =
      static_cast<double>(est.agreements) / static_cast<double>(n_samples);
  est.confidence = confidence;
  const double z = normal_quantile_two_sided(confidence);
  std::tie(est.ci_low, est.ci_high) =
      wilson_interval(est.agreements, n_samples, z);
  est.seed = seed;
  est.x = x;
  est.r = r;
  return est;
}

ValidationReport validate_certificate(const RobustnessCertificate& cert,
                                      const McEstimate& est) {
  if (cert.x.size() != est.x.size() ||
      (cert.x.array() != est.x.array()).any() || cert.r != est.r) {
    throw std::invalid_argument(
        "validate_certificate: certificate and estimate refer to different (x, r)");
  }
  ValidationReport report;
  report.ci_high = est.ci_high;
  report.bound_paper = cert.bound_paper;
  report.bound_sum_exp = cert.bound_sum_exp;
  report.bound_exact_cap = cert.bound_exact_cap;
  report.pass = est.ci_high >= cert.bound_paper &&
                est.ci_high >= cert.bound_sum_exp &&
                est.ci_high >= cert.bound_exact_cap;
  report.slack = est.point_estimate - cert.bound_exact_cap;
  return report;
}

std::vector<std::uint64_t> mc_cap_counts(const std::vector<double>& thresholds,
                                         int d, std::uint64_t n_samples,
                                         std::uint64_t seed) {
  for (double t : thresholds) {
    if (!(t >= 0.0 && t <= 1.0)) {
      throw std::domain_error("mc_cap_counts: thresholds must be in [0, 1]");
    }
  }
  if (d < 1) throw std::domain_error("mc_cap_counts: d must be >= 1");
  if (n_samples == 0) throw std::domain_error("mc_cap_counts: need samples");

  // Only the first coordinate of the uniform sphere point matters:
  // z.e1 = g1 / ||g||, so track g1 and ||g||^2 while drawing.
  std::vector<std::uint64_t> counts(thresholds.size(), 0);
  for (std::uint64_t i = 0; i < n_samples; ++i) {
    RngStream stream(seed, i);
    double g1 = 0.0;
    double norm2 = 0.0;
    do {
      g1 = stream.next_normal();
      norm2 = g1 * g1;
      for (int k = 1; k < d; ++k) {
        const double g = stream.next_normal();
        norm2 += g * g;
      }
    } while (norm2 == 0.0);
    const double z1 = g1 / std::sqrt(norm2);
    for (std::size_t t = 0; t < thresholds.size(); ++t) {
      counts[t] += z1 >= thresholds[t];
    }
  }
  return counts;
}

McEstimate mc_cap_fraction(double cos_alpha, int d, std::uint64_t n_samples,
                           std::uint64_t seed, double confidence) {
  const auto counts = mc_cap_counts({cos_alpha}, d, n_samples, seed);
  McEstimate est;
  est.samples = n_samples;
  est.agreements = counts[0];
  est.point_estimate =
      static_cast<double>(counts[0]) / static_cast<double>(n_samples);
  est.confidence = confidence;
  const double z = normal_quantile_two_sided(confidence);
  std::tie(est.ci_low, est.ci_high) = wilson_interval(counts[0], n_samples, z);
  est.seed = seed;
  return est;
}

nlohmann::json estimate_to_json(const McEstimate& est) {
  nlohmann::json doc;
  nlohmann::json x = nlohmann::json::array();
  for (Eigen::Index i = 0; i < est.x.size(); ++i) x.push_back(est.x[i]);
  doc["x"] = std::move(x);
  doc["r"] = est.r;
  doc["samples"] = est.samples;
  doc["agreements"] = est.agreements;
  doc["point_estimate"] = est.point_estimate;
  doc["ci_low"] = est.ci_low;
  doc["ci_high"] = est.ci_high;
  doc["confidence"] = est.confidence;
  doc["seed"] = est.seed;
  return doc;
}

McEstimate estimate_from_json(const nlohmann::json& doc) {
  McEstimate est;
  const auto& x = doc.at("x");
  est.x.resize(static_cast<Eigen::Index>(x.size()));
  Eigen::Index i = 0;
  for (const auto& v : x) est.x[i++] = v.get<double>();
  est.r = doc.at("r").get<double>();
  est.samples = doc.at("samples").get<std::uint64_t>();
  est.agreements = doc.at("agreements").get<std::uint64_t>();
  est.point_estimate = doc.at("point_estimate").get<double>();
  est.ci_low = doc.at("ci_low").get<double>();
  est.ci_high = doc.at("ci_high").get<double>();
  est.confidence = doc.at("confidence").get<double>();
  est.seed = doc.at("seed").get<std::uint64_t>();
  return est;
}

}  // namespace relucert
