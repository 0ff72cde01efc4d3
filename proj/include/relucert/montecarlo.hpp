#ifndef RELUCERT_MONTECARLO_HPP_
#define RELUCERT_MONTECARLO_HPP_

#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "relucert/certify.hpp"
#include "relucert/network.hpp"

namespace relucert {

struct McEstimate {
  std::uint64_t samples = 0;
  std::uint64_t agreements = 0;
  double point_estimate = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double confidence = 0.99;
  std::uint64_t seed = 0;
  // Inputs the estimate refers to, carried for validation against a
  // certificate.
  Eigen::VectorXd x;
  double r = 0.0;
};

// Wilson score interval for `successes` out of `n` Bernoulli trials at
// normal quantile z. Degenerate counts give valid one-sided intervals.
std::pair<double, double> wilson_interval(std::uint64_t successes,
                                          std::uint64_t n, double z);

// Two-sided normal quantile for a confidence level in (0, 1),
// e.g. 0.99 -> 2.5758...
double normal_quantile_two_sided(double confidence);

// Estimates the probability that a uniform perturbation of size r preserves
// the label at x, by drawing n_samples points from the sphere and counting
// label agreement. Sample i uses the substream (seed, i), so the result is
// bit-identical for any worker count.
McEstimate estimate_local_robustness(const ReluNetwork& net,
                                     const Eigen::VectorXd& x, double r,
                                     std::uint64_t n_samples,
                                     std::uint64_t seed,
                                     double confidence = 0.99,
                                     int workers = 1);

struct ValidationReport {
  bool pass = false;
  // Point estimate minus the tightest bound; negative slack alone is not a
  // failure, the bound must exceed the upper confidence limit.
  double slack = 0.0;
  double ci_high = 0.0;
  double bound_paper = 0.0;
  double bound_sum_exp = 0.0;
  double bound_exact_cap = 0.0;
};

// Empirical soundness check: a claimed lower bound is refuted only when it
// exceeds the plausible upper range of the true probability (est.ci_high).
// Throws std::invalid_argument when cert and est refer to different (x, r).
ValidationReport validate_certificate(const RobustnessCertificate& cert,
                                      const McEstimate& est);

// Monte Carlo estimate of the polar cap fraction: draws uniform points on
// S^{d-1} and counts first coordinates >= cos_alpha. Serves as the
// independent oracle for cap_fraction_exact.
McEstimate mc_cap_fraction(double cos_alpha, int d, std::uint64_t n_samples,
                           std::uint64_t seed, double confidence = 0.99);

// One-pass variant sharing a single sample set across many thresholds;
// returns the hit count per threshold. mc_cap_fraction(t, ...) equals
// mc_cap_counts({t}, ...) on the same seed.
std::vector<std::uint64_t> mc_cap_counts(const std::vector<double>& thresholds,
                                         int d, std::uint64_t n_samples,
                                         std::uint64_t seed);

nlohmann::json estimate_to_json(const McEstimate& est);
McEstimate estimate_from_json(const nlohmann::json& doc);

}  // namespace relucert

#endif  // RELUCERT_MONTECARLO_HPP_
