#include "relucert/geometry.hpp"

#include <cmath>
#include <stdexcept>

#include <boost/math/special_functions/beta.hpp>

namespace relucert {

Hyperplane::Hyperplane(Eigen::VectorXd normal_in, double bias_in)
    : normal(std::move(normal_in)), bias(bias_in) {
  if (normal.size() == 0) {
    throw std::invalid_argument("Hyperplane: empty normal");
  }
  if ((normal.array() == 0.0).all()) {
    throw std::invalid_argument("Hyperplane: zero normal is degenerate");
  }
}

namespace {

void check_dims(const Hyperplane& h, const Eigen::VectorXd& x) {
  if (h.normal.size() != x.size()) {
    throw std::invalid_argument("Hyperplane: dimension mismatch (normal has " +
                                std::to_string(h.normal.size()) +
                                " entries, point has " +
                                std::to_string(x.size()) + ")");
  }
}

}  // namespace

double signed_eval(const Hyperplane& h, const Eigen::VectorXd& x) {
  check_dims(h, x);
  return h.normal.dot(x) + h.bias;
}

double distance_to_hyperplane(const Hyperplane& h, const Eigen::VectorXd& x) {
  return std::abs(signed_eval(h, x)) / h.normal.norm();
}

Eigen::VectorXd project(const Hyperplane& h, const Eigen::VectorXd& x) {
  const double s = signed_eval(h, x);
  return x - (s / h.normal.squaredNorm()) * h.normal;
}

double cap_fraction_upper_bound(double cos_alpha, int d) {
  if (!(cos_alpha > 0.0 && cos_alpha <= 1.0)) {
    throw std::domain_error("cap_fraction_upper_bound: cos_alpha must be in (0, 1]");
  }
  if (d < 1) {
    throw std::domain_error("cap_fraction_upper_bound: d must be >= 1");
  }
  return std::exp(-0.5 * cos_alpha * cos_alpha * static_cast<double>(d));
}

double cap_fraction_exact(double cos_alpha, int d) {
  if (!(cos_alpha >= 0.0 && cos_alpha <= 1.0)) {
    throw std::domain_error("cap_fraction_exact: cos_alpha must be in [0, 1]");
  }
  if (d < 2) {
    throw std::domain_error("cap_fraction_exact: d must be >= 2");
  }
  if (cos_alpha == 0.0) return 0.5;
  if (cos_alpha == 1.0) return 0.0;
  const double a = 0.5 * (static_cast<double>(d) - 1.0);
  const double x = 1.0 - cos_alpha * cos_alpha;
  return 0.5 * boost::math::ibeta(a, 0.5, x);
}

SphereSpec::SphereSpec(Eigen::VectorXd center_in, double radius_in)
    : center(std::move(center_in)), radius(radius_in) {
  if (center.size() == 0) {
    throw std::invalid_argument("SphereSpec: zero-dimensional center");
  }
  if (!(radius > 0.0)) {
    throw std::invalid_argument("SphereSpec: radius must be positive");
  }
}

Eigen::VectorXd sample_sphere(const SphereSpec& spec, RngStream& rng) {
  const Eigen::Index d = spec.center.size();
  Eigen::VectorXd g(d);
  double norm = 0.0;
  do {
    for (Eigen::Index i = 0; i < d; ++i) g[i] = rng.next_normal();
    norm = g.norm();
  } while (norm == 0.0);
  return spec.center + (spec.radius / norm) * g;
}

}  // namespace relucert
