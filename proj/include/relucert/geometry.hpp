#ifndef RELUCERT_GEOMETRY_HPP_
#define RELUCERT_GEOMETRY_HPP_

#include <Eigen/Dense>

#include "relucert/rng.hpp"

namespace relucert {

// Hyperplane {x | normal.x + bias = 0}. The normal need not be unit length;
// distance formulas divide by its norm. The closed half-space is the one
// where normal.x + bias <= 0, the open one where it is > 0.
struct Hyperplane {
  Eigen::VectorXd normal;
  double bias = 0.0;

  // Throws std::invalid_argument on an empty or all-zero normal.
  Hyperplane(Eigen::VectorXd normal_in, double bias_in);
};

// normal.x + bias. Result <= 0 places x in the closed half-space,
// > 0 in the open one. Throws on dimension mismatch.
double signed_eval(const Hyperplane& h, const Eigen::VectorXd& x);

// Euclidean distance |normal.x + bias| / ||normal||.
double distance_to_hyperplane(const Hyperplane& h, const Eigen::VectorXd& x);

// Orthogonal projection of x onto h; signed_eval(h, result) vanishes.
Eigen::VectorXd project(const Hyperplane& h, const Eigen::VectorXd& x);

// Upper bound exp(-cos_alpha^2 * d / 2) on the normalized measure of the
// polar cap {z in S^{d-1} | z.y >= cos_alpha}. Requires cos_alpha in (0, 1].
double cap_fraction_upper_bound(double cos_alpha, int d);

// Exact normalized measure of the polar cap {z in S^{d-1} | z.y >= cos_alpha}
// via the regularized incomplete beta function:
//   0.5 * I_{1 - t^2}((d-1)/2, 1/2),  t = cos_alpha.
// Requires cos_alpha in [0, 1] and d >= 2.
double cap_fraction_exact(double cos_alpha, int d);

// Sphere of given radius centered at a point; radius must be positive.
struct SphereSpec {
  Eigen::VectorXd center;
  double radius = 0.0;

  SphereSpec(Eigen::VectorXd center_in, double radius_in);
};

// Uniform draw from the sphere: d standard normals, normalized, scaled and
// translated. ||result - center|| equals radius to machine precision.
Eigen::VectorXd sample_sphere(const SphereSpec& spec, RngStream& rng);

}  // namespace relucert

#endif  // RELUCERT_GEOMETRY_HPP_
