#pragma once

#include <Eigen/Dense>

namespace parnav {

/// Position or tangent vector in R² or R³.
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 3, 1>;
/// Square matrix of size at most 3×3.
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 3, 3>;

inline Vec vec2(double x, double y) {
  Vec v(2);
  v << x, y;
  return v;
}

inline Vec vec3(double x, double y, double z) {
  Vec v(3);
  v << x, y, z;
  return v;
}

/// z-component of the planar cross product (or |a × b| in 3D).
inline double cross_norm(const Vec& a, const Vec& b) {
  if (a.size() == 2) {
    return std::abs(a(0) * b(1) - a(1) * b(0));
  }
  return Eigen::Vector3d(a).cross(Eigen::Vector3d(b)).norm();
}

inline double cross_z(const Vec& a, const Vec& b) { return a(0) * b(1) - a(1) * b(0); }

/// Ratio of extreme eigenvalue magnitudes of a symmetric matrix.
double condition_number(const Mat& sym);

}  // namespace parnav
