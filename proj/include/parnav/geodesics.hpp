#pragma once

#include <array>
#include <vector>

#include "parnav/nav_metric.hpp"

namespace parnav {

/// Sampled curve c(t) with its velocity ċ(t) and F(c, ċ) at every node.
struct CurveRecord {
  std::vector<double> times;
  std::vector<Vec> positions;
  std::vector<Vec> velocities;
  std::vector<double> F_values;

  std::size_t size() const { return times.size(); }
  /// Checks equal lengths, at least two nodes and strictly increasing times.
  void validate() const;
};

/// Raised when a geodesic leaves the metric domain mid-integration.
class PartialCurveError : public DomainError {
 public:
  PartialCurveError(const std::string& what, CurveRecord prefix)
      : DomainError(what), prefix_(std::move(prefix)) {}
  const CurveRecord& prefix() const { return prefix_; }

 private:
  CurveRecord prefix_;
};

struct GeodesicProblem {
  Metric metric;
  Vec x0;
  Vec y0;
  double horizon = 1.0;
  double step = 1e-3;
};

/// G^i_jk stored densely; symmetric in (j, k).
class BerwaldCoefficients {
 public:
  explicit BerwaldCoefficients(int dim) : dim_(dim) {}
  int dim() const { return dim_; }
  double operator()(int i, int j, int k) const { return c_[(i * 3 + j) * 3 + k]; }
  double& operator()(int i, int j, int k) { return c_[(i * 3 + j) * 3 + k]; }
  /// G^i_jk a^j b^k.
  Vec contract(const Vec& a, const Vec& b) const;
  double max_abs() const;

 private:
  int dim_;
  std::array<double, 27> c_{};
};

enum class CovariantVariant {
  quadratic,  // dY^i/dt + G^i_jk Y^j Y^k
  affine,     // dY^i/dt + G^i_jk ċ^j Y^k
};

enum class Lagrangian { F, F_squared };

/// Spray coefficients G^i(x, y) of the geodesic equation c̈ + 2G(c, ċ) = 0.
Vec spray_coefficients(const Metric& metric, const TangentSample& s);

BerwaldCoefficients berwald_coefficients(const Metric& metric, const TangentSample& s);

/// One classical RK4 step of (ẋ, ẏ) = (y, −2G(x, y)).
TangentSample geodesic_rk4_step(const Metric& metric, const TangentSample& s, double h);

CurveRecord integrate_geodesic(const GeodesicProblem& problem);

std::vector<Vec> covariant_derivative(const Metric& metric, const CurveRecord& curve,
                                      const std::vector<Vec>& field,
                                      CovariantVariant variant = CovariantVariant::quadratic);

/// Trapezoidal ∫ L(c, ċ) dt with L = F or F².
double action_integral(const Metric& metric, const CurveRecord& curve, Lagrangian lagrangian);

/// Per-node |d/dt ∂L/∂ẋ − ∂L/∂x| for L = F²/2.
std::vector<double> euler_lagrange_residual(const Metric& metric, const CurveRecord& curve);

/// Second-order three-point derivative of node values on a possibly
/// non-uniform grid (one-sided at the ends).
std::vector<Vec> differentiate_along(const std::vector<double>& times,
                                     const std::vector<Vec>& values);

/// Builds a CurveRecord from positions and velocities, filling F_values.
CurveRecord make_curve(const Metric& metric, std::vector<double> times, std::vector<Vec> positions,
                       std::vector<Vec> velocities);

/// Rescales the parameter so that F ≡ 1: ds = F dt, dc/ds = ċ / F.
CurveRecord reparametrize_unit_speed(const Metric& metric, const CurveRecord& curve);

}  // namespace parnav
