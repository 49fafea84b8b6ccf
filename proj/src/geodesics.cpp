#include "parnav/geodesics.hpp"

#include <cmath>
#include <string>

#include "parnav/detail/derivatives.hpp"

namespace parnav {

namespace {

constexpr double kMaxCondition = 1e12;

void require_domain(const Metric& metric, const TangentSample& s) {
  if (!metric.evaluate(s.x, s.y).in_domain) {
    throw DomainError("sample lies outside the metric domain");
  }
}

void require_conditioned(const detail::Sq<double>& h, int n) {
  Mat g(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) g(i, j) = 0.5 * h[i][j];
  }
  const double cond = condition_number(g);
  if (!(cond <= kMaxCondition)) {
    throw SingularMetricError("fundamental tensor is singular (condition number " +
                              std::to_string(cond) + ")");
  }
}

Vec to_vec(const detail::Arr<double>& a, int n) {
  Vec v(n);
  for (int i = 0; i < n; ++i) v(i) = a[i];
  return v;
}

}  // namespace

void CurveRecord::validate() const {
  const auto n = times.size();
  if (n < 2) throw InvalidInputError("curve needs at least two nodes");
  if (positions.size() != n || velocities.size() != n || F_values.size() != n) {
    throw InvalidInputError("curve sequences have different lengths");
  }
  for (std::size_t k = 1; k < n; ++k) {
    if (!(times[k] > times[k - 1])) throw InvalidInputError("curve times must increase strictly");
  }
}

Vec BerwaldCoefficients::contract(const Vec& a, const Vec& b) const {
  Vec out = Vec::Zero(dim_);
  for (int i = 0; i < dim_; ++i) {
    for (int j = 0; j < dim_; ++j) {
      for (int k = 0; k < dim_; ++k) out(i) += (*this)(i, j, k) * a(j) * b(k);
    }
  }
  return out;
}

double BerwaldCoefficients::max_abs() const {
  double m = 0.0;
  for (double c : c_) m = std::max(m, std::abs(c));
  return m;
}

Vec spray_coefficients(const Metric& metric, const TangentSample& s) {
  require_domain(metric, s);
  const int n = metric.dim();
  const auto x = to_array<double>(s.x);
  const auto y = to_array<double>(s.y);
  require_conditioned(detail::hessian_y_f2(metric, x, y), n);
  return to_vec(detail::spray(metric, x, y), n);
}

BerwaldCoefficients berwald_coefficients(const Metric& metric, const TangentSample& s) {
  require_domain(metric, s);
  const int n = metric.dim();
  require_conditioned(
      detail::hessian_y_f2(metric, to_array<double>(s.x), to_array<double>(s.y)), n);

  detail::Arr<D2> xs{};
  for (int i = 0; i < n; ++i) xs[i] = detail::seed2<double>(s.x(i), 0.0, 0.0);
  BerwaldCoefficients out(n);
  for (int j = 0; j < n; ++j) {
    for (int k = j; k < n; ++k) {
      detail::Arr<D2> ys{};
      for (int i = 0; i < n; ++i) {
        ys[i] = detail::seed2<double>(s.y(i), i == k ? 1.0 : 0.0, i == j ? 1.0 : 0.0);
      }
      const auto g = detail::spray(metric, xs, ys);
      for (int i = 0; i < n; ++i) {
        out(i, j, k) = g[i].d.d;
        out(i, k, j) = g[i].d.d;
      }
    }
  }
  return out;
}

TangentSample geodesic_rk4_step(const Metric& metric, const TangentSample& s, double h) {
  auto accel = [&](const Vec& x, const Vec& y) -> Vec {
    return -2.0 * spray_coefficients(metric, {x, y});
  };
  const Vec k1x = s.y;
  const Vec k1y = accel(s.x, s.y);
  const Vec k2x = s.y + 0.5 * h * k1y;
  const Vec k2y = accel(s.x + 0.5 * h * k1x, k2x);
  const Vec k3x = s.y + 0.5 * h * k2y;
  const Vec k3y = accel(s.x + 0.5 * h * k2x, k3x);
  const Vec k4x = s.y + h * k3y;
  const Vec k4y = accel(s.x + h * k3x, k4x);
  return {s.x + (h / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x),
          s.y + (h / 6.0) * (k1y + 2.0 * k2y + 2.0 * k3y + k4y)};
}

CurveRecord integrate_geodesic(const GeodesicProblem& problem) {
  if (!(problem.step > 0.0) || !(problem.horizon > 0.0)) {
    throw InvalidInputError("geodesic step and horizon must be > 0");
  }
  const Metric& metric = problem.metric;
  TangentSample s{problem.x0, problem.y0};
  require_domain(metric, s);
  const long steps = std::max(1L, std::lround(problem.horizon / problem.step));

  CurveRecord curve;
  curve.times.reserve(steps + 1);
  auto push = [&](double t, const TangentSample& node) {
    curve.times.push_back(t);
    curve.positions.push_back(node.x);
    curve.velocities.push_back(node.y);
    curve.F_values.push_back(metric.evaluate(node.x, node.y).F);
  };
  push(0.0, s);
  for (long k = 1; k <= steps; ++k) {
    try {
      s = geodesic_rk4_step(metric, s, problem.step);
      require_domain(metric, s);
    } catch (const DomainError&) {
      throw PartialCurveError("geodesic left the metric domain at t = " +
                                  std::to_string(curve.times.back()),
                              std::move(curve));
    }
    push(static_cast<double>(k) * problem.step, s);
  }
  return curve;
}

std::vector<Vec> differentiate_along(const std::vector<double>& t, const std::vector<Vec>& f) {
  const std::size_t n = t.size();
  if (f.size() != n) throw InvalidInputError("value sequence length does not match time grid");
  if (n < 2) throw InvalidInputError("differentiation needs at least two nodes");
  std::vector<Vec> out(n);
  if (n == 2) {
    const Vec d = (f[1] - f[0]) / (t[1] - t[0]);
    out[0] = d;
    out[1] = d;
    return out;
  }
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double h1 = t[i] - t[i - 1];
    const double h2 = t[i + 1] - t[i];
    out[i] = (-h2 / (h1 * (h1 + h2))) * f[i - 1] + ((h2 - h1) / (h1 * h2)) * f[i] +
             (h1 / (h2 * (h1 + h2))) * f[i + 1];
  }
  {
    const double h1 = t[1] - t[0];
    const double h2 = t[2] - t[1];
    out[0] = (-(2.0 * h1 + h2) / (h1 * (h1 + h2))) * f[0] + ((h1 + h2) / (h1 * h2)) * f[1] -
             (h1 / (h2 * (h1 + h2))) * f[2];
  }
  {
    const double h1 = t[n - 2] - t[n - 3];
    const double h2 = t[n - 1] - t[n - 2];
    out[n - 1] = (h2 / (h1 * (h1 + h2))) * f[n - 3] - ((h1 + h2) / (h1 * h2)) * f[n - 2] +
                 ((2.0 * h2 + h1) / (h2 * (h1 + h2))) * f[n - 1];
  }
  return out;
}

std::vector<Vec> covariant_derivative(const Metric& metric, const CurveRecord& curve,
                                      const std::vector<Vec>& field, CovariantVariant variant) {
  curve.validate();
  if (field.size() != curve.size()) {
    throw InvalidInputError("field length " + std::to_string(field.size()) +
                            " does not match curve length " + std::to_string(curve.size()));
  }
  auto out = differentiate_along(curve.times, field);
  for (std::size_t k = 0; k < curve.size(); ++k) {
    const auto gamma = berwald_coefficients(metric, {curve.positions[k], curve.velocities[k]});
    const Vec& lead = variant == CovariantVariant::quadratic ? field[k] : curve.velocities[k];
    out[k] += gamma.contract(lead, field[k]);
  }
  return out;
}

double action_integral(const Metric& metric, const CurveRecord& curve, Lagrangian lagrangian) {
  curve.validate();
  auto integrand = [&](std::size_t k) {
    const auto v = metric.evaluate(curve.positions[k], curve.velocities[k]);
    if (!v.in_domain) throw DomainError("curve node outside the metric domain");
    return lagrangian == Lagrangian::F ? v.F : v.F * v.F;
  };
  double sum = 0.0;
  double prev = integrand(0);
  for (std::size_t k = 1; k < curve.size(); ++k) {
    const double cur = integrand(k);
    sum += 0.5 * (prev + cur) * (curve.times[k] - curve.times[k - 1]);
    prev = cur;
  }
  return sum;
}

std::vector<double> euler_lagrange_residual(const Metric& metric, const CurveRecord& curve) {
  curve.validate();
  if (curve.size() < 3) throw InvalidInputError("Euler-Lagrange residual needs >= 3 nodes");
  const int n = metric.dim();
  std::vector<Vec> momentum(curve.size());
  std::vector<Vec> force(curve.size());
  for (std::size_t k = 0; k < curve.size(); ++k) {
    require_domain(metric, {curve.positions[k], curve.velocities[k]});
    const auto x = to_array<double>(curve.positions[k]);
    const auto y = to_array<double>(curve.velocities[k]);
    momentum[k] = 0.5 * to_vec(detail::grad_y_f2(metric, x, y), n);
    force[k] = 0.5 * to_vec(detail::grad_x_f2(metric, x, y), n);
  }
  const auto dp = differentiate_along(curve.times, momentum);
  std::vector<double> out(curve.size());
  for (std::size_t k = 0; k < curve.size(); ++k) out[k] = (dp[k] - force[k]).norm();
  return out;
}

CurveRecord make_curve(const Metric& metric, std::vector<double> times, std::vector<Vec> positions,
                       std::vector<Vec> velocities) {
  CurveRecord c{std::move(times), std::move(positions), std::move(velocities), {}};
  c.F_values.reserve(c.times.size());
  for (std::size_t k = 0; k < c.velocities.size(); ++k) {
    c.F_values.push_back(metric.evaluate(c.positions[k], c.velocities[k]).F);
  }
  c.validate();
  return c;
}

CurveRecord reparametrize_unit_speed(const Metric& metric, const CurveRecord& curve) {
  curve.validate();
  std::vector<double> f(curve.size());
  for (std::size_t k = 0; k < curve.size(); ++k) {
    const auto v = metric.evaluate(curve.positions[k], curve.velocities[k]);
    if (!v.in_domain) throw DomainError("curve node outside the metric domain");
    f[k] = v.F;
  }
  CurveRecord out;
  out.times.push_back(curve.times.front());
  for (std::size_t k = 1; k < curve.size(); ++k) {
    out.times.push_back(out.times.back() +
                        0.5 * (f[k - 1] + f[k]) * (curve.times[k] - curve.times[k - 1]));
  }
  out.positions = curve.positions;
  for (std::size_t k = 0; k < curve.size(); ++k) {
    out.velocities.push_back(curve.velocities[k] / f[k]);
    out.F_values.push_back(metric.evaluate(curve.positions[k], out.velocities.back()).F);
  }
  return out;
}

}  // namespace parnav
