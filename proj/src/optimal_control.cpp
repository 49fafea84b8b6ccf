#include "parnav/optimal_control.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>

#include "parnav/detail/derivatives.hpp"

namespace parnav {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kGolden = 0.6180339887498949;  // (√5 − 1) / 2

Vec to_vec(const detail::Arr<double>& a, int n) {
  Vec v(n);
  for (int i = 0; i < n; ++i) v(i) = a[i];
  return v;
}

// H at control δ, −∞ when (r, v) leaves the domain of F_δ.
double hamiltonian_or_inf(const NavMetricParams& params, const Vec& r, const Vec& p, const Vec& v,
                          double delta) {
  const auto mv = Metric(params.with_delta(delta)).evaluate(r, v);
  if (!mv.in_domain) return kNegInf;
  return p.dot(v) - mv.F;
}

template <class Fn>
double golden_maximize(Fn f, double a, double b, double tol) {
  double c = b - kGolden * (b - a);
  double d = a + kGolden * (b - a);
  double fc = f(c);
  double fd = f(d);
  while (b - a > tol) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kGolden * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kGolden * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace

// ─── Hamiltonian ────────────────────────────────────────────────────────────

double hamiltonian(const NavMetricParams& params, const PMPState& state, const Vec& v) {
  const auto mv = Metric(params.with_delta(state.delta)).evaluate(state.r, v);
  if (!mv.in_domain) throw DomainError("candidate velocity outside the metric domain");
  return state.p.dot(v) - mv.F;
}

std::vector<double> default_delta_grid(int points) {
  if (points < 1) throw InvalidInputError("delta grid needs at least one point");
  std::vector<double> grid(points);
  for (int k = 0; k < points; ++k) {
    grid[k] = -std::numbers::pi / 2 + std::numbers::pi * (k + 1) / (points + 1);
  }
  return grid;
}

HatHamiltonian hat_hamiltonian(const NavMetricParams& params, const Vec& r, const Vec& p,
                               const Vec& v, std::span<const double> delta_grid) {
  if (delta_grid.empty()) throw InvalidInputError("delta grid is empty");
  std::size_t best = delta_grid.size();
  double best_value = kNegInf;
  for (std::size_t k = 0; k < delta_grid.size(); ++k) {
    if (!(std::abs(delta_grid[k]) < std::numbers::pi / 2)) {
      throw InvalidInputError("delta grid must lie inside (-pi/2, pi/2)");
    }
    const double h = hamiltonian_or_inf(params, r, p, v, delta_grid[k]);
    if (h > best_value) {
      best_value = h;
      best = k;
    }
  }
  if (best == delta_grid.size()) throw DomainError("every control on the grid is out of domain");
  if (delta_grid.size() < 2) return {best_value, delta_grid[best]};

  const double lo = delta_grid[best > 0 ? best - 1 : best];
  const double hi = delta_grid[best + 1 < delta_grid.size() ? best + 1 : best];
  auto h_of = [&](double d) { return hamiltonian_or_inf(params, r, p, v, d); };
  const double refined = golden_maximize(h_of, std::min(lo, hi), std::max(lo, hi), 1e-8);
  const double refined_value = h_of(refined);
  if (refined_value > best_value) return {refined_value, refined};
  return {best_value, delta_grid[best]};
}

Vec canonical_momentum(const Metric& metric, const Vec& r, const Vec& v) {
  if (!metric.evaluate(r, v).in_domain) throw DomainError("velocity outside the metric domain");
  return 0.5 * to_vec(detail::grad_y_f2(metric, to_array<double>(r), to_array<double>(v)),
                      metric.dim());
}

// ─── Pontryagin check ───────────────────────────────────────────────────────

OptimalityReport pmp_check(const NavMetricParams& params, const CurveRecord& curve,
                           const std::vector<double>& delta_curve, PmpTolerances tol) {
  curve.validate();
  if (curve.size() < 3) throw InvalidInputError("PMP check needs at least three nodes");
  if (delta_curve.size() != curve.size()) {
    throw InvalidInputError("delta curve length does not match the trajectory");
  }
  const int n = params.dim();
  const auto grid = default_delta_grid();
  const std::size_t nodes = curve.size();

  std::vector<Vec> momentum(nodes);
  std::vector<Vec> force(nodes);
  for (std::size_t k = 0; k < nodes; ++k) {
    const Metric m(params.with_delta(delta_curve[k]));
    const Vec& r = curve.positions[k];
    const Vec& v = curve.velocities[k];
    const auto mv = m.evaluate(r, v);
    if (!mv.in_domain || std::abs(mv.F - 1.0) > tol.unit_speed) {
      throw InvalidInputError("PMP check requires a unit-F curve (node " + std::to_string(k) +
                              " has F = " + std::to_string(mv.F) + ")");
    }
    const auto x = to_array<double>(r);
    const auto y = to_array<double>(v);
    momentum[k] = 0.5 * to_vec(detail::grad_y_f2(m, x, y), n);
    force[k] = 0.5 * to_vec(detail::grad_x_f2(m, x, y), n);
  }
  const auto dp = differentiate_along(curve.times, momentum);

  OptimalityReport rep;
  for (std::size_t k = 0; k < nodes; ++k) {
    const Vec& r = curve.positions[k];
    const Vec& v = curve.velocities[k];
    const Vec& p = momentum[k];

    const auto hat = hat_hamiltonian(params, r, p, v, grid);
    const double h_traj = hamiltonian(params, {r, p, delta_curve[k]}, v);
    rep.hamiltonian_max_gap = std::max(rep.hamiltonian_max_gap, hat.value - h_traj);
    rep.hamiltonian_value = std::max(rep.hamiltonian_value, std::abs(hat.value));

    Vec dhat_dr(n);
    const double step = 1e-5 * (1.0 + r.norm());
    for (int i = 0; i < n; ++i) {
      Vec rp = r;
      Vec rm = r;
      rp(i) += step;
      rm(i) -= step;
      dhat_dr(i) = (hat_hamiltonian(params, rp, p, v, grid).value -
                    hat_hamiltonian(params, rm, p, v, grid).value) /
                   (2.0 * step);
    }
    rep.adjoint_residual = std::max(rep.adjoint_residual, (dp[k] + dhat_dr).norm());
    // L = F² is twice F²/2, so its residual doubles.
    rep.el_residual = std::max(rep.el_residual, 2.0 * (dp[k] - force[k]).norm());
  }
  rep.adjoint_ok = rep.adjoint_residual <= tol.adjoint;
  rep.maximum_ok = rep.hamiltonian_max_gap <= tol.max_gap;
  rep.hamiltonian_zero_ok = rep.hamiltonian_value <= tol.hamiltonian;
  rep.el_ok = rep.el_residual <= tol.el;
  return rep;
}

// ─── zero-lead geodesic ─────────────────────────────────────────────────────

bool reachable_with_zero_lead(const Scenario& scenario, const TargetVelocityField& field) {
  scenario.validate();
  const double vm = scenario.pursuer_speed;
  auto rate = [&](const Vec& q) -> Vec { return -vm * q.normalized() - field.at(q); };
  Vec q = -scenario.initial_range;
  const double eps = scenario.hit_radius;
  // Steps shrink near the origin, where the pursuit direction is singular.
  double t = 0.0;
  while (t < scenario.t_max) {
    const Vec k1 = rate(q);
    const double h = std::min(scenario.dt, 0.5 * q.norm() / k1.norm());
    if (!(h > 1e-15 * scenario.dt)) return false;
    const Vec k2 = rate(q + 0.5 * h * k1);
    const Vec k3 = rate(q + 0.5 * h * k2);
    const Vec k4 = rate(q + h * k3);
    const Vec next = q + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!next.allFinite()) return false;
    if (next.norm() <= eps) return true;
    if (next.norm() >= q.norm() && q.norm() < scenario.dt * vm) return false;
    q = next;
    t += h;
  }
  return false;
}

namespace {

struct Shot {
  std::vector<double> times;
  std::vector<TangentSample> nodes;
  Vec closest;
  double signed_miss = 0.0;
  bool closed = false;  // found a closest approach before t_max
};

Shot shoot(const Metric& metric, const Vec& q0, double angle, const Scenario& sc) {
  Shot shot;
  const Vec dir = vec2(std::cos(angle), std::sin(angle));
  TangentSample s{q0, unit_vector_in_direction(metric, q0, dir)};
  const Vec aim = -q0.normalized();
  shot.times.push_back(0.0);
  shot.nodes.push_back(s);
  const double h = sc.dt;
  const long max_steps = static_cast<long>(std::ceil(sc.t_max / h));
  try {
    for (long k = 1; k <= max_steps; ++k) {
      TangentSample next = geodesic_rk4_step(metric, s, h);
      if (next.x.norm() > s.x.norm()) {
        // Closest approach lies within two steps of the previous node.
        const std::size_t base = shot.nodes.size() >= 2 ? shot.nodes.size() - 2 : 0;
        const double span = (shot.nodes.size() - base) * h;
        const auto& from = shot.nodes[base];
        auto dist = [&](double sub) {
          return sub <= 0.0 ? from.x.norm() : geodesic_rk4_step(metric, from, sub).x.norm();
        };
        const double best = golden_maximize([&](double sub) { return -dist(sub); }, 0.0, span,
                                            1e-10 * h);
        std::size_t keep = base;
        double sub = best;
        if (sub < 0.5 * h && keep >= 1) {
          keep -= 1;
          sub += h;
        }
        const TangentSample end = geodesic_rk4_step(metric, shot.nodes[keep], sub);
        const double t_end = shot.times[keep] + sub;
        shot.nodes.resize(keep + 1);
        shot.times.resize(keep + 1);
        shot.nodes.push_back(end);
        shot.times.push_back(t_end);
        shot.closest = end.x;
        shot.signed_miss = cross_z(aim, end.x);
        shot.closed = true;
        return shot;
      }
      s = next;
      shot.times.push_back(static_cast<double>(k) * h);
      shot.nodes.push_back(s);
    }
  } catch (const DomainError&) {
  }
  shot.closest = s.x;
  shot.signed_miss = cross_z(aim, s.x);
  return shot;
}

CurveRecord shot_curve(const Metric& metric, const Shot& shot) {
  std::vector<Vec> pos;
  std::vector<Vec> vel;
  for (const auto& n : shot.nodes) {
    pos.push_back(n.x);
    vel.push_back(n.y);
  }
  return make_curve(metric, shot.times, std::move(pos), std::move(vel));
}

}  // namespace

CurveRecord optimal_trajectory(const Scenario& scenario, const TargetVelocityField& field) {
  scenario.validate();
  if (scenario.initial_range.size() != 2) {
    throw InvalidInputError("optimal trajectories are computed for planar scenarios");
  }
  if (field.dim() != 2) throw InvalidInputError("target field dimension must be 2");
  if (!reachable_with_zero_lead(scenario, field)) {
    throw UnreachableError("target is not reachable with zero lead angle");
  }
  const Metric metric(NavMetricParams{scenario.pursuer_speed, field, 0.0});
  const Vec q0 = -scenario.initial_range;
  const double aim = std::atan2(-q0(1), -q0(0));
  const double eps = scenario.hit_radius;

  auto miss_ok = [&](const Shot& s) { return s.closed && s.closest.norm() <= eps; };

  Shot center = shoot(metric, q0, aim, scenario);
  if (miss_ok(center)) return shot_curve(metric, center);

  // Bracket the launch angle: the signed miss grows with the angle.
  const double direction = center.signed_miss > 0.0 ? -1.0 : 1.0;
  double a = aim;
  double fa = center.signed_miss;
  double b = aim;
  double fb = fa;
  bool bracketed = false;
  for (double width = 1e-4; width <= std::numbers::pi / 2; width *= 2.0) {
    b = aim + direction * width;
    Shot s = shoot(metric, q0, b, scenario);
    if (miss_ok(s)) return shot_curve(metric, s);
    fb = s.signed_miss;
    if ((fa > 0.0) != (fb > 0.0)) {
      bracketed = true;
      break;
    }
    a = b;
    fa = fb;
  }
  if (!bracketed) throw ConvergenceError("could not bracket the launch angle toward the origin");

  Shot best = center;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (a + b);
    best = shoot(metric, q0, mid, scenario);
    if (miss_ok(best)) return shot_curve(metric, best);
    if ((best.signed_miss > 0.0) == (fa > 0.0)) {
      a = mid;
      fa = best.signed_miss;
    } else {
      b = mid;
    }
  }
  throw ConvergenceError("shooting did not reach the origin within hit_radius (miss " +
                         std::to_string(best.closest.norm()) + ")");
}

CurveRecord optimal_trajectory(const Scenario& scenario) {
  return optimal_trajectory(scenario, TargetVelocityField::constant(scenario.target.velocity_at(0.0)));
}

// ─── monotonicity in δ ──────────────────────────────────────────────────────

MonotonicityReport metric_monotonicity_check(const NavMetricParams& params, int samples,
                                             const CurveRecord& test_curve, std::uint64_t seed,
                                             int length_grid) {
  if (samples <= 0) throw InvalidInputError("samples must be > 0");
  params.validate();
  const int n = params.dim();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coord(-1000.0, 1000.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> magnitude(0.1, 10.0);
  std::uniform_real_distribution<double> control(-std::numbers::pi / 2, std::numbers::pi / 2);

  MonotonicityReport rep;
  const Metric f0(params.with_delta(0.0));
  const long max_attempts = 1000L * samples;
  for (long attempt = 0; attempt < max_attempts && rep.samples < samples; ++attempt) {
    Vec x(n);
    Vec y(n);
    for (int i = 0; i < n; ++i) {
      x(i) = coord(rng);
      y(i) = gauss(rng);
    }
    if (!(y.norm() > 0.0)) continue;
    y *= magnitude(rng) / y.norm();
    const double delta = control(rng);
    if (!(std::abs(delta) < std::numbers::pi / 2)) continue;
    const auto v0 = f0.evaluate(x, y);
    const auto vd = Metric(params.with_delta(delta)).evaluate(x, y);
    if (!v0.in_domain || !vd.in_domain) continue;
    ++rep.samples;
    const double violation = v0.F - vd.F;
    if (violation > 0.0) {
      ++rep.pointwise_violations;
      rep.max_pointwise_violation = std::max(rep.max_pointwise_violation, violation);
    }
  }

  const double l0 = action_integral(f0, test_curve, Lagrangian::F);
  rep.min_length = l0;
  rep.argmin_delta = 0.0;
  for (double delta : default_delta_grid(length_grid)) {
    double ld = 0.0;
    try {
      ld = action_integral(Metric(params.with_delta(delta)), test_curve, Lagrangian::F);
    } catch (const DomainError&) {
      continue;  // the curve is not admissible under this control
    }
    if (ld < rep.min_length) {
      rep.min_length = ld;
      rep.argmin_delta = delta;
    }
    if (l0 - ld > 0.0) {
      ++rep.length_violations;
      rep.max_length_violation = std::max(rep.max_length_violation, l0 - ld);
    }
  }
  return rep;
}

// ─── pursuer ODE residual ───────────────────────────────────────────────────

EngagementCurves engagement_from_relative(const CurveRecord& relative,
                                          const TargetVelocityField& field, const Vec& r0) {
  relative.validate();
  const std::size_t nodes = relative.size();
  EngagementCurves out;
  out.range = negate_curve(relative);
  out.target.times = relative.times;
  out.pursuer.times = relative.times;
  Vec r_T = r0;
  Vec prev_vt = field.at(relative.positions.front());
  for (std::size_t k = 0; k < nodes; ++k) {
    const Vec vt = field.at(relative.positions[k]);
    if (k > 0) r_T += 0.5 * (prev_vt + vt) * (relative.times[k] - relative.times[k - 1]);
    prev_vt = vt;
    out.target.positions.push_back(r_T);
    out.target.velocities.push_back(vt);
    out.target.F_values.push_back(std::numeric_limits<double>::quiet_NaN());
    out.pursuer.positions.push_back(r_T + relative.positions[k]);
    out.pursuer.velocities.push_back(vt + relative.velocities[k]);
    out.pursuer.F_values.push_back(std::numeric_limits<double>::quiet_NaN());
  }
  return out;
}

std::vector<double> theorem3_residual(const NavMetricParams& params, const CurveRecord& pursuer,
                                      const CurveRecord& target, const CurveRecord& relative,
                                      CovariantVariant variant) {
  pursuer.validate();
  target.validate();
  relative.validate();
  if (pursuer.times != relative.times || target.times != relative.times) {
    throw InvalidInputError("pursuer, target and relative curves must share a time grid");
  }
  const std::size_t nodes = relative.size();
  if (nodes < 3) throw InvalidInputError("pursuer ODE residual needs at least three nodes");
  const Metric metric(params);
  const auto& t = relative.times;
  const auto& x = pursuer.positions;

  std::vector<Vec> accel(nodes);
  for (std::size_t i = 1; i + 1 < nodes; ++i) {
    const double h1 = t[i] - t[i - 1];
    const double h2 = t[i + 1] - t[i];
    accel[i] = 2.0 * (x[i - 1] / (h1 * (h1 + h2)) - x[i] / (h1 * h2) + x[i + 1] / (h2 * (h1 + h2)));
  }
  accel[0] = accel[1];
  accel[nodes - 1] = accel[nodes - 2];

  const auto rhs = covariant_derivative(metric, relative, target.velocities, variant);
  std::vector<double> out(nodes);
  for (std::size_t k = 0; k < nodes; ++k) {
    const auto gamma = berwald_coefficients(metric, {relative.positions[k], relative.velocities[k]});
    const Vec lhs = accel[k] + gamma.contract(pursuer.velocities[k], pursuer.velocities[k]);
    out[k] = (lhs - rhs[k]).norm();
  }
  return out;
}

// ─── closed form ────────────────────────────────────────────────────────────

ClosedForm nonmaneuvering_closed_form_speeds(double r0, double target_speed, double pursuer_speed,
                                             double theta0) {
  if (!(r0 > 0.0)) throw InvalidInputError("r0 must be > 0");
  if (!(target_speed >= 0.0)) throw InvalidInputError("target speed must be >= 0");
  const double delta0 = lead_angle(theta0, target_speed, pursuer_speed);
  const double closing = pursuer_speed * std::cos(delta0) - target_speed * std::cos(theta0);
  if (!(closing > 0.0)) throw UnreachableError("no intercept: closing speed is not positive");
  return {delta0, r0 / closing};
}

ClosedForm nonmaneuvering_closed_form(double r0, double target_speed, double K, double theta0) {
  if (!(K > 0.0)) throw InvalidInputError("K must be > 0");
  if (!(target_speed > 0.0)) {
    throw InvalidInputError("K is undefined for a stationary target; use the speed form");
  }
  const double delta0 = pn_control_delta(theta0, K);
  const double closing = target_speed * (K * std::cos(delta0) - std::cos(theta0));
  if (!(closing > 0.0)) throw UnreachableError("no intercept: closing speed is not positive");
  return {delta0, r0 / closing};
}

}  // namespace parnav
