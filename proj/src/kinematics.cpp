#include "parnav/kinematics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace parnav {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double wrap_pi(double a) {
  a = std::remainder(a, 2.0 * std::numbers::pi);
  return a;
}

}  // namespace

// ─── target programs ────────────────────────────────────────────────────────

TargetProgram::TargetProgram(Kind kind, std::vector<VelocitySegment> segments)
    : kind_(kind), segments_(std::move(segments)) {
  if (segments_.empty()) throw InvalidInputError("target program needs at least one segment");
  if (segments_.front().t_start != 0.0) {
    throw InvalidInputError("first target segment must start at t = 0");
  }
  const auto n = segments_.front().velocity.size();
  if (n != 2 && n != 3) throw InvalidInputError("target velocity must have 2 or 3 components");
  for (std::size_t k = 0; k < segments_.size(); ++k) {
    if (segments_[k].velocity.size() != n || !segments_[k].velocity.allFinite()) {
      throw InvalidInputError("target segment velocities must be finite and share a dimension");
    }
    if (k > 0 && !(segments_[k].t_start > segments_[k - 1].t_start)) {
      throw InvalidInputError("target segment start times must increase strictly");
    }
  }
}

TargetProgram TargetProgram::constant(const Vec& velocity) {
  return TargetProgram(Kind::constant_velocity, {{0.0, velocity}});
}

TargetProgram TargetProgram::piecewise(std::vector<VelocitySegment> segments) {
  return TargetProgram(Kind::piecewise_constant, std::move(segments));
}

TargetProgram TargetProgram::from_waypoints(const std::vector<Waypoint>& waypoints) {
  if (waypoints.size() < 2) throw InvalidInputError("waypoint program needs at least two waypoints");
  const double t0 = waypoints.front().t;
  std::vector<VelocitySegment> segs;
  for (std::size_t k = 0; k + 1 < waypoints.size(); ++k) {
    const double span = waypoints[k + 1].t - waypoints[k].t;
    if (!(span > 0.0)) throw InvalidInputError("waypoint times must increase strictly");
    if (waypoints[k].position.size() != waypoints[k + 1].position.size()) {
      throw InvalidInputError("waypoints must share a dimension");
    }
    segs.push_back({waypoints[k].t - t0, (waypoints[k + 1].position - waypoints[k].position) / span});
  }
  return TargetProgram(Kind::waypoints, std::move(segs));
}

Vec TargetProgram::velocity_at(double t) const {
  auto it = std::upper_bound(segments_.begin(), segments_.end(), t,
                             [](double v, const VelocitySegment& s) { return v < s.t_start; });
  if (it == segments_.begin()) return segments_.front().velocity;
  return std::prev(it)->velocity;
}

Vec TargetProgram::displacement_at(double t) const {
  Vec d = Vec::Zero(dim());
  for (std::size_t k = 0; k < segments_.size(); ++k) {
    const double start = segments_[k].t_start;
    if (t <= start) break;
    const double end = k + 1 < segments_.size() ? std::min(t, segments_[k + 1].t_start) : t;
    d += (end - start) * segments_[k].velocity;
  }
  return d;
}

// ─── scenario ───────────────────────────────────────────────────────────────

double Scenario::speed_ratio() const {
  const double vt = target.initial_speed();
  return vt > 0.0 ? pursuer_speed / vt : std::numeric_limits<double>::infinity();
}

void Scenario::validate() const {
  const auto n = initial_range.size();
  if (n != 2 && n != 3) throw InvalidInputError("r0 must have 2 or 3 components");
  if (target.dim() != n) throw InvalidInputError("target velocity dimension does not match r0");
  if (!(pursuer_speed > 0.0)) throw InvalidInputError("K must be > 0");
  if (!(dt > 0.0)) throw InvalidInputError("dt must be > 0");
  if (!(hit_radius >= 0.0)) throw InvalidInputError("hit_radius must be >= 0");
  if (!(initial_range.norm() > hit_radius)) throw InvalidInputError("|r0| must exceed hit_radius");
  if (!(t_max > 0.0)) throw InvalidInputError("t_max must be > 0");
  if (n == 3 && target.kind() != TargetProgram::Kind::constant_velocity) {
    throw InvalidInputError("3D scenarios require a constant-velocity target");
  }
  if (control == ControlLaw::fixed_lead && !(std::abs(fixed_lead) < std::numbers::pi / 2)) {
    throw InvalidInputError("fixed lead angle must lie in (-pi/2, pi/2)");
  }
}

Scenario Scenario::constant_target(const Vec& r0, double target_speed, double theta0, double K,
                                   double dt, std::optional<double> hit_radius, double t_max) {
  const double los = std::atan2(r0(1), r0(0));
  Vec v = Vec::Zero(r0.size());
  v(0) = target_speed * std::cos(los + theta0);
  v(1) = target_speed * std::sin(los + theta0);
  Scenario s;
  s.initial_range = r0;
  s.target = TargetProgram::constant(v);
  s.pursuer_speed = K * target_speed;
  s.dt = dt;
  s.hit_radius = hit_radius.value_or(1e-6 * r0.norm());
  s.t_max = t_max;
  return s;
}

std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::hit: return "hit";
    case Termination::timeout: return "timeout";
    case Termination::infeasible_control: return "infeasible-control";
    case Termination::domain_exit: return "domain-exit";
  }
  return "unknown";
}

// ─── control law and polar rates ────────────────────────────────────────────

double lead_angle(double theta, double target_speed, double pursuer_speed) {
  if (!(pursuer_speed > 0.0)) throw InvalidInputError("pursuer speed must be > 0");
  const double s = target_speed * std::sin(theta) / pursuer_speed;
  if (!(std::abs(s) < 1.0)) {
    throw InfeasibleControlError("parallel navigation infeasible: |v_T sin(theta)| >= v_M");
  }
  return std::asin(s);
}

double pn_control_delta(double theta, double K) {
  if (!(K > 0.0)) throw InvalidInputError("K must be > 0");
  return lead_angle(theta, 1.0, K);
}

PolarRates polar_rates(double target_speed, double pursuer_speed, double theta, double delta,
                       double r) {
  if (!(r > 0.0)) throw InvalidInputError("range must be > 0 to form the LOS rate");
  return {target_speed * std::cos(theta) - pursuer_speed * std::cos(delta),
          (target_speed * std::sin(theta) - pursuer_speed * std::sin(delta)) / r};
}

// ─── simulation ─────────────────────────────────────────────────────────────

namespace {

struct Guidance {
  double lambda;
  double theta;
  double delta;
  Vec pursuer_velocity;
  Vec target_velocity;
};

class PlanarEngagement {
 public:
  explicit PlanarEngagement(const Scenario& s) : s_(s) {}

  // `segment_time` picks the target leg; stages of a step that ends on a
  // maneuver must keep the leg active inside the step.
  Guidance guidance(double t, const Vec& r_M, std::optional<double> segment_time = {}) const {
    const Vec r_T = target_position(t);
    const Vec r = r_T - r_M;
    Guidance g;
    g.target_velocity = s_.target.velocity_at(segment_time.value_or(t));
    g.lambda = std::atan2(r(1), r(0));
    const double vt = g.target_velocity.norm();
    g.theta = vt > 0.0 ? wrap_pi(std::atan2(g.target_velocity(1), g.target_velocity(0)) - g.lambda)
                       : 0.0;
    g.delta = s_.control == ControlLaw::parallel_navigation
                  ? lead_angle(g.theta, vt, s_.pursuer_speed)
                  : s_.fixed_lead;
    const double heading = g.lambda + g.delta;
    g.pursuer_velocity = vec2(s_.pursuer_speed * std::cos(heading),
                              s_.pursuer_speed * std::sin(heading));
    return g;
  }

  Vec target_position(double t) const { return s_.initial_range + s_.target.displacement_at(t); }

  Vec rk4(double t, const Vec& r_M, double h) const {
    const double leg = t + 0.5 * h;
    const Vec k1 = guidance(t, r_M, leg).pursuer_velocity;
    const Vec k2 = guidance(t + 0.5 * h, r_M + 0.5 * h * k1, leg).pursuer_velocity;
    const Vec k3 = guidance(t + 0.5 * h, r_M + 0.5 * h * k2, leg).pursuer_velocity;
    const Vec k4 = guidance(t + h, r_M + h * k3, leg).pursuer_velocity;
    return r_M + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }

  PursuitState state(double t, const Vec& r_M, const PursuitState* previous) const {
    PursuitState st;
    st.t = t;
    st.r_M = r_M;
    st.r_T = target_position(t);
    st.r = st.r_T - r_M;
    Guidance g;
    if (previous != nullptr && st.r.norm() <= 1e-12 * s_.initial_range.norm()) {
      // LOS undefined at the target itself; hold the last guidance.
      g = {previous->lambda, previous->theta, previous->delta, previous->pursuer_velocity,
           s_.target.velocity_at(t)};
    } else {
      g = guidance(t, r_M);
    }
    st.lambda = g.lambda;
    st.theta = g.theta;
    st.delta = g.delta;
    st.pursuer_velocity = g.pursuer_velocity;
    st.target_velocity = g.target_velocity;
    st.r_dot = g.target_velocity - g.pursuer_velocity;
    NavMetricParams p{s_.pursuer_speed, TargetVelocityField::constant(g.target_velocity), g.delta};
    const auto mv = Metric(p).evaluate(-st.r, -st.r_dot);
    st.F = mv.F;
    return st;
  }

 private:
  const Scenario& s_;
};

bool passed(const Vec& r_prev, const Vec& r_next, double eps) {
  return r_next.norm() <= eps || r_next.dot(r_prev) <= 0.0;
}

SimResult simulate_planar(const Scenario& sc) {
  SimResult out;
  const PlanarEngagement eng(sc);
  Vec r_M = Vec::Zero(2);

  try {
    out.trajectory.push_back(eng.state(0.0, r_M, nullptr));
  } catch (const InfeasibleControlError& e) {
    out.termination = Termination::infeasible_control;
    out.message = e.what();
    out.trajectory.clear();
    return out;
  }

  if (sc.control == ControlLaw::parallel_navigation &&
      sc.target.kind() == TargetProgram::Kind::constant_velocity &&
      out.trajectory.front().r.dot(out.trajectory.front().r_dot) >= 0.0) {
    out.termination = Termination::timeout;
    out.message = "range is not closing and the target never maneuvers";
    return out;
  }

  // Steps land on the dt grid and on every target maneuver time.
  const auto& segs = sc.target.segments();
  std::size_t next_seg = 1;
  long k = 1;
  double t = 0.0;
  while (t < sc.t_max) {
    while (next_seg < segs.size() && segs[next_seg].t_start <= t) ++next_seg;
    double t_next = std::min(static_cast<double>(k) * sc.dt, sc.t_max);
    if (next_seg < segs.size() && segs[next_seg].t_start < t_next) {
      t_next = segs[next_seg].t_start;
    } else {
      ++k;
    }
    const double h = t_next - t;
    const Vec r_prev = out.trajectory.back().r;
    // RK4 stages past the target see a flipped LOS, so the terminal step is
    // located with the guidance frozen at the step start.
    const Vec v_M = out.trajectory.back().pursuer_velocity;
    const auto frozen = [&](double tau) -> Vec {
      return eng.target_position(t + tau) - (r_M + tau * v_M);
    };
    Vec next;
    bool terminal = passed(r_prev, frozen(h), sc.hit_radius);
    if (!terminal) {
      try {
        next = eng.rk4(t, r_M, h);
      } catch (const InfeasibleControlError& e) {
        out.termination = Termination::infeasible_control;
        out.message = e.what();
        return out;
      }
      if (!next.allFinite()) {
        out.termination = Termination::domain_exit;
        out.message = "non-finite state";
        return out;
      }
      terminal = passed(r_prev, eng.target_position(t_next) - next, sc.hit_radius);
    }
    if (terminal) {
      double lo = 0.0;
      double hi = h;
      while (hi - lo > 1e-9 * sc.dt) {
        const double mid = 0.5 * (lo + hi);
        (passed(r_prev, frozen(mid), sc.hit_radius) ? hi : lo) = mid;
      }
      const Vec r_M_hit = r_M + hi * v_M;
      const double miss = frozen(hi).norm();
      out.trajectory.push_back(eng.state(t + hi, r_M_hit, &out.trajectory.back()));
      if (miss <= sc.hit_radius * (1.0 + 1e-9) + 1e-12 * sc.initial_range.norm()) {
        out.termination = Termination::hit;
        out.intercept = true;
        out.t_f = t + hi;
      } else {
        out.termination = Termination::domain_exit;
        out.message = "pursuer passed the target with miss distance " + std::to_string(miss);
      }
      return out;
    }
    r_M = next;
    t = t_next;
    try {
      out.trajectory.push_back(eng.state(t, r_M, &out.trajectory.back()));
    } catch (const InfeasibleControlError& e) {
      out.termination = Termination::infeasible_control;
      out.message = e.what();
      return out;
    }
  }
  out.termination = Termination::timeout;
  out.message = "t_max reached before intercept";
  return out;
}

// Orthonormal basis of the engagement plane spanned by r0 and v_T.
std::pair<Vec, Vec> engagement_plane(const Vec& r0, const Vec& vt) {
  const Vec e1 = r0.normalized();
  Vec perp = vt - vt.dot(e1) * e1;
  if (perp.norm() <= 1e-12 * std::max(1.0, vt.norm())) {
    const int axis = std::abs(e1(0)) < 0.9 ? 0 : 1;
    perp = Vec::Unit(3, axis) - e1(axis) * e1;
  }
  return {e1, perp.normalized()};
}

}  // namespace

SimResult simulate(const Scenario& scenario) {
  scenario.validate();
  if (scenario.initial_range.size() == 2) return simulate_planar(scenario);

  const Vec vt = scenario.target.velocity_at(0.0);
  const auto [e1, e2] = engagement_plane(scenario.initial_range, vt);
  Scenario planar = scenario;
  planar.initial_range = vec2(scenario.initial_range.dot(e1), scenario.initial_range.dot(e2));
  planar.target = TargetProgram::constant(vec2(vt.dot(e1), vt.dot(e2)));
  SimResult res = simulate_planar(planar);
  auto lift = [&](const Vec& v) -> Vec { return v(0) * e1 + v(1) * e2; };
  for (auto& st : res.trajectory) {
    st.r = lift(st.r);
    st.r_M = lift(st.r_M);
    st.r_T = lift(st.r_T);
    st.r_dot = lift(st.r_dot);
    st.pursuer_velocity = lift(st.pursuer_velocity);
    st.target_velocity = lift(st.target_velocity);
  }
  return res;
}

SimResult reparametrize_unit_F(const SimResult& result, double pursuer_speed) {
  const auto& traj = result.trajectory;
  if (traj.size() < 2) throw InvalidInputError("trajectory needs at least two nodes");
  std::vector<double> f(traj.size());
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const auto& st = traj[k];
    if (k > 0 && !(st.r.norm() < traj[k - 1].r.norm())) {
      throw InvalidInputError("trajectory range is not strictly decreasing");
    }
    if (!(st.r.dot(st.r_dot) < 0.0)) throw InvalidInputError("trajectory is not closing");
    NavMetricParams p{pursuer_speed, TargetVelocityField::constant(st.target_velocity), st.delta};
    const auto mv = Metric(p).evaluate(-st.r, -st.r_dot);
    if (!mv.in_domain) throw InvalidInputError("trajectory node outside the metric domain");
    f[k] = mv.F;
  }
  SimResult out = result;
  double s = traj.front().t;
  for (std::size_t k = 0; k < traj.size(); ++k) {
    if (k > 0) s += 0.5 * (f[k - 1] + f[k]) * (traj[k].t - traj[k - 1].t);
    auto& st = out.trajectory[k];
    st.t = s;
    st.r_dot = traj[k].r_dot / f[k];
    NavMetricParams p{pursuer_speed, TargetVelocityField::constant(st.target_velocity), st.delta};
    st.F = Metric(p).evaluate(-st.r, -st.r_dot).F;
  }
  if (out.t_f) out.t_f = out.trajectory.back().t;
  return out;
}

double collinearity_defect(const SimResult& result) {
  double worst = 0.0;
  for (const auto& st : result.trajectory) {
    const double scale = st.r.norm() * st.r_dot.norm();
    if (scale > 0.0) worst = std::max(worst, cross_norm(st.r, st.r_dot) / scale);
  }
  return worst;
}

double los_drift(const SimResult& result) {
  if (result.trajectory.empty()) return 0.0;
  const double l0 = result.trajectory.front().lambda;
  double worst = 0.0;
  for (const auto& st : result.trajectory) {
    worst = std::max(worst, std::abs(wrap_pi(st.lambda - l0)));
  }
  return worst;
}

namespace {

CurveRecord curve_from(const SimResult& result, Vec PursuitState::*pos, Vec PursuitState::*vel,
                       bool with_F) {
  CurveRecord c;
  for (const auto& st : result.trajectory) {
    c.times.push_back(st.t);
    c.positions.push_back(st.*pos);
    c.velocities.push_back(st.*vel);
    c.F_values.push_back(with_F ? st.F : kNaN);
  }
  return c;
}

}  // namespace

CurveRecord range_curve(const SimResult& result) {
  return curve_from(result, &PursuitState::r, &PursuitState::r_dot, true);
}

CurveRecord target_curve(const SimResult& result) {
  return curve_from(result, &PursuitState::r_T, &PursuitState::target_velocity, false);
}

CurveRecord pursuer_curve(const SimResult& result) {
  return curve_from(result, &PursuitState::r_M, &PursuitState::pursuer_velocity, false);
}

CurveRecord reconstruct_pursuer(const CurveRecord& range, const CurveRecord& target) {
  range.validate();
  target.validate();
  if (range.times != target.times) {
    throw InvalidInputError("range and target curves must share a time grid");
  }
  CurveRecord out;
  out.times = range.times;
  for (std::size_t k = 0; k < range.size(); ++k) {
    out.positions.push_back(target.positions[k] - range.positions[k]);
    out.velocities.push_back(target.velocities[k] - range.velocities[k]);
    out.F_values.push_back(kNaN);
  }
  return out;
}

CurveRecord negate_curve(const CurveRecord& curve) {
  CurveRecord out = curve;
  for (auto& p : out.positions) p = -p;
  for (auto& v : out.velocities) v = -v;
  return out;
}

}  // namespace parnav
