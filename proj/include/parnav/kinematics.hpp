#pragma once

// Planar parallel-navigation pursuit.
//
// Conventions: r = r_T − r_M is the range (LOS vector, pursuer → target);
// λ is the LOS angle from the x axis; θ and δ are the angles from the LOS to
// v_T and v_M, counterclockwise positive. The range obeys
//   ṙ = v_T cos θ − v_M cos δ,   r λ̇ = v_T sin θ − v_M sin δ.
// Metric quantities are evaluated on the pursuer's position relative to the
// target, q = r_M − r_T = −r, whose velocity is the closing velocity −ṙ.

#include <optional>
#include <string_view>
#include <vector>

#include "parnav/geodesics.hpp"
#include "parnav/nav_metric.hpp"

namespace parnav {

struct VelocitySegment {
  double t_start = 0.0;
  Vec velocity;
};

struct Waypoint {
  double t = 0.0;
  Vec position;
};

/// Target motion as a function of time; positions are displacements from
/// the target's initial position.
class TargetProgram {
 public:
  enum class Kind { constant_velocity, piecewise_constant, waypoints };

  static TargetProgram constant(const Vec& velocity);
  /// Segments sorted by t_start, the first starting at 0.
  static TargetProgram piecewise(std::vector<VelocitySegment> segments);
  /// Straight legs between timed waypoints; the last leg's velocity is held.
  static TargetProgram from_waypoints(const std::vector<Waypoint>& waypoints);

  Kind kind() const { return kind_; }
  int dim() const { return static_cast<int>(segments_.front().velocity.size()); }
  Vec velocity_at(double t) const;
  Vec displacement_at(double t) const;
  double initial_speed() const { return segments_.front().velocity.norm(); }
  const std::vector<VelocitySegment>& segments() const { return segments_; }

 private:
  TargetProgram(Kind kind, std::vector<VelocitySegment> segments);
  Kind kind_;
  std::vector<VelocitySegment> segments_;
};

enum class ControlLaw {
  parallel_navigation,  // δ = arcsin(v_T sin θ / v_M) every step
  fixed_lead,           // δ held at Scenario::fixed_lead (negative control / reachability)
};

struct Scenario {
  Vec initial_range;        // r0, target position with the pursuer at the origin
  TargetProgram target = TargetProgram::constant(Vec::Zero(2));
  double pursuer_speed = 1.0;
  double dt = 1e-3;
  double hit_radius = 0.0;  // ε
  double t_max = 1000.0;
  ControlLaw control = ControlLaw::parallel_navigation;
  double fixed_lead = 0.0;

  /// K = v_M / v_T at t = 0 (infinite for a stationary target).
  double speed_ratio() const;
  void validate() const;

  /// Constant-velocity target at angle θ₀ off the initial LOS.
  static Scenario constant_target(const Vec& r0, double target_speed, double theta0, double K,
                                  double dt = 1e-3, std::optional<double> hit_radius = {},
                                  double t_max = 1000.0);
};

struct PursuitState {
  double t = 0.0;
  Vec r;
  Vec r_M;
  Vec r_T;
  double lambda = 0.0;
  double delta = 0.0;
  double theta = 0.0;
  Vec r_dot;            // dr/dt
  Vec pursuer_velocity;
  Vec target_velocity;
  double F = 0.0;       // F(q, −ṙ, δ) with the current target velocity as a constant field
};

enum class Termination { hit, timeout, infeasible_control, domain_exit };

std::string_view to_string(Termination t);

struct SimResult {
  std::vector<PursuitState> trajectory;
  bool intercept = false;
  std::optional<double> t_f;
  Termination termination = Termination::timeout;
  std::string message;
};

/// Lead angle arcsin(sin θ / K). Throws InfeasibleControlError when
/// |sin θ| ≥ K (the boundary cos δ = 0 cannot close).
double pn_control_delta(double theta, double K);

/// Same rule written with speeds, defined for a stationary target.
double lead_angle(double theta, double target_speed, double pursuer_speed);

struct PolarRates {
  double r_dot;
  double lambda_dot;
};

PolarRates polar_rates(double target_speed, double pursuer_speed, double theta, double delta,
                       double r);

SimResult simulate(const Scenario& scenario);

/// Resamples so that F ≡ 1: the parameter advances by F dt and dr/ds = ṙ/F.
/// The total parameter length is ∫F dt, the travel time.
SimResult reparametrize_unit_F(const SimResult& result, double pursuer_speed);

/// Max over nodes of |r × ṙ| / (|r||ṙ|).
double collinearity_defect(const SimResult& result);

/// Max |λ(t) − λ(0)|.
double los_drift(const SimResult& result);

CurveRecord range_curve(const SimResult& result);
CurveRecord target_curve(const SimResult& result);
CurveRecord pursuer_curve(const SimResult& result);

/// r_M = r_T − r, v_M = v_T − ṙ on a shared grid. F_values are NaN since
/// the pursuer path carries no metric.
CurveRecord reconstruct_pursuer(const CurveRecord& range, const CurveRecord& target);

/// Flips positions and velocities: range r ↔ relative position q = −r.
CurveRecord negate_curve(const CurveRecord& curve);

}  // namespace parnav
