#pragma once

// Time-optimal parallel navigation: Pontryagin conditions, the zero-lead
// geodesic characterization, metric/length monotonicity in δ, the pursuer
// ODE residual and the non-maneuvering closed form.
//
// Geometric curves here are relative positions q = r_M − r_T (see
// kinematics.hpp); they run from −r0 to the origin.

#include <cstdint>
#include <span>
#include <vector>

#include "parnav/geodesics.hpp"
#include "parnav/kinematics.hpp"
#include "parnav/nav_metric.hpp"

namespace parnav {

struct PMPState {
  Vec r;
  Vec p;  // momentum covector
  double delta = 0.0;
};

/// H(r, p, δ) = ⟨p, v⟩ − F(r, v, δ) for the candidate velocity v.
double hamiltonian(const NavMetricParams& params, const PMPState& state, const Vec& v);

struct HatHamiltonian {
  double value;
  double argmax_delta;
};

/// 181 evenly spaced controls strictly inside (−π/2, π/2), symmetric about 0.
std::vector<double> default_delta_grid(int points = 181);

/// max_δ H by grid scan plus golden-section refinement around the best
/// grid point. Out-of-domain controls are skipped.
HatHamiltonian hat_hamiltonian(const NavMetricParams& params, const Vec& r, const Vec& p,
                               const Vec& v, std::span<const double> delta_grid);

/// Canonical momentum p = ∂(F²/2)/∂v = g(r, v)·v.
Vec canonical_momentum(const Metric& metric, const Vec& r, const Vec& v);

struct OptimalityReport {
  double adjoint_residual = 0.0;     // (a) max |dp/dt + ∂Ĥ/∂r|
  double hamiltonian_max_gap = 0.0;  // (b) max (Ĥ − H at the trajectory's δ)
  double hamiltonian_value = 0.0;    // (c) max |Ĥ|
  double el_residual = 0.0;          // max Euler–Lagrange residual of L = F²
  bool adjoint_ok = false;
  bool maximum_ok = false;
  bool hamiltonian_zero_ok = false;
  bool el_ok = false;

  bool all_ok() const { return adjoint_ok && maximum_ok && hamiltonian_zero_ok && el_ok; }
};

struct PmpTolerances {
  double adjoint = 1e-4;
  double max_gap = 1e-6;
  double hamiltonian = 1e-4;
  double el = 1e-4;
  double unit_speed = 1e-6;
};

/// Checks the Pontryagin conditions along a unit-F relative curve.
/// `params.delta` is ignored; δ(t) comes from `delta_curve`.
OptimalityReport pmp_check(const NavMetricParams& params, const CurveRecord& relative_curve,
                           const std::vector<double>& delta_curve, PmpTolerances tol = {});

/// Forward-simulates zero-lead pursuit in the relative frame under the
/// target field; true when it closes within hit_radius before t_max.
bool reachable_with_zero_lead(const Scenario& scenario, const TargetVelocityField& field);

/// Geodesic of F₀ from −r0 to the origin by shooting on the launch angle.
/// The curve is unit-F, so its final time is the travel time.
/// Throws UnreachableError or ConvergenceError.
CurveRecord optimal_trajectory(const Scenario& scenario, const TargetVelocityField& field);

/// Uses the target's initial velocity as a constant field.
CurveRecord optimal_trajectory(const Scenario& scenario);

struct MonotonicityReport {
  double max_pointwise_violation = 0.0;  // max(F₀ − F_δ, 0)
  int pointwise_violations = 0;
  int samples = 0;
  double max_length_violation = 0.0;     // max(L₀ − L_δ, 0) on the test curve
  int length_violations = 0;
  double min_length = 0.0;               // argmin of L_δ over the grid
  double argmin_delta = 0.0;
};

MonotonicityReport metric_monotonicity_check(const NavMetricParams& params, int samples,
                                             const CurveRecord& test_curve,
                                             std::uint64_t seed = 0, int length_grid = 50);

/// Per-node |r̈_M + G^i_jk(q, q̇) v_M^j v_M^k − ∇v_T/dt| with the covariant
/// derivative of v_T taken along the relative curve.
std::vector<double> theorem3_residual(const NavMetricParams& params, const CurveRecord& pursuer,
                                      const CurveRecord& target, const CurveRecord& relative,
                                      CovariantVariant variant = CovariantVariant::quadratic);

/// Pursuer, target and range curves rebuilt from a relative curve q(t):
/// the target starts at r0 (pursuer at the origin) and moves with v_T(q(t)).
struct EngagementCurves {
  CurveRecord pursuer;
  CurveRecord target;
  CurveRecord range;
};

EngagementCurves engagement_from_relative(const CurveRecord& relative,
                                          const TargetVelocityField& field, const Vec& r0);

struct ClosedForm {
  double delta0;
  double t_f;
};

/// δ₀ = arcsin(sin θ₀ / K), t_f = r0 / (v_M cos δ₀ − v_T cos θ₀).
ClosedForm nonmaneuvering_closed_form(double r0, double target_speed, double K, double theta0);

/// Speed form; valid for a stationary target.
ClosedForm nonmaneuvering_closed_form_speeds(double r0, double target_speed, double pursuer_speed,
                                             double theta0);

}  // namespace parnav
