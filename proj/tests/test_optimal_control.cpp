#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "parnav/optimal_control.hpp"

using namespace parnav;
using parnav::testing::in_domain;
using parnav::testing::wiggle;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

Scenario reference_case() { return Scenario::constant_target(vec2(1000, 0), 100.0, 60 * kDeg, 2.0, 1e-3, 1e-6); }

Scenario stationary() {
  Scenario s;
  s.initial_range = vec2(1000, 0);
  s.target = TargetProgram::constant(vec2(0, 0));
  s.pursuer_speed = 200.0;
  s.hit_radius = 1e-6;
  return s;
}

// v_T(q) = (0, 50 + 0.05 q_x): the target drifts sideways faster far out.
TargetVelocityField shear(double g = 0.05) {
  Mat J = Mat::Zero(2, 2);
  J(1, 0) = g;
  return TargetVelocityField::affine(vec2(0, 50), J);
}

Scenario shear_scenario() {
  Scenario s = stationary();
  s.target = TargetProgram::constant(vec2(0, 0));
  return s;
}

double max_of(const std::vector<double>& v, std::size_t skip_ends = 0) {
  double m = 0.0;
  for (std::size_t k = skip_ends; k + skip_ends < v.size(); ++k) m = std::max(m, v[k]);
  return m;
}

NavMetricParams reference_params() {
  return {200.0, TargetVelocityField::constant(reference_case().target.velocity_at(0.0)), 0.0};
}

}  // namespace

TEST(Hamiltonian, IdentitiesAtUnitVelocity) {
  const auto params = reference_params();
  const Metric m(params);
  const Vec r = vec2(-600, 0);
  const Vec X = unit_vector_in_direction(m, r, vec2(1, 0.2));
  const Vec p = fundamental_tensor(m, {r, X}) * X;
  EXPECT_LT((p - canonical_momentum(m, r, X)).norm(), 1e-12);
  EXPECT_NEAR(hamiltonian(params, {r, p, 0.0}, X), 0.0, 1e-12);
  EXPECT_NEAR(hamiltonian(params, {r, Vec::Zero(2), 0.0}, X), -1.0, 1e-12);
  EXPECT_NEAR(hamiltonian(params, {r, 2.0 * p, 0.0}, X), 1.0, 1e-12);
}

TEST(HatHamiltonian, ZeroLeadMaximizes) {
  const auto params = reference_params();
  const Metric m(params);
  const Vec r = vec2(-600, 0);
  const Vec X = unit_vector_in_direction(m, r, vec2(1, 0));
  const auto grid = default_delta_grid();
  ASSERT_EQ(grid.size(), 181u);
  EXPECT_NEAR(grid[90], 0.0, 1e-15);

  const auto hat = hat_hamiltonian(params, r, canonical_momentum(m, r, X), X, grid);
  EXPECT_NEAR(hat.value, 0.0, 1e-6);
  EXPECT_NEAR(hat.argmax_delta, 0.0, 1e-6);

  const auto zero_p = hat_hamiltonian(params, r, Vec::Zero(2), X, grid);
  EXPECT_NEAR(zero_p.argmax_delta, 0.0, 1e-6);
  EXPECT_NEAR(zero_p.value, -m.evaluate(r, X).F, 1e-9);
}

TEST(HatHamiltonian, SymmetricSetupAndScaling) {
  // Target moving along the LOS: H is even in δ.
  const NavMetricParams params{3.0, TargetVelocityField::constant(vec2(1, 0)), 0.0};
  const Metric m(params);
  const Vec X = unit_vector_in_direction(m, vec2(0, 0), vec2(-1, 0));
  const Vec p = canonical_momentum(m, vec2(0, 0), X);
  const auto grid = default_delta_grid();
  const auto base = hat_hamiltonian(params, vec2(0, 0), p, X, grid);
  EXPECT_NEAR(base.argmax_delta, 0.0, std::numbers::pi / 182);
  for (double c : {0.5, 2.0, 7.0}) {
    EXPECT_NEAR(hat_hamiltonian(params, vec2(0, 0), c * p, X, grid).argmax_delta, base.argmax_delta, 1e-12);
  }
  EXPECT_THROW(hat_hamiltonian(params, vec2(0, 0), p, X, std::vector<double>{}), InvalidInputError);
}

TEST(OptimalTrajectory, ConstantTargetIsChord) {
  const auto c = optimal_trajectory(reference_case());
  const double expected = 1000.0 / (200.0 - 100.0 * std::cos(60 * kDeg));
  EXPECT_NEAR(c.times.back(), expected, 1e-6 * expected);
  EXPECT_LT(c.positions.back().norm(), 1e-6);
  double dev = 0.0;
  for (const Vec& q : c.positions) dev = std::max(dev, std::abs(q(1)));
  EXPECT_LE(dev, 1e-6 * 1000);
  const Metric f0(reference_params());
  EXPECT_NEAR(action_integral(f0, c, Lagrangian::F), c.times.back(), 1e-9);
}

TEST(OptimalTrajectory, StationaryTarget) {
  const auto c = optimal_trajectory(stationary());
  EXPECT_NEAR(c.times.back(), 5.0, 1e-8);
}

TEST(OptimalTrajectory, ShearFieldBeatsCompetitors) {
  const auto field = shear();
  const auto c = optimal_trajectory(shear_scenario(), field);
  const Metric f0(NavMetricParams{200.0, field, 0.0});
  EXPECT_LE(2.0 * max_of(euler_lagrange_residual(f0, c)), 1e-4);
  EXPECT_GT(max_of([&] {
              std::vector<double> y;
              for (const Vec& q : c.positions) y.push_back(std::abs(q(1)));
              return y;
            }()),
            1.0);  // genuinely curved

  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_int_distribution<int> mode(1, 4);
  int feasible = 0;
  const double T = c.times.back();
  while (feasible < 50) {
    const auto other = wiggle(f0, c, vec2(50 * u(rng), 50 * u(rng)), mode(rng));
    if (!in_domain(f0, other)) continue;
    ++feasible;
    EXPECT_GE(action_integral(f0, other, Lagrangian::F), T);
  }
}

TEST(OptimalTrajectory, Errors) {
  Scenario fast = Scenario::constant_target(vec2(1000, 0), 100.0, 0.0, 0.9);
  EXPECT_THROW(optimal_trajectory(fast), UnreachableError);
  Scenario s3;
  s3.initial_range = vec3(1, 2, 3);
  s3.target = TargetProgram::constant(vec3(0, 0, 0));
  s3.hit_radius = 1e-6;
  EXPECT_THROW(optimal_trajectory(s3), InvalidInputError);
  EXPECT_TRUE(reachable_with_zero_lead(reference_case(), TargetVelocityField::constant(vec2(0, 100))));
}

TEST(PmpCheck, ReferenceChord) {
  const auto c = optimal_trajectory(reference_case());
  const auto rep = pmp_check(reference_params(), c, std::vector<double>(c.size(), 0.0));
  EXPECT_LE(rep.adjoint_residual, 1e-4);
  EXPECT_LE(rep.hamiltonian_max_gap, 1e-6);
  EXPECT_LE(rep.hamiltonian_value, 1e-4);
  EXPECT_LE(rep.el_residual, 1e-4);
  EXPECT_TRUE(rep.all_ok());

  const Metric f0(reference_params());
  const auto wiggled = reparametrize_unit_speed(f0, wiggle(f0, c, vec2(0, 10), 1));
  const auto bad = pmp_check(reference_params(), wiggled, std::vector<double>(wiggled.size(), 0.0));
  EXPECT_GE(bad.el_residual, 10.0 * std::max(rep.el_residual, 1e-12));
  EXPECT_FALSE(bad.el_ok);
}

TEST(PmpCheck, StationaryStraightRun) {
  const auto c = optimal_trajectory(stationary());
  const NavMetricParams p{200.0, TargetVelocityField::constant(vec2(0, 0)), 0.0};
  const auto rep = pmp_check(p, c, std::vector<double>(c.size(), 0.0));
  EXPECT_LE(rep.adjoint_residual, 1e-6);
  EXPECT_LE(rep.hamiltonian_max_gap, 1e-6);
  EXPECT_LE(rep.hamiltonian_value, 1e-6);
  EXPECT_LE(rep.el_residual, 1e-6);
}

TEST(PmpCheck, ShearGeodesic) {
  const auto field = shear();
  const auto c = optimal_trajectory(shear_scenario(), field);
  const auto rep = pmp_check({200.0, field, 0.0}, c, std::vector<double>(c.size(), 0.0));
  EXPECT_TRUE(rep.all_ok()) << rep.adjoint_residual << " " << rep.el_residual;
}

TEST(PmpCheck, RejectsNonUnitCurve) {
  const Metric f0(reference_params());
  const auto c = integrate_geodesic({f0, vec2(-1000, 0), vec2(10, 0), 1.0, 0.1});
  EXPECT_THROW(pmp_check(reference_params(), c, std::vector<double>(c.size(), 0.0)), InvalidInputError);
}

TEST(Monotonicity, RandomSamplesAndChord) {
  const NavMetricParams p{2.0, TargetVelocityField::constant(vec2(0.6, -0.8)), 0.0};
  const auto chord = optimal_trajectory(reference_case());
  const auto rep = metric_monotonicity_check(reference_params(), 10000, chord, 0);
  EXPECT_EQ(rep.samples, 10000);
  EXPECT_EQ(rep.pointwise_violations, 0);
  EXPECT_EQ(rep.length_violations, 0);
  EXPECT_EQ(rep.argmin_delta, 0.0);

  const auto small = metric_monotonicity_check(p, 10000, chord, 42);
  EXPECT_EQ(small.pointwise_violations, 0);
  EXPECT_EQ(small.max_pointwise_violation, 0.0);

  const Vec x = vec2(3, 4);
  const Vec y = vec2(-1, 0.5);
  EXPECT_EQ(eval_F(p.with_delta(0.0), {x, y}).F, eval_F(p, {x, y}).F);
}

TEST(Monotonicity, SeedIsReproducible) {
  const auto chord = optimal_trajectory(reference_case());
  const auto a = metric_monotonicity_check(reference_params(), 500, chord, 9);
  const auto b = metric_monotonicity_check(reference_params(), 500, chord, 9);
  EXPECT_EQ(a.samples, b.samples);
  EXPECT_EQ(a.min_length, b.min_length);
}

TEST(PursuerResidual, FlatCaseVanishes) {
  for (const Scenario& s : {reference_case(), stationary()}) {
    const auto field = TargetVelocityField::constant(s.target.velocity_at(0.0));
    const auto c = optimal_trajectory(s, field);
    const auto eng = engagement_from_relative(c, field, s.initial_range);
    const NavMetricParams p{s.pursuer_speed, field, 0.0};
    for (auto v : {CovariantVariant::quadratic, CovariantVariant::affine}) {
      EXPECT_LE(max_of(theorem3_residual(p, eng.pursuer, eng.target, c, v)), 1e-4);
    }
  }
}

TEST(PursuerResidual, ParallelNavigationRunIsFlat) {
  const auto res = simulate(reference_case());
  const auto rel = negate_curve(range_curve(res));
  const NavMetricParams p{200.0, TargetVelocityField::constant(res.trajectory.front().target_velocity),
                          res.trajectory.front().delta};
  // Drop the bisected terminal node, whose spacing is not on the grid.
  CurveRecord r = rel, pm = pursuer_curve(res), tg = target_curve(res);
  for (CurveRecord* c : {&r, &pm, &tg}) {
    c->times.pop_back();
    c->positions.pop_back();
    c->velocities.pop_back();
    c->F_values.pop_back();
  }
  EXPECT_LE(max_of(theorem3_residual(p, pm, tg, r)), 1e-4);
}

TEST(PursuerResidual, ShearResidualScalesWithShear) {
  // With a varying field the residual does not vanish; it tracks the shear.
  std::vector<double> res;
  for (double g : {0.04, 0.02, 0.01}) {
    const auto field = shear(g);
    const auto c = optimal_trajectory(shear_scenario(), field);
    const auto eng = engagement_from_relative(c, field, vec2(1000, 0));
    res.push_back(max_of(theorem3_residual({200.0, field, 0.0}, eng.pursuer, eng.target, c), 1));
  }
  EXPECT_GT(res[0], res[1]);
  EXPECT_GT(res[1], res[2]);
}

TEST(ClosedForm, Examples) {
  const auto ex = nonmaneuvering_closed_form(1000, 100, 2.0, 60 * kDeg);
  EXPECT_NEAR(ex.delta0, 0.44783239692893245, 1e-15);
  EXPECT_NEAR(ex.t_f, 7.675918792439982, 1e-12);

  const auto tail = nonmaneuvering_closed_form(1000, 100, 2.0, 0.0);
  EXPECT_EQ(tail.delta0, 0.0);
  EXPECT_NEAR(tail.t_f, 10.0, 1e-12);

  const auto still = nonmaneuvering_closed_form_speeds(1000, 0.0, 200.0, 1.3);
  EXPECT_EQ(still.delta0, 0.0);
  EXPECT_NEAR(still.t_f, 5.0, 1e-12);

  EXPECT_THROW(nonmaneuvering_closed_form(1000, 100, 0.5, 90 * kDeg), InfeasibleControlError);
  EXPECT_THROW(nonmaneuvering_closed_form(1000, 100, 0.9, 0.0), UnreachableError);
}
