#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "parnav/geodesics.hpp"

using namespace parnav;
using parnav::testing::fd_half_hessian;

namespace {

Metric flat_nav() { return NavMetricParams{2.0, TargetVelocityField::constant(vec2(1, 0)), 0.0}; }

Metric euclidean() { return AlphaBetaMetric{AlphaBetaKind::randers, Mat::Identity(2, 2), vec2(0, 0)}; }

// v_T = (0, 0.5 + 0.2 x): a linear shear across the x axis.
Metric shear_nav() {
  Mat J = Mat::Zero(2, 2);
  J(1, 0) = 0.2;
  return NavMetricParams{2.0, TargetVelocityField::affine(vec2(0, 0.5), J), 0.0};
}

double max_of(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, x);
  return m;
}

// Spray from central differences of F² only.
Vec fd_spray(const Metric& m, const Vec& x, const Vec& y) {
  const double h = 1e-4;
  const auto f2 = [&](const Vec& xx, const Vec& yy) {
    const double f = m.evaluate(xx, yy).F;
    return f * f;
  };
  const auto n = x.size();
  const auto grad_y = [&](const Vec& xx) {
    Vec g(n);
    for (Eigen::Index l = 0; l < n; ++l) {
      Vec yp = y, ym = y;
      yp(l) += h;
      ym(l) -= h;
      g(l) = (f2(xx, yp) - f2(xx, ym)) / (2 * h);
    }
    return g;
  };
  const Vec mixed = (grad_y(x + h * y) - grad_y(x - h * y)) / (2 * h);
  Vec grad_x(n);
  for (Eigen::Index l = 0; l < n; ++l) {
    Vec xp = x, xm = x;
    xp(l) += h;
    xm(l) -= h;
    grad_x(l) = (f2(xp, y) - f2(xm, y)) / (2 * h);
  }
  const Mat g = fd_half_hessian(m, x, y, 1e-4);
  return 0.25 * g.inverse() * (mixed - grad_x);
}

}  // namespace

TEST(Spray, VanishesForConstantField) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const Metric m = flat_nav();
  for (int k = 0; k < 100; ++k) {
    const Vec x = vec2(500 * u(rng), 500 * u(rng));
    const Vec y = vec2(u(rng), u(rng));
    EXPECT_LT(spray_coefficients(m, {x, y}).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT(berwald_coefficients(m, {x, y}).max_abs(), 1e-5);
  }
}

TEST(Spray, VanishesForEuclideanFixture) {
  EXPECT_LT(spray_coefficients(euclidean(), {vec2(1, 2), vec2(0.3, -0.4)}).norm(), 1e-15);
}

TEST(Spray, MatchesFiniteDifferenceOracle) {
  const Metric m = shear_nav();
  for (const auto& [x, y] : {std::pair{vec2(0.3, -0.2), vec2(1.0, 0.5)},
                             std::pair{vec2(-1.0, 2.0), vec2(-0.4, 1.2)},
                             std::pair{vec2(2.0, 0.0), vec2(0.7, -0.9)}}) {
    const Vec G = spray_coefficients(m, {x, y});
    const Vec oracle = fd_spray(m, x, y);
    EXPECT_LT((G - oracle).norm(), 1e-5 * std::max(1.0, oracle.norm())) << G.transpose() << " vs "
                                                                         << oracle.transpose();
  }
}

TEST(Spray, OutOfDomainThrows) {
  const Metric m = NavMetricParams{1.0, TargetVelocityField::constant(vec2(2, 0)), 0.0};
  EXPECT_THROW(spray_coefficients(m, {vec2(0, 0), vec2(1, 0)}), DomainError);
}

TEST(SprayProperties, HomogeneityAndBerwaldContraction) {
  const Metric m = shear_nav();
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  int checked = 0;
  while (checked < 100) {
    const Vec x = vec2(2 * u(rng), 2 * u(rng));
    const Vec y = vec2(u(rng), u(rng));
    if (!m.evaluate(x, y).in_domain || y.norm() < 1e-2) continue;
    ++checked;
    const Vec G = spray_coefficients(m, {x, y});
    for (double lam : {0.5, 2.0, 3.0}) {
      const Vec Gl = spray_coefficients(m, {x, lam * y});
      EXPECT_LE((Gl - lam * lam * G).norm(), 1e-4 * lam * lam * G.norm() + 1e-14);
    }
    const auto B = berwald_coefficients(m, {x, y});
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) {
        for (int k = 0; k < 2; ++k) EXPECT_EQ(B(i, j, k), B(i, k, j));
      }
    }
    EXPECT_LE((B.contract(y, y) - 2.0 * G).norm(), 1e-4 * 2.0 * G.norm() + 1e-14);
  }
}

TEST(Geodesic, FlatNavMetricIsStraight) {
  const Metric m = flat_nav();
  const Vec x0 = vec2(1000, 0);
  const Vec y0 = unit_vector_in_direction(m, x0, vec2(-1, 0));
  const double horizon = 1000.0 / y0.norm();
  const auto c = integrate_geodesic({m, x0, y0, horizon, 1e-2});
  double dev = 0.0;
  for (const Vec& p : c.positions) dev = std::max(dev, std::abs(p(1)));
  EXPECT_LE(dev, 1e-6 * 1000);
  EXPECT_LT((c.positions.back() - (x0 + c.times.back() * y0)).norm(), 1e-6 * 1000);
}

TEST(Geodesic, EuclideanEndpoint) {
  const auto c = integrate_geodesic({euclidean(), vec2(0, 0), vec2(1, 0), 1.0, 1e-3});
  EXPECT_LT((c.positions.back() - vec2(1, 0)).norm(), 1e-10);
  EXPECT_EQ(c.size(), 1001u);
}

TEST(Geodesic, SpeedIsConserved) {
  const Metric m = shear_nav();
  const Vec x0 = vec2(-1, 0);
  const auto c = integrate_geodesic({m, x0, unit_vector_in_direction(m, x0, vec2(1, 0.3)), 2.0, 1e-3});
  for (double f : c.F_values) EXPECT_NEAR(f, c.F_values.front(), 1e-8);
}

TEST(Geodesic, FourthOrderConvergence) {
  const Metric m = shear_nav();
  const Vec x0 = vec2(-1, 0);
  const Vec y0 = unit_vector_in_direction(m, x0, vec2(1, 0.3));
  const auto end = [&](double h) { return integrate_geodesic({m, x0, y0, 2.0, h}).positions.back(); };
  const Vec ref = end(1e-3);
  const double e1 = (end(0.1) - ref).norm();
  const double e2 = (end(0.05) - ref).norm();
  EXPECT_GE(e1 / e2, 12.0);
}

TEST(Geodesic, RejectsOutOfDomainStartAndBadStep) {
  const Metric m = NavMetricParams{1.0, TargetVelocityField::constant(vec2(2, 0)), 0.0};
  EXPECT_THROW(integrate_geodesic({m, vec2(0, 0), vec2(1, 0), 1.0, 1e-2}), DomainError);
  EXPECT_THROW(integrate_geodesic({euclidean(), vec2(0, 0), vec2(1, 0), 1.0, 0.0}), InvalidInputError);
}

TEST(CovariantDerivative, ConstantFieldInFlatMetric) {
  const Metric m = flat_nav();
  std::vector<double> t;
  std::vector<Vec> pos, vel, Y;
  for (int k = 0; k <= 50; ++k) {
    const double s = 0.02 * k;
    t.push_back(s);
    pos.push_back(vec2(std::cos(s), std::sin(2 * s)));
    vel.push_back(vec2(-std::sin(s), 2 * std::cos(2 * s)));
    Y.push_back(vec2(0.3, -0.2));
  }
  const auto c = make_curve(m, t, pos, vel);
  for (auto v : {CovariantVariant::quadratic, CovariantVariant::affine}) {
    for (const Vec& d : covariant_derivative(m, c, Y, v)) EXPECT_LT(d.norm(), 1e-12);
  }
}

TEST(CovariantDerivative, LinearFieldHasConstantDerivative) {
  const Metric m = flat_nav();
  std::vector<double> t;
  std::vector<Vec> pos, vel, Y;
  for (int k = 0; k <= 20; ++k) {
    const double s = 0.05 * k * k / 20.0;  // non-uniform grid
    t.push_back(s);
    pos.push_back(vec2(0, s));
    vel.push_back(vec2(0, 1));
    Y.push_back(vec2(1 + 2 * s, -3 * s));
  }
  const auto c = make_curve(m, t, pos, vel);
  for (const Vec& d : covariant_derivative(m, c, Y)) EXPECT_LT((d - vec2(2, -3)).norm(), 1e-9);
}

TEST(CovariantDerivative, VelocityAlongGeodesicVanishes) {
  const Metric m = shear_nav();
  const Vec x0 = vec2(-1, 0);
  const auto c = integrate_geodesic({m, x0, unit_vector_in_direction(m, x0, vec2(1, 0.3)), 2.0, 1e-3});
  const auto q = covariant_derivative(m, c, c.velocities, CovariantVariant::quadratic);
  const auto a = covariant_derivative(m, c, c.velocities, CovariantVariant::affine);
  for (std::size_t k = 0; k < c.size(); ++k) {
    EXPECT_LT(q[k].norm(), 1e-5);
    EXPECT_LT((q[k] - a[k]).norm(), 1e-12);
  }
}

TEST(CovariantDerivative, LengthMismatchThrows) {
  const auto c = integrate_geodesic({euclidean(), vec2(0, 0), vec2(1, 0), 1.0, 0.1});
  EXPECT_THROW(covariant_derivative(euclidean(), c, std::vector<Vec>(3, vec2(0, 0))), InvalidInputError);
}

TEST(Action, UnitCurveGivesDuration) {
  const Metric m = flat_nav();
  const Vec x0 = vec2(10, 5);
  const auto c = integrate_geodesic({m, x0, unit_vector_in_direction(m, x0, vec2(-1, 1)), 2.5, 1e-2});
  EXPECT_NEAR(action_integral(m, c, Lagrangian::F), 2.5, 1e-12);
  EXPECT_NEAR(action_integral(m, c, Lagrangian::F_squared), 2.5, 1e-12);
}

TEST(Action, EuclideanArcLength) {
  const auto c = integrate_geodesic({euclidean(), vec2(0, 0), vec2(0.6, 0.8), 5.0, 1e-2});
  EXPECT_NEAR(action_integral(euclidean(), c, Lagrangian::F), 5.0, 1e-12);
}

TEST(EulerLagrange, GeodesicsAndWiggles) {
  const Metric m = flat_nav();
  const Vec x0 = vec2(1000, 0);
  const Vec y0 = unit_vector_in_direction(m, x0, vec2(-1, 0));
  const double T = 1000.0 / y0.norm();
  const auto c = integrate_geodesic({m, x0, y0, T, 1e-2});
  const double base = max_of(euler_lagrange_residual(m, c));
  EXPECT_LE(base, 1e-4);

  // 1% wiggle normal to the chord, pinned at both ends.
  const double amp = 0.01 * 1000.0;
  std::vector<Vec> pos, vel;
  for (std::size_t k = 0; k < c.size(); ++k) {
    const double w = std::numbers::pi * c.times[k] / T;
    pos.push_back(c.positions[k] + vec2(0, amp * std::sin(w)));
    vel.push_back(c.velocities[k] + vec2(0, amp * std::numbers::pi / T * std::cos(w)));
  }
  const auto wiggled = make_curve(m, c.times, pos, vel);
  EXPECT_GT(max_of(euler_lagrange_residual(m, wiggled)), 10.0 * std::max(base, 1e-12));
}

TEST(EulerLagrange, EuclideanStraightLine) {
  const auto c = integrate_geodesic({euclidean(), vec2(0, 0), vec2(0.6, 0.8), 1.0, 1e-3});
  EXPECT_LE(max_of(euler_lagrange_residual(euclidean(), c)), 1e-8);
}

TEST(Differentiate, ExactForQuadraticsOnNonUniformGrid) {
  std::vector<double> t{0.0, 0.1, 0.35, 0.4, 0.9, 1.0};
  std::vector<Vec> v;
  for (double s : t) v.push_back(vec2(3 * s * s - s, 2 * s));
  const auto d = differentiate_along(t, v);
  for (std::size_t k = 0; k < t.size(); ++k) {
    EXPECT_NEAR(d[k](0), 6 * t[k] - 1, 1e-12);
    EXPECT_NEAR(d[k](1), 2.0, 1e-12);
  }
}

TEST(Reparametrize, ProducesUnitSpeed) {
  const Metric m = flat_nav();
  const auto c = integrate_geodesic({m, vec2(10, 5), vec2(-3, 1), 1.0, 1e-2});
  const auto u = reparametrize_unit_speed(m, c);
  for (double f : u.F_values) EXPECT_NEAR(f, 1.0, 1e-12);
  EXPECT_NEAR(u.times.back(), action_integral(m, c, Lagrangian::F), 1e-12);
}

TEST(CurveRecord, ValidateRejectsBadGrids) {
  CurveRecord c;
  c.times = {0.0, 0.0};
  c.positions = {vec2(0, 0), vec2(1, 0)};
  c.velocities = {vec2(1, 0), vec2(1, 0)};
  c.F_values = {1.0, 1.0};
  EXPECT_THROW(c.validate(), InvalidInputError);
  c.times = {0.0, 1.0};
  EXPECT_NO_THROW(c.validate());
  c.F_values.pop_back();
  EXPECT_THROW(c.validate(), InvalidInputError);
}
