#include "parnav/nav_metric.hpp"

#include <limits>
#include <numbers>
#include <string>

#include "parnav/detail/derivatives.hpp"

namespace parnav {

double condition_number(const Mat& sym) {
  Eigen::VectorXd ev;
  if (sym.rows() == 2) {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es;
    es.computeDirect(Eigen::Matrix2d(sym), Eigen::EigenvaluesOnly);
    ev = es.eigenvalues();
  } else {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es;
    es.computeDirect(Eigen::Matrix3d(sym), Eigen::EigenvaluesOnly);
    ev = es.eigenvalues();
  }
  const double lo = ev.cwiseAbs().minCoeff();
  const double hi = ev.cwiseAbs().maxCoeff();
  if (lo == 0.0) return std::numeric_limits<double>::infinity();
  return hi / lo;
}

TargetVelocityField TargetVelocityField::constant(const Vec& v) {
  return {v, Mat::Zero(v.size(), v.size())};
}

TargetVelocityField TargetVelocityField::affine(const Vec& base, const Mat& gradient) {
  if (gradient.rows() != base.size() || gradient.cols() != base.size()) {
    throw InvalidInputError("target velocity gradient must be " + std::to_string(base.size()) +
                            "x" + std::to_string(base.size()));
  }
  return {base, gradient};
}

void NavMetricParams::validate() const {
  if (!(pursuer_speed > 0.0) || !std::isfinite(pursuer_speed)) {
    throw InvalidInputError("v_M must be > 0");
  }
  if (!(std::abs(delta) < std::numbers::pi / 2)) {
    throw InvalidInputError("delta must lie in (-pi/2, pi/2)");
  }
  const int n = dim();
  if (n != 2 && n != 3) throw InvalidInputError("dimension must be 2 or 3");
  if (target_velocity.gradient.rows() != n || target_velocity.gradient.cols() != n) {
    throw InvalidInputError("target velocity gradient has the wrong shape");
  }
  if (!target_velocity.base.allFinite() || !target_velocity.gradient.allFinite()) {
    throw InvalidInputError("target velocity field must be finite");
  }
}

Metric::Metric(NavMetricParams nav) : impl_(std::move(nav)) {
  const auto& p = std::get<NavMetricParams>(impl_);
  p.validate();
  dim_ = p.dim();
}

Metric::Metric(AlphaBetaMetric ab) : impl_(std::move(ab)) {
  const auto& m = std::get<AlphaBetaMetric>(impl_);
  dim_ = m.dim();
  if (dim_ != 2 && dim_ != 3) throw InvalidInputError("dimension must be 2 or 3");
  if (m.a.rows() != dim_ || m.a.cols() != dim_) {
    throw InvalidInputError("Riemannian matrix has the wrong shape");
  }
  Eigen::SelfAdjointEigenSolver<Mat> es(m.a, Eigen::EigenvaluesOnly);
  if (!m.a.isApprox(m.a.transpose()) || es.eigenvalues().minCoeff() <= 0.0) {
    throw InvalidInputError("Riemannian matrix must be symmetric positive definite");
  }
}

namespace {

void check_sample(int dim, const Vec& x, const Vec& y) {
  if (x.size() != dim || y.size() != dim) {
    throw InvalidInputError("sample dimension does not match metric dimension " +
                            std::to_string(dim));
  }
  if (!(y.norm() > 0.0)) throw InvalidInputError("tangent vector must be nonzero");
}

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

MetricValue Metric::evaluate(const Vec& x, const Vec& y) const {
  check_sample(dim_, x, y);
  MetricValue out;
  if (const auto* p = nav()) {
    const double norm = y.norm();
    out.denominator = p->pursuer_speed * std::cos(p->delta) * norm -
                      y.dot(p->target_velocity.at(x));
    out.in_domain = out.denominator > 0.0;
    out.F = out.in_domain ? norm * norm / out.denominator : kInf;
    return out;
  }
  const auto& ab = std::get<AlphaBetaMetric>(impl_);
  const double alpha = std::sqrt(y.dot(ab.a * y));
  const double beta = ab.b.dot(y);
  if (ab.kind == AlphaBetaKind::randers) {
    out.denominator = alpha + beta;
    out.in_domain = alpha > 0.0 && alpha + beta > 0.0;
    out.F = out.in_domain ? alpha + beta : kInf;
  } else {
    out.denominator = alpha - beta;
    out.in_domain = alpha > 0.0 && alpha - beta > 0.0;
    out.F = out.in_domain ? alpha * alpha / (alpha - beta) : kInf;
  }
  return out;
}

MetricValue eval_F(const NavMetricParams& params, const TangentSample& s) {
  return Metric(params).evaluate(s.x, s.y);
}

Mat fundamental_tensor(const Metric& metric, const TangentSample& s) {
  if (!metric.evaluate(s.x, s.y).in_domain) {
    throw DomainError("fundamental tensor requested outside the metric domain");
  }
  const int n = metric.dim();
  const auto h = detail::hessian_y_f2(metric, to_array<double>(s.x), to_array<double>(s.y));
  Mat g(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) g(i, j) = 0.5 * h[i][j];
  }
  return g;
}

bool is_unit(const NavMetricParams& params, const TangentSample& s, double tol) {
  const auto v = eval_F(params, s);
  return v.in_domain && std::abs(v.F - 1.0) <= tol;
}

Vec unit_vector_in_direction(const Metric& metric, const Vec& x, const Vec& u) {
  const auto v = metric.evaluate(x, u);
  if (!v.in_domain) throw DomainError("direction lies outside the metric domain");
  return u / v.F;
}

double alpha_beta_eval(AlphaBetaKind kind, const Mat& a, const Vec& b, const TangentSample& s) {
  const Metric m(AlphaBetaMetric{kind, a, b});
  check_sample(m.dim(), s.x, s.y);
  const double alpha = std::sqrt(s.y.dot(a * s.y));
  const double beta = b.dot(s.y);
  if (kind == AlphaBetaKind::randers) return alpha + beta;
  if (alpha == beta) throw SingularMetricError("Matsumoto metric is singular where alpha == beta");
  if (alpha < beta) throw DomainError("Matsumoto metric requires alpha > beta");
  return alpha * alpha / (alpha - beta);
}

}  // namespace parnav
