#pragma once

// The navigation Finsler metric
//
//   F(x, y; δ) = |y|² / (v_M cos δ |y| − ⟨y, v_T(x)⟩)
//
// together with its fundamental tensor, indicatrix helpers and the
// Randers / Matsumoto (α,β) fixtures. A sample is in the metric domain iff
// the denominator is strictly positive.

#include <array>
#include <cmath>
#include <variant>

#include "parnav/errors.hpp"
#include "parnav/linalg.hpp"

namespace parnav {

/// Affine target-velocity field v_T(x) = base + gradient·x.
/// A zero gradient is the non-maneuvering (constant velocity) case.
struct TargetVelocityField {
  Vec base;
  Mat gradient;

  static TargetVelocityField constant(const Vec& v);
  static TargetVelocityField affine(const Vec& base, const Mat& gradient);

  int dim() const { return static_cast<int>(base.size()); }
  bool is_constant() const { return gradient.isZero(0.0); }
  Vec at(const Vec& x) const { return base + gradient * x; }

  template <class S>
  std::array<S, 3> at(const std::array<S, 3>& x, int n) const {
    std::array<S, 3> out{};
    for (int i = 0; i < n; ++i) {
      S acc(base(i));
      for (int j = 0; j < n; ++j) {
        if (gradient(i, j) != 0.0) {
          acc = acc + x[j] * gradient(i, j);
        }
      }
      out[i] = acc;
    }
    return out;
  }
};

struct NavMetricParams {
  double pursuer_speed = 1.0;               // v_M > 0
  TargetVelocityField target_velocity;      // v_T field
  double delta = 0.0;                       // control angle, |δ| < π/2

  int dim() const { return target_velocity.dim(); }
  NavMetricParams with_delta(double d) const {
    NavMetricParams p = *this;
    p.delta = d;
    return p;
  }
  /// Throws InvalidInputError naming the broken invariant.
  void validate() const;
};

/// A point of the slit tangent bundle TM₀.
struct TangentSample {
  Vec x;
  Vec y;
};

struct MetricValue {
  double F = 0.0;
  double denominator = 0.0;
  bool in_domain = false;
};

enum class AlphaBetaKind { randers, matsumoto };

/// F = Φ(β/α)·α with α = sqrt(yᵀ a y), β = b·y and constant a, b.
struct AlphaBetaMetric {
  AlphaBetaKind kind = AlphaBetaKind::randers;
  Mat a;
  Vec b;

  int dim() const { return static_cast<int>(b.size()); }
};

/// Handle over any metric the geometry routines accept.
class Metric {
 public:
  Metric(NavMetricParams nav);  // NOLINT(google-explicit-constructor)
  Metric(AlphaBetaMetric ab);   // NOLINT(google-explicit-constructor)

  int dim() const { return dim_; }
  MetricValue evaluate(const Vec& x, const Vec& y) const;

  /// F evaluated on an arbitrary (possibly dual) scalar type.
  template <class S>
  S f(const std::array<S, 3>& x, const std::array<S, 3>& y) const;

  template <class S>
  S f_squared(const std::array<S, 3>& x, const std::array<S, 3>& y) const {
    const S v = f(x, y);
    return v * v;
  }

  const NavMetricParams* nav() const { return std::get_if<NavMetricParams>(&impl_); }
  const AlphaBetaMetric* alpha_beta() const { return std::get_if<AlphaBetaMetric>(&impl_); }

 private:
  std::variant<NavMetricParams, AlphaBetaMetric> impl_;
  int dim_;
};

template <class S>
S Metric::f(const std::array<S, 3>& x, const std::array<S, 3>& y) const {
  using std::sqrt;
  const int n = dim_;
  if (const auto* p = nav()) {
    S norm2(0.0);
    for (int i = 0; i < n; ++i) norm2 = norm2 + y[i] * y[i];
    const S norm = sqrt(norm2);
    const auto w = p->target_velocity.at(x, n);
    S dot(0.0);
    for (int i = 0; i < n; ++i) dot = dot + y[i] * w[i];
    return norm2 / (norm * (p->pursuer_speed * std::cos(p->delta)) - dot);
  }
  const auto& ab = std::get<AlphaBetaMetric>(impl_);
  S alpha2(0.0);
  S beta(0.0);
  for (int i = 0; i < n; ++i) {
    beta = beta + y[i] * ab.b(i);
    for (int j = 0; j < n; ++j) alpha2 = alpha2 + y[i] * y[j] * ab.a(i, j);
  }
  const S alpha = sqrt(alpha2);
  if (ab.kind == AlphaBetaKind::randers) return alpha + beta;
  return alpha2 / (alpha - beta);
}

/// Evaluates F; a non-positive denominator is flagged, not thrown.
/// Throws InvalidInputError for y = 0 or mismatched dimensions.
MetricValue eval_F(const NavMetricParams& params, const TangentSample& s);

/// g_ij = ½ ∂²(F²)/∂y^i∂y^j. Throws DomainError outside the metric domain.
Mat fundamental_tensor(const Metric& metric, const TangentSample& s);

bool is_unit(const NavMetricParams& params, const TangentSample& s, double tol);

/// The F-unit vector u / F(x, u). Throws DomainError if u is out of domain.
Vec unit_vector_in_direction(const Metric& metric, const Vec& x, const Vec& u);

double alpha_beta_eval(AlphaBetaKind kind, const Mat& a, const Vec& b, const TangentSample& s);

template <class S>
std::array<S, 3> to_array(const Vec& v) {
  std::array<S, 3> out{};
  for (int i = 0; i < v.size(); ++i) out[i] = S(v(i));
  return out;
}

}  // namespace parnav
