#pragma once

// Exact y- and x-derivatives of F² by nested forward-mode dual numbers,
// templated on the outer scalar so that the spray itself can be
// differentiated again (Berwald coefficients).

#include <array>

#include "parnav/dual.hpp"
#include "parnav/nav_metric.hpp"

namespace parnav::detail {

template <class S>
using Arr = std::array<S, 3>;
template <class S>
using Sq = std::array<std::array<S, 3>, 3>;

template <class S>
Dual<Dual<S>> seed2(const S& v, double inner, double outer) {
  return Dual<Dual<S>>(Dual<S>(v, S(inner)), Dual<S>(S(outer), S(0.0)));
}

/// ∂²(F²)/∂y^l∂y^k.
template <class S>
Sq<S> hessian_y_f2(const Metric& m, const Arr<S>& x, const Arr<S>& y) {
  using T = Dual<Dual<S>>;
  const int n = m.dim();
  Arr<T> xs{};
  for (int i = 0; i < n; ++i) xs[i] = seed2<S>(x[i], 0.0, 0.0);
  Sq<S> h{};
  for (int l = 0; l < n; ++l) {
    for (int k = l; k < n; ++k) {
      Arr<T> ys{};
      for (int i = 0; i < n; ++i) ys[i] = seed2<S>(y[i], i == k ? 1.0 : 0.0, i == l ? 1.0 : 0.0);
      const S v = m.f_squared(xs, ys).d.d;
      h[l][k] = v;
      h[k][l] = v;
    }
  }
  return h;
}

/// ∂/∂y^l (∂(F²)/∂x^k · y^k), the x-derivative taken along the frozen y.
template <class S>
Arr<S> mixed_f2(const Metric& m, const Arr<S>& x, const Arr<S>& y) {
  using T = Dual<Dual<S>>;
  const int n = m.dim();
  Arr<T> xs{};
  for (int i = 0; i < n; ++i) xs[i] = T(Dual<S>(x[i], y[i]), Dual<S>(S(0.0), S(0.0)));
  Arr<S> out{};
  for (int l = 0; l < n; ++l) {
    Arr<T> ys{};
    for (int i = 0; i < n; ++i) ys[i] = seed2<S>(y[i], 0.0, i == l ? 1.0 : 0.0);
    out[l] = m.f_squared(xs, ys).d.d;
  }
  return out;
}

template <class S>
Arr<S> grad_x_f2(const Metric& m, const Arr<S>& x, const Arr<S>& y) {
  using T = Dual<S>;
  const int n = m.dim();
  Arr<T> ys{};
  for (int i = 0; i < n; ++i) ys[i] = T(y[i], S(0.0));
  Arr<S> out{};
  for (int l = 0; l < n; ++l) {
    Arr<T> xs{};
    for (int i = 0; i < n; ++i) xs[i] = T(x[i], S(i == l ? 1.0 : 0.0));
    out[l] = m.f_squared(xs, ys).d;
  }
  return out;
}

template <class S>
Arr<S> grad_y_f2(const Metric& m, const Arr<S>& x, const Arr<S>& y) {
  using T = Dual<S>;
  const int n = m.dim();
  Arr<T> xs{};
  for (int i = 0; i < n; ++i) xs[i] = T(x[i], S(0.0));
  Arr<S> out{};
  for (int l = 0; l < n; ++l) {
    Arr<T> ys{};
    for (int i = 0; i < n; ++i) ys[i] = T(y[i], S(i == l ? 1.0 : 0.0));
    out[l] = m.f_squared(xs, ys).d;
  }
  return out;
}

/// Solves h·a = b for n ∈ {2, 3} by cofactors.
template <class S>
Arr<S> solve_small(const Sq<S>& h, const Arr<S>& b, int n) {
  Arr<S> a{};
  if (n == 2) {
    const S det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
    a[0] = (h[1][1] * b[0] - h[0][1] * b[1]) / det;
    a[1] = (h[0][0] * b[1] - h[1][0] * b[0]) / det;
    return a;
  }
  Sq<S> c{};
  c[0][0] = h[1][1] * h[2][2] - h[1][2] * h[2][1];
  c[0][1] = h[0][2] * h[2][1] - h[0][1] * h[2][2];
  c[0][2] = h[0][1] * h[1][2] - h[0][2] * h[1][1];
  c[1][0] = h[1][2] * h[2][0] - h[1][0] * h[2][2];
  c[1][1] = h[0][0] * h[2][2] - h[0][2] * h[2][0];
  c[1][2] = h[0][2] * h[1][0] - h[0][0] * h[1][2];
  c[2][0] = h[1][0] * h[2][1] - h[1][1] * h[2][0];
  c[2][1] = h[0][1] * h[2][0] - h[0][0] * h[2][1];
  c[2][2] = h[0][0] * h[1][1] - h[0][1] * h[1][0];
  const S det = h[0][0] * c[0][0] + h[0][1] * c[1][0] + h[0][2] * c[2][0];
  for (int i = 0; i < 3; ++i) {
    a[i] = (c[i][0] * b[0] + c[i][1] * b[1] + c[i][2] * b[2]) / det;
  }
  return a;
}

/// G^i = ¼ g^{il}(∂²F²/∂y^l∂x^k y^k − ∂F²/∂x^l) with g = ½ Hess_y F².
template <class S>
Arr<S> spray(const Metric& m, const Arr<S>& x, const Arr<S>& y) {
  const int n = m.dim();
  const auto h = hessian_y_f2(m, x, y);
  const auto mixed = mixed_f2(m, x, y);
  const auto gx = grad_x_f2(m, x, y);
  Arr<S> rhs{};
  for (int l = 0; l < n; ++l) rhs[l] = mixed[l] - gx[l];
  auto a = solve_small(h, rhs, n);
  for (int i = 0; i < n; ++i) a[i] = a[i] * 0.5;
  return a;
}

}  // namespace parnav::detail
