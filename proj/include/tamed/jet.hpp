#pragma once

// Second-order forward-mode dual numbers over at most kMaxChartDim variables.

#include <array>
#include <cmath>

namespace tamed::expr {

inline constexpr int kMaxChartDim = 4;

struct Jet2 {
  double v = 0.0;
  std::array<double, kMaxChartDim> d{};
  std::array<double, kMaxChartDim * kMaxChartDim> h{};
  int n = 0;

  static Jet2 constant(double c, int n) {
    Jet2 j;
    j.v = c;
    j.n = n;
    return j;
  }
  static Jet2 variable(double x, int index, int n) {
    Jet2 j = constant(x, n);
    j.d[index] = 1.0;
    return j;
  }

  double hess(int i, int j) const { return h[i * kMaxChartDim + j]; }

  bool is_constant() const {
    for (int i = 0; i < n; ++i) {
      if (d[i] != 0.0) return false;
      for (int k = 0; k < n; ++k)
        if (hess(i, k) != 0.0) return false;
    }
    return true;
  }

  bool all_finite() const {
    if (!std::isfinite(v)) return false;
    for (int i = 0; i < n; ++i) {
      if (!std::isfinite(d[i])) return false;
      for (int k = 0; k < n; ++k)
        if (!std::isfinite(hess(i, k))) return false;
    }
    return true;
  }
};

/// Composition with a scalar function given its value and first two derivatives at a.v.
inline Jet2 chain(const Jet2& a, double f0, double f1, double f2) {
  Jet2 r = Jet2::constant(f0, a.n);
  for (int i = 0; i < a.n; ++i) {
    r.d[i] = f1 * a.d[i];
    for (int k = 0; k < a.n; ++k) {
      const int ik = i * kMaxChartDim + k;
      r.h[ik] = f1 * a.h[ik] + f2 * a.d[i] * a.d[k];
    }
  }
  return r;
}

inline Jet2 operator-(const Jet2& a) { return chain(a, -a.v, -1.0, 0.0); }

inline Jet2 operator+(const Jet2& a, const Jet2& b) {
  Jet2 r = a;
  r.v += b.v;
  for (int i = 0; i < a.n; ++i) r.d[i] += b.d[i];
  for (std::size_t i = 0; i < r.h.size(); ++i) r.h[i] += b.h[i];
  return r;
}

inline Jet2 operator-(const Jet2& a, const Jet2& b) { return a + (-b); }

inline Jet2 operator*(const Jet2& a, const Jet2& b) {
  Jet2 r = Jet2::constant(a.v * b.v, a.n);
  for (int i = 0; i < a.n; ++i) {
    r.d[i] = a.v * b.d[i] + b.v * a.d[i];
    for (int k = 0; k < a.n; ++k) {
      const int ik = i * kMaxChartDim + k;
      r.h[ik] = a.v * b.h[ik] + b.v * a.h[ik] + a.d[i] * b.d[k] + b.d[i] * a.d[k];
    }
  }
  return r;
}

inline Jet2 reciprocal(const Jet2& a) {
  const double inv = 1.0 / a.v;
  return chain(a, inv, -inv * inv, 2.0 * inv * inv * inv);
}

inline Jet2 operator/(const Jet2& a, const Jet2& b) { return a * reciprocal(b); }

}  // namespace tamed::expr
