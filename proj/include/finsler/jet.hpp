#pragma once

// Second-order forward-mode jets in two variables: value, gradient and
// Hessian propagated through arithmetic by the chain rule.

#include <cmath>

namespace finsler {

struct Jet2 {
  double v = 0.0;
  double g1 = 0.0, g2 = 0.0;
  double h11 = 0.0, h12 = 0.0, h22 = 0.0;

  constexpr Jet2() = default;
  constexpr Jet2(double value) : v(value) {}  // NOLINT: constants promote implicitly

  static constexpr Jet2 variable(double value, int index) {
    Jet2 j(value);
    (index == 0 ? j.g1 : j.g2) = 1.0;
    return j;
  }

  Jet2& operator+=(const Jet2& o) {
    v += o.v; g1 += o.g1; g2 += o.g2; h11 += o.h11; h12 += o.h12; h22 += o.h22;
    return *this;
  }
  Jet2& operator-=(const Jet2& o) {
    v -= o.v; g1 -= o.g1; g2 -= o.g2; h11 -= o.h11; h12 -= o.h12; h22 -= o.h22;
    return *this;
  }
  Jet2 operator-() const { return Jet2{} -= *this; }

  friend Jet2 operator+(Jet2 a, const Jet2& b) { return a += b; }
  friend Jet2 operator-(Jet2 a, const Jet2& b) { return a -= b; }

  friend Jet2 operator*(const Jet2& a, const Jet2& b) {
    Jet2 r;
    r.v = a.v * b.v;
    r.g1 = a.g1 * b.v + a.v * b.g1;
    r.g2 = a.g2 * b.v + a.v * b.g2;
    r.h11 = a.h11 * b.v + 2 * a.g1 * b.g1 + a.v * b.h11;
    r.h12 = a.h12 * b.v + a.g1 * b.g2 + a.g2 * b.g1 + a.v * b.h12;
    r.h22 = a.h22 * b.v + 2 * a.g2 * b.g2 + a.v * b.h22;
    return r;
  }

  friend Jet2 operator/(const Jet2& a, const Jet2& b) { return a * reciprocal(b); }

  /// Applies a scalar function given f(u), f'(u), f''(u) at u = a.v.
  friend Jet2 compose(const Jet2& a, double f, double df, double d2f) {
    Jet2 r;
    r.v = f;
    r.g1 = df * a.g1;
    r.g2 = df * a.g2;
    r.h11 = df * a.h11 + d2f * a.g1 * a.g1;
    r.h12 = df * a.h12 + d2f * a.g1 * a.g2;
    r.h22 = df * a.h22 + d2f * a.g2 * a.g2;
    return r;
  }

  friend Jet2 reciprocal(const Jet2& a) {
    const double i = 1.0 / a.v;
    return compose(a, i, -i * i, 2 * i * i * i);
  }
};

inline Jet2 sin(const Jet2& a) {
  const double s = std::sin(a.v), c = std::cos(a.v);
  return compose(a, s, c, -s);
}
inline Jet2 cos(const Jet2& a) {
  const double s = std::sin(a.v), c = std::cos(a.v);
  return compose(a, c, -s, -c);
}
inline Jet2 tan(const Jet2& a) {
  const double t = std::tan(a.v), d = 1 + t * t;
  return compose(a, t, d, 2 * t * d);
}
inline Jet2 exp(const Jet2& a) {
  const double e = std::exp(a.v);
  return compose(a, e, e, e);
}
inline Jet2 log(const Jet2& a) { return compose(a, std::log(a.v), 1 / a.v, -1 / (a.v * a.v)); }
inline Jet2 sqrt(const Jet2& a) {
  const double s = std::sqrt(a.v);
  return compose(a, s, 0.5 / s, -0.25 / (s * a.v));
}
/// Constant exponent; integer exponents are safe for negative bases.
inline Jet2 pow(const Jet2& a, double c) {
  if (c == 0.0) return Jet2(1.0);
  if (c == 1.0) return a;
  if (c == 2.0) return a * a;
  return compose(a, std::pow(a.v, c), c * std::pow(a.v, c - 1), c * (c - 1) * std::pow(a.v, c - 2));
}
inline Jet2 pow(const Jet2& a, const Jet2& b) { return exp(b * log(a)); }

}  // namespace finsler
