#pragma once

// Fiberwise convex geometry of asymmetric norms on a 2D tangent plane.
//
// A norm F is the support function of its dual body D* = {p : p.v <= F(v)},
// and the Hamiltonian H = dual_norm(F, .) is the gauge of D*. Support bodies
// are sampled on a uniform angular grid so that theta -> theta + pi is a grid
// involution when N is even.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/tools/minima.hpp>

#include "finsler/error.hpp"
#include "finsler/geometry.hpp"

namespace finsler {

/// A positively 1-homogeneous, possibly asymmetric norm on a tangent plane,
/// optionally carrying its fiber derivative and a closed-form dual.
class AsymNorm {
 public:
  using Eval = std::function<double(FiberVector)>;
  using Derivative = std::function<FiberCovector(FiberVector)>;
  using Dual = std::function<double(FiberCovector)>;

  AsymNorm() = default;
  explicit AsymNorm(Eval eval, Derivative derivative = {}, Dual dual = {})
      : eval_(std::move(eval)), derivative_(std::move(derivative)), dual_(std::move(dual)) {}

  double operator()(FiberVector v) const { return eval_(v); }

  bool has_derivative() const { return static_cast<bool>(derivative_); }
  FiberCovector derivative(FiberVector v) const { return derivative_(v); }

  bool has_closed_dual() const { return static_cast<bool>(dual_); }
  double closed_dual(FiberCovector p) const { return dual_(p); }

 private:
  Eval eval_;
  Derivative derivative_;
  Dual dual_;
};

inline AsymNorm euclidean_norm(double scale = 1.0) {
  return AsymNorm([scale](FiberVector v) { return scale * v.norm(); },
                  [scale](FiberVector v) {
                    const double n = v.norm();
                    return FiberCovector{scale * v.x1 / n, scale * v.x2 / n};
                  },
                  [scale](FiberCovector p) { return p.norm() / scale; });
}

/// |v| + b.v, the flat Randers norm (a translate of the round dual disc).
inline AsymNorm flat_randers_norm(FiberCovector b) {
  return AsymNorm([b](FiberVector v) { return v.norm() + pair(b, v); },
                  [b](FiberVector v) {
                    const double n = v.norm();
                    return FiberCovector{v.x1 / n + b.x1, v.x2 / n + b.x2};
                  });
}

/// F(v) = |v| h(arg v): the norm whose dual body has support function h.
/// `dh` (the angular derivative of h) enables the analytic fiber derivative.
inline AsymNorm norm_from_profile(std::function<double(double)> h,
                                  std::function<double(double)> dh = {}) {
  AsymNorm::Eval eval = [h](FiberVector v) { return v.norm() * h(std::atan2(v.x2, v.x1)); };
  AsymNorm::Derivative der;
  if (dh) {
    der = [h, dh](FiberVector v) {
      const double t = std::atan2(v.x2, v.x1);
      const double c = std::cos(t), s = std::sin(t);
      const double hv = h(t), dv = dh(t);
      return FiberCovector{hv * c - dv * s, hv * s + dv * c};
    };
  }
  return AsymNorm(std::move(eval), std::move(der));
}

// ---------------------------------------------------------------------------
// Validity

struct ValidityReport {
  bool valid = false;
  double homogeneity_residual = 0.0;  ///< max relative |F(lv) - l F(v)|
  double positivity_margin = 0.0;     ///< min F on the unit circle
  double convexity_margin = 0.0;      ///< min (h + h'') on the grid
  double convexity_margin_relative = 0.0;
  double worst_angle = 0.0;           ///< angle of the convexity minimum
  std::string reason;
};

inline constexpr double kHomogeneityTolerance = 1e-9;
/// Minimum of (h + h'') relative to max h below which a norm counts as not
/// quadratically convex.
inline constexpr double kConvexityThreshold = 1e-6;
/// Noise allowance for the SupportBody convexity invariant (relative).
inline constexpr double kSupportConvexitySlack = 1e-8;

namespace detail {

/// Discrete h + h'' on a periodic uniform grid. The centered second
/// difference is scaled by 1/(2 - 2 cos d) instead of 1/d^2 so that first
/// harmonics (translations) are annihilated exactly; flat facets then give a
/// margin of exactly zero up to roundoff.
inline std::pair<double, std::size_t> min_curvature(const std::vector<double>& h) {
  const std::size_t n = h.size();
  const double d = kTwoPi / static_cast<double>(n);
  const double scale = 1.0 / (2.0 - 2.0 * std::cos(d));
  double best = std::numeric_limits<double>::infinity();
  std::size_t arg = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const double hp = h[(k + 1) % n], hm = h[(k + n - 1) % n];
    const double m = h[k] + (hp - 2.0 * h[k] + hm) * scale;
    if (m < best) {
      best = m;
      arg = k;
    }
  }
  return {best, arg};
}

}  // namespace detail

inline ValidityReport check_norm_validity(const AsymNorm& F, int samples = 512) {
  if (samples < 64) throw DomainError("check_norm_validity: need at least 64 samples");
  ValidityReport r;
  const auto n = static_cast<std::size_t>(samples);
  std::vector<double> h(n);
  double hmax = 0.0;
  r.positivity_margin = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < n; ++k) {
    const double t = kTwoPi * static_cast<double>(k) / static_cast<double>(n);
    h[k] = F(unit_direction(t));
    if (!std::isfinite(h[k])) {
      r.reason = "non-finite evaluation at angle " + std::to_string(t);
      return r;
    }
    r.positivity_margin = std::min(r.positivity_margin, h[k]);
    hmax = std::max(hmax, h[k]);
  }

  std::mt19937_64 rng(0x5eed);
  std::uniform_real_distribution<double> angle(0.0, kTwoPi), lambda(1e-3, 10.0), radius(0.1, 5.0);
  for (int i = 0; i < 100; ++i) {
    const FiberVector v = radius(rng) * unit_direction(angle(rng));
    const double l = lambda(rng);
    const double fv = F(v);
    const double res = std::abs(F(l * v) - l * fv) / (l * std::abs(fv));
    if (!std::isfinite(res)) {
      r.reason = "non-finite evaluation in homogeneity test";
      return r;
    }
    r.homogeneity_residual = std::max(r.homogeneity_residual, res);
  }

  const auto [m, k] = detail::min_curvature(h);
  r.convexity_margin = m;
  r.convexity_margin_relative = m / hmax;
  r.worst_angle = kTwoPi * static_cast<double>(k) / static_cast<double>(n);

  if (!(r.positivity_margin > 0.0)) r.reason = "norm vanishes or is negative on the unit circle";
  else if (r.homogeneity_residual > kHomogeneityTolerance) r.reason = "not positively 1-homogeneous";
  else if (!(r.convexity_margin_relative > kConvexityThreshold))
    r.reason = "not quadratically convex near angle " + std::to_string(r.worst_angle);
  r.valid = r.reason.empty();
  return r;
}

// ---------------------------------------------------------------------------
// Duality

/// Numerical Legendre dual of one fiber norm: H(p) = max over F(v) = 1 of p.v.
/// The coarse scan samples are cached, so one instance serves many p.
class FiberDual {
 public:
  struct Argmax {
    double value = 0.0;  ///< H(p)
    FiberVector v;       ///< maximiser on the indicatrix, F(v) = 1
  };

  explicit FiberDual(AsymNorm F, int scan = 256) : F_(std::move(F)) {
    if (scan < 256) throw DomainError("FiberDual: scan needs at least 256 directions");
    const auto n = static_cast<std::size_t>(scan);
    c_.resize(n);
    s_.resize(n);
    radial_.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
      const double t = kTwoPi * static_cast<double>(k) / static_cast<double>(n);
      c_[k] = std::cos(t);
      s_[k] = std::sin(t);
      radial_[k] = 1.0 / F_(FiberVector{c_[k], s_[k]});
    }
  }

  const AsymNorm& norm() const { return F_; }

  double operator()(FiberCovector p) const {
    if (p.x1 == 0.0 && p.x2 == 0.0) return 0.0;
    return -refine(p).second;
  }

  Argmax argmax(FiberCovector p) const {
    if (p.x1 == 0.0 && p.x2 == 0.0) throw DomainError("FiberDual::argmax at p = 0");
    double t = refine(p).first;
    // Newton on psi'(t) = 0 with fourth-order differences: the value-based
    // bracket only pins the angle to ~sqrt(eps).
    constexpr double eta = 2e-4;
    for (int it = 0; it < 3; ++it) {
      const double p1 = psi(p, t + eta), m1 = psi(p, t - eta);
      const double p2 = psi(p, t + 2 * eta), m2 = psi(p, t - 2 * eta);
      const double d1 = (8.0 * (p1 - m1) - (p2 - m2)) / (12.0 * eta);
      const double d2 = (p1 - 2.0 * psi(p, t) + m1) / (eta * eta);
      if (!(d2 < 0.0)) break;
      const double step = -d1 / d2;
      t += std::clamp(step, -eta, eta);
      if (std::abs(step) < 1e-15) break;
    }
    const FiberVector u = unit_direction(t);
    const FiberVector v = u / F_(u);
    return {pair(p, v), v};
  }

 private:
  double psi(FiberCovector p, double t) const {
    const FiberVector u = unit_direction(t);
    return pair(p, u) / F_(u);
  }

  /// Returns (angle, -max value).
  std::pair<double, double> refine(FiberCovector p) const {
    const std::size_t n = c_.size();
    std::size_t best = 0;
    double best_val = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < n; ++k) {
      const double val = (p.x1 * c_[k] + p.x2 * s_[k]) * radial_[k];
      if (val > best_val) {
        best_val = val;
        best = k;
      }
    }
    const double d = kTwoPi / static_cast<double>(n);
    const double t0 = d * static_cast<double>(best);
    auto neg = [&](double t) { return -psi(p, t); };
    std::uintmax_t iters = 200;
    auto r = boost::math::tools::brent_find_minima(neg, t0 - d, t0 + d,
                                                   std::numeric_limits<double>::digits / 2, iters);
    if (r.second > -best_val) return {t0, -best_val};
    return r;
  }

  AsymNorm F_;
  std::vector<double> c_, s_, radial_;
};

/// H(p) = sup over F(v) = 1 of p.v by grid scan plus 1D refinement.
inline double dual_norm(const AsymNorm& F, FiberCovector p) {
  if (p.x1 == 0.0 && p.x2 == 0.0) return 0.0;
  return FiberDual(F)(p);
}

/// The dual norm as an AsymNorm in p. Uses the closed form when the norm
/// carries one, otherwise a cached numerical dual.
inline AsymNorm hamiltonian_of(const AsymNorm& F) {
  if (F.has_closed_dual()) {
    return AsymNorm([F](FiberVector p) { return F.closed_dual(FiberCovector{p.x1, p.x2}); });
  }
  auto dual = std::make_shared<FiberDual>(F);
  return AsymNorm([dual](FiberVector p) { return (*dual)(FiberCovector{p.x1, p.x2}); });
}

/// Numerical dual as a norm on covectors (represented as FiberVector input).
inline AsymNorm numeric_dual_norm(const AsymNorm& F) {
  auto dual = std::make_shared<FiberDual>(F);
  return AsymNorm([dual](FiberVector p) { return (*dual)(FiberCovector{p.x1, p.x2}); });
}

/// Fiber derivative p = dF_v. Satisfies p.v = F(v) by Euler's relation.
inline FiberCovector legendre_point(const AsymNorm& F, FiberVector v) {
  const double n = v.norm();
  if (!(n > 0.0)) throw DomainError("legendre_point: undefined at the zero vector");
  if (F.has_derivative()) return F.derivative(v);
  const double h = 1e-6 * n;
  const FiberVector e1{h, 0.0}, e2{0.0, h};
  return {(F(v + e1) - F(v - e1)) / (2 * h), (F(v + e2) - F(v - e2)) / (2 * h)};
}

/// v -> (F(v) + F(-v))/2.
inline AsymNorm symmetrize_norm(const AsymNorm& F) {
  AsymNorm::Derivative der;
  if (F.has_derivative())
    der = [F](FiberVector v) { return 0.5 * (F.derivative(v) - F.derivative(-v)); };
  return AsymNorm([F](FiberVector v) { return 0.5 * (F(v) + F(-v)); }, std::move(der));
}

// ---------------------------------------------------------------------------
// Support bodies

/// Convex body in a cotangent plane given by support-function samples
/// h(2 pi k / N). The origin lies in the interior (h > 0).
class SupportBody {
 public:
  explicit SupportBody(std::vector<double> h) : h_(std::move(h)) {
    if (h_.size() < 64) throw DomainError("SupportBody: need at least 64 samples");
    for (std::size_t k = 0; k < h_.size(); ++k) {
      if (!(h_[k] > 0.0) || !std::isfinite(h_[k]))
        throw DomainError("SupportBody: origin not interior (h <= 0 at angle " +
                          std::to_string(angle(k)) + ")");
    }
  }

  std::size_t size() const { return h_.size(); }
  double operator[](std::size_t k) const { return h_[k]; }
  const std::vector<double>& samples() const { return h_; }
  double angle(std::size_t k) const {
    return kTwoPi * static_cast<double>(k) / static_cast<double>(h_.size());
  }

  /// min over the grid of the discrete h + h''.
  double convexity_margin() const { return detail::min_curvature(h_).first; }

 private:
  std::vector<double> h_;
};

inline SupportBody support_body_of(const AsymNorm& F, int N = 512) {
  if (N < 64 || N % 2 != 0) throw DomainError("support_body_of: N must be even and >= 64");
  const ValidityReport rep = check_norm_validity(F, N);
  if (!rep.valid) throw DomainError("support_body_of: invalid norm: " + rep.reason);
  std::vector<double> h(static_cast<std::size_t>(N));
  for (int k = 0; k < N; ++k) h[static_cast<std::size_t>(k)] = F(unit_direction(kTwoPi * k / N));
  return SupportBody(std::move(h));
}

/// Real trigonometric coefficients of periodic samples:
/// h(t) = a[0] + sum_k (a[k] cos kt + b[k] sin kt), k = 1..N/2 (b[N/2] = 0).
struct TrigCoefficients {
  std::vector<double> a, b;
};

inline TrigCoefficients trig_coefficients(const std::vector<double>& h) {
  const std::size_t n = h.size();
  const std::size_t m = n / 2;
  std::vector<double> ct(n), st(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double t = kTwoPi * static_cast<double>(j) / static_cast<double>(n);
    ct[j] = std::cos(t);
    st[j] = std::sin(t);
  }
  TrigCoefficients c;
  c.a.assign(m + 1, 0.0);
  c.b.assign(m + 1, 0.0);
  for (std::size_t k = 0; k <= m; ++k) {
    double sa = 0.0, sb = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t idx = (j * k) % n;
      sa += h[j] * ct[idx];
      sb += h[j] * st[idx];
    }
    const bool edge = (k == 0) || (n % 2 == 0 && k == m);
    const double w = (edge ? 1.0 : 2.0) / static_cast<double>(n);
    c.a[k] = w * sa;
    c.b[k] = (edge ? 0.0 : w * sb);
  }
  return c;
}

/// Area of a convex body from its support function, 1/2 of the integral of
/// h^2 - h'^2, evaluated exactly on the trigonometric interpolant.
inline double body_area(const SupportBody& K) {
  const auto [m, k] = detail::min_curvature(K.samples());
  const double hmax = *std::max_element(K.samples().begin(), K.samples().end());
  if (m < -kSupportConvexitySlack * hmax)
    throw DomainError("body_area: support function not convex near angle " +
                      std::to_string(K.angle(k)));
  const TrigCoefficients c = trig_coefficients(K.samples());
  const double pi = std::numbers::pi;
  double area = pi * c.a[0] * c.a[0];
  for (std::size_t j = 1; j < c.a.size(); ++j) {
    const double kk = static_cast<double>(j);
    area += 0.5 * pi * (1.0 - kk * kk) * (c.a[j] * c.a[j] + c.b[j] * c.b[j]);
  }
  return area;
}

/// (K + (-K))/2: h_sym(t) = (h(t) + h(t + pi))/2.
inline SupportBody central_symmetrize_body(const SupportBody& K) {
  const std::size_t n = K.size();
  if (n % 2 != 0) throw DomainError("central_symmetrize_body: N must be even");
  std::vector<double> h(n);
  for (std::size_t k = 0; k < n; ++k) h[k] = 0.5 * (K[k] + K[(k + n / 2) % n]);
  return SupportBody(std::move(h));
}

/// Area of {p : H(p) <= 1} by the radial formula 1/2 of the integral of
/// H(u)^-2; H is the gauge of the body.
inline double gauge_body_area(const std::function<double(FiberCovector)>& H, int N) {
  double sum = 0.0;
  for (int k = 0; k < N; ++k) {
    const double r = 1.0 / H(unit_codirection(kTwoPi * k / N));
    sum += r * r;
  }
  return 0.5 * sum * kTwoPi / N;
}

}  // namespace finsler
