#pragma once

// The metric catalog: Finsler metrics as fields of asymmetric norms over the
// plane or the two-chart sphere atlas, plus convex domains for Funk and
// Hilbert metrics.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "finsler/error.hpp"
#include "finsler/expr.hpp"
#include "finsler/geometry.hpp"
#include "finsler/jet.hpp"
#include "finsler/norms.hpp"

namespace finsler {

// ---------------------------------------------------------------------------
// Convex domains

/// Bounded convex domain given by support-function samples about the chart
/// origin. Evaluation uses the trigonometric interpolant of the samples, so
/// the boundary is smooth; a domain whose samples carry only the constant and
/// first harmonic is recognised as a disc and uses closed forms.
class ConvexDomain {
 public:
  ConvexDomain(std::vector<double> samples, Coord basepoint)
      : samples_(std::move(samples)), basepoint_(basepoint) {
    if (samples_.size() < 64 || samples_.size() % 2 != 0)
      throw ConfigError("convex domain: need an even number (>= 64) of support samples");
    if (detail::min_curvature(samples_).first <=
        -kSupportConvexitySlack * *std::max_element(samples_.begin(), samples_.end()))
      throw ConfigError("convex domain: support samples are not convex");
    const TrigCoefficients c = trig_coefficients(samples_);
    const double scale = std::abs(c.a[0]);
    std::size_t last = 0;
    for (std::size_t k = 0; k < c.a.size(); ++k)
      if (std::abs(c.a[k]) + std::abs(c.b[k]) > 1e-15 * scale) last = k;
    a_.assign(c.a.begin(), c.a.begin() + static_cast<std::ptrdiff_t>(last + 1));
    b_.assign(c.b.begin(), c.b.begin() + static_cast<std::ptrdiff_t>(last + 1));
    if (last <= 1) {
      disc_ = true;
      radius_ = a_[0];
      center_ = last == 1 ? Coord{a_[1], b_[1]} : Coord{0.0, 0.0};
    }
    if (!(interior_margin(basepoint_) > 0.0))
      throw ConfigError("convex domain: basepoint is not interior");
  }

  static ConvexDomain disc(Coord center, double radius, int n = 512) {
    if (!(radius > 0.0)) throw ConfigError("disc domain: radius must be positive");
    std::vector<double> h(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
      const double t = kTwoPi * k / n;
      h[static_cast<std::size_t>(k)] = radius + center.x1 * std::cos(t) + center.x2 * std::sin(t);
    }
    return ConvexDomain(std::move(h), center);
  }

  static ConvexDomain from_support(const std::function<double(double)>& h, int n = 512) {
    std::vector<double> s(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) s[static_cast<std::size_t>(k)] = h(kTwoPi * k / n);
    // The Steiner point (first harmonic of h) lies inside any convex body.
    const TrigCoefficients c = trig_coefficients(s);
    return ConvexDomain(std::move(s), Coord{c.a[1], c.b[1]});
  }

  const std::vector<double>& samples() const { return samples_; }
  Coord basepoint() const { return basepoint_; }
  bool is_disc() const { return disc_; }
  Coord center() const { return center_; }
  double radius() const { return radius_; }

  /// h(theta) and h'(theta) of the interpolant.
  std::pair<double, double> support(double theta) const {
    double h = a_[0], dh = 0.0;
    for (std::size_t k = 1; k < a_.size(); ++k) {
      const double kk = static_cast<double>(k);
      const double c = std::cos(kk * theta), s = std::sin(kk * theta);
      h += a_[k] * c + b_[k] * s;
      dh += kk * (b_[k] * c - a_[k] * s);
    }
    return {h, dh};
  }

  /// 1-homogeneous support function h(p) = |p| h(arg p).
  double support(FiberCovector p) const {
    if (disc_) return radius_ * p.norm() + center_.x1 * p.x1 + center_.x2 * p.x2;
    return p.norm() * support(std::atan2(p.x2, p.x1)).first;
  }

  /// Gradient of the support function: the boundary point with outer normal p.
  FiberVector support_gradient(FiberCovector p) const {
    if (disc_) {
      const double n = p.norm();
      return {radius_ * p.x1 / n + center_.x1, radius_ * p.x2 / n + center_.x2};
    }
    const double t = std::atan2(p.x2, p.x1);
    const auto [h, dh] = support(t);
    const double c = std::cos(t), s = std::sin(t);
    return {h * c - dh * s, h * s + dh * c};
  }

  /// Distance-like margin min over directions of h(u) - x.u (> 0 iff interior).
  double interior_margin(Coord x) const {
    if (disc_) return radius_ - (x - center_).norm();
    const std::size_t n = samples_.size();
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < n; ++k) {
      const double t = kTwoPi * static_cast<double>(k) / static_cast<double>(n);
      m = std::min(m, samples_[k] - x.x1 * std::cos(t) - x.x2 * std::sin(t));
    }
    return m;
  }

  bool contains(Coord x) const { return interior_margin(x) > 0.0; }

 private:
  std::vector<double> samples_;
  Coord basepoint_;
  std::vector<double> a_, b_;
  bool disc_ = false;
  Coord center_;
  double radius_ = 0.0;
};

namespace detail {

/// The Funk norm at x as the numerical dual of the support function of
/// Omega - x (its unit ball is Omega - x).
inline AsymNorm funk_support_norm(const ConvexDomain& omega, Coord x) {
  return AsymNorm([&omega, x](FiberVector p) {
    const FiberCovector q{p.x1, p.x2};
    return omega.support(q) - (x.x1 * q.x1 + x.x2 * q.x2);
  });
}

inline double funk_disc(Coord d, double R, FiberVector v) {
  const double a = v.norm2();
  const double bq = d.x1 * v.x1 + d.x2 * v.x2;
  const double cq = d.norm2() - R * R;
  const double root = std::sqrt(bq * bq - a * cq);
  return bq >= 0.0 ? (root + bq) / (-cq) : a / (root - bq);
}

inline FiberCovector funk_disc_derivative(Coord d, double R, FiberVector v) {
  const double a = v.norm2();
  const double bq = d.x1 * v.x1 + d.x2 * v.x2;
  const double cq = d.norm2() - R * R;
  const double root = std::sqrt(bq * bq - a * cq);
  return {((bq * d.x1 - cq * v.x1) / root + d.x1) / (-cq),
          ((bq * d.x2 - cq * v.x2) / root + d.x2) / (-cq)};
}

}  // namespace detail

/// Funk metric: F(x, v) = 1/s where x + s v hits the boundary of Omega.
inline double funk_eval(const ConvexDomain& omega, Coord x, FiberVector v) {
  if (!(v.norm() > 0.0)) throw DomainError("funk_eval: zero vector");
  if (!omega.contains(x)) throw DomainError("funk_eval: point is not interior to the domain");
  if (omega.is_disc()) return detail::funk_disc(x - omega.center(), omega.radius(), v);
  return dual_norm(detail::funk_support_norm(omega, x), FiberCovector{v.x1, v.x2});
}

/// Hilbert metric: the symmetrization of the Funk metric.
inline double hilbert_eval(const ConvexDomain& omega, Coord x, FiberVector v) {
  return 0.5 * (funk_eval(omega, x, v) + funk_eval(omega, x, -v));
}

// ---------------------------------------------------------------------------
// Metric descriptions

enum class MetricKind { Euclidean, Minkowski, Riemannian, Randers, Funk, Hilbert, SphereRound, PlusOneForm };

inline std::string_view kind_name(MetricKind k) {
  switch (k) {
    case MetricKind::Euclidean: return "euclidean";
    case MetricKind::Minkowski: return "minkowski";
    case MetricKind::Riemannian: return "riemannian";
    case MetricKind::Randers: return "randers";
    case MetricKind::Funk: return "funk";
    case MetricKind::Hilbert: return "hilbert";
    case MetricKind::SphereRound: return "sphere_round";
    case MetricKind::PlusOneForm: return "plus_one_form";
  }
  return "?";
}

/// Riemannian coefficient field g_ij(x).
struct TensorFieldDef {
  enum class Type { Identity, Conformal, Matrix, RoundConformal } type = Type::Identity;
  Expr e11, e12, e22;  ///< Conformal and RoundConformal use e11 only
};

/// A 1-form field: the differential of a potential, or explicit chart components.
struct OneFormDef {
  enum class Type { Gradient, Components } type = Type::Gradient;
  Expr potential;
  Expr b1, b2;
};

struct DomainDef {
  enum class Type { Disc, Support } type = Type::Disc;
  double cx = 0.0, cy = 0.0, r = 1.0;
  Expr profile;
};

/// Integration region: a chart rectangle or the whole sphere.
struct Region {
  enum class Type { Rect, Sphere } type = Type::Rect;
  double x0 = -0.5, x1 = 0.5, y0 = -0.5, y1 = 0.5;

  static Region rect(double a, double b, double c, double d) { return {Type::Rect, a, b, c, d}; }
  static Region sphere() { return {Type::Sphere, 0, 0, 0, 0}; }
};

struct MetricSpec {
  MetricKind kind = MetricKind::Euclidean;
  Atlas atlas = Atlas::Plane;
  std::string name;
  Expr profile;             ///< Minkowski: support profile h(theta)
  TensorFieldDef a;         ///< Riemannian, Randers
  OneFormDef b;             ///< Randers b, PlusOneForm beta
  DomainDef domain;         ///< Funk, Hilbert
  std::shared_ptr<const MetricSpec> base;  ///< PlusOneForm
  bool antipodal = false;   ///< claims invariance under the antipodal map (RP^2)
  std::optional<Region> region;

  Region effective_region() const {
    if (region) return *region;
    return atlas == Atlas::Sphere ? Region::sphere() : Region::rect(-0.5, 0.5, -0.5, 0.5);
  }
};

// ---------------------------------------------------------------------------
// Metrics

/// Value and gradients of the Hamiltonian H(x, p) (the dual norm of F_x).
struct HamiltonianJet {
  double H = 0.0;
  FiberCovector dx;  ///< dH/dx
  FiberVector dp;    ///< dH/dp
};

class Metric {
 public:
  virtual ~Metric() = default;

  virtual Atlas atlas() const = 0;
  virtual std::string describe() const = 0;

  /// Is x inside the domain of definition (Funk/Hilbert: strictly interior)?
  virtual bool contains(const ChartPoint& x) const {
    return atlas() == Atlas::Plane ? x.chart == Chart::Plane : x.chart != Chart::Plane;
  }

  /// The norm F_x on T_x M.
  virtual AsymNorm fiber(const ChartPoint& x) const = 0;

  /// Hamiltonian jet. The default uses the fiber's closed dual if it has one
  /// (gradients by centered differences), else the numerical dual with the
  /// envelope identities dH/dp = v*, dH/dx = -H dF/dx(x, v*).
  virtual HamiltonianJet hamiltonian(const ChartPoint& x, FiberCovector p) const {
    const AsymNorm F = fiber(x);
    constexpr double h = 1e-6;
    HamiltonianJet j;
    if (F.has_closed_dual()) {
      j.H = F.closed_dual(p);
      const double hp = h * std::max(1.0, p.norm());
      j.dp = {(F.closed_dual(p + FiberCovector{hp, 0}) - F.closed_dual(p - FiberCovector{hp, 0})) / (2 * hp),
              (F.closed_dual(p + FiberCovector{0, hp}) - F.closed_dual(p - FiberCovector{0, hp})) / (2 * hp)};
      for (int i = 0; i < 2; ++i) {
        ChartPoint xp = x, xm = x;
        xp.x[i] += h;
        xm.x[i] -= h;
        j.dx[i] = (fiber(xp).closed_dual(p) - fiber(xm).closed_dual(p)) / (2 * h);
      }
      return j;
    }
    const FiberDual dual(F);
    const auto am = dual.argmax(p);
    j.H = am.value;
    j.dp = am.v;
    for (int i = 0; i < 2; ++i) {
      ChartPoint xp = x, xm = x;
      xp.x[i] += h;
      xm.x[i] -= h;
      j.dx[i] = -j.H * (fiber(xp)(am.v) - fiber(xm)(am.v)) / (2 * h);
    }
    return j;
  }

  double operator()(const ChartPoint& x, FiberVector v) const { return fiber(x)(v); }

  /// H(x, p), closed form when available.
  double dual(const ChartPoint& x, FiberCovector p) const {
    const AsymNorm F = fiber(x);
    if (F.has_closed_dual()) return F.closed_dual(p);
    return dual_norm(F, p);
  }

 protected:
  void require_chart(const ChartPoint& x) const {
    if (!Metric::contains(x))
      throw DomainError(std::string("chart ") + std::string(chart_name(x.chart)) +
                        " does not belong to the atlas of " + describe());
  }
};

using MetricPtr = std::shared_ptr<const Metric>;

namespace detail {

inline Bindings<Jet2> chart_jet_bindings(const ChartPoint& x) {
  if (x.chart == Chart::Plane) return plane_jet_bindings(x.x.x1, x.x.x2);
  return sphere_jet_bindings(x.x.x1, x.x.x2, x.chart == Chart::South);
}

}  // namespace detail

/// g_ij(x) with first derivatives.
struct TensorJet {
  double g11, g12, g22;
  std::array<double, 2> d11, d12, d22;
};

class RiemannianMetric final : public Metric {
 public:
  RiemannianMetric(TensorFieldDef field, Atlas atlas, std::string label)
      : field_(std::move(field)), atlas_(atlas), label_(std::move(label)) {}

  Atlas atlas() const override { return atlas_; }
  std::string describe() const override { return label_; }

  TensorJet tensor(const ChartPoint& x) const {
    require_chart(x);
    using T = TensorFieldDef::Type;
    auto jet_of = [](const Jet2& j) { return std::array<double, 2>{j.g1, j.g2}; };
    TensorJet t{};
    switch (field_.type) {
      case T::Identity:
        t = {1.0, 0.0, 1.0, {0, 0}, {0, 0}, {0, 0}};
        if (atlas_ == Atlas::Sphere) return round_scaled(x, Jet2(1.0));
        return t;
      case T::Conformal: {
        const Jet2 c = field_.e11.eval(detail::chart_jet_bindings(x));
        t = {c.v, 0.0, c.v, jet_of(c), {0, 0}, jet_of(c)};
        break;
      }
      case T::Matrix: {
        const auto b = detail::chart_jet_bindings(x);
        const Jet2 a11 = field_.e11.eval(b), a12 = field_.e12.eval(b), a22 = field_.e22.eval(b);
        t = {a11.v, a12.v, a22.v, jet_of(a11), jet_of(a12), jet_of(a22)};
        break;
      }
      case T::RoundConformal:
        return round_scaled(x, field_.e11.eval(detail::chart_jet_bindings(x)));
    }
    return t;
  }

  AsymNorm fiber(const ChartPoint& x) const override {
    const TensorJet t = tensor(x);
    const double det = t.g11 * t.g22 - t.g12 * t.g12;
    if (!(t.g11 > 0.0) || !(det > 0.0))
      throw DomainError(label_ + ": metric tensor is not positive definite");
    const double i11 = t.g22 / det, i12 = -t.g12 / det, i22 = t.g11 / det;
    const double g11 = t.g11, g12 = t.g12, g22 = t.g22;
    return AsymNorm(
        [=](FiberVector v) { return std::sqrt(g11 * v.x1 * v.x1 + 2 * g12 * v.x1 * v.x2 + g22 * v.x2 * v.x2); },
        [=](FiberVector v) {
          const double f = std::sqrt(g11 * v.x1 * v.x1 + 2 * g12 * v.x1 * v.x2 + g22 * v.x2 * v.x2);
          return FiberCovector{(g11 * v.x1 + g12 * v.x2) / f, (g12 * v.x1 + g22 * v.x2) / f};
        },
        [=](FiberCovector p) { return std::sqrt(i11 * p.x1 * p.x1 + 2 * i12 * p.x1 * p.x2 + i22 * p.x2 * p.x2); });
  }

  HamiltonianJet hamiltonian(const ChartPoint& x, FiberCovector p) const override {
    const TensorJet t = tensor(x);
    const double det = t.g11 * t.g22 - t.g12 * t.g12;
    if (!(t.g11 > 0.0) || !(det > 0.0))
      throw DomainError(label_ + ": metric tensor is not positive definite");
    const double i11 = t.g22 / det, i12 = -t.g12 / det, i22 = t.g11 / det;
    const FiberVector w{i11 * p.x1 + i12 * p.x2, i12 * p.x1 + i22 * p.x2};  // G^-1 p
    HamiltonianJet j;
    j.H = std::sqrt(pair(p, w));
    j.dp = w / j.H;
    for (int k = 0; k < 2; ++k) {
      const double q = t.d11[static_cast<std::size_t>(k)] * w.x1 * w.x1 +
                       2 * t.d12[static_cast<std::size_t>(k)] * w.x1 * w.x2 +
                       t.d22[static_cast<std::size_t>(k)] * w.x2 * w.x2;
      j.dx[k] = -q / (2 * j.H);
    }
    return j;
  }

 private:
  /// rho * 4/(1 + r^2)^2 times the identity, the same form in both sphere charts.
  static TensorJet round_scaled(const ChartPoint& x, const Jet2& rho) {
    const Jet2 u = Jet2::variable(x.x.x1, 0), w = Jet2::variable(x.x.x2, 1);
    const Jet2 s = Jet2(1.0) + u * u + w * w;
    const Jet2 c = rho * Jet2(4.0) / (s * s);
    return {c.v, 0.0, c.v, {c.g1, c.g2}, {0, 0}, {c.g1, c.g2}};
  }

  TensorFieldDef field_;
  Atlas atlas_;
  std::string label_;
};

/// beta(x) in chart components with first derivatives d beta_i / d x_j.
struct OneFormJet {
  FiberCovector b;
  double db[2][2]{};  ///< db[i][j] = d b_i / d x_j
};

inline OneFormJet eval_one_form(const OneFormDef& def, const ChartPoint& x) {
  const auto bind = detail::chart_jet_bindings(x);
  OneFormJet r;
  if (def.type == OneFormDef::Type::Gradient) {
    const Jet2 f = def.potential.eval(bind);
    r.b = {f.g1, f.g2};
    r.db[0][0] = f.h11;
    r.db[0][1] = f.h12;
    r.db[1][0] = f.h12;
    r.db[1][1] = f.h22;
  } else {
    const Jet2 b1 = def.b1.eval(bind), b2 = def.b2.eval(bind);
    r.b = {b1.v, b2.v};
    r.db[0][0] = b1.g1;
    r.db[0][1] = b1.g2;
    r.db[1][0] = b2.g1;
    r.db[1][1] = b2.g2;
  }
  return r;
}

/// L = base + beta. The dual body of L_x is the dual body of base_x
/// translated by beta(x), so H solves t = H_base(p - t beta).
class OneFormMetric final : public Metric {
 public:
  OneFormMetric(MetricPtr base, OneFormDef beta, std::string label)
      : base_(std::move(base)), beta_(std::move(beta)), label_(std::move(label)) {}

  Atlas atlas() const override { return base_->atlas(); }
  std::string describe() const override { return label_; }
  bool contains(const ChartPoint& x) const override { return base_->contains(x); }
  const Metric& base() const { return *base_; }
  const OneFormDef& beta() const { return beta_; }

  FiberCovector beta_at(const ChartPoint& x) const { return eval_one_form(beta_, x).b; }

  AsymNorm fiber(const ChartPoint& x) const override {
    const AsymNorm F = base_->fiber(x);
    const FiberCovector b = beta_at(x);
    AsymNorm::Derivative der;
    if (F.has_derivative()) der = [F, b](FiberVector v) { return F.derivative(v) + b; };
    AsymNorm::Dual dual;
    if (F.has_closed_dual()) {
      dual = [F, b](FiberCovector p) { return solve_translate(F, b, p); };
    } else {
      auto base_dual = std::make_shared<FiberDual>(F);
      dual = [base_dual, b](FiberCovector p) {
        return solve_translate_with([&](FiberCovector q) { return (*base_dual)(q); }, b, p);
      };
    }
    return AsymNorm([F, b](FiberVector v) { return F(v) + pair(b, v); }, std::move(der), std::move(dual));
  }

  HamiltonianJet hamiltonian(const ChartPoint& x, FiberCovector p) const override {
    const OneFormJet beta = eval_one_form(beta_, x);
    const FiberCovector b = beta.b;
    // Safeguarded Newton on g(t) = H_base(p - t b) - t, which is strictly
    // decreasing when -b lies inside the base dual body.
    double t = base_->hamiltonian(x, p).H;
    double lo = 0.0, hi = std::numeric_limits<double>::infinity();
    HamiltonianJet jb;
    for (int it = 0; it < 60; ++it) {
      jb = base_->hamiltonian(x, p - t * b);
      const double g = jb.H - t;
      const double dg = -pair(b, jb.dp) - 1.0;
      if (!(dg < 0.0)) throw DomainError(label_ + ": one-form not dominated by the base metric");
      if (g > 0.0) lo = t; else hi = t;
      double next = t - g / dg;
      if (!(next > lo && next < hi)) next = std::isfinite(hi) ? 0.5 * (lo + hi) : 2.0 * t;
      const bool done = std::abs(next - t) <= 1e-15 * std::abs(t);
      t = next;
      if (done) break;
    }
    jb = base_->hamiltonian(x, p - t * b);
    const double denom = 1.0 + pair(b, jb.dp);
    HamiltonianJet j;
    j.H = t;
    j.dp = jb.dp / denom;
    for (int k = 0; k < 2; ++k) {
      const double chain = jb.dp.x1 * beta.db[0][k] + jb.dp.x2 * beta.db[1][k];
      j.dx[k] = (jb.dx[k] - t * chain) / denom;
    }
    return j;
  }

 private:
  /// Gauge of the translate D*_base + b at p: the root of t = H_base(p - t b).
  template <class Dual>
  static double solve_translate_with(const Dual& H, FiberCovector b, FiberCovector p) {
    if (p.x1 == 0.0 && p.x2 == 0.0) return 0.0;
    const double hp = H(p), hb = H(b), hmb = H(-b);
    if (!(hmb < 1.0)) throw DomainError("one-form not dominated by the base metric");
    double lo = hp / (1.0 + hb), hi = hp / (1.0 - hmb);
    // Bisection-secant hybrid (Illinois), g decreasing.
    double glo = H(p - lo * b) - lo, ghi = H(p - hi * b) - hi;
    for (int it = 0; it < 200 && hi - lo > 1e-16 * hi; ++it) {
      double t = (glo - ghi != 0.0) ? lo + glo * (hi - lo) / (glo - ghi) : 0.5 * (lo + hi);
      if (!(t > lo && t < hi)) t = 0.5 * (lo + hi);
      const double g = H(p - t * b) - t;
      if (g == 0.0) return t;
      if (g > 0.0) {
        lo = t;
        glo = g;
        ghi *= 0.5;
      } else {
        hi = t;
        ghi = g;
        glo *= 0.5;
      }
    }
    return 0.5 * (lo + hi);
  }

  static double solve_translate(const AsymNorm& F, FiberCovector b, FiberCovector p) {
    return solve_translate_with([&](FiberCovector q) { return F.closed_dual(q); }, b, p);
  }

  MetricPtr base_;
  OneFormDef beta_;
  std::string label_;
};

/// Constant norm F(v) = |v| h(arg v) on the plane.
class MinkowskiMetric final : public Metric {
 public:
  MinkowskiMetric(Expr profile, std::string label)
      : profile_(std::make_shared<const Expr>(std::move(profile))), label_(std::move(label)) {}

  Atlas atlas() const override { return Atlas::Plane; }
  std::string describe() const override { return label_; }

  AsymNorm fiber(const ChartPoint& x) const override {
    require_chart(x);
    auto h = profile_;
    return norm_from_profile([h](double t) { return (*h)(t); },
                             [h](double t) {
                               Bindings<Jet2> b;
                               b.theta = Jet2::variable(t, 0);
                               return h->eval(b).g1;
                             });
  }

  HamiltonianJet hamiltonian(const ChartPoint& x, FiberCovector p) const override {
    const FiberDual dual(fiber(x));
    const auto am = dual.argmax(p);
    return {am.value, {0.0, 0.0}, am.v};
  }

 private:
  std::shared_ptr<const Expr> profile_;
  std::string label_;
};

class FunkMetric final : public Metric {
 public:
  FunkMetric(std::shared_ptr<const ConvexDomain> omega, std::string label)
      : omega_(std::move(omega)), label_(std::move(label)) {}

  Atlas atlas() const override { return Atlas::Plane; }
  std::string describe() const override { return label_; }
  const ConvexDomain& domain() const { return *omega_; }

  bool contains(const ChartPoint& x) const override {
    return x.chart == Chart::Plane && omega_->contains(x.x);
  }

  AsymNorm fiber(const ChartPoint& x) const override {
    if (!contains(x)) throw DomainError(label_ + ": point outside the domain");
    auto omega = omega_;
    const Coord p = x.x;
    AsymNorm::Dual dual = [omega, p](FiberCovector q) { return omega->support(q) - (p.x1 * q.x1 + p.x2 * q.x2); };
    if (omega->is_disc()) {
      const Coord d = p - omega->center();
      const double R = omega->radius();
      return AsymNorm([d, R](FiberVector v) { return detail::funk_disc(d, R, v); },
                      [d, R](FiberVector v) { return detail::funk_disc_derivative(d, R, v); }, std::move(dual));
    }
    auto gauge = std::make_shared<FiberDual>(detail::funk_support_norm(*omega, p));
    return AsymNorm([gauge, omega](FiberVector v) { return (*gauge)(FiberCovector{v.x1, v.x2}); }, {},
                    std::move(dual));
  }

  /// H(x, p) = h_Omega(p) - p.x.
  HamiltonianJet hamiltonian(const ChartPoint& x, FiberCovector p) const override {
    if (!contains(x)) throw DomainError(label_ + ": point outside the domain");
    HamiltonianJet j;
    j.H = omega_->support(p) - (p.x1 * x.x.x1 + p.x2 * x.x.x2);
    const FiberVector g = omega_->support_gradient(p);
    j.dp = {g.x1 - x.x.x1, g.x2 - x.x.x2};
    j.dx = -p;
    return j;
  }

 private:
  std::shared_ptr<const ConvexDomain> omega_;
  std::string label_;
};

/// Fiberwise symmetrization (L + L o a)/2 of another metric.
class SymmetrizedMetric final : public Metric {
 public:
  SymmetrizedMetric(MetricPtr base, std::string label) : base_(std::move(base)), label_(std::move(label)) {}

  Atlas atlas() const override { return base_->atlas(); }
  std::string describe() const override { return label_; }
  bool contains(const ChartPoint& x) const override { return base_->contains(x); }
  const Metric& base() const { return *base_; }

  AsymNorm fiber(const ChartPoint& x) const override { return symmetrize_norm(base_->fiber(x)); }

 private:
  MetricPtr base_;
  std::string label_;
};

inline MetricPtr symmetrized(MetricPtr m) {
  const std::string label = "sym(" + m->describe() + ")";
  return std::make_shared<SymmetrizedMetric>(std::move(m), label);
}

// ---------------------------------------------------------------------------
// Building metrics from specs

inline MetricPtr build_metric(const MetricSpec& spec) {
  const std::string label = spec.name.empty() ? std::string(kind_name(spec.kind)) : spec.name;
  auto domain_of = [](const DomainDef& d) {
    if (d.type == DomainDef::Type::Disc)
      return std::make_shared<const ConvexDomain>(ConvexDomain::disc({d.cx, d.cy}, d.r));
    const Expr& h = d.profile;
    return std::make_shared<const ConvexDomain>(ConvexDomain::from_support([&h](double t) { return h(t); }));
  };
  switch (spec.kind) {
    case MetricKind::Euclidean:
      return std::make_shared<RiemannianMetric>(TensorFieldDef{}, Atlas::Plane, label);
    case MetricKind::SphereRound:
      return std::make_shared<RiemannianMetric>(TensorFieldDef{}, Atlas::Sphere, label);
    case MetricKind::Riemannian:
      return std::make_shared<RiemannianMetric>(spec.a, spec.atlas, label);
    case MetricKind::Randers: {
      auto alpha = std::make_shared<RiemannianMetric>(spec.a, spec.atlas, label + ".alpha");
      return std::make_shared<OneFormMetric>(alpha, spec.b, label);
    }
    case MetricKind::Minkowski:
      return std::make_shared<MinkowskiMetric>(spec.profile, label);
    case MetricKind::Funk:
      return std::make_shared<FunkMetric>(domain_of(spec.domain), label);
    case MetricKind::Hilbert:
      return std::make_shared<SymmetrizedMetric>(
          std::make_shared<FunkMetric>(domain_of(spec.domain), label + ".funk"), label);
    case MetricKind::PlusOneForm: {
      if (!spec.base) throw ConfigError("plus_one_form needs a base metric");
      return std::make_shared<OneFormMetric>(build_metric(*spec.base), spec.b, label);
    }
  }
  throw ConfigError("unknown metric kind");
}

/// F(x, v) for a spec (builds the metric; prefer build_metric for repeated use).
inline double eval_metric(const MetricSpec& spec, const ChartPoint& x, FiberVector v) {
  return (*build_metric(spec))(x, v);
}

/// The potential f of a spec of the form base + df, evaluated at chart points.
inline std::optional<std::function<double(const ChartPoint&)>> known_potential(const MetricSpec& spec) {
  const bool has_form = spec.kind == MetricKind::PlusOneForm || spec.kind == MetricKind::Randers;
  if (!has_form || spec.b.type != OneFormDef::Type::Gradient) return std::nullopt;
  Expr f = spec.b.potential;
  return [f](const ChartPoint& x) { return f.eval(detail::chart_jet_bindings(x)).v; };
}

// ---------------------------------------------------------------------------
// Sampling and catalog-level validity

/// Random base point inside the region where the metric is meant to be used.
inline ChartPoint random_base_point(const Metric& m, const Region& region, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  if (m.atlas() == Atlas::Sphere) {
    const double z = 2 * u01(rng) - 1, phi = kTwoPi * u01(rng);
    const double s = std::sqrt(std::max(0.0, 1 - z * z));
    return from_ambient({s * std::cos(phi), s * std::sin(phi), z});
  }
  for (int tries = 0; tries < 10000; ++tries) {
    const ChartPoint x{Chart::Plane,
                       {region.x0 + (region.x1 - region.x0) * u01(rng), region.y0 + (region.y1 - region.y0) * u01(rng)}};
    if (m.contains(x)) return x;
  }
  throw DomainError("random_base_point: region does not meet the domain");
}

struct MetricValidity {
  bool valid = true;
  int points = 0;
  double worst_convexity_margin = std::numeric_limits<double>::infinity();
  double worst_homogeneity = 0.0;
  double one_form_margin = std::numeric_limits<double>::infinity();  ///< 1 - max H_base(+-beta)
  double antipodal_residual = 0.0;
  std::string reason;
};

/// check_norm_validity at random base points, plus the positivity margin of
/// any added 1-form and, for antipodal specs, the RP^2 symmetry residual.
inline MetricValidity check_metric_validity(const Metric& m, const MetricSpec& spec, int n_points,
                                            std::uint64_t seed, int samples = 256) {
  MetricValidity r;
  std::mt19937_64 rng(seed);
  const Region region = spec.effective_region();
  const auto* one_form = dynamic_cast<const OneFormMetric*>(&m);
  for (int i = 0; i < n_points; ++i) {
    const ChartPoint x = random_base_point(m, region, rng);
    ++r.points;
    try {
      const ValidityReport rep = check_norm_validity(m.fiber(x), samples);
      r.worst_convexity_margin = std::min(r.worst_convexity_margin, rep.convexity_margin_relative);
      r.worst_homogeneity = std::max(r.worst_homogeneity, rep.homogeneity_residual);
      if (!rep.valid && r.valid) {
        r.valid = false;
        r.reason = rep.reason;
      }
      if (one_form) {
        const FiberCovector b = one_form->beta_at(x);
        const double hb = std::max(one_form->base().dual(x, b), one_form->base().dual(x, -b));
        r.one_form_margin = std::min(r.one_form_margin, 1.0 - hb);
        if (!(hb < 1.0) && r.valid) {
          r.valid = false;
          r.reason = "one-form is not dominated by the base metric";
        }
      }
      if (spec.antipodal && m.atlas() == Atlas::Sphere) {
        const AsymNorm F = m.fiber(x), G = m.fiber(antipode(x));
        for (int k = 0; k < 16; ++k) {
          const FiberVector v = unit_direction(kTwoPi * k / 16.0);
          r.antipodal_residual = std::max(r.antipodal_residual, std::abs(F(v) - G(-v)));
        }
      }
    } catch (const DomainError& e) {
      r.valid = false;
      r.reason = e.what();
    }
  }
  if (spec.antipodal && r.antipodal_residual > 1e-9 && r.valid) {
    r.valid = false;
    r.reason = "metric is not invariant under the antipodal map";
  }
  return r;
}

}  // namespace finsler
