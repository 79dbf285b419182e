#pragma once

// Holmes-Thompson volume: (1/pi) times the symplectic volume of the co-disc
// bundle {H <= 1}, as a base quadrature of fiber areas. The chart integrand
// area{p : H_x(p) <= 1} dx needs no metric factor.

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include <boost/math/special_functions/legendre.hpp>

#include "finsler/error.hpp"
#include "finsler/geometry.hpp"
#include "finsler/metrics.hpp"
#include "finsler/norms.hpp"
#include "finsler/parallel.hpp"

namespace finsler {

inline constexpr double kEuclideanBallArea = std::numbers::pi;

struct GaussRule {
  std::vector<double> nodes, weights;  ///< on [-1, 1], ascending
};

inline GaussRule gauss_legendre(int n) {
  if (n < 1) throw ConfigError("gauss_legendre: need at least one node");
  const auto zeros = boost::math::legendre_p_zeros<double>(n);  // nonnegative half
  GaussRule g;
  auto weight = [n](double x) {
    const double d = boost::math::legendre_p_prime<double>(n, x);
    return 2.0 / ((1 - x * x) * d * d);
  };
  for (auto it = zeros.rbegin(); it != zeros.rend(); ++it) {
    if (*it == 0.0) continue;
    g.nodes.push_back(-*it);
    g.weights.push_back(weight(*it));
  }
  if (n % 2 == 1) {
    g.nodes.push_back(0.0);
    g.weights.push_back(weight(0.0));
  }
  for (double z : zeros) {
    if (z == 0.0) continue;
    g.nodes.push_back(z);
    g.weights.push_back(weight(z));
  }
  return g;
}

/// area{p : H(p) <= 1} = 1/2 of the integral of H(u)^-2 over the circle,
/// trapezoid rule on N uniform angles.
inline double fiber_dual_area(const Metric& m, const ChartPoint& x, int N = 512) {
  if (N < 256) throw ConfigError("fiber_dual_area: N must be at least 256");
  const AsymNorm F = m.fiber(x);
  std::shared_ptr<const FiberDual> numeric;
  if (!F.has_closed_dual()) numeric = std::make_shared<const FiberDual>(F);
  std::vector<double> terms(static_cast<std::size_t>(N));
  for (int k = 0; k < N; ++k) {
    const FiberCovector u = unit_codirection(kTwoPi * k / N);
    const double H = numeric ? (*numeric)(u) : F.closed_dual(u);
    if (!(H > 0.0) || !std::isfinite(H)) throw NumericalError("fiber_dual_area: Hamiltonian evaluation failed");
    terms[static_cast<std::size_t>(k)] = 1.0 / (H * H);
  }
  return 0.5 * (kTwoPi / N) * pairwise_sum(terms);
}

inline double fiber_dual_area(const MetricSpec& spec, const ChartPoint& x, int N = 512) {
  return fiber_dual_area(*build_metric(spec), x, N);
}

struct QuadNode {
  ChartPoint x;
  double w = 0.0;  ///< includes partition weight and Jacobian
};

namespace detail {

inline double smoothstep(double a, double b, double t) {
  const double s = std::clamp((t - a) / (b - a), 0.0, 1.0);
  return s * s * (3 - 2 * s);
}

/// Polar Gauss x trapezoid nodes for one sphere chart.
inline void sphere_chart_nodes(Chart chart, int n_base, std::vector<QuadNode>& out) {
  const GaussRule g = gauss_legendre(n_base);
  const int n_angle = 4 * n_base;
  const bool north = chart == Chart::North;
  const double panels[2][2] = {{0.0, north ? 1.0 : 2.0 / 3.0}, {north ? 1.0 : 2.0 / 3.0, north ? 1.5 : 1.0}};
  for (const auto& panel : panels) {
    const double a = panel[0], b = panel[1];
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
      const double r = 0.5 * (a + b) + 0.5 * (b - a) * g.nodes[i];
      const double wr = 0.5 * (b - a) * g.weights[i] * r;
      const double pu = north ? 1.0 - smoothstep(1.0, 1.5, r) : smoothstep(1.0, 1.5, 1.0 / r);
      if (pu == 0.0) continue;
      for (int k = 0; k < n_angle; ++k) {
        const double phi = kTwoPi * (k + 0.5) / n_angle;
        out.push_back({{chart, {r * std::cos(phi), r * std::sin(phi)}}, wr * pu * kTwoPi / n_angle});
      }
    }
  }
}

}  // namespace detail

/// Base nodes and weights: tensor Gauss-Legendre on a chart rectangle, or a
/// two-chart partition of unity on the sphere (NORTH weight 1 - smoothstep on
/// |x| between 1 and 1.5, SOUTH the complement).
inline std::vector<QuadNode> base_quadrature(const Region& region, Atlas atlas, int n_base) {
  if (n_base < 2) throw ConfigError("base quadrature needs at least 2 nodes per axis");
  std::vector<QuadNode> out;
  if (region.type == Region::Type::Sphere) {
    if (atlas != Atlas::Sphere) throw ConfigError("sphere region on a planar metric");
    detail::sphere_chart_nodes(Chart::North, n_base, out);
    detail::sphere_chart_nodes(Chart::South, n_base, out);
    return out;
  }
  if (atlas != Atlas::Plane) throw ConfigError("rectangular regions are only supported on the plane");
  const GaussRule g = gauss_legendre(n_base);
  const double hx = 0.5 * (region.x1 - region.x0), hy = 0.5 * (region.y1 - region.y0);
  for (std::size_t i = 0; i < g.nodes.size(); ++i)
    for (std::size_t j = 0; j < g.nodes.size(); ++j)
      out.push_back({{Chart::Plane, {region.x0 + hx * (1 + g.nodes[i]), region.y0 + hy * (1 + g.nodes[j])}},
                     hx * hy * g.weights[i] * g.weights[j]});
  return out;
}

namespace detail {

inline const ConvexDomain* funk_domain_of(const Metric& m) {
  if (const auto* f = dynamic_cast<const FunkMetric*>(&m)) return &f->domain();
  if (const auto* s = dynamic_cast<const SymmetrizedMetric*>(&m)) return funk_domain_of(s->base());
  if (const auto* o = dynamic_cast<const OneFormMetric*>(&m)) return funk_domain_of(o->base());
  return nullptr;
}

/// Rectangles must sit inside the domain; Funk-type domains need an inset of
/// 5% of the mean radius.
inline void check_region(const Metric& m, const Region& region) {
  if (region.type == Region::Type::Sphere) return;
  const Coord corners[4] = {{region.x0, region.y0}, {region.x1, region.y0}, {region.x0, region.y1}, {region.x1, region.y1}};
  const ConvexDomain* omega = funk_domain_of(m);
  for (const Coord& c : corners) {
    if (!m.contains({Chart::Plane, c})) throw DomainError("integration region leaves the domain of " + m.describe());
    if (omega) {
      const double scale = trig_coefficients(omega->samples()).a[0];
      if (omega->interior_margin(c) < 0.05 * scale)
        throw DomainError("integration region comes within 5% of the domain boundary; inset it");
    }
  }
}

}  // namespace detail

struct FiberStats {
  double min = 0.0, max = 0.0, mean = 0.0;
};

struct VolumeReport {
  double ht_volume = 0.0;
  double error_estimate = 0.0;      ///< |V(N) - V(N/2)|
  double euclidean_ball_constant = kEuclideanBallArea;
  Region region;
  int n_base = 0, n_fiber = 0;
  std::vector<QuadNode> nodes;
  std::vector<double> fiber_area_field;  ///< per node
  FiberStats per_fiber_stats;
};

struct VolumeOptions {
  int n_base = 16;
  int n_fiber = 512;
  bool estimate_error = true;
  int threads = 0;
};

namespace detail {

inline std::vector<double> fiber_areas(const Metric& m, const std::vector<QuadNode>& nodes, int n_fiber, int threads) {
  std::vector<double> a(nodes.size());
  parallel_for(nodes.size(), threads, [&](std::size_t i) { a[i] = fiber_dual_area(m, nodes[i].x, n_fiber); });
  return a;
}

inline double integrate(const std::vector<QuadNode>& nodes, const std::vector<double>& f) {
  std::vector<double> t(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) t[i] = nodes[i].w * f[i];
  return pairwise_sum(t);
}

inline FiberStats stats(const std::vector<double>& a) {
  FiberStats s;
  if (a.empty()) return s;
  s.min = *std::min_element(a.begin(), a.end());
  s.max = *std::max_element(a.begin(), a.end());
  s.mean = pairwise_sum(a) / static_cast<double>(a.size());
  return s;
}

inline int halved(int n, int floor) { return std::max(floor, n / 2); }

}  // namespace detail

inline VolumeReport ht_volume(const Metric& m, const Region& region, const VolumeOptions& opt = {}) {
  detail::check_region(m, region);
  VolumeReport r;
  r.region = region;
  r.n_base = opt.n_base;
  r.n_fiber = opt.n_fiber;
  r.nodes = base_quadrature(region, m.atlas(), opt.n_base);
  r.fiber_area_field = detail::fiber_areas(m, r.nodes, opt.n_fiber, opt.threads);
  r.ht_volume = detail::integrate(r.nodes, r.fiber_area_field) / kEuclideanBallArea;
  r.per_fiber_stats = detail::stats(r.fiber_area_field);
  if (opt.estimate_error) {
    const auto coarse = base_quadrature(region, m.atlas(), detail::halved(opt.n_base, 2));
    const auto a = detail::fiber_areas(m, coarse, detail::halved(opt.n_fiber, 256), opt.threads);
    r.error_estimate = std::abs(r.ht_volume - detail::integrate(coarse, a) / kEuclideanBallArea);
  }
  return r;
}

inline VolumeReport ht_volume(const MetricSpec& spec, const VolumeOptions& opt = {}) {
  return ht_volume(*build_metric(spec), spec.effective_region(), opt);
}

// ---------------------------------------------------------------------------
// Brunn-Minkowski comparison of L with its symmetrization

enum class BMVerdict { Equal, Strict, Inconclusive };

inline std::string_view verdict_name(BMVerdict v) {
  switch (v) {
    case BMVerdict::Equal: return "EQUAL";
    case BMVerdict::Strict: return "STRICT";
    case BMVerdict::Inconclusive: return "INCONCLUSIVE";
  }
  return "?";
}

struct BMReport {
  double vol_F = 0.0, vol_symF = 0.0;
  double relative_gap = 0.0;   ///< (vol_symF - vol_F) / vol_symF
  double error_estimate = 0.0; ///< relative, from the N/2 grids of both volumes
  std::vector<QuadNode> nodes;
  std::vector<double> deficit_field;  ///< area(sym D*) - area(D*) per node
  BMVerdict verdict = BMVerdict::Inconclusive;
};

inline constexpr double kBMEqualTolerance = 1e-6;

inline BMReport bm_compare(const MetricPtr& metric, const Region& region, const VolumeOptions& opt = {}) {
  const Metric& m = *metric;
  const MetricPtr sym = symmetrized(metric);
  detail::check_region(m, region);
  BMReport r;
  r.nodes = base_quadrature(region, m.atlas(), opt.n_base);
  const auto a = detail::fiber_areas(m, r.nodes, opt.n_fiber, opt.threads);
  const auto b = detail::fiber_areas(*sym, r.nodes, opt.n_fiber, opt.threads);
  r.vol_F = detail::integrate(r.nodes, a) / kEuclideanBallArea;
  r.vol_symF = detail::integrate(r.nodes, b) / kEuclideanBallArea;
  r.deficit_field.resize(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r.deficit_field[i] = b[i] - a[i];
  r.relative_gap = (r.vol_symF - r.vol_F) / r.vol_symF;

  const auto coarse = base_quadrature(region, m.atlas(), detail::halved(opt.n_base, 2));
  const int nf = detail::halved(opt.n_fiber, 256);
  const double cF = detail::integrate(coarse, detail::fiber_areas(m, coarse, nf, opt.threads)) / kEuclideanBallArea;
  const double cS = detail::integrate(coarse, detail::fiber_areas(*sym, coarse, nf, opt.threads)) / kEuclideanBallArea;
  r.error_estimate = (std::abs(r.vol_F - cF) + std::abs(r.vol_symF - cS)) / r.vol_symF;

  if (std::abs(r.relative_gap) <= kBMEqualTolerance) r.verdict = BMVerdict::Equal;
  else if (r.relative_gap > 10 * r.error_estimate) r.verdict = BMVerdict::Strict;
  else r.verdict = BMVerdict::Inconclusive;
  return r;
}

inline BMReport bm_compare(const MetricSpec& spec, const VolumeOptions& opt = {}) {
  return bm_compare(build_metric(spec), spec.effective_region(), opt);
}

}  // namespace finsler
