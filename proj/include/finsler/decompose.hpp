#pragma once

// Splitting L = Lbar + beta: extraction of the fiberwise-linear odd part,
// closedness and exactness tests, and the end-to-end verification pipeline.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "finsler/error.hpp"
#include "finsler/flow.hpp"
#include "finsler/geometry.hpp"
#include "finsler/metrics.hpp"
#include "finsler/norms.hpp"
#include "finsler/parallel.hpp"
#include "finsler/volume.hpp"

namespace finsler {

struct BetaFit {
  FiberCovector b;
  double residual = 0.0;  ///< max over the grid of |g - b.u|
};

/// First-harmonic least-squares fit of g = F - Fbar on N uniform directions.
inline BetaFit extract_beta_at(const Metric& m, const ChartPoint& x, int N = 512) {
  if (N < 256) throw ConfigError("extract_beta_at: N must be at least 256");
  const AsymNorm F = m.fiber(x);
  const AsymNorm Fbar = symmetrize_norm(F);
  std::vector<double> g(static_cast<std::size_t>(N));
  std::vector<double> c(g.size()), s(g.size());
  for (int k = 0; k < N; ++k) {
    const double t = kTwoPi * k / N;
    const FiberVector u = unit_direction(t);
    const auto i = static_cast<std::size_t>(k);
    g[i] = F(u) - Fbar(u);
    c[i] = g[i] * u.x1;
    s[i] = g[i] * u.x2;
  }
  BetaFit r;
  r.b = {2.0 / N * pairwise_sum(c), 2.0 / N * pairwise_sum(s)};
  for (int k = 0; k < N; ++k)
    r.residual = std::max(r.residual, std::abs(g[static_cast<std::size_t>(k)] - pair(r.b, unit_direction(kTwoPi * k / N))));
  return r;
}

inline BetaFit extract_beta_at(const MetricSpec& spec, const ChartPoint& x, int N = 512) {
  return extract_beta_at(*build_metric(spec), x, N);
}

/// Regular node grid on a chart rectangle; node (i, j) has x1 index i, x2 index j.
struct Grid {
  Chart chart = Chart::Plane;
  double x0 = -1, x1 = 1, y0 = -1, y1 = 1;
  int nx = 41, ny = 41;

  double hx() const { return (x1 - x0) / (nx - 1); }
  double hy() const { return (y1 - y0) / (ny - 1); }
  std::size_t size() const { return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny); }
  std::size_t index(int i, int j) const { return static_cast<std::size_t>(j) * static_cast<std::size_t>(nx) + static_cast<std::size_t>(i); }
  ChartPoint node(int i, int j) const { return {chart, {x0 + i * hx(), y0 + j * hy()}}; }
  ChartPoint node(std::size_t k) const {
    return node(static_cast<int>(k % static_cast<std::size_t>(nx)), static_cast<int>(k / static_cast<std::size_t>(nx)));
  }
};

struct OneFormField {
  Grid grid;
  std::vector<FiberCovector> b;
  std::vector<double> linearity_residual;

  double max_linearity_residual() const {
    return linearity_residual.empty() ? 0.0 : *std::max_element(linearity_residual.begin(), linearity_residual.end());
  }
};

inline OneFormField extract_beta_field(const Metric& m, const Grid& grid, int N = 512, int threads = 0) {
  OneFormField f;
  f.grid = grid;
  f.b.resize(grid.size());
  f.linearity_residual.resize(grid.size());
  parallel_for(grid.size(), threads, [&](std::size_t k) {
    const BetaFit fit = extract_beta_at(m, grid.node(k), N);
    f.b[k] = fit.b;
    f.linearity_residual[k] = fit.residual;
  });
  return f;
}

/// Samples an explicit 1-form on a grid (no fitting).
inline OneFormField sample_one_form(const Grid& grid, const std::function<FiberCovector(Coord)>& beta) {
  OneFormField f;
  f.grid = grid;
  f.b.resize(grid.size());
  f.linearity_residual.assign(grid.size(), 0.0);
  for (std::size_t k = 0; k < grid.size(); ++k) f.b[k] = beta(grid.node(k).x);
  return f;
}

namespace detail {

/// Fourth-order derivative along one axis at interior index i of n: centered
/// where two neighbours exist on each side, a skewed five-point stencil next
/// to the edge.
template <class Get>
double centered(const Get& g, int i, int n, double h) {
  if (i >= 2 && i + 2 < n) return (g(i - 2) - 8 * g(i - 1) + 8 * g(i + 1) - g(i + 2)) / (12 * h);
  if (i == 1) return (-3 * g(0) - 10 * g(1) + 18 * g(2) - 6 * g(3) + g(4)) / (12 * h);
  return (3 * g(n - 1) + 10 * g(n - 2) - 18 * g(n - 3) + 6 * g(n - 4) - g(n - 5)) / (12 * h);
}

}  // namespace detail

/// |d1 b2 - d2 b1| at each interior node (boundary entries are 0).
inline std::vector<double> curl_field(const OneFormField& f) {
  const Grid& G = f.grid;
  if (G.nx < 5 || G.ny < 5) throw ConfigError("curl_residual: grid needs at least 5 points per axis");
  std::vector<double> c(G.size(), 0.0);
  for (int j = 1; j + 1 < G.ny; ++j) {
    for (int i = 1; i + 1 < G.nx; ++i) {
      const double d1b2 = detail::centered([&](int k) { return f.b[G.index(k, j)].x2; }, i, G.nx, G.hx());
      const double d2b1 = detail::centered([&](int k) { return f.b[G.index(i, k)].x1; }, j, G.ny, G.hy());
      c[G.index(i, j)] = std::abs(d1b2 - d2b1);
    }
  }
  return c;
}

inline double curl_residual(const OneFormField& f) {
  const auto c = curl_field(f);
  return *std::max_element(c.begin(), c.end());
}

struct PotentialField {
  Grid grid;
  std::vector<double> f;
  std::size_t base_index = 0;
  double loop_residual = 0.0;  ///< max trapezoid circulation of beta over a grid cell
};

inline constexpr double kClosednessThreshold = 1e-4;

namespace detail {

/// Cumulative integral of samples g on a uniform line with spacing h, f[0] = 0,
/// fourth-order per interval (needs n >= 4).
inline std::vector<double> cumulative(const std::vector<double>& g, double h) {
  const std::size_t n = g.size();
  std::vector<double> F(n, 0.0);
  for (std::size_t k = 0; k + 1 < n; ++k) {
    double step;
    if (k == 0) step = h / 24 * (9 * g[0] + 19 * g[1] - 5 * g[2] + g[3]);
    else if (k + 2 == n) step = h / 24 * (9 * g[n - 1] + 19 * g[n - 2] - 5 * g[n - 3] + g[n - 4]);
    else step = h / 24 * (-g[k - 1] + 13 * g[k] + 13 * g[k + 1] - g[k + 2]);
    F[k + 1] = F[k] + step;
  }
  return F;
}

}  // namespace detail

/// Potential by axis-first path integration (along x1 on the basepoint row,
/// then along x2), normalized to f(basepoint) = 0.
inline PotentialField reconstruct_potential(const OneFormField& field, const ChartPoint& basepoint,
                                            double curl_threshold = kClosednessThreshold) {
  const Grid& G = field.grid;
  if (G.nx < 5 || G.ny < 5) throw ConfigError("reconstruct_potential: grid needs at least 5 points per axis");
  const double curl = curl_residual(field);
  if (curl > curl_threshold)
    throw NotClosedError("NOT_CLOSED: curl residual " + std::to_string(curl) + " exceeds " + std::to_string(curl_threshold),
                         curl);
  const int ib = std::clamp(static_cast<int>(std::lround((basepoint.x.x1 - G.x0) / G.hx())), 0, G.nx - 1);
  const int jb = std::clamp(static_cast<int>(std::lround((basepoint.x.x2 - G.y0) / G.hy())), 0, G.ny - 1);

  PotentialField P;
  P.grid = G;
  P.f.assign(G.size(), 0.0);
  P.base_index = G.index(ib, jb);
  std::vector<double> row(static_cast<std::size_t>(G.nx));
  for (int i = 0; i < G.nx; ++i) row[static_cast<std::size_t>(i)] = field.b[G.index(i, jb)].x1;
  const auto Frow = detail::cumulative(row, G.hx());
  std::vector<double> col(static_cast<std::size_t>(G.ny));
  for (int i = 0; i < G.nx; ++i) {
    const double fi = Frow[static_cast<std::size_t>(i)] - Frow[static_cast<std::size_t>(ib)];
    for (int j = 0; j < G.ny; ++j) col[static_cast<std::size_t>(j)] = field.b[G.index(i, j)].x2;
    const auto Fcol = detail::cumulative(col, G.hy());
    for (int j = 0; j < G.ny; ++j)
      P.f[G.index(i, j)] = fi + Fcol[static_cast<std::size_t>(j)] - Fcol[static_cast<std::size_t>(jb)];
  }
  const double hx = G.hx(), hy = G.hy();
  for (int j = 0; j + 1 < G.ny; ++j) {
    for (int i = 0; i + 1 < G.nx; ++i) {
      const FiberCovector a = field.b[G.index(i, j)], b = field.b[G.index(i + 1, j)];
      const FiberCovector c = field.b[G.index(i + 1, j + 1)], d = field.b[G.index(i, j + 1)];
      const double circ = 0.5 * hx * (a.x1 + b.x1) + 0.5 * hy * (b.x2 + c.x2) - 0.5 * hx * (c.x1 + d.x1) -
                          0.5 * hy * (d.x2 + a.x2);
      P.loop_residual = std::max(P.loop_residual, std::abs(circ));
    }
  }
  return P;
}

// ---------------------------------------------------------------------------
// Verification pipeline

enum class StageStatus { Pass, Fail, Inconclusive, Skipped };

inline std::string_view status_name(StageStatus s) {
  switch (s) {
    case StageStatus::Pass: return "PASS";
    case StageStatus::Fail: return "FAIL";
    case StageStatus::Inconclusive: return "INCONCLUSIVE";
    case StageStatus::Skipped: return "SKIPPED";
  }
  return "?";
}

enum class TheoremVerdict { Pass, Fail, Inconclusive, Partial };

inline std::string_view verdict_name(TheoremVerdict v) {
  switch (v) {
    case TheoremVerdict::Pass: return "PASS";
    case TheoremVerdict::Fail: return "FAIL";
    case TheoremVerdict::Inconclusive: return "INCONCLUSIVE";
    case TheoremVerdict::Partial: return "PARTIAL";
  }
  return "?";
}

struct StageResult {
  std::string name;
  StageStatus status = StageStatus::Skipped;
  double value = std::numeric_limits<double>::quiet_NaN();  ///< the measured quantity
  double tolerance = std::numeric_limits<double>::quiet_NaN();
  std::string detail;
};

struct VerifyConfig {
  ZollOptions zoll;
  int reversibility_traces = 10;
  double reversibility_length = 2.0;
  double reversibility_tol = 1e-4;
  VolumeOptions volume;
  int grid_n = 41;
  int fiber_n = 512;
  double linearity_tol = 1e-6;
  double curl_tol = kClosednessThreshold;
  double overlap_tol = 1e-4;
  double roundtrip_tol = 1e-4;
  std::uint64_t seed = 0;
  int threads = 0;
};

struct ReversibilityStats {
  std::vector<GeodesicLaunch> launches;
  std::vector<double> residuals;
  double max = 0.0;
  double mean = 0.0;
  double max_energy_drift = 0.0;
};

struct TheoremReport {
  std::string metric;
  bool partial = false;
  std::uint64_t seed = 0;
  std::optional<ZollReport> zoll;
  std::optional<ZollReport> zoll_symmetrized;
  ReversibilityStats reversibility;
  std::optional<BMReport> volume_equality;
  std::vector<OneFormField> beta;
  double max_linearity_residual = std::numeric_limits<double>::quiet_NaN();
  double curl = std::numeric_limits<double>::quiet_NaN();
  std::vector<PotentialField> potentials;  ///< one per chart; sphere potentials share one constant
  std::optional<double> overlap_residual;
  std::optional<double> roundtrip_error;
  std::optional<double> antipodal_discrepancy;
  std::array<StageResult, 5> stages;
  TheoremVerdict verdict = TheoremVerdict::Inconclusive;
};

namespace detail {

inline std::vector<Grid> decomposition_grids(const MetricSpec& spec, int n) {
  if (spec.atlas == Atlas::Sphere) return {Grid{Chart::North, -1, 1, -1, 1, n, n}, Grid{Chart::South, -1, 1, -1, 1, n, n}};
  const Region r = spec.effective_region();
  if (r.type != Region::Type::Rect) throw ConfigError("planar specs need a rectangular region");
  return {Grid{Chart::Plane, r.x0, r.x1, r.y0, r.y1, n, n}};
}

/// Value of the south potential at y, integrating the extracted beta from
/// the nearest grid node along a straight segment (8-point Gauss-Legendre).
inline double potential_at(const Metric& m, const PotentialField& P, Coord y, int N) {
  const Grid& G = P.grid;
  const int i = std::clamp(static_cast<int>(std::lround((y.x1 - G.x0) / G.hx())), 0, G.nx - 1);
  const int j = std::clamp(static_cast<int>(std::lround((y.x2 - G.y0) / G.hy())), 0, G.ny - 1);
  const ChartPoint n = G.node(i, j);
  const Coord d = y - n.x;
  static const GaussRule g = gauss_legendre(8);
  double acc = 0.0;
  for (std::size_t k = 0; k < g.nodes.size(); ++k) {
    const double t = 0.5 * (1 + g.nodes[k]);
    const BetaFit fit = extract_beta_at(m, {G.chart, n.x + t * d}, N);
    acc += 0.5 * g.weights[k] * (fit.b.x1 * d.x1 + fit.b.x2 * d.x2);
  }
  return P.f[G.index(i, j)] + acc;
}

inline StageStatus pass_fail(bool ok) { return ok ? StageStatus::Pass : StageStatus::Fail; }

}  // namespace detail

inline TheoremReport verify_theorem(const MetricSpec& spec, const VerifyConfig& cfg = {}) {
  const MetricPtr L = build_metric(spec);
  const bool sphere = spec.atlas == Atlas::Sphere;
  TheoremReport rep;
  rep.metric = L->describe();
  rep.partial = !sphere;
  rep.seed = cfg.seed;
  const char* names[5] = {"zoll", "reversibility", "volume_equality", "linearity", "exactness"};
  for (int i = 0; i < 5; ++i) rep.stages[static_cast<std::size_t>(i)].name = names[i];

  // 1. Zoll, for L and for its symmetrization, with equal prime lengths.
  StageResult& s1 = rep.stages[0];
  if (!sphere) {
    s1.detail = "planar metric: Zoll stage needs the sphere atlas";
  } else {
    ZollOptions zo = cfg.zoll;
    zo.seed = cfg.seed;
    zo.threads = cfg.threads;
    rep.zoll = zoll_scan(*L, zo);
    rep.zoll_symmetrized = zoll_scan(*symmetrized(L), zo);
    const double dl = std::abs(rep.zoll->median_length - rep.zoll_symmetrized->median_length);
    s1.tolerance = zo.spread_tol;
    s1.value = std::max({rep.zoll->spread, rep.zoll_symmetrized->spread, std::isfinite(dl) ? dl : std::numeric_limits<double>::infinity()});
    if (rep.zoll->verdict == ZollVerdict::Inconclusive || rep.zoll_symmetrized->verdict == ZollVerdict::Inconclusive) {
      s1.status = StageStatus::Inconclusive;
      s1.detail = "integration failures during the scan";
    } else {
      s1.status = detail::pass_fail(rep.zoll->zoll && rep.zoll_symmetrized->zoll && dl <= zo.spread_tol);
      s1.detail = "closed " + std::to_string(rep.zoll->closed_count) + "/" +
                  std::to_string(rep.zoll->geodesics.size()) + ", symmetrized closed " +
                  std::to_string(rep.zoll_symmetrized->closed_count) + "/" +
                  std::to_string(rep.zoll_symmetrized->geodesics.size());
    }
  }

  // 2. Geodesic reversibility.
  StageResult& s2 = rep.stages[1];
  s2.tolerance = cfg.reversibility_tol;
  try {
    auto& R = rep.reversibility;
    R.launches = quasi_random_launches(*L, spec.effective_region(), cfg.reversibility_traces, cfg.seed ^ 0x9e3779b97f4a7c15ull);
    R.residuals.assign(R.launches.size(), 0.0);
    std::vector<double> drift(R.launches.size(), 0.0);
    parallel_for(R.launches.size(), cfg.threads, [&](std::size_t i) {
      const GeodesicTrace t = integrate_geodesic(*L, R.launches[i].x0, R.launches[i].v0, cfg.reversibility_length, cfg.zoll.flow);
      drift[i] = t.energy_drift;
      R.residuals[i] = reversibility_residual(*L, t, cfg.zoll.flow);
    });
    for (std::size_t i = 0; i < R.residuals.size(); ++i) {
      R.max = std::max(R.max, R.residuals[i]);
      R.mean += R.residuals[i] / static_cast<double>(R.residuals.size());
      R.max_energy_drift = std::max(R.max_energy_drift, drift[i]);
    }
    s2.value = R.max;
    s2.status = detail::pass_fail(R.max <= cfg.reversibility_tol);
  } catch (const Error& e) {
    s2.status = StageStatus::Inconclusive;
    s2.detail = e.what();
  }

  // 3. Holmes-Thompson volume of L against its symmetrization.
  StageResult& s3 = rep.stages[2];
  s3.tolerance = kBMEqualTolerance;
  try {
    VolumeOptions vo = cfg.volume;
    vo.threads = cfg.threads;
    rep.volume_equality = bm_compare(L, spec.effective_region(), vo);
    s3.value = rep.volume_equality->relative_gap;
    s3.detail = std::string(verdict_name(rep.volume_equality->verdict));
    switch (rep.volume_equality->verdict) {
      case BMVerdict::Equal: s3.status = StageStatus::Pass; break;
      case BMVerdict::Strict: s3.status = StageStatus::Fail; break;
      case BMVerdict::Inconclusive: s3.status = StageStatus::Inconclusive; break;
    }
  } catch (const Error& e) {
    s3.status = StageStatus::Inconclusive;
    s3.detail = e.what();
  }

  // 4. The odd part of L is fiberwise linear.
  StageResult& s4 = rep.stages[3];
  s4.tolerance = cfg.linearity_tol;
  const auto grids = detail::decomposition_grids(spec, cfg.grid_n);
  try {
    rep.max_linearity_residual = 0.0;
    for (const Grid& g : grids) {
      rep.beta.push_back(extract_beta_field(*L, g, cfg.fiber_n, cfg.threads));
      rep.max_linearity_residual = std::max(rep.max_linearity_residual, rep.beta.back().max_linearity_residual());
    }
    s4.value = rep.max_linearity_residual;
    s4.status = detail::pass_fail(rep.max_linearity_residual <= cfg.linearity_tol);
  } catch (const Error& e) {
    s4.status = StageStatus::Inconclusive;
    s4.detail = e.what();
  }

  // 5. beta is closed in every chart, hence exact; potentials glue on the overlap.
  StageResult& s5 = rep.stages[4];
  s5.tolerance = cfg.curl_tol;
  if (s4.status == StageStatus::Fail) {
    s5.status = StageStatus::Fail;
    s5.detail = "no 1-form: the odd part is not fiberwise linear";
  } else if (s4.status != StageStatus::Pass) {
    s5.status = StageStatus::Inconclusive;
    s5.detail = "linearity stage did not complete";
  } else {
    try {
      rep.curl = 0.0;
      for (const auto& b : rep.beta) rep.curl = std::max(rep.curl, curl_residual(b));
      s5.value = rep.curl;
      for (const auto& b : rep.beta) rep.potentials.push_back(reconstruct_potential(b, b.grid.node(b.grid.nx / 2, b.grid.ny / 2), cfg.curl_tol));
      bool ok = true;
      std::string why;
      if (sphere) {
        // Glue: north nodes with |x| >= 1.1 lie well inside the south grid.
        PotentialField& N = rep.potentials[0];
        PotentialField& S = rep.potentials[1];
        std::vector<double> diffs;
        std::vector<ChartPoint> pts;
        for (std::size_t k = 0; k < N.grid.size(); ++k)
          if (N.grid.node(k).x.norm() >= 1.1) pts.push_back(N.grid.node(k));
        diffs.resize(pts.size());
        parallel_for(pts.size(), cfg.threads, [&](std::size_t q) {
          const Coord y = to_chart(pts[q], Chart::South).x;
          const Grid& G = N.grid;
          const int i = static_cast<int>(std::lround((pts[q].x.x1 - G.x0) / G.hx()));
          const int j = static_cast<int>(std::lround((pts[q].x.x2 - G.y0) / G.hy()));
          diffs[q] = N.f[G.index(i, j)] - detail::potential_at(*L, S, y, cfg.fiber_n);
        });
        double mean = 0.0;
        for (double d : diffs) mean += d / static_cast<double>(diffs.size());
        double spread = 0.0;
        for (double d : diffs) spread = std::max(spread, std::abs(d - mean));
        for (double& f : S.f) f += mean;  // one constant for the whole sphere
        rep.overlap_residual = spread;
        if (spread > cfg.overlap_tol) {
          ok = false;
          why = "potentials disagree on the chart overlap";
        }
        if (spec.antipodal) {
          // f(a(x)) - f(x) should be constant; reported only.
          std::vector<double> a;
          for (std::size_t k = 0; k < N.grid.size(); ++k) {
            const ChartPoint x = N.grid.node(k);
            const ChartPoint ax = antipode(x);
            const Grid& G = S.grid;
            const int i = static_cast<int>(std::lround((ax.x.x1 - G.x0) / G.hx()));
            const int j = static_cast<int>(std::lround((ax.x.x2 - G.y0) / G.hy()));
            a.push_back(S.f[G.index(i, j)] - N.f[k]);
          }
          const auto [lo, hi] = std::minmax_element(a.begin(), a.end());
          rep.antipodal_discrepancy = *hi - *lo;
        }
      }
      if (const auto f = known_potential(spec)) {
        // Round trip: one additive constant, fixed at the first chart's basepoint.
        const PotentialField& P0 = rep.potentials[0];
        const double c = (*f)(P0.grid.node(P0.base_index)) - P0.f[P0.base_index];
        double err = 0.0;
        for (const auto& P : rep.potentials)
          for (std::size_t k = 0; k < P.grid.size(); ++k)
            err = std::max(err, std::abs(P.f[k] + c - (*f)(P.grid.node(k))));
        rep.roundtrip_error = err;
        if (err > cfg.roundtrip_tol) {
          ok = false;
          why = "reconstructed potential differs from the input";
        }
      }
      s5.status = detail::pass_fail(ok);
      s5.detail = why;
    } catch (const NotClosedError& e) {
      s5.status = StageStatus::Fail;
      s5.detail = e.what();
    } catch (const Error& e) {
      s5.status = StageStatus::Inconclusive;
      s5.detail = e.what();
    }
  }

  bool any_fail = false, any_inconclusive = false;
  for (const auto& s : rep.stages) {
    any_fail = any_fail || s.status == StageStatus::Fail;
    any_inconclusive = any_inconclusive || s.status == StageStatus::Inconclusive;
  }
  rep.verdict = any_fail ? TheoremVerdict::Fail
                : any_inconclusive ? TheoremVerdict::Inconclusive
                : rep.partial ? TheoremVerdict::Partial
                              : TheoremVerdict::Pass;
  return rep;
}

}  // namespace finsler
