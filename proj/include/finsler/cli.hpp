#pragma once

// finsler_lab command line. Exit codes: 0 success or PASS, 1 FAIL verdict,
// 2 usage or configuration error, 3 numerical failure.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "finsler/decompose.hpp"
#include "finsler/error.hpp"
#include "finsler/flow.hpp"
#include "finsler/metrics.hpp"
#include "finsler/report.hpp"
#include "finsler/spec_format.hpp"
#include "finsler/volume.hpp"

namespace finsler::cli {

enum ExitCode { kOk = 0, kFail = 1, kUsage = 2, kNumerical = 3 };

struct RunConfig {
  std::string command;
  std::vector<std::string> spec_paths;
  std::string output_dir;
  std::uint64_t seed = 0;
  int threads = 0;
  std::vector<std::string> tolerance_overrides;  ///< KEY=VAL

  // budgets
  int n_geodesics = 50;
  double s_max = 8.0;
  int n_base = 16;
  int n_fiber = 512;
  int grid_n = 41;
  int traces = 10;
  int points = 100;

  // trace
  std::string chart = "auto";
  std::vector<double> x0, v0;
};

/// Tolerances after applying --tol overrides.
struct Tolerances {
  std::map<std::string, double> values = {
      {"integrator", 1e-9}, {"h_max", 0.05},     {"closure", 1e-5},   {"spread", 1e-4},  {"reversibility", 1e-4},
      {"linearity", 1e-6},  {"curl", 1e-4},      {"overlap", 1e-4},   {"roundtrip", 1e-4}};

  void apply(const std::vector<std::string>& overrides) {
    for (const std::string& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw ConfigError("--tol expects KEY=VAL, got '" + kv + "'");
      const std::string key = kv.substr(0, eq);
      if (!values.count(key)) throw ConfigError("unknown tolerance key '" + key + "'");
      try {
        std::size_t used = 0;
        const double v = std::stod(kv.substr(eq + 1), &used);
        if (used != kv.size() - eq - 1 || !(v > 0.0)) throw std::invalid_argument("");
        values[key] = v;
      } catch (const std::exception&) {
        throw ConfigError("bad value for tolerance '" + key + "'");
      }
    }
  }
  double operator[](const std::string& k) const { return values.at(k); }
  Json json() const { return Json(values); }
};

namespace detail {

struct Context {
  const RunConfig& cfg;
  Tolerances tol;
  std::ostream& out;

  FlowOptions flow() const {
    FlowOptions f;
    f.tol = tol["integrator"];
    f.h_max = tol["h_max"];
    return f;
  }
  ZollOptions zoll() const {
    ZollOptions z;
    z.n_geodesics = cfg.n_geodesics;
    z.s_max = cfg.s_max;
    z.flow = flow();
    z.tol_close = tol["closure"];
    z.spread_tol = tol["spread"];
    z.seed = cfg.seed;
    z.threads = cfg.threads;
    return z;
  }
  VolumeOptions volume() const {
    VolumeOptions v;
    v.n_base = cfg.n_base;
    v.n_fiber = cfg.n_fiber;
    v.threads = cfg.threads;
    return v;
  }

  void write(const std::string& name, const std::string& content) const {
    if (cfg.output_dir.empty()) return;
    const std::filesystem::path dir(cfg.output_dir);
    std::filesystem::create_directories(dir);
    std::ofstream f(dir / name, std::ios::binary);
    if (!f) throw ConfigError("cannot write " + (dir / name).string());
    f << content;
  }
  void write_json(const std::string& name, Json j) const {
    j["command"] = cfg.command;
    j["seed"] = cfg.seed;
    j["tolerances"] = tol.json();
    write(name, j.dump(2) + "\n");
  }
};

inline std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

inline MetricSpec load(const std::string& path) {
  try {
    return load_metric_spec(path);
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

inline int cmd_validate(const Context& c, const MetricSpec& spec) {
  const MetricPtr m = build_metric(spec);
  const MetricValidity v = check_metric_validity(*m, spec, c.cfg.points, c.cfg.seed);
  c.out << m->describe() << ": " << (v.valid ? "valid" : "INVALID") << "\n"
        << "  points checked          " << v.points << "\n"
        << "  worst convexity margin  " << fmt("%.6g", v.worst_convexity_margin) << "\n"
        << "  worst homogeneity       " << fmt("%.6g", v.worst_homogeneity) << "\n";
  if (std::isfinite(v.one_form_margin)) c.out << "  one-form margin         " << fmt("%.6g", v.one_form_margin) << "\n";
  if (spec.antipodal) c.out << "  antipodal residual      " << fmt("%.6g", v.antipodal_residual) << "\n";
  if (!v.valid) c.out << "  reason: " << v.reason << "\n";
  c.write_json("validate.json", Json{{"metric", m->describe()}, {"validity", to_json(v)}});
  return v.valid ? kOk : kFail;
}

inline int cmd_trace(const Context& c, const MetricSpec& spec) {
  const MetricPtr m = build_metric(spec);
  ChartPoint x0;
  if (spec.atlas == Atlas::Sphere) {
    x0.chart = c.cfg.chart == "south" ? Chart::South : Chart::North;
    if (c.cfg.chart != "auto" && c.cfg.chart != "north" && c.cfg.chart != "south")
      throw ConfigError("--chart must be north or south on the sphere");
  } else {
    if (c.cfg.chart != "auto" && c.cfg.chart != "plane") throw ConfigError("--chart must be plane for planar metrics");
    const Region r = spec.effective_region();
    x0 = {Chart::Plane, {0.5 * (r.x0 + r.x1), 0.5 * (r.y0 + r.y1)}};
  }
  if (!c.cfg.x0.empty()) x0.x = {c.cfg.x0.at(0), c.cfg.x0.at(1)};
  const FiberVector v0 = c.cfg.v0.empty() ? FiberVector{1, 0} : FiberVector{c.cfg.v0.at(0), c.cfg.v0.at(1)};
  const GeodesicTrace t = integrate_geodesic(*m, x0, v0, c.cfg.s_max, c.flow());
  const ClosureReport cl = detect_closure(t, c.tol["closure"]);
  Json j{{"metric", m->describe()}, {"trace", trace_summary(t)}, {"closure", to_json(cl)}};
  c.out << m->describe() << ": " << t.samples.size() << " samples, length " << fmt("%.10g", t.total_length)
        << ", energy drift " << fmt("%.3g", t.energy_drift) << "\n";
  if (cl.closed) c.out << "  closed, length " << fmt("%.10g", *cl.length) << "\n";
  if (t.domain_exit) c.out << "  left the domain: " << t.exit_reason << "\n";
  if (spec.atlas == Atlas::Plane && t.samples.size() >= 3) {
    j["straightness_residual"] = straightness_residual(t);
    c.out << "  straightness residual " << fmt("%.3g", j["straightness_residual"].get<double>()) << "\n";
  }
  std::ostringstream csv;
  write_trace_csv(csv, t);
  c.write("trace.csv", csv.str());
  c.write("trace.svg", traces_svg({t}));
  c.write_json("trace.json", j);
  return kOk;
}

inline int cmd_zoll(const Context& c, const MetricSpec& spec) {
  const MetricPtr m = build_metric(spec);
  const ZollReport z = zoll_scan(*m, c.zoll());
  c.out << m->describe() << ": " << verdict_name(z.verdict) << "\n"
        << "  closed " << z.closed_count << "/" << z.geodesics.size() << ", median length "
        << fmt("%.10g", z.median_length) << ", spread " << fmt("%.3g", z.spread) << "\n";
  for (const ZollEntry& e : z.geodesics) {
    if (e.closure.closed && std::abs(*e.closure.length - z.median_length) <= c.tol["spread"]) continue;
    c.out << "  geodesic " << e.launch.index << " from " << chart_name(e.launch.x0.chart) << " ("
          << fmt("%.6g", e.launch.x0.x.x1) << ", " << fmt("%.6g", e.launch.x0.x.x2) << "): ";
    if (e.failed) c.out << "failed: " << e.error << "\n";
    else if (!e.closure.closed) c.out << "not closed, best return gap " << fmt("%.3g", e.closure.return_gap) << "\n";
    else c.out << "length " << fmt("%.10g", *e.closure.length) << " off the median\n";
  }
  c.write_json("zoll.json", Json{{"metric", m->describe()}, {"zoll", to_json(z)}});
  if (!c.cfg.output_dir.empty()) {
    std::vector<GeodesicTrace> shown;
    for (std::size_t i = 0; i < std::min<std::size_t>(6, z.geodesics.size()); ++i)
      shown.push_back(integrate_geodesic(*m, z.geodesics[i].launch.x0, z.geodesics[i].launch.v0, c.cfg.s_max, c.flow()));
    c.write("zoll.svg", traces_svg(shown));
  }
  if (z.verdict == ZollVerdict::Inconclusive) return kNumerical;
  return z.zoll ? kOk : kFail;
}

inline int cmd_htvol(const Context& c, const MetricSpec& spec) {
  const VolumeReport v = ht_volume(*build_metric(spec), spec.effective_region(), c.volume());
  c.out << fmt("%.6f", v.ht_volume) << "\n";
  c.write_json("htvol.json", Json{{"volume", to_json(v)}});
  return kOk;
}

inline int cmd_symmetrize(const Context& c, const MetricSpec& spec) {
  const MetricPtr m = build_metric(spec);
  const MetricPtr s = symmetrized(m);
  const MetricValidity v = check_metric_validity(*s, spec, c.cfg.points, c.cfg.seed);
  std::mt19937_64 rng(c.cfg.seed);
  Json pts = Json::array();
  double worst_lin = 0.0, worst_deficit = 0.0;
  for (int i = 0; i < 8; ++i) {
    const ChartPoint x = random_base_point(*m, spec.effective_region(), rng);
    const BetaFit fit = extract_beta_at(*m, x, c.cfg.n_fiber);
    const double a = fiber_dual_area(*m, x, c.cfg.n_fiber), as = fiber_dual_area(*s, x, c.cfg.n_fiber);
    worst_lin = std::max(worst_lin, fit.residual);
    worst_deficit = std::max(worst_deficit, as - a);
    pts.push_back(Json{{"x", ::finsler::detail::point_json(x)},
                       {"beta", {fit.b.x1, fit.b.x2}},
                       {"linearity_residual", fit.residual},
                       {"area", a},
                       {"area_symmetrized", as}});
  }
  c.out << s->describe() << ": " << (v.valid ? "valid" : "INVALID") << "\n"
        << "  max linearity residual of L - Lbar  " << fmt("%.3g", worst_lin) << "\n"
        << "  max fiber area deficit              " << fmt("%.3g", worst_deficit) << "\n";
  c.write_json("symmetrize.json", Json{{"metric", m->describe()},
                                       {"symmetrized_validity", to_json(v)},
                                       {"samples", pts},
                                       {"max_linearity_residual", worst_lin},
                                       {"max_area_deficit", worst_deficit}});
  return v.valid ? kOk : kFail;
}

inline std::vector<Grid> grids_for(const MetricSpec& spec, int n) {
  if (spec.atlas == Atlas::Sphere) return {Grid{Chart::North, -1, 1, -1, 1, n, n}, Grid{Chart::South, -1, 1, -1, 1, n, n}};
  const Region r = spec.effective_region();
  return {Grid{Chart::Plane, r.x0, r.x1, r.y0, r.y1, n, n}};
}

inline void write_fields(const Context& c, const std::vector<OneFormField>& beta, const std::vector<PotentialField>& pot) {
  for (std::size_t i = 0; i < beta.size(); ++i) {
    const std::string chart(chart_name(beta[i].grid.chart));
    const PotentialField* f = i < pot.size() ? &pot[i] : nullptr;
    std::ostringstream csv;
    write_grid_csv(csv, beta[i], f);
    c.write("grid_" + chart + ".csv", csv.str());
    c.write("beta_" + chart + ".svg", beta_svg(beta[i], f));
  }
}

inline int cmd_decompose(const Context& c, const MetricSpec& spec) {
  const MetricPtr m = build_metric(spec);
  std::vector<OneFormField> beta;
  std::vector<PotentialField> pot;
  double lin = 0.0, curl = 0.0, loop = 0.0;
  for (const Grid& g : grids_for(spec, c.cfg.grid_n)) {
    beta.push_back(extract_beta_field(*m, g, c.cfg.n_fiber, c.cfg.threads));
    lin = std::max(lin, beta.back().max_linearity_residual());
    curl = std::max(curl, curl_residual(beta.back()));
  }
  bool closed = curl <= c.tol["curl"];
  if (closed) {
    for (const auto& b : beta) {
      pot.push_back(reconstruct_potential(b, b.grid.node(b.grid.nx / 2, b.grid.ny / 2), c.tol["curl"]));
      loop = std::max(loop, pot.back().loop_residual);
    }
  }
  const bool linear = lin <= c.tol["linearity"];
  c.out << m->describe() << ": L - Lbar is " << (linear ? "" : "NOT ") << "a 1-form (residual " << fmt("%.3g", lin)
        << "), curl " << fmt("%.3g", curl) << (closed ? ", closed" : ", NOT_CLOSED") << "\n";
  if (closed) c.out << "  loop residual " << fmt("%.3g", loop) << "\n";
  Json grids = Json::array();
  for (const auto& b : beta) grids.push_back(::finsler::detail::grid_json(b.grid));
  c.write_json("decompose.json", Json{{"metric", m->describe()},
                                      {"max_linearity_residual", lin},
                                      {"curl_residual", curl},
                                      {"closed", closed},
                                      {"loop_residual", closed ? Json(loop) : Json(nullptr)},
                                      {"grids", grids}});
  write_fields(c, beta, pot);
  return linear && closed ? kOk : kFail;
}

inline int cmd_verify(const Context& c, const MetricSpec& spec) {
  VerifyConfig v;
  v.zoll = c.zoll();
  v.reversibility_traces = c.cfg.traces;
  v.reversibility_tol = c.tol["reversibility"];
  v.volume = c.volume();
  v.grid_n = c.cfg.grid_n;
  v.fiber_n = c.cfg.n_fiber;
  v.linearity_tol = c.tol["linearity"];
  v.curl_tol = c.tol["curl"];
  v.overlap_tol = c.tol["overlap"];
  v.roundtrip_tol = c.tol["roundtrip"];
  v.seed = c.cfg.seed;
  v.threads = c.cfg.threads;
  const TheoremReport r = verify_theorem(spec, v);
  c.out << r.metric << ": " << verdict_name(r.verdict) << (r.partial ? " (planar: Zoll stage skipped)" : "") << "\n";
  for (const auto& s : r.stages) {
    c.out << "  " << s.name << std::string(18 - std::min<std::size_t>(17, s.name.size()), ' ') << status_name(s.status);
    if (std::isfinite(s.value)) c.out << "  value " << fmt("%.3g", s.value) << " (tolerance " << fmt("%.3g", s.tolerance) << ")";
    if (!s.detail.empty()) c.out << "  " << s.detail;
    c.out << "\n";
  }
  if (r.roundtrip_error) c.out << "  round-trip error of f  " << fmt("%.3g", *r.roundtrip_error) << "\n";
  c.write_json("theorem.json", to_json(r));
  write_fields(c, r.beta, r.potentials);
  switch (r.verdict) {
    case TheoremVerdict::Pass:
    case TheoremVerdict::Partial: return kOk;
    case TheoremVerdict::Fail: return kFail;
    case TheoremVerdict::Inconclusive: return kNumerical;
  }
  return kNumerical;
}

inline int cmd_bm_demo(const Context& c, const std::vector<MetricSpec>& specs) {
  Json items = Json::array();
  for (const MetricSpec& spec : specs) {
    const MetricPtr m = build_metric(spec);
    const BMReport b = bm_compare(m, spec.effective_region(), c.volume());
    c.out << m->describe() << ": vol " << fmt("%.10g", b.vol_F) << ", symmetrized " << fmt("%.10g", b.vol_symF)
          << ", gap " << fmt("%.3g", b.relative_gap) << " " << verdict_name(b.verdict) << "\n";
    Json j = to_json(b);
    j["metric"] = m->describe();
    items.push_back(j);
  }
  c.write_json("bm.json", Json{{"comparisons", items}});
  return kOk;
}

}  // namespace detail

inline int run(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    detail::Context c{cfg, {}, out};
    c.tol.apply(cfg.tolerance_overrides);
    const std::size_t want = cfg.command == "bm-demo" ? 2 : 1;
    if (cfg.spec_paths.size() != want)
      throw ConfigError(cfg.command + " takes exactly " + std::to_string(want) + " --spec flag(s)");
    std::vector<MetricSpec> specs;
    for (const auto& p : cfg.spec_paths) specs.push_back(detail::load(p));
    if (cfg.command == "validate") return detail::cmd_validate(c, specs[0]);
    if (cfg.command == "trace") return detail::cmd_trace(c, specs[0]);
    if (cfg.command == "zoll") return detail::cmd_zoll(c, specs[0]);
    if (cfg.command == "htvol") return detail::cmd_htvol(c, specs[0]);
    if (cfg.command == "symmetrize") return detail::cmd_symmetrize(c, specs[0]);
    if (cfg.command == "decompose") return detail::cmd_decompose(c, specs[0]);
    if (cfg.command == "verify") return detail::cmd_verify(c, specs[0]);
    if (cfg.command == "bm-demo") return detail::cmd_bm_demo(c, specs);
    throw ConfigError("unknown command '" + cfg.command + "'");
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  }
}

inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Numerical laboratory for non-reversible Finsler metrics", "finsler_lab"};
  app.require_subcommand(1);
  RunConfig cfg;
  if (const char* env = std::getenv("FINSLER_LAB_THREADS")) {
    try {
      cfg.threads = std::stoi(env);
    } catch (const std::exception&) {
    }
  }
  app.add_option("--spec", cfg.spec_paths, "metric spec file")->take_all();
  app.add_option("--out", cfg.output_dir, "output directory for reports");
  app.add_option("--seed", cfg.seed, "random seed");
  app.add_option("--threads", cfg.threads, "worker threads (default: FINSLER_LAB_THREADS or all cores)");
  app.add_option("--tol", cfg.tolerance_overrides, "tolerance override KEY=VAL")->take_all();
  app.add_option("--n-geodesics", cfg.n_geodesics, "geodesics per Zoll scan");
  app.add_option("--s-max", cfg.s_max, "geodesic length budget");
  app.add_option("--n-base", cfg.n_base, "base quadrature nodes per axis");
  app.add_option("--n-fiber", cfg.n_fiber, "fiber directions");
  app.add_option("--grid", cfg.grid_n, "decomposition grid points per axis");
  app.add_option("--traces", cfg.traces, "reversibility traces");
  app.add_option("--points", cfg.points, "validity base points");
  app.add_option("--chart", cfg.chart, "trace: start chart");
  app.add_option("--x0", cfg.x0, "trace: start point")->expected(2)->delimiter(',');
  app.add_option("--v0", cfg.v0, "trace: start direction")->expected(2)->delimiter(',');
  app.fallthrough();
  for (const char* name : {"validate", "trace", "zoll", "htvol", "symmetrize", "decompose", "verify", "bm-demo"})
    app.add_subcommand(name)->fallthrough();
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n" << app.help();
    return kUsage;
  }
  cfg.command = app.get_subcommands().front()->get_name();
  return run(cfg, out, err);
}

}  // namespace finsler::cli
