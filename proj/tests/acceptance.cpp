// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "finsler/finsler.hpp"

using namespace finsler;

namespace {

constexpr double kPi = std::numbers::pi;

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

MetricSpec spec_file(const std::string& name) { return load_metric_spec(std::string(FINSLER_SPEC_DIR) + "/" + name); }

/// Largest energy drift relative to the integrator tolerance over every trace
/// produced during the run.
double g_worst_drift_ratio = 0.0;
int g_traces = 0;

void note_drift(double drift, double tol) {
  g_worst_drift_ratio = std::max(g_worst_drift_ratio, drift / tol);
  ++g_traces;
}

// 1 ---------------------------------------------------------------------------

Outcome riemannian_volume() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const double round = ht_volume(spec_file("round_sphere.spec")).ht_volume;
  const double square = ht_volume(spec_file("euclidean_unit_square.spec")).ht_volume;
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const double rel = std::abs(round - 4 * kPi) / (4 * kPi);
  o.pass = rel <= 1e-3 && std::abs(square - 1) <= 1e-6 && secs < 30;
  o.detail = fmt("sphere %.9f (rel err %.2e), unit square %.12f, %.1f s", round, rel, square, secs);
  return o;
}

// 2 ---------------------------------------------------------------------------

/// h = 1 + first harmonic + higher harmonics with sum (k^2 - 1)|c_k| <= 0.6.
struct Profile {
  std::vector<double> a, b;
  double operator()(double t) const {
    double h = 1;
    for (std::size_t k = 1; k < a.size(); ++k) h += a[k] * std::cos(k * t) + b[k] * std::sin(k * t);
    return h;
  }
};

Profile random_profile(std::mt19937_64& rng, bool odd_part_first_harmonic) {
  std::uniform_real_distribution<double> u(-1, 1);
  const int K = 7;
  Profile p;
  p.a.assign(K + 1, 0.0);
  p.b.assign(K + 1, 0.0);
  p.a[1] = 0.5 * u(rng);
  p.b[1] = 0.5 * u(rng);
  for (int k = 2; k <= K; ++k) {
    if (odd_part_first_harmonic && k % 2 == 1) continue;
    p.a[k] = u(rng) / (k * k);
    p.b[k] = u(rng) / (k * k);
  }
  // keep a visible odd harmonic in the asymmetric subsuite
  if (!odd_part_first_harmonic) p.a[3] = std::copysign(std::max(std::abs(p.a[3]), 0.01), p.a[3]);
  double budget = 0;
  for (int k = 2; k <= K; ++k) budget += (k * k - 1) * (std::abs(p.a[k]) + std::abs(p.b[k]));
  const double s = budget > 0.6 ? 0.6 / budget : 1.0;
  for (int k = 2; k <= K; ++k) p.a[k] *= s, p.b[k] *= s;
  return p;
}

Outcome brunn_minkowski() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(2024);
  int n = 0, n_first = 0, bad_slack = 0, bad_equality = 0;
  double worst_slack = 0, worst_equal = 0, smallest_strict = 1e300;
  for (int i = 0; i < 60; ++i) {
    const bool first = i % 3 == 0;
    const Profile p = random_profile(rng, first);
    const AsymNorm F = norm_from_profile(p);
    if (!check_norm_validity(F).valid) continue;
    ++n;
    const SupportBody K = support_body_of(F);
    const double a = body_area(K), s = body_area(central_symmetrize_body(K));
    const double slack = s - a, rel = std::abs(s - a) / s;
    worst_slack = std::min(worst_slack, slack);
    if (slack < -1e-9) ++bad_slack;
    if (first) {
      ++n_first;
      worst_equal = std::max(worst_equal, rel);
      if (rel > 1e-9) ++bad_equality;
    } else {
      smallest_strict = std::min(smallest_strict, rel);
      if (rel <= 1e-9) ++bad_equality;
    }
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  o.pass = n >= 50 && bad_slack == 0 && bad_equality == 0 && secs < 10;
  o.detail = fmt("%.0f valid norms (%.0f first-harmonic), min slack %.1e, ", n, n_first, worst_slack) +
             fmt("max equality gap %.1e, min strict gap %.1e, %.1f s", worst_equal, smallest_strict, secs);
  return o;
}

// 3 ---------------------------------------------------------------------------

Outcome randers_translates() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  struct Case {
    std::string a, b, atlas;
  };
  const std::vector<Case> cases = {
      {"euclidean", "form(0.65, 0)", "plane"},
      {"conformal(1 + r2)", "grad(0.3*x1*x2 + 0.2*x1)", "plane"},
      {"conformal(4/(1+r2)^2)", "grad(0.2*x1*x2)", "plane"},
      {"matrix(2, 0.3, 1)", "form(0.4*x2, 0.5)", "plane"},
      {"matrix(1 + x1^2, 0, 1 + x2^2)", "form(0.3*sin(x2), 0.3*cos(x1))", "plane"},
      {"conformal(exp(x1))", "grad(0.4*x1^2)", "plane"},
      {"euclidean", "form(-0.3*x2, 0.3*x1)", "plane"},
      {"conformal(2)", "grad(0.5*sin(x1 + x2))", "plane"},
      {"matrix(1, 0.5, 1)", "form(0.3, -0.2*x1)", "plane"},
      {"round(1)", "grad(0.3*Z + 0.2*X*Y)", "sphere"},
  };
  double worst = 0, max_b = 0;
  for (const Case& c : cases) {
    const std::string head = "[metric]\natlas = " + c.atlas + "\na = " + c.a + "\n";
    const MetricSpec alpha = parse_metric_spec(head + "kind = riemannian\n");
    const MetricSpec randers = parse_metric_spec(head + "kind = randers\nb = " + c.b + "\n");
    const MetricValidity v = check_metric_validity(*build_metric(randers), randers, 64, 5);
    max_b = std::max(max_b, 1 - v.one_form_margin);
    VolumeOptions opt;
    opt.estimate_error = false;
    const double va = ht_volume(alpha, opt).ht_volume, vr = ht_volume(randers, opt).ht_volume;
    const double rel = std::abs(vr - va) / va;
    worst = std::max(worst, rel);
    if (!v.valid || 1 - v.one_form_margin > 0.7 || rel > 1e-6) o.pass = false;
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  o.pass = o.pass && secs < 60;
  o.detail = fmt("10 Randers specs, max |b|_a %.3f, max relative volume difference %.2e, %.1f s", max_b, worst, secs);
  return o;
}

// 4 ---------------------------------------------------------------------------

Outcome zoll_pair() {
  Outcome o;
  ZollOptions z;
  z.n_geodesics = 50;
  const MetricPtr round = build_metric(spec_file("round_sphere.spec"));
  const MetricPtr df = build_metric(spec_file("round_plus_df.spec"));
  const ZollReport a = zoll_scan(*round, z), b = zoll_scan(*df, z);
  note_drift(a.max_energy_drift, z.flow.tol);
  note_drift(b.max_energy_drift, z.flow.tol);
  const double dl = std::abs(a.median_length - b.median_length);
  const double va = ht_volume(*round, Region::sphere()).ht_volume, vb = ht_volume(*df, Region::sphere()).ht_volume;
  const double dv = std::abs(va - vb) / va;
  o.pass = a.zoll && b.zoll && a.spread <= 1e-4 && b.spread <= 1e-4 && dl <= 1e-4 && dv <= 1e-3;
  o.detail = fmt("closed %.0f+%.0f/100, spreads %.1e / %.1e, ", a.closed_count, b.closed_count, a.spread, b.spread) +
             fmt("median lengths differ by %.1e, volumes by %.1e (relative)", dl, dv);
  return o;
}

// 5 ---------------------------------------------------------------------------

Outcome round_trip() {
  Outcome o;
  std::string parts;
  for (const char* name : {"round_plus_df.spec", "round_plus_df_quadratic.spec", "round_plus_df_exp.spec"}) {
    const auto t0 = std::chrono::steady_clock::now();
    const TheoremReport r = verify_theorem(spec_file(name));
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (r.zoll) note_drift(r.zoll->max_energy_drift, 1e-9);
    if (r.zoll_symmetrized) note_drift(r.zoll_symmetrized->max_energy_drift, 1e-9);
    note_drift(r.reversibility.max_energy_drift, 1e-9);
    bool all = r.verdict == TheoremVerdict::Pass;
    for (const auto& s : r.stages) all = all && s.status == StageStatus::Pass;
    const double err = r.roundtrip_error.value_or(INFINITY);
    if (!all || !(err <= 1e-4) || secs >= 300) o.pass = false;
    parts += std::string(parts.empty() ? "" : "; ") + r.metric + " " + std::string(verdict_name(r.verdict)) +
             fmt(" err %.1e %.0f s", err, secs);
  }
  o.detail = parts;
  return o;
}

// 6 ---------------------------------------------------------------------------

Outcome crampin() {
  Outcome o;
  VerifyConfig cfg;
  const TheoremReport r = verify_theorem(spec_file("crampin.spec"), cfg);
  note_drift(r.reversibility.max_energy_drift, cfg.zoll.flow.tol);
  const StageResult& rev = r.stages[1];
  o.pass = rev.status == StageStatus::Fail && rev.value > 1e-2 && std::abs(r.curl - 0.6) <= 1e-3;
  o.detail = fmt("reversibility residual %.3f, ", rev.value) + "stage " + std::string(status_name(rev.status)) +
             fmt(", curl residual %.6f", r.curl);
  return o;
}

// 7 ---------------------------------------------------------------------------

Outcome projective() {
  Outcome o;
  const MetricPtr funk = build_metric(spec_file("funk_disc.spec"));
  const MetricPtr hilbert = build_metric(spec_file("hilbert_disc.spec"));
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0, 1);
  double straight_f = 0, straight_h = 0, rev_f = 0;
  for (int i = 0; i < 100; ++i) {
    const double r = 0.7 * std::sqrt(u(rng)), t = kTwoPi * u(rng), th = kTwoPi * u(rng);
    const ChartPoint x{Chart::Plane, {r * std::cos(t), r * std::sin(t)}};
    const FiberVector v = unit_direction(th);
    const FlowOptions fo;
    const GeodesicTrace gf = integrate_geodesic(*funk, x, v, 1.0, fo);
    const GeodesicTrace gh = integrate_geodesic(*hilbert, x, v, 1.0, fo);
    note_drift(gf.energy_drift, fo.tol);
    note_drift(gh.energy_drift, fo.tol);
    straight_f = std::max(straight_f, straightness_residual(gf));
    straight_h = std::max(straight_h, straightness_residual(gh));
    rev_f = std::max(rev_f, reversibility_residual(*funk, gf, fo));
  }
  // Directions nearly perpendicular to x have F(v) ~ F(-v); sample |cos| >= 0.1.
  const ChartPoint x{Chart::Plane, {0.5, 0}};
  double min_gap = 1e300;
  int samples = 0;
  while (samples < 100) {
    const FiberVector v = unit_direction(kTwoPi * u(rng));
    if (std::abs(v.x1) < 0.1) continue;
    min_gap = std::min(min_gap, std::abs((*funk)(x, v) - (*funk)(x, -v)));
    ++samples;
  }
  o.pass = straight_f <= 1e-5 && straight_h <= 1e-5 && rev_f <= 1e-4 && min_gap > 0.1;
  o.detail = fmt("straightness Funk %.1e Hilbert %.1e, Funk reversibility %.1e, min |F(v)-F(-v)| %.3f", straight_f,
                 straight_h, rev_f, min_gap);
  return o;
}

// 8 ---------------------------------------------------------------------------

Outcome hygiene() {
  Outcome o;
  double bidual = 0, routes = 0;
  int metrics = 0;
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(FINSLER_SPEC_DIR)) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  for (const auto& path : files) {
    const MetricSpec s = load_metric_spec(path.string());
    const MetricPtr m = build_metric(s);
    ++metrics;
    std::mt19937_64 rng(8);
    for (int i = 0; i < 6; ++i) {
      const ChartPoint x = random_base_point(*m, s.effective_region(), rng);
      const AsymNorm F = m->fiber(x);
      const AsymNorm H = numeric_dual_norm(F);
      for (int k = 0; k < 4; ++k) {
        const FiberVector v = unit_direction(kTwoPi * (k + 0.3 * i) / 4);
        bidual = std::max(bidual, std::abs(dual_norm(H, FiberCovector{v.x1, v.x2}) - F(v)) / F(v));
      }
      const double support = body_area(support_body_of(F));
      const double radial = fiber_dual_area(*m, x);
      routes = std::max(routes, std::abs(support - radial) / support);
    }
  }
  o.pass = g_traces > 0 && g_worst_drift_ratio <= 10 && bidual <= 1e-6 && routes <= 1e-6;
  o.detail = fmt("max drift/tol %.2f over %.0f traces, biduality %.1e, area routes %.1e ", g_worst_drift_ratio, g_traces,
                 bidual, routes) +
             fmt("(%.0f catalog metrics)", metrics);
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
  };
  const Criterion criteria[] = {
      {"riemannian HT volume", riemannian_volume},
      {"Brunn-Minkowski monotonicity", brunn_minkowski},
      {"Randers translate equality", randers_translates},
      {"Zoll pair lengths and volumes", zoll_pair},
      {"round-trip decomposition", round_trip},
      {"Crampin negative control", crampin},
      {"Funk/Hilbert projectivity", projective},
      {"numerical hygiene", hygiene},
  };
  int failures = 0;
  int index = 0;
  for (const Criterion& c : criteria) {
    ++index;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out.pass = false;
      out.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("criterion %d %-30s %s  %s [%.1f s]\n", index, c.name, out.pass ? "PASS" : "FAIL", out.detail.c_str(),
                secs);
    std::fflush(stdout);
    failures += out.pass ? 0 : 1;
  }
  return failures == 0 ? 0 : 1;
}
