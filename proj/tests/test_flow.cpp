#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "finsler/flow.hpp"
#include "finsler/spec_format.hpp"
#include "oracles.hpp"

using namespace finsler;

namespace {

constexpr double kPi = std::numbers::pi;

MetricPtr metric(const std::string& name) {
  return build_metric(load_metric_spec(std::string(FINSLER_SPEC_DIR) + "/" + name));
}

}  // namespace

TEST(Integrate, EuclideanSegment) {
  const auto m = metric("euclidean_unit_square.spec");
  const GeodesicTrace t = integrate_geodesic(*m, {Chart::Plane, {0, 0}}, {1, 0}, 2.0);
  EXPECT_NEAR(t.samples.back().x.x.x1, 2.0, 1e-12);
  EXPECT_NEAR(t.samples.back().x.x.x2, 0.0, 1e-12);
  EXPECT_NEAR(t.samples.back().s, 2.0, 1e-14);
  EXPECT_NEAR(t.total_length, 2.0, 1e-9);
  EXPECT_LE(t.energy_drift, t.tol);
  EXPECT_LT(straightness_residual(t), 1e-10);
}

TEST(Integrate, InitialVectorIsNormalised) {
  const auto m = metric("round_sphere.spec");
  const GeodesicTrace a = integrate_geodesic(*m, {Chart::North, {0.2, 0.1}}, {3, 1}, 1.0);
  const GeodesicTrace b = integrate_geodesic(*m, {Chart::North, {0.2, 0.1}}, {0.3, 0.1}, 1.0);
  EXPECT_NEAR((a.samples.back().x.x - b.samples.back().x.x).norm(), 0.0, 1e-12);
}

TEST(Integrate, RoundGreatCircleMatchesAnalyticCurve) {
  const auto m = metric("round_sphere.spec");
  const double ux = 0.6, uy = 0.8;
  const GeodesicTrace t = integrate_geodesic(*m, {Chart::North, {0, 0}}, {ux, uy}, 2 * kPi);
  for (const TraceSample& s : t.samples) {
    if (s.x.chart != Chart::North || s.s > 2.5) continue;
    const auto ref = oracle::great_circle_chart(ux, uy, s.s);
    EXPECT_NEAR(s.x.x.x1, ref[0], 1e-8);
    EXPECT_NEAR(s.x.x.x2, ref[1], 1e-8);
  }
  const TraceSample& end = t.samples.back();
  EXPECT_EQ(end.x.chart, Chart::North);
  EXPECT_NEAR(end.x.x.norm(), 0.0, 1e-8);
  EXPECT_NEAR(t.total_length, 2 * kPi, 1e-8);
  EXPECT_GE(t.chart_switches, 2);
  EXPECT_LE(t.energy_drift, 10 * t.tol);
}

TEST(Integrate, Rk4FallbackAgrees) {
  const auto m = metric("round_plus_df.spec");
  FlowOptions rk;
  rk.method = Integrator::RungeKutta4;
  rk.fixed_step = 0.005;
  const GeodesicTrace a = integrate_geodesic(*m, {Chart::North, {0.3, -0.2}}, {1, 0.5}, 3.0);
  const GeodesicTrace b = integrate_geodesic(*m, {Chart::North, {0.3, -0.2}}, {1, 0.5}, 3.0, rk);
  EXPECT_LT(distance3(ambient(a.samples.back().x), ambient(b.samples.back().x)), 1e-7);
}

TEST(Integrate, FunkChordIsStraight) {
  const auto m = metric("funk_disc.spec");
  const GeodesicTrace t = integrate_geodesic(*m, {Chart::Plane, {-0.5, 0}}, {1, 0.2}, 1.0);
  EXPECT_LE(straightness_residual(t), 1e-6);
  EXPECT_LE(reversibility_residual(*m, t), 1e-6);
}

TEST(Integrate, HilbertChordIsStraight) {
  const auto m = metric("hilbert_disc.spec");
  const GeodesicTrace t = integrate_geodesic(*m, {Chart::Plane, {-0.3, 0.2}}, {1, -0.4}, 1.0);
  EXPECT_LE(straightness_residual(t), 1e-6);
}

TEST(Integrate, FunkRayApproachesBoundaryExponentially) {
  // Along a radius F = |v|/(1 - r), so unit speed gives r(s) = 1 - exp(-s).
  const auto m = metric("funk_disc.spec");
  const GeodesicTrace t = integrate_geodesic(*m, {Chart::Plane, {0, 0}}, {-1, 0}, 8.0);
  for (const TraceSample& a : t.samples) EXPECT_NEAR(a.x.x.x1, std::expm1(-a.s), 1e-8);
  EXPECT_FALSE(t.domain_exit);
}

TEST(Integrate, LongFunkRayStaysInside) {
  const auto m = metric("funk_disc.spec");
  const GeodesicTrace t = integrate_geodesic(*m, {Chart::Plane, {0.2, 0.1}}, {1, 1}, 40.0);
  for (const TraceSample& a : t.samples) EXPECT_TRUE(m->contains(a.x));
  if (t.domain_exit) {
    EXPECT_FALSE(t.exit_reason.empty());
  }
}

TEST(Integrate, ConfigErrors) {
  const auto m = metric("round_sphere.spec");
  FlowOptions o;
  o.tol = 1e-3;
  EXPECT_THROW(integrate_geodesic(*m, {Chart::North, {0, 0}}, {1, 0}, 1.0, o), ConfigError);
  EXPECT_THROW(integrate_geodesic(*m, {Chart::North, {0, 0}}, {1, 0}, -1.0), ConfigError);
  EXPECT_THROW(integrate_geodesic(*m, {Chart::Plane, {0, 0}}, {1, 0}, 1.0), DomainError);
  EXPECT_THROW(integrate_geodesic(*m, {Chart::North, {0, 0}}, {0, 0}, 1.0), DomainError);
}

TEST(Closure, RoundGreatCircle) {
  const auto m = metric("round_sphere.spec");
  const GeodesicTrace t = integrate_geodesic(*m, {Chart::North, {0.1, 0.4}}, {0.3, -1}, 7.0);
  const ClosureReport c = detect_closure(t);
  ASSERT_TRUE(c.closed);
  EXPECT_NEAR(*c.length, 2 * kPi, 1e-6);
}

TEST(Closure, EuclideanLineDoesNotClose) {
  const auto m = metric("euclidean_unit_square.spec");
  const ClosureReport c = detect_closure(integrate_geodesic(*m, {Chart::Plane, {0, 0}}, {1, 1}, 5.0));
  EXPECT_FALSE(c.closed);
  EXPECT_FALSE(c.length.has_value());
}

TEST(Closure, RoundPlusExactFormKeepsLength) {
  const auto m = metric("round_plus_df.spec");
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int i = 0; i < 5; ++i) {
    const GeodesicTrace t = integrate_geodesic(*m, {Chart::North, {u(rng), u(rng)}}, {u(rng), u(rng)}, 8.0);
    const ClosureReport c = detect_closure(t);
    ASSERT_TRUE(c.closed);
    EXPECT_NEAR(*c.length, 2 * kPi, 1e-5);
  }
}

TEST(Zoll, RoundSphere) {
  ZollOptions o;
  const ZollReport r = zoll_scan(*metric("round_sphere.spec"), o);
  EXPECT_TRUE(r.zoll);
  EXPECT_EQ(r.verdict, ZollVerdict::Zoll);
  EXPECT_EQ(r.closed_count, 50);
  EXPECT_LE(r.spread, 1e-5);
  EXPECT_NEAR(r.median_length, 2 * kPi, 1e-6);
}

TEST(Zoll, RoundPlusDf) {
  const ZollReport r = zoll_scan(*metric("round_plus_df.spec"));
  EXPECT_TRUE(r.zoll);
  EXPECT_LE(r.spread, 1e-4);
  EXPECT_NEAR(r.median_length, 2 * kPi, 1e-5);
}

TEST(Zoll, PerturbedSphereIsNotZoll) {
  ZollOptions o;
  o.n_geodesics = 20;
  const ZollReport r = zoll_scan(*metric("perturbed_sphere.spec"), o);
  EXPECT_FALSE(r.zoll);
  EXPECT_EQ(r.verdict, ZollVerdict::NotZoll);
  EXPECT_LT(r.closed_count, 20);
}

TEST(Zoll, DeterministicAcrossThreadCounts) {
  ZollOptions a, b;
  a.n_geodesics = b.n_geodesics = 8;
  a.seed = b.seed = 42;
  a.threads = 1;
  b.threads = 4;
  const auto m = metric("round_plus_df_quadratic.spec");
  const ZollReport ra = zoll_scan(*m, a), rb = zoll_scan(*m, b);
  ASSERT_EQ(ra.geodesics.size(), rb.geodesics.size());
  for (std::size_t i = 0; i < ra.geodesics.size(); ++i) {
    EXPECT_EQ(ra.geodesics[i].closure.length, rb.geodesics[i].closure.length);
    EXPECT_EQ(ra.geodesics[i].launch.x0.x, rb.geodesics[i].launch.x0.x);
  }
  EXPECT_THROW(zoll_scan(*metric("funk_disc.spec")), ConfigError);
}

TEST(Launches, SeedChangesPoints) {
  const auto m = metric("round_sphere.spec");
  const auto a = quasi_random_launches(*m, Region::sphere(), 10, 1);
  const auto b = quasi_random_launches(*m, Region::sphere(), 10, 2);
  const auto c = quasi_random_launches(*m, Region::sphere(), 10, 1);
  EXPECT_NE(a[3].x0.x, b[3].x0.x);
  EXPECT_EQ(a[3].x0.x, c[3].x0.x);
}

TEST(Reversibility, EuclideanAndCrampin) {
  const auto e = metric("euclidean_unit_square.spec");
  EXPECT_LE(reversibility_residual(*e, integrate_geodesic(*e, {Chart::Plane, {0.1, 0.2}}, {1, 0.3}, 2.0)), 1e-9);
  const auto c = metric("crampin.spec");
  EXPECT_GT(reversibility_residual(*c, integrate_geodesic(*c, {Chart::Plane, {0.1, 0.2}}, {1, 0.3}, 2.0)), 1e-2);
}

TEST(Reversibility, RoundPlusDfIsGeodesicallyReversible) {
  const auto m = metric("round_plus_df_exp.spec");
  const GeodesicTrace t = integrate_geodesic(*m, {Chart::North, {0.5, 0.5}}, {-1, 0.2}, 2.0);
  EXPECT_LE(reversibility_residual(*m, t), 1e-6);
}

TEST(Straightness, NeedsThreeSamples) {
  GeodesicTrace t;
  t.samples.resize(2);
  EXPECT_THROW(straightness_residual(t), DomainError);
}

TEST(Property, EnergyDriftBoundedByTolerance) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1, 1);
  for (const char* name : {"round_plus_df_quadratic.spec", "perturbed_sphere.spec", "randers.spec", "minkowski_cos3.spec"}) {
    const auto m = metric(name);
    for (const double tol : {1e-7, 1e-9}) {
      FlowOptions o;
      o.tol = tol;
      const ChartPoint x{m->atlas() == Atlas::Sphere ? Chart::North : Chart::Plane, {0.3 * u(rng), 0.3 * u(rng)}};
      const GeodesicTrace t = integrate_geodesic(*m, x, {u(rng), u(rng)}, 4.0, o);
      EXPECT_LE(t.energy_drift, 10 * tol) << name;
    }
  }
}

TEST(Property, MinkowskiGeodesicsAreStraight) {
  const auto m = metric("minkowski_cos3.spec");
  for (int k = 0; k < 8; ++k) {
    const GeodesicTrace t = integrate_geodesic(*m, {Chart::Plane, {0.5, 0.5}}, unit_direction(0.7 * k), 1.0);
    EXPECT_LE(straightness_residual(t), 1e-9);
  }
}

TEST(Output, TraceCsvHasHeaderAndRows) {
  const auto m = metric("round_sphere.spec");
  const GeodesicTrace t = integrate_geodesic(*m, {Chart::North, {0, 0}}, {1, 0}, 1.0);
  std::ostringstream out;
  write_trace_csv(out, t);
  const std::string s = out.str();
  EXPECT_EQ(s.rfind("s,", 0), 0u);
  EXPECT_EQ(static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')), t.samples.size() + 1);
}
