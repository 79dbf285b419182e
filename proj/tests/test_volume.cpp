#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "finsler/spec_format.hpp"
#include "finsler/volume.hpp"
#include "oracles.hpp"

using namespace finsler;

namespace {

constexpr double kPi = std::numbers::pi;

MetricSpec spec_file(const std::string& name) { return load_metric_spec(std::string(FINSLER_SPEC_DIR) + "/" + name); }

}  // namespace

TEST(Gauss, IntegratesPolynomialsExactly) {
  for (int n : {1, 2, 5, 8, 16}) {
    const GaussRule g = gauss_legendre(n);
    ASSERT_EQ(static_cast<int>(g.nodes.size()), n);
    for (int deg = 0; deg < 2 * n; ++deg) {
      double s = 0;
      for (std::size_t i = 0; i < g.nodes.size(); ++i) s += g.weights[i] * std::pow(g.nodes[i], deg);
      EXPECT_NEAR(s, deg % 2 ? 0.0 : 2.0 / (deg + 1), 1e-14) << n << " " << deg;
    }
    for (std::size_t i = 1; i < g.nodes.size(); ++i) EXPECT_LT(g.nodes[i - 1], g.nodes[i]);
  }
  EXPECT_THROW(gauss_legendre(0), ConfigError);
}

TEST(FiberArea, Examples) {
  EXPECT_NEAR(fiber_dual_area(spec_file("euclidean_unit_square.spec"), {Chart::Plane, {0.3, 0.7}}), kPi, 1e-13);
  EXPECT_NEAR(fiber_dual_area(spec_file("round_sphere.spec"), {Chart::North, {0, 0}}), 4 * kPi, 1e-12);
  const MetricSpec r = parse_metric_spec("[metric]\nkind=plus_one_form\nbeta=form(0.5, 0)\n[base]\nkind=euclidean");
  const double ref = body_area(support_body_of(norm_from_profile([](double t) { return 1 + 0.5 * std::cos(t); })));
  EXPECT_NEAR(fiber_dual_area(r, {Chart::Plane, {0.1, 0.1}}), ref, 1e-10);
  EXPECT_NEAR(ref, kPi, 1e-12);
  EXPECT_THROW(fiber_dual_area(r, {Chart::Plane, {0, 0}}, 128), ConfigError);
}

TEST(FiberArea, RoundConformalFactor) {
  // D* of 2|v|/(1+r^2) is a disc of radius 2/(1+r^2).
  const MetricSpec s = spec_file("round_sphere.spec");
  for (double r : {0.0, 0.5, 1.0, 1.4}) {
    const double rho = 2 / (1 + r * r);
    EXPECT_NEAR(fiber_dual_area(s, {Chart::South, {r, 0}}), kPi * rho * rho, 1e-12);
  }
}

TEST(FiberArea, HilbertMatchesHullOfKleinBody) {
  // D* of the Klein norm at x is the ellipse with support function F(x, .).
  const MetricSpec s = spec_file("hilbert_disc.spec");
  const double x1 = 0.4, x2 = -0.2;
  auto h = [&](double t) { return oracle::klein_norm(x1, x2, std::cos(t), std::sin(t)); };
  auto dh = [&](double t) { return (h(t + 1e-5) - h(t - 1e-5)) / 2e-5; };
  EXPECT_NEAR(fiber_dual_area(s, {Chart::Plane, {x1, x2}}), oracle::hull_area(h, dh, 200000), 1e-6);
}

TEST(Quadrature, SpherePartitionIntegratesArea) {
  // Weighted node sum of the round area density reproduces 4 pi.
  const auto nodes = base_quadrature(Region::sphere(), Atlas::Sphere, 16);
  double s = 0;
  for (const QuadNode& q : nodes) {
    const double r2 = q.x.x.norm2();
    s += q.w * 4 / ((1 + r2) * (1 + r2));
  }
  EXPECT_NEAR(s, 4 * kPi, 1e-6);
  EXPECT_THROW(base_quadrature(Region::sphere(), Atlas::Plane, 16), ConfigError);
  EXPECT_THROW(base_quadrature(Region::rect(0, 1, 0, 1), Atlas::Sphere, 16), ConfigError);
}

TEST(HtVolume, Examples) {
  const VolumeReport sq = ht_volume(spec_file("euclidean_unit_square.spec"));
  EXPECT_NEAR(sq.ht_volume, 1.0, 1e-9);
  EXPECT_NEAR(sq.euclidean_ball_constant, kPi, 0);
  const VolumeReport round = ht_volume(spec_file("round_sphere.spec"));
  EXPECT_NEAR(round.ht_volume, 4 * kPi, 4e-3 * kPi);
  EXPECT_LT(round.error_estimate, 1e-3);
  const VolumeReport df = ht_volume(spec_file("round_plus_df.spec"));
  EXPECT_NEAR(df.ht_volume, round.ht_volume, 1e-9);
}

TEST(HtVolume, FunkRegionMustBeInset) {
  const MetricSpec s = spec_file("funk_disc.spec");
  const MetricPtr m = build_metric(s);
  EXPECT_THROW(ht_volume(*m, Region::rect(-0.7, 0.7, -0.7, 0.7)), DomainError);
  EXPECT_THROW(ht_volume(*m, Region::rect(0, 0.97, -0.1, 0.1)), DomainError);
  EXPECT_NO_THROW(ht_volume(*m, Region::rect(-0.5, 0.5, -0.5, 0.5)));
}

TEST(HtVolume, HilbertFiberAreaHasClosedForm) {
  // Area of the Klein ellipse: pi / (1 - r^2)^(3/2); integrate over a square.
  VolumeOptions o;
  o.n_base = 12;
  const VolumeReport v = ht_volume(*build_metric(spec_file("hilbert_disc.spec")), Region::rect(-0.4, 0.4, -0.4, 0.4), o);
  const double ref = oracle::simpson([](double a) {
    return oracle::simpson([a](double b) { return std::pow(1 - a * a - b * b, -1.5); }, -0.4, 0.4, 400);
  }, -0.4, 0.4, 400);
  EXPECT_NEAR(v.ht_volume, ref, 1e-7 * ref);
}

TEST(BM, Examples) {
  const BMReport mink = bm_compare(spec_file("minkowski_cos3.spec"));
  EXPECT_EQ(mink.verdict, BMVerdict::Strict);
  EXPECT_NEAR(mink.vol_F, 0.96, 1e-9);
  EXPECT_NEAR(mink.vol_symF, 1.0, 1e-9);
  EXPECT_NEAR(mink.relative_gap, 0.04, 1e-9);

  const BMReport eu = bm_compare(spec_file("euclidean_unit_square.spec"));
  EXPECT_EQ(eu.verdict, BMVerdict::Equal);
  EXPECT_LE(std::abs(eu.relative_gap), 1e-12);

  const BMReport ra = bm_compare(spec_file("randers.spec"));
  EXPECT_EQ(ra.verdict, BMVerdict::Equal);
  for (double d : ra.deficit_field) EXPECT_NEAR(d, 0.0, 1e-9);
}

TEST(Property, SymmetrizationNeverDecreasesVolume) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-0.08, 0.08);
  VolumeOptions o;
  o.n_base = 4;
  o.n_fiber = 256;
  for (int i = 0; i < 6; ++i) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "[metric]\nkind=minkowski\nh=1 + %.4f*cos(3*theta) + %.4f*sin(2*theta) + %.4f*cos(theta)",
                  u(rng), u(rng), 4 * u(rng));
    const BMReport r = bm_compare(parse_metric_spec(buf), o);
    EXPECT_GE(r.relative_gap, -1e-12);
  }
}

TEST(Property, VolumeIsChartIndependent) {
  // Same rectangle expressed through a rotated Riemannian metric.
  const MetricSpec a = parse_metric_spec("[metric]\nkind=riemannian\na=matrix(2, 0.5, 1)\nregion=rect(0, 1, 0, 1)");
  const VolumeReport v = ht_volume(a);
  EXPECT_NEAR(v.ht_volume, std::sqrt(2 * 1 - 0.25), 1e-10);
}
