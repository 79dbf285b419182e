#include <gtest/gtest.h>

#include <filesystem>
#include <string>

#include "finsler/spec_format.hpp"

using namespace finsler;

namespace {

int error_line(const std::string& text) {
  try {
    parse_metric_spec(text);
  } catch (const ConfigError& e) {
    return e.line;
  }
  return -1;
}

}  // namespace

TEST(SpecFormat, OneLineRanders) {
  const MetricSpec s = parse_metric_spec("[metric] kind=randers; a=conformal(4/(1+r2)^2); b=grad(0.2*x1*x2)");
  EXPECT_EQ(s.kind, MetricKind::Randers);
  EXPECT_EQ(s.atlas, Atlas::Plane);
  EXPECT_EQ(s.a.type, TensorFieldDef::Type::Conformal);
  EXPECT_EQ(s.b.type, OneFormDef::Type::Gradient);
  EXPECT_EQ(s.b.potential.source(), "0.2*x1*x2");
}

TEST(SpecFormat, NestedBaseAndInheritedAtlas) {
  const MetricSpec s = parse_metric_spec(
      "# comment\n[metric]\nkind = plus_one_form\nbeta = grad(0.1*X)  # trailing\n\n[base]\nkind = sphere_round\n");
  EXPECT_EQ(s.kind, MetricKind::PlusOneForm);
  ASSERT_TRUE(s.base);
  EXPECT_EQ(s.base->kind, MetricKind::SphereRound);
  EXPECT_EQ(s.atlas, Atlas::Sphere);
  EXPECT_EQ(s.effective_region().type, Region::Type::Sphere);

  const MetricSpec t = parse_metric_spec(
      "[metric]\nkind=plus_one_form\nbeta=form(0.1, 0)\n[base]\nkind=plus_one_form\nbeta=grad(x1)\n"
      "[base.base]\nkind=euclidean\n");
  ASSERT_TRUE(t.base && t.base->base);
  EXPECT_EQ(t.base->base->kind, MetricKind::Euclidean);
}

TEST(SpecFormat, RegionsAndDomains) {
  const MetricSpec s = parse_metric_spec("[metric]\nkind=minkowski\nh=1+0.1*cos(3*theta)\nregion=rect(0, 1, 0, 2*0.5)");
  ASSERT_TRUE(s.region);
  EXPECT_DOUBLE_EQ(s.region->y1, 1.0);
  const MetricSpec f = parse_metric_spec("[metric]\nkind=funk\ndomain=support(1 + 0.05*cos(2*theta))");
  EXPECT_EQ(f.domain.type, DomainDef::Type::Support);
  const MetricSpec d = parse_metric_spec("[metric]\nkind=hilbert\ndomain=disc(0.1, -0.2, 2)");
  EXPECT_DOUBLE_EQ(d.domain.r, 2.0);
  const MetricSpec r = parse_metric_spec("[metric]\nkind=riemannian\natlas=sphere\na=round(1 + 0.3*X^2)");
  EXPECT_EQ(r.atlas, Atlas::Sphere);
}

TEST(SpecFormat, ErrorsNameTheLine) {
  EXPECT_EQ(error_line("[metric]\nkind = banana\n"), 2);
  EXPECT_EQ(error_line("[metric]\nkind = euclidean\ncolour = red\n"), 3);
  EXPECT_EQ(error_line("[metric]\nkind = euclidean\nkind = euclidean\n"), 3);
  EXPECT_EQ(error_line("kind = euclidean\n"), 1);
  EXPECT_EQ(error_line("[metric]\nkind = riemannian\na = conformal(1 +)\n"), 3);
  EXPECT_EQ(error_line("[metric]\nkind = funk\ndomain = disc(0, 0, -1)\n"), 3);
  EXPECT_EQ(error_line("[metric]\nkind = euclidean\nregion = rect(1, 0, 0, 1)\n"), 3);
  EXPECT_EQ(error_line("[metric]\nkind = euclidean\n[extra]\nkind = euclidean\n"), 3);
  EXPECT_EQ(error_line("[metric]\nkind = euclidean\n[base]\nkind = euclidean\n"), 4);
  EXPECT_EQ(error_line("[metric]\nkind = plus_one_form\nbeta = form(x1, x2)\n[base]\nkind = sphere_round\n"), 3);
  EXPECT_EQ(error_line("[metric]\nkind = sphere_round\natlas = plane\n"), 3);
  EXPECT_EQ(error_line("[metric]\nkind = euclidean\nantipodal = true\n"), 3);
  EXPECT_GE(error_line("[metric]\nkind = plus_one_form\nbeta = grad(x1)\n"), 0);
  EXPECT_GE(error_line("[metric]\nkind = riemannian\n"), 0);
}

TEST(SpecFormat, SphereExpressionsUseAmbientCoordinates) {
  EXPECT_THROW(parse_metric_spec("[metric]\nkind=plus_one_form\nbeta=grad(x1)\n[base]\nkind=sphere_round"), ConfigError);
  EXPECT_THROW(parse_metric_spec("[metric]\nkind=randers\na=euclidean\nb=grad(X)"), ConfigError);
}

TEST(SpecFormat, LoadsEveryCatalogFile) {
  int n = 0;
  for (const auto& e : std::filesystem::directory_iterator(FINSLER_SPEC_DIR)) {
    EXPECT_NO_THROW(load_metric_spec(e.path().string())) << e.path();
    ++n;
  }
  EXPECT_GE(n, 10);
  EXPECT_THROW(load_metric_spec(std::string(FINSLER_SPEC_DIR) + "/missing.spec"), Error);
}
