#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "finsler/error.hpp"
#include "finsler/expr.hpp"

using namespace finsler;

namespace {

double eval_plane(const Expr& e, double x1, double x2) { return e.eval(plane_jet_bindings(x1, x2)).v; }

}  // namespace

TEST(Expr, PrecedenceAndAssociativity) {
  EXPECT_DOUBLE_EQ(Expr::parse("1 + 2*3", kPlaneVars)(0.0), 7.0);
  EXPECT_DOUBLE_EQ(Expr::parse("2^3^2", kPlaneVars)(0.0), 512.0);
  EXPECT_DOUBLE_EQ(Expr::parse("-2^2", kPlaneVars)(0.0), -4.0);
  EXPECT_DOUBLE_EQ(Expr::parse("8/4/2", kPlaneVars)(0.0), 1.0);
  EXPECT_DOUBLE_EQ(Expr::parse("(1 + 2)*3", kPlaneVars)(0.0), 9.0);
  EXPECT_DOUBLE_EQ(Expr::parse("1e-2 * 100", kPlaneVars)(0.0), 1.0);
  EXPECT_NEAR(Expr::parse("cos(pi)", kPlaneVars)(0.0), -1.0, 1e-15);
}

TEST(Expr, VariablesAreScopedToTheirContext) {
  EXPECT_NO_THROW(Expr::parse("x1*x2 + r2", kPlaneVars));
  EXPECT_THROW(Expr::parse("X + 1", kPlaneVars), ConfigError);
  EXPECT_THROW(Expr::parse("x1", kSphereVars), ConfigError);
  EXPECT_THROW(Expr::parse("theta", kPlaneVars), ConfigError);
  EXPECT_NO_THROW(Expr::parse("1 + 0.1*cos(3*theta)", kAngleVars));
}

TEST(Expr, SyntaxErrorsCarryTheLine) {
  try {
    Expr::parse("1 + * 2", kPlaneVars, 7);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.line, 7);
    EXPECT_NE(std::string(e.what()).find("line 7"), std::string::npos);
  }
  EXPECT_THROW(Expr::parse("sin x1", kPlaneVars), ConfigError);
  EXPECT_THROW(Expr::parse("foo(1)", kPlaneVars), ConfigError);
  EXPECT_THROW(Expr::parse("(1 + 2", kPlaneVars), ConfigError);
  EXPECT_THROW(Expr::parse("1..2", kPlaneVars), ConfigError);
  EXPECT_THROW(Expr::parse("", kPlaneVars), ConfigError);
}

TEST(Expr, JetDerivativesMatchFiniteDifferences) {
  const Expr e = Expr::parse("exp(0.3*x1)*sin(x2) + sqrt(1 + r2) - log(2 + x1*x2) + x1^3/(1 + x2^2)", kPlaneVars);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-0.8, 0.8);
  for (int i = 0; i < 50; ++i) {
    const double a = u(rng), b = u(rng);
    const Jet2 j = e.eval(plane_jet_bindings(a, b));
    const double h = 1e-4;
    const double g1 = (eval_plane(e, a + h, b) - eval_plane(e, a - h, b)) / (2 * h);
    const double g2 = (eval_plane(e, a, b + h) - eval_plane(e, a, b - h)) / (2 * h);
    const double h11 = (eval_plane(e, a + h, b) - 2 * j.v + eval_plane(e, a - h, b)) / (h * h);
    const double h22 = (eval_plane(e, a, b + h) - 2 * j.v + eval_plane(e, a, b - h)) / (h * h);
    const double h12 = (eval_plane(e, a + h, b + h) - eval_plane(e, a + h, b - h) - eval_plane(e, a - h, b + h) +
                        eval_plane(e, a - h, b - h)) / (4 * h * h);
    EXPECT_NEAR(j.g1, g1, 1e-7);
    EXPECT_NEAR(j.g2, g2, 1e-7);
    EXPECT_NEAR(j.h11, h11, 1e-5);
    EXPECT_NEAR(j.h12, h12, 1e-5);
    EXPECT_NEAR(j.h22, h22, 1e-5);
  }
}

TEST(Expr, SphereBindingsAgreeAcrossCharts) {
  const Expr e = Expr::parse("X*Y + exp(Z)", kSphereVars);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.2, 1.2);
  for (int i = 0; i < 50; ++i) {
    const double a = u(rng), b = u(rng);
    const double r2 = a * a + b * b;
    const double north = e.eval(sphere_jet_bindings(a, b, false)).v;
    const double south = e.eval(sphere_jet_bindings(a / r2, b / r2, true)).v;
    EXPECT_NEAR(north, south, 1e-13);
  }
}
