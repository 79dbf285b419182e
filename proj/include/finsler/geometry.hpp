#pragma once

// Two-dimensional value types and the chart atlas for the plane and S^2.
//
// S^2 is covered by two stereographic charts glued by inversion y = x/|x|^2:
//   NORTH: x = (X, Y)/(1 + Z)   (origin at the north pole)
//   SOUTH: y = (X, Y)/(1 - Z)   (origin at the south pole)

#include <array>
#include <cmath>
#include <numbers>
#include <string_view>

#include "finsler/error.hpp"

namespace finsler {

template <class Tag>
struct Vec2 {
  double x1 = 0.0;
  double x2 = 0.0;

  constexpr Vec2() = default;
  constexpr Vec2(double a, double b) : x1(a), x2(b) {}

  constexpr double operator[](int i) const { return i == 0 ? x1 : x2; }
  constexpr double& operator[](int i) { return i == 0 ? x1 : x2; }

  constexpr Vec2 operator-() const { return {-x1, -x2}; }
  constexpr Vec2& operator+=(Vec2 o) { x1 += o.x1; x2 += o.x2; return *this; }
  constexpr Vec2& operator-=(Vec2 o) { x1 -= o.x1; x2 -= o.x2; return *this; }
  constexpr Vec2& operator*=(double s) { x1 *= s; x2 *= s; return *this; }

  friend constexpr Vec2 operator+(Vec2 a, Vec2 b) { return a += b; }
  friend constexpr Vec2 operator-(Vec2 a, Vec2 b) { return a -= b; }
  friend constexpr Vec2 operator*(double s, Vec2 a) { return a *= s; }
  friend constexpr Vec2 operator*(Vec2 a, double s) { return a *= s; }
  friend constexpr Vec2 operator/(Vec2 a, double s) { return a *= (1.0 / s); }
  friend constexpr bool operator==(Vec2 a, Vec2 b) = default;

  double norm() const { return std::hypot(x1, x2); }
  constexpr double norm2() const { return x1 * x1 + x2 * x2; }
  bool finite() const { return std::isfinite(x1) && std::isfinite(x2); }
};

template <class Tag>
constexpr double dot(Vec2<Tag> a, Vec2<Tag> b) {
  return a.x1 * b.x1 + a.x2 * b.x2;
}

struct TangentTag;
struct CotangentTag;
struct CoordTag;

using FiberVector = Vec2<TangentTag>;
using FiberCovector = Vec2<CotangentTag>;
using Coord = Vec2<CoordTag>;

/// Natural pairing of a covector with a tangent vector.
constexpr double pair(FiberCovector p, FiberVector v) { return p.x1 * v.x1 + p.x2 * v.x2; }

inline FiberVector unit_direction(double theta) { return {std::cos(theta), std::sin(theta)}; }
inline FiberCovector unit_codirection(double theta) { return {std::cos(theta), std::sin(theta)}; }

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

enum class Chart { Plane, North, South };
enum class Atlas { Plane, Sphere };

constexpr std::string_view chart_name(Chart c) {
  switch (c) {
    case Chart::Plane: return "plane";
    case Chart::North: return "north";
    case Chart::South: return "south";
  }
  return "?";
}

constexpr Chart other_chart(Chart c) {
  return c == Chart::North ? Chart::South : c == Chart::South ? Chart::North : Chart::Plane;
}

struct ChartPoint {
  Chart chart = Chart::Plane;
  Coord x;
};

/// Charts switch when |x| exceeds this radius.
inline constexpr double kSwitchRadius = 1.5;

struct Mat2 {
  double a11 = 1, a12 = 0, a21 = 0, a22 = 1;

  FiberVector apply(FiberVector v) const {
    return {a11 * v.x1 + a12 * v.x2, a21 * v.x1 + a22 * v.x2};
  }
  FiberCovector apply_transpose(FiberCovector p) const {
    return {a11 * p.x1 + a21 * p.x2, a12 * p.x1 + a22 * p.x2};
  }
};

/// Jacobian of the inversion x -> x/|x|^2 at x (symmetric).
inline Mat2 inversion_jacobian(Coord x) {
  const double r2 = x.norm2();
  const double r4 = r2 * r2;
  const double d11 = (r2 - 2 * x.x1 * x.x1) / r4;
  const double d12 = -2 * x.x1 * x.x2 / r4;
  const double d22 = (r2 - 2 * x.x2 * x.x2) / r4;
  return {d11, d12, d12, d22};
}

struct ChartTransition {
  ChartPoint y;
  Mat2 tangent;    ///< pushes tangent vectors at x to tangent vectors at y
  Mat2 cotangent;  ///< apply_transpose pushes covectors at x to covectors at y
};

/// Transition between the two sphere charts. Tangent vectors go through the
/// Jacobian of the inversion at x, covectors through its inverse transpose
/// (which is the inversion Jacobian at y).
inline ChartTransition chart_transition(const ChartPoint& p) {
  if (p.chart == Chart::Plane) throw DomainError("chart_transition: planar chart has no transition");
  const double r2 = p.x.norm2();
  if (!(r2 > 0.0)) throw DomainError("chart_transition: undefined at the chart origin");
  ChartTransition t;
  t.y = {other_chart(p.chart), p.x / r2};
  t.tangent = inversion_jacobian(p.x);
  t.cotangent = inversion_jacobian(t.y.x);
  return t;
}

inline FiberVector push_vector(const ChartTransition& t, FiberVector v) { return t.tangent.apply(v); }
inline FiberCovector push_covector(const ChartTransition& t, FiberCovector p) {
  return t.cotangent.apply_transpose(p);
}

/// Expresses a sphere point in the requested chart (identity if already there).
inline ChartPoint to_chart(const ChartPoint& p, Chart target) {
  if (p.chart == target) return p;
  return chart_transition(p).y;
}

/// Point on the unit sphere (or the plane point lifted as (x1, x2, 0)).
inline std::array<double, 3> ambient(const ChartPoint& p) {
  const double r2 = p.x.norm2();
  switch (p.chart) {
    case Chart::Plane: return {p.x.x1, p.x.x2, 0.0};
    case Chart::North: return {2 * p.x.x1 / (1 + r2), 2 * p.x.x2 / (1 + r2), (1 - r2) / (1 + r2)};
    case Chart::South: return {2 * p.x.x1 / (1 + r2), 2 * p.x.x2 / (1 + r2), (r2 - 1) / (1 + r2)};
  }
  return {};
}

/// Chart point for an ambient unit vector, picking the chart in which |x| <= 1.
inline ChartPoint from_ambient(const std::array<double, 3>& P) {
  if (P[2] >= 0.0) return {Chart::North, {P[0] / (1 + P[2]), P[1] / (1 + P[2])}};
  return {Chart::South, {P[0] / (1 - P[2]), P[1] / (1 - P[2])}};
}

/// The antipodal map sends NORTH x to SOUTH -x (and back); its differential is -id.
inline ChartPoint antipode(const ChartPoint& p) {
  if (p.chart == Chart::Plane) throw DomainError("antipode: planar chart");
  return {other_chart(p.chart), -p.x};
}

inline double distance3(const std::array<double, 3>& a, const std::array<double, 3>& b) {
  return std::sqrt((a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]) +
                   (a[2] - b[2]) * (a[2] - b[2]));
}

}  // namespace finsler
