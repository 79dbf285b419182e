#pragma once

// Machine-readable reports (JSON, CSV) and static SVG figures. JSON objects
// are key-sorted and carry no timestamps, so equal inputs give equal bytes.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "finsler/decompose.hpp"
#include "finsler/flow.hpp"
#include "finsler/metrics.hpp"
#include "finsler/norms.hpp"
#include "finsler/volume.hpp"

namespace finsler {

using Json = nlohmann::json;

namespace detail {

/// Non-finite numbers become null.
inline Json num(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

inline Json point_json(const ChartPoint& x) {
  return Json{{"chart", chart_name(x.chart)}, {"x", {x.x.x1, x.x.x2}}};
}

inline Json region_json(const Region& r) {
  if (r.type == Region::Type::Sphere) return Json{{"type", "sphere"}};
  return Json{{"type", "rect"}, {"x0", r.x0}, {"x1", r.x1}, {"y0", r.y0}, {"y1", r.y1}};
}

inline Json grid_json(const Grid& g) {
  return Json{{"chart", chart_name(g.chart)}, {"x0", g.x0}, {"x1", g.x1}, {"y0", g.y0},
              {"y1", g.y1}, {"nx", g.nx}, {"ny", g.ny}};
}

}  // namespace detail

inline Json to_json(const ValidityReport& r) {
  return Json{{"valid", r.valid},
              {"homogeneity_residual", detail::num(r.homogeneity_residual)},
              {"positivity_margin", detail::num(r.positivity_margin)},
              {"convexity_margin", detail::num(r.convexity_margin)},
              {"convexity_margin_relative", detail::num(r.convexity_margin_relative)},
              {"worst_angle", detail::num(r.worst_angle)},
              {"reason", r.reason}};
}

inline Json to_json(const MetricValidity& r) {
  return Json{{"valid", r.valid},
              {"points", r.points},
              {"worst_convexity_margin", detail::num(r.worst_convexity_margin)},
              {"worst_homogeneity", detail::num(r.worst_homogeneity)},
              {"one_form_margin", detail::num(r.one_form_margin)},
              {"antipodal_residual", detail::num(r.antipodal_residual)},
              {"reason", r.reason}};
}

inline Json to_json(const ClosureReport& c) {
  return Json{{"closed", c.closed},
              {"length", c.length ? detail::num(*c.length) : Json(nullptr)},
              {"return_gap", detail::num(c.return_gap)}};
}

inline Json trace_summary(const GeodesicTrace& t) {
  return Json{{"samples", t.samples.size()},
              {"total_length", t.total_length},
              {"energy_drift", t.energy_drift},
              {"tolerance", t.tol},
              {"domain_exit", t.domain_exit},
              {"exit_reason", t.exit_reason},
              {"chart_switches", t.chart_switches},
              {"rejected_steps", t.rejected_steps},
              {"start", t.samples.empty() ? Json(nullptr) : detail::point_json(t.samples.front().x)},
              {"end", t.samples.empty() ? Json(nullptr) : detail::point_json(t.samples.back().x)}};
}

inline Json to_json(const ZollReport& z) {
  Json geos = Json::array();
  for (const ZollEntry& e : z.geodesics) {
    geos.push_back(Json{{"index", e.launch.index},
                        {"x0", detail::point_json(e.launch.x0)},
                        {"v0", {e.launch.v0.x1, e.launch.v0.x2}},
                        {"closure", to_json(e.closure)},
                        {"energy_drift", e.energy_drift},
                        {"failed", e.failed},
                        {"error", e.error}});
  }
  return Json{{"verdict", verdict_name(z.verdict)},
              {"zoll", z.zoll},
              {"closed_count", z.closed_count},
              {"n_geodesics", z.geodesics.size()},
              {"median_length", detail::num(z.median_length)},
              {"spread", detail::num(z.spread)},
              {"max_energy_drift", z.max_energy_drift},
              {"geodesics", geos}};
}

inline Json to_json(const VolumeReport& v) {
  return Json{{"ht_volume", v.ht_volume},
              {"error_estimate", v.error_estimate},
              {"quadrature",
               {{"region", detail::region_json(v.region)},
                {"n_base", v.n_base},
                {"n_fiber", v.n_fiber},
                {"nodes", v.nodes.size()},
                {"euclidean_ball_constant", v.euclidean_ball_constant}}},
              {"per_fiber_stats",
               {{"min", v.per_fiber_stats.min}, {"max", v.per_fiber_stats.max}, {"mean", v.per_fiber_stats.mean}}}};
}

inline Json to_json(const BMReport& b) {
  double dmin = 0, dmax = 0;
  if (!b.deficit_field.empty()) {
    dmin = *std::min_element(b.deficit_field.begin(), b.deficit_field.end());
    dmax = *std::max_element(b.deficit_field.begin(), b.deficit_field.end());
  }
  return Json{{"vol_F", b.vol_F},
              {"vol_symF", b.vol_symF},
              {"relative_gap", b.relative_gap},
              {"error_estimate", b.error_estimate},
              {"verdict", verdict_name(b.verdict)},
              {"nodes", b.nodes.size()},
              {"deficit", {{"min", dmin}, {"max", dmax}}}};
}

inline Json to_json(const StageResult& s) {
  return Json{{"name", s.name},
              {"status", status_name(s.status)},
              {"value", detail::num(s.value)},
              {"tolerance", detail::num(s.tolerance)},
              {"detail", s.detail}};
}

inline Json to_json(const TheoremReport& r) {
  Json stages = Json::array();
  for (const auto& s : r.stages) stages.push_back(to_json(s));
  Json grids = Json::array();
  for (std::size_t i = 0; i < r.beta.size(); ++i) {
    Json g{{"grid", detail::grid_json(r.beta[i].grid)},
           {"max_linearity_residual", r.beta[i].max_linearity_residual()}};
    if (i < r.potentials.size()) g["loop_residual"] = r.potentials[i].loop_residual;
    grids.push_back(g);
  }
  auto opt = [](const std::optional<double>& v) { return v ? detail::num(*v) : Json(nullptr); };
  return Json{{"metric", r.metric},
              {"verdict", verdict_name(r.verdict)},
              {"partial", r.partial},
              {"seed", r.seed},
              {"stages", stages},
              {"zoll", r.zoll ? to_json(*r.zoll) : Json(nullptr)},
              {"zoll_symmetrized", r.zoll_symmetrized ? to_json(*r.zoll_symmetrized) : Json(nullptr)},
              {"reversibility",
               {{"max", r.reversibility.max},
                {"mean", r.reversibility.mean},
                {"traces", r.reversibility.residuals.size()},
                {"residuals", r.reversibility.residuals},
                {"max_energy_drift", r.reversibility.max_energy_drift}}},
              {"volume_equality", r.volume_equality ? to_json(*r.volume_equality) : Json(nullptr)},
              {"decomposition", {{"max_linearity_residual", detail::num(r.max_linearity_residual)}, {"grids", grids}}},
              {"closedness", {{"curl_residual", detail::num(r.curl)}}},
              {"exactness",
               {{"overlap_residual", opt(r.overlap_residual)},
                {"roundtrip_error", opt(r.roundtrip_error)},
                {"antipodal_discrepancy", opt(r.antipodal_discrepancy)}}}};
}

// ---------------------------------------------------------------------------
// CSV

/// Columns x1,x2,b1,b2,f; f is empty when no potential was reconstructed.
inline void write_grid_csv(std::ostream& out, const OneFormField& b, const PotentialField* f) {
  out << "x1,x2,b1,b2,f\n";
  char buf[256];
  for (std::size_t k = 0; k < b.grid.size(); ++k) {
    const Coord x = b.grid.node(k).x;
    if (f)
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g\n", x.x1, x.x2, b.b[k].x1, b.b[k].x2, f->f[k]);
    else
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,\n", x.x1, x.x2, b.b[k].x1, b.b[k].x2);
    out << buf;
  }
}

// ---------------------------------------------------------------------------
// SVG

class SvgCanvas {
 public:
  SvgCanvas(double x0, double x1, double y0, double y1, int px = 480)
      : x0_(x0), x1_(x1), y0_(y0), y1_(y1), w_(px), h_(static_cast<int>(px * (y1 - y0) / (x1 - x0))) {}

  double X(double x) const { return (x - x0_) / (x1_ - x0_) * w_; }
  double Y(double y) const { return (y1_ - y) / (y1_ - y0_) * h_; }

  void polyline(const std::vector<std::pair<double, double>>& pts, const std::string& color, double width = 1.5) {
    if (pts.size() < 2) return;
    std::ostringstream d;
    d.precision(6);
    for (std::size_t i = 0; i < pts.size(); ++i) d << (i ? " L" : "M") << X(pts[i].first) << ' ' << Y(pts[i].second);
    body_ << "<path d=\"" << d.str() << "\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\"" << width
          << "\"/>\n";
  }

  void arrow(double x, double y, double dx, double dy, const std::string& color) {
    const double ax = X(x), ay = Y(y), bx = X(x + dx), by = Y(y + dy);
    const double ang = std::atan2(by - ay, bx - ax);
    body_ << "<path d=\"M" << ax << ' ' << ay << " L" << bx << ' ' << by << " M" << bx - 4 * std::cos(ang - 0.5)
          << ' ' << by - 4 * std::sin(ang - 0.5) << " L" << bx << ' ' << by << " L" << bx - 4 * std::cos(ang + 0.5)
          << ' ' << by - 4 * std::sin(ang + 0.5) << "\" fill=\"none\" stroke=\"" << color << "\"/>\n";
  }

  void cell(double x, double y, double dx, double dy, const std::string& color) {
    body_ << "<rect x=\"" << X(x) << "\" y=\"" << Y(y + dy) << "\" width=\"" << X(x + dx) - X(x) + 0.5
          << "\" height=\"" << Y(y) - Y(y + dy) + 0.5 << "\" fill=\"" << color << "\"/>\n";
  }

  void circle(double x, double y, double r, const std::string& color) {
    body_ << "<circle cx=\"" << X(x) << "\" cy=\"" << Y(y) << "\" r=\"" << r << "\" fill=\"" << color << "\"/>\n";
  }

  void text(double x, double y, const std::string& s) {
    body_ << "<text x=\"" << X(x) << "\" y=\"" << Y(y) << "\" font-family=\"sans-serif\" font-size=\"12\">" << s
          << "</text>\n";
  }

  std::string str() const {
    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w_ << "\" height=\"" << h_ << "\" viewBox=\"0 0 "
      << w_ << ' ' << h_ << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << body_.str() << "</svg>\n";
    return o.str();
  }

 private:
  double x0_, x1_, y0_, y1_;
  int w_, h_;
  std::ostringstream body_;
};

namespace detail {

inline std::string ramp(double t) {
  t = std::clamp(t, 0.0, 1.0);
  const int r = static_cast<int>(255 * t), b = static_cast<int>(255 * (1 - t)), g = static_cast<int>(255 * (1 - std::abs(2 * t - 1)) * 0.8);
  char buf[16];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
  return buf;
}

}  // namespace detail

/// Planar traces in chart coordinates; sphere traces in longitude/latitude.
inline std::string traces_svg(const std::vector<GeodesicTrace>& traces) {
  const bool sphere = !traces.empty() && traces.front().atlas == Atlas::Sphere;
  double x0 = -std::numbers::pi, x1 = std::numbers::pi, y0 = -std::numbers::pi / 2, y1 = std::numbers::pi / 2;
  if (!sphere) {
    x0 = y0 = std::numeric_limits<double>::infinity();
    x1 = y1 = -x0;
    for (const auto& t : traces)
      for (const auto& s : t.samples) {
        x0 = std::min(x0, s.x.x.x1), x1 = std::max(x1, s.x.x.x1);
        y0 = std::min(y0, s.x.x.x2), y1 = std::max(y1, s.x.x.x2);
      }
    if (!std::isfinite(x0)) x0 = y0 = -1, x1 = y1 = 1;
    const double pad = 0.05 * std::max({x1 - x0, y1 - y0, 1e-3});
    const double cx = 0.5 * (x0 + x1), cy = 0.5 * (y0 + y1), half = 0.5 * std::max(x1 - x0, y1 - y0) + pad;
    x0 = cx - half, x1 = cx + half, y0 = cy - half, y1 = cy + half;
  }
  SvgCanvas c(x0, x1, y0, y1, sphere ? 720 : 480);
  const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"};
  for (std::size_t k = 0; k < traces.size(); ++k) {
    std::vector<std::pair<double, double>> pts;
    double last_lon = 0.0;
    for (const auto& s : traces[k].samples) {
      double px = s.x.x.x1, py = s.x.x.x2;
      if (sphere) {
        const auto P = ambient(s.x);
        px = std::atan2(P[1], P[0]);
        py = std::asin(std::clamp(P[2], -1.0, 1.0));
        if (!pts.empty() && std::abs(px - last_lon) > std::numbers::pi) {
          c.polyline(pts, colors[k % 6]);
          pts.clear();
        }
        last_lon = px;
      }
      pts.emplace_back(px, py);
    }
    c.polyline(pts, colors[k % 6]);
    if (!traces[k].samples.empty()) {
      const auto& s = traces[k].samples.front();
      if (sphere) {
        const auto P = ambient(s.x);
        c.circle(std::atan2(P[1], P[0]), std::asin(std::clamp(P[2], -1.0, 1.0)), 3, colors[k % 6]);
      } else {
        c.circle(s.x.x.x1, s.x.x.x2, 3, colors[k % 6]);
      }
    }
  }
  return c.str();
}

/// Potential heatmap (when given) under a quiver of beta on every stride-th node.
inline std::string beta_svg(const OneFormField& b, const PotentialField* f, int stride = 4) {
  const Grid& G = b.grid;
  SvgCanvas c(G.x0 - G.hx(), G.x1 + G.hx(), G.y0 - G.hy(), G.y1 + G.hy());
  if (f) {
    const auto [lo, hi] = std::minmax_element(f->f.begin(), f->f.end());
    const double span = *hi - *lo > 0 ? *hi - *lo : 1.0;
    for (std::size_t k = 0; k < G.size(); ++k) {
      const Coord x = G.node(k).x;
      c.cell(x.x1 - G.hx() / 2, x.x2 - G.hy() / 2, G.hx(), G.hy(), detail::ramp((f->f[k] - *lo) / span));
    }
  }
  double bmax = 0.0;
  for (const auto& v : b.b) bmax = std::max(bmax, v.norm());
  const double scale = bmax > 0 ? 0.9 * stride * std::min(G.hx(), G.hy()) / bmax : 0.0;
  for (int j = 0; j < G.ny; j += stride)
    for (int i = 0; i < G.nx; i += stride) {
      const Coord x = G.node(i, j).x;
      const FiberCovector v = b.b[G.index(i, j)];
      if (v.norm() > 0) c.arrow(x.x1, x.x2, scale * v.x1, scale * v.x2, "black");
    }
  return c.str();
}

}  // namespace finsler
