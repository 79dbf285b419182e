#pragma once

// Text format for metric specs (grammar in README.md).
//
//   # round sphere plus the differential of 0.1 X
//   [metric]
//   kind = plus_one_form
//   beta = grad(0.1*X)
//   [base]
//   kind = sphere_round
//
// Entries are `key = value`, separated by newlines or ';'. A section header
// may share its line with entries: `[metric] kind=randers; a=conformal(2)`.

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "finsler/error.hpp"
#include "finsler/expr.hpp"
#include "finsler/metrics.hpp"

namespace finsler {

namespace detail {

struct SpecEntry {
  std::string value;
  int line = 0;
};

using SpecSection = std::map<std::string, SpecEntry>;

inline std::string trim(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return std::string(s.substr(a, b - a));
}

/// Splits on `sep` at parenthesis depth zero.
inline std::vector<std::string> split_top(std::string_view s, char sep) {
  std::vector<std::string> out;
  int depth = 0;
  std::size_t start = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '(') ++depth;
    else if (s[i] == ')') --depth;
    else if (s[i] == sep && depth == 0) {
      out.push_back(trim(s.substr(start, i - start)));
      start = i + 1;
    }
  }
  out.push_back(trim(s.substr(start)));
  return out;
}

struct Call {
  std::string name;
  std::vector<std::string> args;
  bool is_call = false;
};

inline Call parse_call(const std::string& v, int line) {
  Call c;
  const auto open = v.find('(');
  if (open == std::string::npos) {
    c.name = trim(v);
    return c;
  }
  if (v.back() != ')') throw ConfigError("expected ')' at the end of '" + v + "'", line);
  c.is_call = true;
  c.name = trim(std::string_view(v).substr(0, open));
  c.args = split_top(std::string_view(v).substr(open + 1, v.size() - open - 2), ',');
  return c;
}

inline double parse_number(const std::string& s, int line) {
  // Numeric arguments may be constant expressions (e.g. -0.5, 1/3, pi/4).
  return Expr::parse(s, VarSet{}, line).eval(Bindings<double>{});
}

inline void expect_args(const Call& c, std::size_t n, int line) {
  if (!c.is_call || c.args.size() != n)
    throw ConfigError(c.name + " expects " + std::to_string(n) + " argument(s)", line);
}

class SpecBuilder {
 public:
  explicit SpecBuilder(std::map<std::string, SpecSection> sections) : sections_(std::move(sections)) {}

  MetricSpec build(const std::string& section_name, int depth = 0) {
    if (depth > 8) throw ConfigError("base metrics nested too deeply");
    const auto it = sections_.find(section_name);
    if (it == sections_.end()) throw ConfigError("missing section [" + section_name + "]");
    const SpecSection& sec = it->second;
    used_.insert(section_name);

    const auto kind_it = sec.find("kind");
    if (kind_it == sec.end()) throw ConfigError("section [" + section_name + "] has no kind");
    MetricSpec spec;
    spec.kind = parse_kind(kind_it->second);

    std::set<std::string> allowed = {"kind", "name", "atlas", "region", "antipodal"};
    switch (spec.kind) {
      case MetricKind::Minkowski: allowed.insert("h"); break;
      case MetricKind::Riemannian: allowed.insert("a"); break;
      case MetricKind::Randers: allowed.insert({"a", "b"}); break;
      case MetricKind::Funk:
      case MetricKind::Hilbert: allowed.insert("domain"); break;
      case MetricKind::PlusOneForm: allowed.insert("beta"); break;
      default: break;
    }
    for (const auto& [key, entry] : sec) {
      if (!allowed.count(key))
        throw ConfigError("unknown key '" + key + "' for kind " + std::string(kind_name(spec.kind)), entry.line);
    }

    if (auto n = sec.find("name"); n != sec.end()) spec.name = n->second.value;

    // Atlas: fixed by kind, inherited from the base, or chosen for Riemannian/Randers.
    const std::string child = section_name == "metric" ? "base" : section_name + ".base";
    if (spec.kind == MetricKind::PlusOneForm) {
      spec.base = std::make_shared<MetricSpec>(build(child, depth + 1));
      spec.atlas = spec.base->atlas;
    } else if (spec.kind == MetricKind::SphereRound) {
      spec.atlas = Atlas::Sphere;
    } else {
      spec.atlas = Atlas::Plane;
    }
    if (auto a = sec.find("atlas"); a != sec.end()) {
      const Atlas want = a->second.value == "sphere" ? Atlas::Sphere
                         : a->second.value == "plane" ? Atlas::Plane
                                                      : throw ConfigError("atlas must be plane or sphere", a->second.line);
      const bool free = spec.kind == MetricKind::Riemannian || spec.kind == MetricKind::Randers;
      if (!free && want != spec.atlas)
        throw ConfigError("kind " + std::string(kind_name(spec.kind)) + " does not live on that atlas", a->second.line);
      spec.atlas = want;
    }
    const VarSet vars = spec.atlas == Atlas::Sphere ? kSphereVars : kPlaneVars;

    if (spec.kind == MetricKind::Minkowski) spec.profile = Expr::parse(require(sec, "h").value, kAngleVars, require(sec, "h").line);
    if (spec.kind == MetricKind::Riemannian || spec.kind == MetricKind::Randers) spec.a = parse_tensor(require(sec, "a"), spec.atlas);
    if (spec.kind == MetricKind::Randers) spec.b = parse_one_form(require(sec, "b"), vars, spec.atlas);
    if (spec.kind == MetricKind::PlusOneForm) spec.b = parse_one_form(require(sec, "beta"), vars, spec.atlas);
    if (spec.kind == MetricKind::Funk || spec.kind == MetricKind::Hilbert) spec.domain = parse_domain(require(sec, "domain"));

    if (auto r = sec.find("region"); r != sec.end()) spec.region = parse_region(r->second, spec.atlas);
    if (auto a = sec.find("antipodal"); a != sec.end()) {
      if (a->second.value != "true" && a->second.value != "false")
        throw ConfigError("antipodal must be true or false", a->second.line);
      spec.antipodal = a->second.value == "true";
      if (spec.antipodal && spec.atlas != Atlas::Sphere)
        throw ConfigError("antipodal symmetry needs the sphere atlas", a->second.line);
    }
    return spec;
  }

  void check_all_used() const {
    for (const auto& [name, sec] : sections_) {
      if (!used_.count(name)) {
        const int line = sec.empty() ? 0 : sec.begin()->second.line;
        throw ConfigError("unused section [" + name + "]", line);
      }
    }
  }

 private:
  static const SpecEntry& require(const SpecSection& sec, const std::string& key) {
    const auto it = sec.find(key);
    if (it == sec.end()) {
      const int line = sec.count("kind") ? sec.at("kind").line : 0;
      throw ConfigError("missing key '" + key + "'", line);
    }
    return it->second;
  }

  static MetricKind parse_kind(const SpecEntry& e) {
    static const std::map<std::string, MetricKind> kinds = {
        {"euclidean", MetricKind::Euclidean},   {"minkowski", MetricKind::Minkowski},
        {"riemannian", MetricKind::Riemannian}, {"randers", MetricKind::Randers},
        {"funk", MetricKind::Funk},             {"hilbert", MetricKind::Hilbert},
        {"sphere_round", MetricKind::SphereRound}, {"plus_one_form", MetricKind::PlusOneForm}};
    const auto it = kinds.find(e.value);
    if (it == kinds.end()) throw ConfigError("unknown metric kind '" + e.value + "'", e.line);
    return it->second;
  }

  static TensorFieldDef parse_tensor(const SpecEntry& e, Atlas atlas) {
    const Call c = parse_call(e.value, e.line);
    TensorFieldDef t;
    const VarSet vars = atlas == Atlas::Sphere ? kSphereVars : kPlaneVars;
    if (c.name == "conformal" && atlas == Atlas::Plane) {
      expect_args(c, 1, e.line);
      t.type = TensorFieldDef::Type::Conformal;
      t.e11 = Expr::parse(c.args[0], vars, e.line);
    } else if (c.name == "matrix" && atlas == Atlas::Plane) {
      expect_args(c, 3, e.line);
      t.type = TensorFieldDef::Type::Matrix;
      t.e11 = Expr::parse(c.args[0], vars, e.line);
      t.e12 = Expr::parse(c.args[1], vars, e.line);
      t.e22 = Expr::parse(c.args[2], vars, e.line);
    } else if (c.name == "round" && atlas == Atlas::Sphere) {
      expect_args(c, 1, e.line);
      t.type = TensorFieldDef::Type::RoundConformal;
      t.e11 = Expr::parse(c.args[0], vars, e.line);
    } else if (c.name == "euclidean" && !c.is_call && atlas == Atlas::Plane) {
      t.type = TensorFieldDef::Type::Identity;
    } else {
      throw ConfigError("a must be conformal(e), matrix(e11, e12, e22) or euclidean on the plane, "
                        "round(e) on the sphere",
                        e.line);
    }
    return t;
  }

  static OneFormDef parse_one_form(const SpecEntry& e, VarSet vars, Atlas atlas) {
    const Call c = parse_call(e.value, e.line);
    OneFormDef d;
    if (c.name == "grad") {
      expect_args(c, 1, e.line);
      d.type = OneFormDef::Type::Gradient;
      d.potential = Expr::parse(c.args[0], vars, e.line);
    } else if (c.name == "form") {
      if (atlas == Atlas::Sphere)
        throw ConfigError("form(b1, b2) is chart-dependent; use grad(f) on the sphere", e.line);
      expect_args(c, 2, e.line);
      d.type = OneFormDef::Type::Components;
      d.b1 = Expr::parse(c.args[0], vars, e.line);
      d.b2 = Expr::parse(c.args[1], vars, e.line);
    } else {
      throw ConfigError("1-form must be grad(f) or form(b1, b2)", e.line);
    }
    return d;
  }

  static DomainDef parse_domain(const SpecEntry& e) {
    const Call c = parse_call(e.value, e.line);
    DomainDef d;
    if (c.name == "disc") {
      expect_args(c, 3, e.line);
      d.type = DomainDef::Type::Disc;
      d.cx = parse_number(c.args[0], e.line);
      d.cy = parse_number(c.args[1], e.line);
      d.r = parse_number(c.args[2], e.line);
      if (!(d.r > 0.0)) throw ConfigError("disc radius must be positive", e.line);
    } else if (c.name == "support") {
      expect_args(c, 1, e.line);
      d.type = DomainDef::Type::Support;
      d.profile = Expr::parse(c.args[0], kAngleVars, e.line);
    } else {
      throw ConfigError("domain must be disc(cx, cy, r) or support(h(theta))", e.line);
    }
    return d;
  }

  static Region parse_region(const SpecEntry& e, Atlas atlas) {
    const Call c = parse_call(e.value, e.line);
    if (c.name == "sphere" && !c.is_call) {
      if (atlas != Atlas::Sphere) throw ConfigError("region sphere needs the sphere atlas", e.line);
      return Region::sphere();
    }
    if (c.name == "rect") {
      if (atlas != Atlas::Plane) throw ConfigError("rect regions are planar", e.line);
      expect_args(c, 4, e.line);
      Region r = Region::rect(parse_number(c.args[0], e.line), parse_number(c.args[1], e.line),
                              parse_number(c.args[2], e.line), parse_number(c.args[3], e.line));
      if (!(r.x1 > r.x0 && r.y1 > r.y0)) throw ConfigError("empty rect region", e.line);
      return r;
    }
    throw ConfigError("region must be rect(x0, x1, y0, y1) or sphere", e.line);
  }

  std::map<std::string, SpecSection> sections_;
  std::set<std::string> used_;
};

}  // namespace detail

inline MetricSpec parse_metric_spec(std::string_view text) {
  std::map<std::string, detail::SpecSection> sections;
  std::string current;
  int line_no = 0;
  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = raw.substr(0, raw.find('#'));
    line = detail::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      const auto close = line.find(']');
      if (close == std::string::npos) throw ConfigError("unterminated section header", line_no);
      current = detail::trim(std::string_view(line).substr(1, close - 1));
      const bool valid = current == "metric" || current == "base" ||
                         (current.rfind("base.", 0) == 0 &&
                          std::all_of(current.begin(), current.end(),
                                      [](char c) { return std::islower(static_cast<unsigned char>(c)) || c == '.'; }));
      if (!valid) throw ConfigError("unknown section [" + current + "]", line_no);
      if (sections.count(current)) throw ConfigError("duplicate section [" + current + "]", line_no);
      sections[current];
      line = detail::trim(std::string_view(line).substr(close + 1));
      if (line.empty()) continue;
    }
    if (current.empty()) throw ConfigError("entry outside of a section", line_no);
    for (const std::string& item : detail::split_top(line, ';')) {
      if (item.empty()) continue;
      const auto eq = item.find('=');
      if (eq == std::string::npos) throw ConfigError("expected key = value, got '" + item + "'", line_no);
      const std::string key = detail::trim(std::string_view(item).substr(0, eq));
      const std::string value = detail::trim(std::string_view(item).substr(eq + 1));
      if (key.empty() || value.empty()) throw ConfigError("empty key or value in '" + item + "'", line_no);
      auto& sec = sections[current];
      if (sec.count(key)) throw ConfigError("duplicate key '" + key + "'", line_no);
      sec[key] = {value, line_no};
    }
  }
  if (!sections.count("metric")) throw ConfigError("missing [metric] section");
  detail::SpecBuilder builder(std::move(sections));
  MetricSpec spec = builder.build("metric");
  builder.check_all_used();
  return spec;
}

inline MetricSpec load_metric_spec(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open spec file '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_metric_spec(ss.str());
}

}  // namespace finsler
