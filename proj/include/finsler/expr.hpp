#pragma once

// Small closed-form expression language used for coefficient fields in
// metric specs:
//
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := ('-' | '+') unary | power
//   power   := primary ('^' unary)?
//   primary := number | variable | 'pi' | func '(' expr ')' | '(' expr ')'
//   func    := sin | cos | tan | exp | log | sqrt
//
// Variables: x1, x2, r2 (= x1^2 + x2^2) in planar charts; X, Y, Z (the
// embedding of the unit sphere) on the sphere atlas; theta for angular
// profiles. Which ones are admissible is fixed when parsing.

#include <cctype>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include "finsler/error.hpp"
#include "finsler/jet.hpp"

namespace finsler {

enum class Var : std::uint8_t { X1, X2, R2, X, Y, Z, Theta };

/// Bitmask of admissible variables.
struct VarSet {
  std::uint32_t bits = 0;
  constexpr VarSet() = default;
  constexpr VarSet(std::initializer_list<Var> vs) {
    for (Var v : vs) bits |= 1u << static_cast<unsigned>(v);
  }
  constexpr bool has(Var v) const { return bits & (1u << static_cast<unsigned>(v)); }
};

inline constexpr VarSet kPlaneVars{Var::X1, Var::X2, Var::R2};
inline constexpr VarSet kSphereVars{Var::X, Var::Y, Var::Z};
inline constexpr VarSet kAngleVars{Var::Theta};

/// Values bound to the variables at an evaluation point.
template <class T>
struct Bindings {
  T x1{}, x2{}, r2{}, X{}, Y{}, Z{}, theta{};

  const T& get(Var v) const {
    switch (v) {
      case Var::X1: return x1;
      case Var::X2: return x2;
      case Var::R2: return r2;
      case Var::X: return X;
      case Var::Y: return Y;
      case Var::Z: return Z;
      case Var::Theta: return theta;
    }
    return x1;
  }
};

class Expr {
 public:
  Expr() = default;

  static Expr parse(std::string_view text, VarSet allowed, int line = 0) {
    Expr e;
    e.source_ = std::string(text);
    Parser p{text, allowed, line, e.nodes_};
    e.root_ = p.parse_all();
    return e;
  }

  static Expr constant(double c) {
    Expr e;
    e.source_ = std::to_string(c);
    e.nodes_.push_back({Op::Num, c, Var::X1, -1, -1});
    e.root_ = 0;
    return e;
  }

  bool empty() const { return root_ < 0; }
  const std::string& source() const { return source_; }

  bool uses(Var v) const {
    for (const auto& n : nodes_)
      if (n.op == Op::Var && n.var == v) return true;
    return false;
  }

  template <class T>
  T eval(const Bindings<T>& b) const {
    if (root_ < 0) throw ConfigError("evaluating an empty expression");
    return eval_node<T>(root_, b);
  }

  double operator()(double theta) const {
    Bindings<double> b;
    b.theta = theta;
    return eval(b);
  }

 private:
  enum class Op : std::uint8_t { Num, Var, Neg, Add, Sub, Mul, Div, Pow, Sin, Cos, Tan, Exp, Log, Sqrt };

  struct Node {
    Op op;
    double value;
    Var var;
    int a;
    int b;
  };

  template <class T>
  T eval_node(int i, const Bindings<T>& bind) const {
    using std::cos, std::exp, std::log, std::pow, std::sin, std::sqrt, std::tan;
    const Node& n = nodes_[static_cast<std::size_t>(i)];
    switch (n.op) {
      case Op::Num: return T(n.value);
      case Op::Var: return bind.get(n.var);
      case Op::Neg: return -eval_node<T>(n.a, bind);
      case Op::Add: return eval_node<T>(n.a, bind) + eval_node<T>(n.b, bind);
      case Op::Sub: return eval_node<T>(n.a, bind) - eval_node<T>(n.b, bind);
      case Op::Mul: return eval_node<T>(n.a, bind) * eval_node<T>(n.b, bind);
      case Op::Div: return eval_node<T>(n.a, bind) / eval_node<T>(n.b, bind);
      case Op::Pow: {
        const Node& e = nodes_[static_cast<std::size_t>(n.b)];
        if (e.op == Op::Num) return pow(eval_node<T>(n.a, bind), e.value);
        return pow(eval_node<T>(n.a, bind), eval_node<T>(n.b, bind));
      }
      case Op::Sin: return sin(eval_node<T>(n.a, bind));
      case Op::Cos: return cos(eval_node<T>(n.a, bind));
      case Op::Tan: return tan(eval_node<T>(n.a, bind));
      case Op::Exp: return exp(eval_node<T>(n.a, bind));
      case Op::Log: return log(eval_node<T>(n.a, bind));
      case Op::Sqrt: return sqrt(eval_node<T>(n.a, bind));
    }
    return T(0.0);
  }

  struct Parser {
    std::string_view s;
    VarSet allowed;
    int line;
    std::vector<Node>& out;
    std::size_t pos = 0;

    [[noreturn]] void fail(const std::string& msg) const {
      throw ConfigError("expression '" + std::string(s) + "': " + msg + " at column " +
                            std::to_string(pos + 1),
                        line);
    }

    void skip() {
      while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    }
    bool accept(char c) {
      skip();
      if (pos < s.size() && s[pos] == c) {
        ++pos;
        return true;
      }
      return false;
    }
    int push(Node n) {
      out.push_back(n);
      return static_cast<int>(out.size()) - 1;
    }
    int binary(Op op, int a, int b) { return push({op, 0.0, Var::X1, a, b}); }

    int parse_all() {
      const int r = parse_expr();
      skip();
      if (pos != s.size()) fail("unexpected '" + std::string(1, s[pos]) + "'");
      return r;
    }
    int parse_expr() {
      int a = parse_term();
      for (;;) {
        if (accept('+')) a = binary(Op::Add, a, parse_term());
        else if (accept('-')) a = binary(Op::Sub, a, parse_term());
        else return a;
      }
    }
    int parse_term() {
      int a = parse_unary();
      for (;;) {
        if (accept('*')) a = binary(Op::Mul, a, parse_unary());
        else if (accept('/')) a = binary(Op::Div, a, parse_unary());
        else return a;
      }
    }
    int parse_unary() {
      if (accept('-')) return push({Op::Neg, 0.0, Var::X1, parse_unary(), -1});
      if (accept('+')) return parse_unary();
      return parse_power();
    }
    int parse_power() {
      const int base = parse_primary();
      if (accept('^')) return binary(Op::Pow, base, parse_unary());
      return base;
    }
    int parse_primary() {
      skip();
      if (pos >= s.size()) fail("unexpected end");
      const char c = s[pos];
      if (c == '(') {
        ++pos;
        const int r = parse_expr();
        if (!accept(')')) fail("expected ')'");
        return r;
      }
      if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
      if (std::isalpha(static_cast<unsigned char>(c))) return parse_identifier();
      fail("unexpected '" + std::string(1, c) + "'");
    }
    int parse_number() {
      const std::size_t start = pos;
      while (pos < s.size() && (std::isdigit(static_cast<unsigned char>(s[pos])) || s[pos] == '.')) ++pos;
      if (pos < s.size() && (s[pos] == 'e' || s[pos] == 'E')) {
        std::size_t p = pos + 1;
        if (p < s.size() && (s[p] == '+' || s[p] == '-')) ++p;
        if (p < s.size() && std::isdigit(static_cast<unsigned char>(s[p]))) {
          pos = p;
          while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
        }
      }
      const std::string tok(s.substr(start, pos - start));
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(tok, &used);
      } catch (const std::exception&) {
        fail("bad number '" + tok + "'");
      }
      if (used != tok.size()) fail("bad number '" + tok + "'");
      return push({Op::Num, v, Var::X1, -1, -1});
    }
    int parse_identifier() {
      const std::size_t start = pos;
      while (pos < s.size() && (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '_')) ++pos;
      const std::string_view id = s.substr(start, pos - start);

      struct Fn { std::string_view name; Op op; };
      static constexpr Fn fns[] = {{"sin", Op::Sin}, {"cos", Op::Cos}, {"tan", Op::Tan},
                                   {"exp", Op::Exp}, {"log", Op::Log}, {"sqrt", Op::Sqrt}};
      for (const Fn& f : fns) {
        if (id == f.name) {
          if (!accept('(')) fail("expected '(' after " + std::string(id));
          const int arg = parse_expr();
          if (!accept(')')) fail("expected ')'");
          return push({f.op, 0.0, Var::X1, arg, -1});
        }
      }
      if (id == "pi") return push({Op::Num, std::numbers::pi, Var::X1, -1, -1});

      struct Named { std::string_view name; Var var; };
      static constexpr Named vars[] = {{"x1", Var::X1}, {"x2", Var::X2}, {"r2", Var::R2},
                                       {"X", Var::X},   {"Y", Var::Y},   {"Z", Var::Z},
                                       {"theta", Var::Theta}};
      for (const Named& v : vars) {
        if (id == v.name) {
          if (!allowed.has(v.var))
            fail("variable '" + std::string(id) + "' is not available in this context");
          return push({Op::Var, 0.0, v.var, -1, -1});
        }
      }
      fail("unknown identifier '" + std::string(id) + "'");
    }
  };

  std::vector<Node> nodes_;
  int root_ = -1;
  std::string source_;
};

/// Bindings for a planar chart point, seeded as jet variables.
inline Bindings<Jet2> plane_jet_bindings(double x1, double x2) {
  Bindings<Jet2> b;
  b.x1 = Jet2::variable(x1, 0);
  b.x2 = Jet2::variable(x2, 1);
  b.r2 = b.x1 * b.x1 + b.x2 * b.x2;
  return b;
}

/// Bindings of the sphere embedding (X, Y, Z) as jets in the chart coordinates.
/// `south` selects the chart whose origin is the south pole.
inline Bindings<Jet2> sphere_jet_bindings(double x1, double x2, bool south) {
  const Jet2 u = Jet2::variable(x1, 0);
  const Jet2 w = Jet2::variable(x2, 1);
  const Jet2 r2 = u * u + w * w;
  const Jet2 inv = reciprocal(Jet2(1.0) + r2);
  Bindings<Jet2> b;
  b.X = Jet2(2.0) * u * inv;
  b.Y = Jet2(2.0) * w * inv;
  b.Z = south ? (r2 - Jet2(1.0)) * inv : (Jet2(1.0) - r2) * inv;
  return b;
}

}  // namespace finsler
