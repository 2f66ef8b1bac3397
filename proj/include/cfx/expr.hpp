#ifndef CFX_EXPR_HPP
#define CFX_EXPR_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cfx/value.hpp"

namespace cfx {

enum class Op { Const, Feature, Noise, Neg, Add, Sub, Mul, Div, Pow, Floor, Sqrt, Mod, Min, Max };

/// Arithmetic domain violation raised by evaluate(); callers attach the feature name.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Expression tree of a structural equation. Feature references carry both the
/// source name and, once resolved, the feature index.
struct Expr {
  Op op = Op::Const;
  double value = 0.0;
  std::string name;
  std::size_t feature = 0;
  std::vector<Expr> args;
  /// 1-based source position, for diagnostics.
  std::size_t column = 0;

  static Expr constant(double v) { return Expr{Op::Const, v, {}, 0, {}, 0}; }
  static Expr feature_ref(std::string name, std::size_t index = 0) {
    return Expr{Op::Feature, 0.0, std::move(name), index, {}, 0};
  }
  static Expr noise() { return Expr{Op::Noise, 0.0, {}, 0, {}, 0}; }
  static Expr unary(Op op, Expr a) { return Expr{op, 0.0, {}, 0, {std::move(a)}, 0}; }
  static Expr binary(Op op, Expr a, Expr b) { return Expr{op, 0.0, {}, 0, {std::move(a), std::move(b)}, 0}; }

  std::size_t noise_count() const {
    std::size_t n = op == Op::Noise ? 1 : 0;
    for (const auto& a : args) n += a.noise_count();
    return n;
  }

  bool uses_noise() const { return noise_count() != 0; }

  void visit(const std::function<void(const Expr&)>& fn) const {
    fn(*this);
    for (const auto& a : args) a.visit(fn);
  }

  void visit(const std::function<void(Expr&)>& fn) {
    fn(*this);
    for (auto& a : args) a.visit(fn);
  }
};

/// Evaluates `e` with feature values indexed by Expr::feature and the given noise value.
inline double evaluate(const Expr& e, std::span<const double> values, double noise) {
  auto arg = [&](std::size_t i) { return evaluate(e.args[i], values, noise); };
  double r = 0.0;
  switch (e.op) {
    case Op::Const: return e.value;
    case Op::Feature: return values[e.feature];
    case Op::Noise: return noise;
    case Op::Neg: return -arg(0);
    case Op::Add: return arg(0) + arg(1);
    case Op::Sub: return arg(0) - arg(1);
    case Op::Mul: return arg(0) * arg(1);
    case Op::Div: {
      double a = arg(0), b = arg(1);
      if (b == 0.0) throw DomainError("division by zero");
      return a / b;
    }
    case Op::Pow: r = std::pow(arg(0), arg(1)); break;
    case Op::Floor: return std::floor(arg(0));
    case Op::Sqrt: {
      double a = arg(0);
      if (a < 0.0) throw DomainError("sqrt of negative value " + format_number(a));
      return std::sqrt(a);
    }
    case Op::Mod: {
      double a = arg(0), b = arg(1);
      if (b == 0.0) throw DomainError("mod by zero");
      return a - b * std::floor(a / b);
    }
    case Op::Min: return std::min(arg(0), arg(1));
    case Op::Max: return std::max(arg(0), arg(1));
  }
  if (!std::isfinite(r)) throw DomainError("power produced a non-finite value");
  return r;
}

namespace detail {

inline int precedence(Op op) {
  switch (op) {
    case Op::Add:
    case Op::Sub: return 1;
    case Op::Mul:
    case Op::Div: return 2;
    case Op::Neg: return 3;
    case Op::Pow: return 4;
    default: return 5;
  }
}

inline std::string quote_name(const std::string& name) {
  bool plain = !name.empty() && !(name[0] >= '0' && name[0] <= '9') && name != "N";
  for (char c : name) {
    bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
    plain = plain && ok;
  }
  return plain ? name : "\"" + name + "\"";
}

}  // namespace detail

/// DSL text for `e`. `noise_text` replaces N when non-empty (used to print abduced equations).
inline std::string to_string(const Expr& e, const std::string& noise_text = "N") {
  auto wrap = [&](const Expr& child, bool strict) {
    std::string s = to_string(child, noise_text);
    int pc = detail::precedence(child.op), pe = detail::precedence(e.op);
    return (pc < pe || (strict && pc == pe)) ? "(" + s + ")" : s;
  };
  auto call = [&](const char* fn) {
    std::string s = std::string(fn) + "(";
    for (std::size_t i = 0; i < e.args.size(); ++i) s += (i ? ", " : "") + to_string(e.args[i], noise_text);
    return s + ")";
  };
  switch (e.op) {
    case Op::Const: return format_number(e.value);
    case Op::Feature: return detail::quote_name(e.name);
    case Op::Noise: return noise_text;
    case Op::Neg: return "-" + wrap(e.args[0], false);
    case Op::Add: return wrap(e.args[0], false) + " + " + wrap(e.args[1], false);
    case Op::Sub: return wrap(e.args[0], false) + " - " + wrap(e.args[1], true);
    case Op::Mul: return wrap(e.args[0], false) + " * " + wrap(e.args[1], false);
    case Op::Div: return wrap(e.args[0], false) + " / " + wrap(e.args[1], true);
    case Op::Pow: return wrap(e.args[0], true) + "^" + wrap(e.args[1], false);
    case Op::Floor: return call("floor");
    case Op::Sqrt: return call("sqrt");
    case Op::Mod: return call("mod");
    case Op::Min: return call("min");
    case Op::Max: return call("max");
  }
  return {};
}

}  // namespace cfx

#endif  // CFX_EXPR_HPP
