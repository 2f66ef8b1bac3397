#ifndef CFX_SEM_HPP
#define CFX_SEM_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <iterator>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "cfx/error.hpp"
#include "cfx/expr.hpp"
#include "cfx/rng.hpp"
#include "cfx/situations.hpp"
#include "cfx/value.hpp"

namespace cfx {

/// Distribution of one equation's exogenous noise term.
struct NoiseDist {
  enum class Kind { Uniform, DiscreteUniform, Normal, PointMass };

  Kind kind = Kind::PointMass;
  double a = 0.0;  // lo / mean / value
  double b = 0.0;  // hi / stddev

  static NoiseDist uniform(double lo, double hi) { return {Kind::Uniform, lo, hi}; }
  static NoiseDist discrete_uniform(std::int64_t lo, std::int64_t hi) {
    return {Kind::DiscreteUniform, static_cast<double>(lo), static_cast<double>(hi)};
  }
  static NoiseDist normal(double mean, double stddev) { return {Kind::Normal, mean, stddev}; }
  static NoiseDist point_mass(double v) { return {Kind::PointMass, v, 0.0}; }

  double draw(Rng& rng) const {
    switch (kind) {
      case Kind::Uniform: return rng.uniform(a, b);
      case Kind::DiscreteUniform:
        return static_cast<double>(rng.uniform_int(static_cast<std::int64_t>(a), static_cast<std::int64_t>(b)));
      case Kind::Normal: return rng.normal(a, b);
      case Kind::PointMass: return a;
    }
    return a;
  }

  /// Whether `x` is a possible draw, allowing `slack` on either side.
  bool in_support(double x, double slack) const {
    switch (kind) {
      case Kind::Uniform: return x >= a - slack && x <= b + slack;
      case Kind::DiscreteUniform:
        return x >= a - slack && x <= b + slack && std::fabs(x - std::round(x)) <= std::max(slack, 1e-9);
      case Kind::Normal: return b > 0.0 || std::fabs(x - a) <= slack;
      case Kind::PointMass: return std::fabs(x - a) <= slack;
    }
    return false;
  }

  std::string to_string() const {
    switch (kind) {
      case Kind::Uniform: return "Uniform(" + format_number(a) + ", " + format_number(b) + ")";
      case Kind::DiscreteUniform: return "DiscreteUniform(" + format_number(a) + ", " + format_number(b) + ")";
      case Kind::Normal: return "Normal(" + format_number(a) + ", " + format_number(b) + ")";
      case Kind::PointMass: return "PointMass(" + format_number(a) + ")";
    }
    return {};
  }

  friend bool operator==(const NoiseDist&, const NoiseDist&) = default;
};

struct Equation {
  std::string feature;
  Expr expr;
  std::optional<NoiseDist> noise;
  /// Values of this feature are rounded half-up after evaluation.
  bool integer = false;
  std::size_t line = 0;
  /// Distinct parent feature indices, ascending.
  std::vector<std::size_t> parents;
};

/// An acyclic structural equation model. Immutable and cheap to copy.
class Sem {
 public:
  Sem() : data_(std::make_shared<Data>()) {}

  /// Validates and freezes a set of equations (declaration order is kept).
  explicit Sem(std::vector<Equation> equations);

  std::size_t size() const { return data_->equations.size(); }
  const std::vector<std::string>& features() const { return data_->names; }
  const Equation& equation(std::size_t i) const { return data_->equations.at(i); }
  /// Topological order; ties resolved by declaration order.
  const std::vector<std::size_t>& order() const { return data_->order; }
  std::vector<std::string> ordered_features() const {
    std::vector<std::string> out;
    for (auto i : order()) out.push_back(data_->names[i]);
    return out;
  }

  std::optional<std::size_t> index_of(std::string_view name) const {
    auto it = data_->index.find(name);
    if (it == data_->index.end()) return std::nullopt;
    return it->second;
  }

  std::size_t require(std::string_view name) const {
    auto i = index_of(name);
    if (!i) throw ValidationError("'" + std::string(name) + "' is not a SEM feature");
    return *i;
  }

  /// True iff a directed path from -> ... -> to exists.
  bool reaches(std::size_t from, std::size_t to) const { return data_->reach[from * size() + to] != 0; }

 private:
  struct Data {
    std::vector<Equation> equations;
    std::vector<std::string> names;
    std::map<std::string, std::size_t, std::less<>> index;
    std::vector<std::size_t> order;
    std::vector<char> reach;
  };
  std::shared_ptr<const Data> data_;
};

// ---------------------------------------------------------------------------
// DSL parsing

namespace detail {

struct Token {
  enum class Kind { Number, Ident, Quoted, Symbol, End } kind = Kind::End;
  std::string text;
  double number = 0.0;
  std::size_t column = 0;
};

class LineLexer {
 public:
  LineLexer(std::string_view line, std::size_t line_no) : line_(line), line_no_(line_no) { advance(); }

  const Token& peek() const { return current_; }

  Token take() {
    Token t = current_;
    advance();
    return t;
  }

  bool accept_symbol(char c) {
    if (current_.kind == Token::Kind::Symbol && current_.text[0] == c) {
      advance();
      return true;
    }
    return false;
  }

  void expect_symbol(char c) {
    if (!accept_symbol(c)) fail(std::string("expected '") + c + "'");
  }

  [[noreturn]] void fail(const std::string& what) const {
    std::string found = current_.kind == Token::Kind::End ? "end of line" : "'" + current_.text + "'";
    throw ParseError(what + ", found " + found, line_no_, current_.column);
  }

  [[noreturn]] void fail_at(const std::string& what, std::size_t column) const {
    throw ParseError(what, line_no_, column);
  }

  std::size_t line() const { return line_no_; }

 private:
  void advance() {
    while (pos_ < line_.size() && (line_[pos_] == ' ' || line_[pos_] == '\t' || line_[pos_] == '\r')) ++pos_;
    current_ = Token{};
    current_.column = pos_ + 1;
    if (pos_ >= line_.size() || line_[pos_] == '#') {
      current_.kind = Token::Kind::End;
      return;
    }
    char c = line_[pos_];
    if ((c >= '0' && c <= '9') || c == '.') {
      std::size_t start = pos_;
      while (pos_ < line_.size() && ((line_[pos_] >= '0' && line_[pos_] <= '9') || line_[pos_] == '.')) ++pos_;
      if (pos_ < line_.size() && (line_[pos_] == 'e' || line_[pos_] == 'E')) {
        std::size_t save = pos_++;
        if (pos_ < line_.size() && (line_[pos_] == '+' || line_[pos_] == '-')) ++pos_;
        if (pos_ < line_.size() && line_[pos_] >= '0' && line_[pos_] <= '9') {
          while (pos_ < line_.size() && line_[pos_] >= '0' && line_[pos_] <= '9') ++pos_;
        } else {
          pos_ = save;
        }
      }
      current_.kind = Token::Kind::Number;
      current_.text = std::string(line_.substr(start, pos_ - start));
      auto v = parse_real(current_.text);
      if (!v) throw ParseError("bad number '" + current_.text + "'", line_no_, start + 1);
      current_.number = *v;
      return;
    }
    if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_') {
      std::size_t start = pos_;
      while (pos_ < line_.size()) {
        char d = line_[pos_];
        bool ok = (d >= 'a' && d <= 'z') || (d >= 'A' && d <= 'Z') || (d >= '0' && d <= '9') || d == '_' ||
                  d == ':' || d == '.';
        if (!ok) break;
        ++pos_;
      }
      current_.kind = Token::Kind::Ident;
      current_.text = std::string(line_.substr(start, pos_ - start));
      return;
    }
    if (c == '"') {
      std::size_t start = pos_++;
      std::size_t close = line_.find('"', pos_);
      if (close == std::string_view::npos) throw ParseError("unterminated quoted name", line_no_, start + 1);
      current_.kind = Token::Kind::Quoted;
      current_.text = std::string(line_.substr(pos_, close - pos_));
      if (current_.text.empty()) throw ParseError("empty quoted name", line_no_, start + 1);
      pos_ = close + 1;
      return;
    }
    if (std::string_view("+-*/^(),=;~").find(c) != std::string_view::npos) {
      current_.kind = Token::Kind::Symbol;
      current_.text = std::string(1, c);
      ++pos_;
      return;
    }
    throw ParseError(std::string("unexpected character '") + c + "'", line_no_, pos_ + 1);
  }

  std::string_view line_;
  std::size_t line_no_;
  std::size_t pos_ = 0;
  Token current_;
};

class ExprParser {
 public:
  explicit ExprParser(LineLexer& lex) : lex_(lex) {}

  Expr parse() { return sum(); }

 private:
  Expr sum() {
    Expr left = product();
    for (;;) {
      if (lex_.accept_symbol('+')) {
        left = Expr::binary(Op::Add, std::move(left), product());
      } else if (lex_.accept_symbol('-')) {
        left = Expr::binary(Op::Sub, std::move(left), product());
      } else {
        return left;
      }
    }
  }

  Expr product() {
    Expr left = unary();
    for (;;) {
      if (lex_.accept_symbol('*')) {
        left = Expr::binary(Op::Mul, std::move(left), unary());
      } else if (lex_.accept_symbol('/')) {
        left = Expr::binary(Op::Div, std::move(left), unary());
      } else {
        return left;
      }
    }
  }

  Expr unary() {
    if (lex_.accept_symbol('-')) return Expr::unary(Op::Neg, unary());
    if (lex_.accept_symbol('+')) return unary();
    return power();
  }

  Expr power() {
    Expr base = primary();
    if (lex_.accept_symbol('^')) return Expr::binary(Op::Pow, std::move(base), unary());
    return base;
  }

  Expr primary() {
    const Token& t = lex_.peek();
    switch (t.kind) {
      case Token::Kind::Number: return Expr::constant(lex_.take().number);
      case Token::Kind::Quoted: {
        Token q = lex_.take();
        Expr e = Expr::feature_ref(q.text);
        e.column = q.column;
        return e;
      }
      case Token::Kind::Ident: {
        Token id = lex_.take();
        if (lex_.accept_symbol('(')) return call(id);
        if (id.text == "N") {
          Expr e = Expr::noise();
          e.column = id.column;
          return e;
        }
        Expr e = Expr::feature_ref(id.text);
        e.column = id.column;
        return e;
      }
      case Token::Kind::Symbol:
        if (lex_.accept_symbol('(')) {
          Expr inner = sum();
          lex_.expect_symbol(')');
          return inner;
        }
        break;
      case Token::Kind::End: break;
    }
    lex_.fail("expected a number, feature, N, function call or '('");
  }

  Expr call(const Token& fn) {
    std::vector<Expr> args;
    if (!lex_.accept_symbol(')')) {
      do {
        args.push_back(sum());
      } while (lex_.accept_symbol(','));
      lex_.expect_symbol(')');
    }
    struct Builtin {
      const char* name;
      Op op;
      std::size_t arity;
    };
    static constexpr Builtin builtins[] = {{"floor", Op::Floor, 1}, {"sqrt", Op::Sqrt, 1}, {"mod", Op::Mod, 2},
                                           {"min", Op::Min, 2},     {"max", Op::Max, 2},   {"pow", Op::Pow, 2}};
    for (const auto& b : builtins) {
      if (fn.text != b.name) continue;
      if (args.size() != b.arity)
        lex_.fail_at(fn.text + "() takes " + std::to_string(b.arity) + " argument(s), got " +
                         std::to_string(args.size()),
                     fn.column);
      Expr e{b.op, 0.0, {}, 0, std::move(args), fn.column};
      return e;
    }
    lex_.fail_at("unknown function '" + fn.text + "'", fn.column);
  }

  LineLexer& lex_;
};

inline std::string feature_name(LineLexer& lex, const char* what) {
  const Token& t = lex.peek();
  if (t.kind == Token::Kind::Ident && t.text != "N") return lex.take().text;
  if (t.kind == Token::Kind::Quoted) return lex.take().text;
  lex.fail(std::string("expected ") + what);
}

inline NoiseDist distribution(LineLexer& lex) {
  const Token& t = lex.peek();
  if (t.kind != Token::Kind::Ident) lex.fail("expected a distribution name");
  Token name = lex.take();
  lex.expect_symbol('(');
  std::vector<double> args;
  if (!lex.accept_symbol(')')) {
    do {
      double sign = 1.0;
      while (lex.peek().kind == Token::Kind::Symbol && (lex.peek().text == "-" || lex.peek().text == "+")) {
        if (lex.take().text == "-") sign = -sign;
      }
      if (lex.peek().kind != Token::Kind::Number) lex.fail("expected a numeric distribution argument");
      args.push_back(sign * lex.take().number);
    } while (lex.accept_symbol(','));
    lex.expect_symbol(')');
  }
  auto arity = [&](std::size_t n) {
    if (args.size() != n)
      lex.fail_at(name.text + " takes " + std::to_string(n) + " argument(s), got " + std::to_string(args.size()),
                  name.column);
  };
  if (name.text == "Uniform") {
    arity(2);
    if (args[0] > args[1]) lex.fail_at("Uniform needs lo <= hi", name.column);
    return NoiseDist::uniform(args[0], args[1]);
  }
  if (name.text == "DiscreteUniform") {
    arity(2);
    if (args[0] != std::floor(args[0]) || args[1] != std::floor(args[1]))
      lex.fail_at("DiscreteUniform bounds must be integers", name.column);
    if (args[0] > args[1]) lex.fail_at("DiscreteUniform needs lo <= hi", name.column);
    return NoiseDist::discrete_uniform(static_cast<std::int64_t>(args[0]), static_cast<std::int64_t>(args[1]));
  }
  if (name.text == "Normal") {
    arity(2);
    if (args[1] < 0) lex.fail_at("Normal needs stddev >= 0", name.column);
    return NoiseDist::normal(args[0], args[1]);
  }
  if (name.text == "PointMass") {
    arity(1);
    return NoiseDist::point_mass(args[0]);
  }
  lex.fail_at("unknown distribution '" + name.text + "'", name.column);
}

}  // namespace detail

/// Parses the equation DSL, one equation per line:
///
///     <feature> = <expr> [; noise <feature> ~ <Dist>(args)] [; integer]
///
/// `N` inside <expr> is the equation's own noise; feature names with spaces
/// are double-quoted; `#` starts a comment.
inline Sem parse_sem(std::string_view text) {
  std::vector<Equation> equations;
  std::map<std::string, std::size_t, std::less<>> declared;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;

    detail::LineLexer lex(line, line_no);
    if (lex.peek().kind == detail::Token::Kind::End) continue;

    Equation eq;
    eq.line = line_no;
    const std::size_t name_col = lex.peek().column;
    eq.feature = detail::feature_name(lex, "a feature name");
    if (auto it = declared.find(eq.feature); it != declared.end())
      lex.fail_at("duplicate equation for '" + eq.feature + "' (first on line " +
                      std::to_string(equations[it->second].line) + ")",
                  name_col);
    lex.expect_symbol('=');
    eq.expr = detail::ExprParser(lex).parse();

    std::size_t noise_refs = 0;
    eq.expr.visit([&](const Expr& e) {
      if (e.op != Op::Noise) return;
      if (++noise_refs > 1) lex.fail_at("more than one noise term in the equation for '" + eq.feature + "'", e.column);
    });

    while (lex.accept_symbol(';')) {
      const detail::Token& kw = lex.peek();
      if (kw.kind == detail::Token::Kind::Ident && kw.text == "noise") {
        if (eq.noise) lex.fail("duplicate noise clause");
        lex.take();
        const std::size_t col = lex.peek().column;
        std::string owner = detail::feature_name(lex, "the noise owner");
        if (owner != eq.feature)
          lex.fail_at("noise clause names '" + owner + "' but the equation defines '" + eq.feature + "'", col);
        lex.expect_symbol('~');
        eq.noise = detail::distribution(lex);
      } else if (kw.kind == detail::Token::Kind::Ident && kw.text == "integer") {
        lex.take();
        eq.integer = true;
      } else {
        lex.fail("expected 'noise' or 'integer'");
      }
    }
    if (lex.peek().kind != detail::Token::Kind::End) lex.fail("unexpected trailing input");
    if (noise_refs == 1 && !eq.noise) lex.fail_at("N is used but no noise distribution is declared", name_col);
    if (noise_refs == 0 && eq.noise) lex.fail_at("noise is declared but the expression does not use N", name_col);

    declared.emplace(eq.feature, equations.size());
    equations.push_back(std::move(eq));
  }

  for (auto& eq : equations) {
    eq.expr.visit([&](Expr& e) {
      if (e.op != Op::Feature) return;
      auto it = declared.find(e.name);
      if (it == declared.end())
        throw ParseError("reference to undeclared feature '" + e.name + "'", eq.line, e.column);
      e.feature = it->second;
    });
  }
  return Sem(std::move(equations));
}

inline Sem parse_sem(std::istream& in) {
  std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return parse_sem(text);
}

inline Sem::Sem(std::vector<Equation> equations) {
  auto data = std::make_shared<Data>();
  const std::size_t n = equations.size();
  for (std::size_t i = 0; i < n; ++i) {
    auto& eq = equations[i];
    if (!data->index.emplace(eq.feature, i).second)
      throw ValidationError("duplicate equation for '" + eq.feature + "'");
    data->names.push_back(eq.feature);
  }
  for (auto& eq : equations) {
    if (eq.expr.noise_count() > 1) throw ValidationError("more than one noise term for '" + eq.feature + "'");
    if (eq.expr.uses_noise() != eq.noise.has_value())
      throw ValidationError("noise term and noise distribution disagree for '" + eq.feature + "'");
    eq.parents.clear();
    eq.expr.visit([&](const Expr& e) {
      if (e.op != Op::Feature) return;
      if (e.feature >= n || data->names[e.feature] != e.name)
        throw ValidationError("unresolved reference '" + e.name + "' in '" + eq.feature + "'");
      eq.parents.push_back(e.feature);
    });
    std::sort(eq.parents.begin(), eq.parents.end());
    eq.parents.erase(std::unique(eq.parents.begin(), eq.parents.end()), eq.parents.end());
  }

  // Cycle detection by DFS over parent -> child edges; the report walks the stack.
  std::vector<std::vector<std::size_t>> children(n);
  for (std::size_t c = 0; c < n; ++c)
    for (auto p : equations[c].parents) children[p].push_back(c);
  std::vector<int> color(n, 0);
  std::vector<std::size_t> stack;
  std::function<void(std::size_t)> dfs = [&](std::size_t u) {
    color[u] = 1;
    stack.push_back(u);
    for (auto v : children[u]) {
      if (color[v] == 1) {
        auto from = std::find(stack.begin(), stack.end(), v);
        std::string path;
        for (auto it = from; it != stack.end(); ++it) path += data->names[*it] + " -> ";
        throw ValidationError("cycle detected: " + path + data->names[v]);
      }
      if (color[v] == 0) dfs(v);
    }
    stack.pop_back();
    color[u] = 2;
  };
  for (std::size_t i = 0; i < n; ++i)
    if (color[i] == 0) dfs(i);

  std::vector<std::size_t> pending(n);
  for (std::size_t i = 0; i < n; ++i) pending[i] = equations[i].parents.size();
  std::vector<char> done(n, 0);
  while (data->order.size() < n) {
    for (std::size_t i = 0; i < n; ++i) {
      if (done[i] || pending[i] != 0) continue;
      done[i] = 1;
      data->order.push_back(i);
      for (auto c : children[i]) --pending[c];
      break;
    }
  }

  data->reach.assign(n * n, 0);
  for (auto it = data->order.rbegin(); it != data->order.rend(); ++it) {
    const std::size_t u = *it;
    for (auto c : children[u]) {
      data->reach[u * n + c] = 1;
      for (std::size_t t = 0; t < n; ++t)
        if (data->reach[c * n + t]) data->reach[u * n + t] = 1;
    }
  }
  data->equations = std::move(equations);
  data_ = std::move(data);
}

/// Directed-path reachability in the parent graph.
inline bool affects(const Sem& sem, std::string_view feature, std::string_view target) {
  return sem.reaches(sem.require(feature), sem.require(target));
}

/// Parent graph in DOT; nodes in topological order, edges parent -> child.
inline std::string to_dot(const Sem& sem) {
  auto q = [](const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
      if (c == '"' || c == '\\') out += '\\';
      out += c;
    }
    return out + "\"";
  };
  std::string out = "digraph sem {\n";
  for (auto i : sem.order()) {
    const auto& eq = sem.equation(i);
    out += "  " + q(eq.feature) + " [label=" + q(eq.feature + " = " + to_string(eq.expr)) + "];\n";
  }
  for (auto i : sem.order())
    for (auto p : sem.equation(i).parents) out += "  " + q(sem.features()[p]) + " -> " + q(sem.features()[i]) + ";\n";
  return out + "}\n";
}

// ---------------------------------------------------------------------------
// Evaluation, sampling

namespace detail {

inline double round_half_up(double x) { return std::floor(x + 0.5); }

inline double evaluate_equation(const Equation& eq, std::span<const double> values, double noise) {
  try {
    double v = evaluate(eq.expr, values, noise);
    return eq.integer ? round_half_up(v) : v;
  } catch (const DomainError& e) {
    throw EvalError(eq.feature, e.what());
  }
}

}  // namespace detail

/// Draws `n` rows: every noise independently, equations in topological order.
/// Rows are indexed by declaration order.
inline std::vector<std::vector<double>> sample_values(const Sem& sem, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::vector<double>> rows;
  rows.reserve(n);
  for (std::size_t r = 0; r < n; ++r) {
    std::vector<double> values(sem.size(), 0.0);
    for (auto i : sem.order()) {
      const auto& eq = sem.equation(i);
      const double noise = eq.noise ? eq.noise->draw(rng) : 0.0;
      try {
        values[i] = detail::evaluate_equation(eq, values, noise);
      } catch (const EvalError& e) {
        throw EvalError(e.feature(), std::string(e.what()) + " (row " + std::to_string(r) + ")");
      }
    }
    rows.push_back(std::move(values));
  }
  return rows;
}

/// Plan for a table sampled straight from a SEM: every feature is a
/// trace-level attribute of the same name; the target defaults to the last
/// feature in topological order.
inline SituationFeaturePlan sem_plan(const Sem& sem, std::optional<std::string> target = std::nullopt) {
  if (sem.size() == 0) return {};
  const std::string tgt = target ? *target : sem.features()[sem.order().back()];
  sem.require(tgt);
  SituationFeaturePlan plan;
  for (const auto& name : sem.features())
    if (name != tgt) plan.descriptive.push_back(SituationFeature::of_trace(name, name));
  plan.target = SituationFeature::of_trace(tgt, tgt);
  plan.anchor = Anchor::trace_end();
  return plan;
}

/// `n` sampled rows as a situation table; integer-flagged features are integer-valued.
inline SituationTable sample(const Sem& sem, std::size_t n, std::uint64_t seed,
                             std::optional<std::string> target = std::nullopt) {
  SituationTable table;
  table.plan = sem_plan(sem, std::move(target));
  auto rows = sample_values(sem, n, seed);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    Instance inst;
    inst.provenance = {"s" + std::to_string(r + 1), 0};
    for (std::size_t i = 0; i < sem.size(); ++i) {
      const auto kind = sem.equation(i).integer ? ValueKind::Integer : ValueKind::Real;
      inst.values.emplace(sem.features()[i], from_number(rows[r][i], kind));
    }
    table.rows.push_back(std::move(inst));
  }
  table.domains = compute_domains(table.rows, table.plan.feature_names());
  return table;
}

// ---------------------------------------------------------------------------
// Counterfactual SEM: abduction, action, prediction

/// A SEM with noise fixed to values recovered from one observation, plus
/// optional interventions that replace equations by constants.
struct CounterfactualSem {
  Sem base;
  /// Per feature (declaration order); set for every equation that has noise.
  std::vector<std::optional<double>> noise;
  std::vector<std::optional<double>> interventions;
  /// Recovered noise needed the integer-rounding slack to fit its support.
  std::vector<bool> slack_used;

  bool any_slack() const { return std::find(slack_used.begin(), slack_used.end(), true) != slack_used.end(); }

  /// The equation of `feature` as it stands in this model (abduced noise substituted).
  std::string equation_text(std::string_view feature) const {
    const std::size_t i = base.require(feature);
    const auto& eq = base.equation(i);
    std::string lhs = detail::quote_name(eq.feature) + " = ";
    if (interventions[i]) return lhs + format_number(*interventions[i]);
    if (eq.expr.op == Op::Noise && noise[i]) return lhs + format_number(*noise[i]);
    return lhs + to_string(eq.expr, noise[i] ? format_number(*noise[i]) : std::string("N"));
  }
};

namespace detail {

struct AdditiveTerm {
  double sign;
  const Expr* term;
};

inline void flatten_sum(const Expr& e, double sign, std::vector<AdditiveTerm>& out) {
  switch (e.op) {
    case Op::Add:
      flatten_sum(e.args[0], sign, out);
      flatten_sum(e.args[1], sign, out);
      return;
    case Op::Sub:
      flatten_sum(e.args[0], sign, out);
      flatten_sum(e.args[1], -sign, out);
      return;
    case Op::Neg: flatten_sum(e.args[0], -sign, out); return;
    default: out.push_back({sign, &e});
  }
}

}  // namespace detail

/// Recovers each equation's noise from a fully observed instance. Equations
/// must be additively noise-solvable: `g(parents) ± N`, `N`, or noise-free.
inline CounterfactualSem abduce(const Sem& sem, const Instance& instance) {
  const std::size_t n = sem.size();
  std::vector<double> observed(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& name = sem.features()[i];
    auto it = instance.values.find(name);
    if (it == instance.values.end() || !it->second) throw AbductionError(name, "value is missing");
    auto x = as_number(*it->second);
    if (!x) throw AbductionError(name, "value is not numeric");
    observed[i] = *x;
  }

  CounterfactualSem cf{sem, std::vector<std::optional<double>>(n), std::vector<std::optional<double>>(n),
                       std::vector<bool>(n, false)};
  for (auto i : sem.order()) {
    const auto& eq = sem.equation(i);
    const double tol = 1e-9 * std::max(1.0, std::fabs(observed[i]));
    const double slack = eq.integer ? 0.5 + tol : tol;
    if (!eq.noise) {
      double predicted;
      try {
        predicted = detail::evaluate_equation(eq, observed, 0.0);
      } catch (const EvalError& e) {
        throw AbductionError(eq.feature, e.what());
      }
      if (std::fabs(predicted - observed[i]) > tol)
        throw AbductionError(eq.feature, "noise-free equation gives " + format_number(predicted) +
                                             " but the instance has " + format_number(observed[i]));
      continue;
    }
    std::vector<detail::AdditiveTerm> terms;
    detail::flatten_sum(eq.expr, 1.0, terms);
    double noise_sign = 0.0;
    double rest = 0.0;
    for (const auto& t : terms) {
      if (t.term->op == Op::Noise) {
        noise_sign = t.sign;
        continue;
      }
      if (t.term->uses_noise()) throw AbductionError(eq.feature, "equation is not additively noise-solvable");
      try {
        rest += t.sign * evaluate(*t.term, observed, 0.0);
      } catch (const DomainError& e) {
        throw AbductionError(eq.feature, e.what());
      }
    }
    if (noise_sign == 0.0) throw AbductionError(eq.feature, "equation is not additively noise-solvable");
    const double value = noise_sign * (observed[i] - rest);
    if (!eq.noise->in_support(value, tol)) {
      if (!eq.noise->in_support(value, slack))
        throw AbductionError(eq.feature, "recovered noise " + format_number(value) + " is outside " +
                                             eq.noise->to_string() + " (instance inconsistent with the SEM)");
      cf.slack_used[i] = true;
    }
    cf.noise[i] = value;
  }
  return cf;
}

/// Candidate-style assignment: feature name -> value.
using Assignment = std::map<std::string, AttributeValue, std::less<>>;

/// Replaces the equations of the assigned features by constants; abduced noise is untouched.
inline CounterfactualSem intervene(const CounterfactualSem& cf, const Assignment& assignment) {
  CounterfactualSem out = cf;
  std::fill(out.interventions.begin(), out.interventions.end(), std::nullopt);
  for (const auto& [name, value] : assignment) {
    const std::size_t i = cf.base.require(name);
    auto x = as_number(value);
    if (!x) throw ValidationError("intervention on '" + name + "' needs a numeric value");
    out.interventions[i] = *x;
  }
  return out;
}

/// All feature values of the (possibly intervened) counterfactual model, by declaration index.
inline std::vector<double> evaluate_all(const CounterfactualSem& cf) {
  const auto& sem = cf.base;
  std::vector<double> values(sem.size(), 0.0);
  for (auto i : sem.order()) {
    if (cf.interventions[i]) {
      values[i] = *cf.interventions[i];
      continue;
    }
    const auto& eq = sem.equation(i);
    if (eq.noise && !cf.noise[i]) throw EvalError(eq.feature, "noise value was not abduced");
    values[i] = detail::evaluate_equation(eq, values, cf.noise[i].value_or(0.0));
  }
  return values;
}

inline double predict(const CounterfactualSem& cf, std::string_view target) {
  const std::size_t t = cf.base.require(target);
  return evaluate_all(cf)[t];
}

}  // namespace cfx

#endif  // CFX_SEM_HPP
