#include "tamed/expression.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <numbers>
#include <optional>
#include <system_error>

#include "tamed/errors.hpp"

namespace tamed::expr {

namespace {

struct FuncEntry {
  const char* name;
  Func func;
};

constexpr std::array<FuncEntry, 10> kFunctions{{{"sin", Func::Sin},
                                                {"cos", Func::Cos},
                                                {"tan", Func::Tan},
                                                {"sinh", Func::Sinh},
                                                {"cosh", Func::Cosh},
                                                {"tanh", Func::Tanh},
                                                {"exp", Func::Exp},
                                                {"log", Func::Log},
                                                {"sqrt", Func::Sqrt},
                                                {"abs", Func::Abs}}};

std::optional<Func> lookup_func(std::string_view name) {
  for (const auto& f : kFunctions)
    if (name == f.name) return f.func;
  return std::nullopt;
}

bool is_ident_start(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; }
bool is_digit(char c) { return c >= '0' && c <= '9'; }

class Parser {
 public:
  Parser(std::string_view src, const std::vector<std::string>& vars) : src_(src), vars_(vars) {}

  NodePtr parse() {
    skip_ws();
    if (pos_ >= src_.size()) throw ParseError("empty expression", pos_);
    NodePtr e = expr();
    skip_ws();
    if (pos_ < src_.size()) {
      if (src_[pos_] == ')') throw ParseError("unbalanced parentheses: unexpected ')'", pos_);
      throw ParseError("unexpected character '" + std::string(1, src_[pos_]) + "'", pos_);
    }
    return e;
  }

 private:
  void skip_ws() {
    while (pos_ < src_.size() && (src_[pos_] == ' ' || src_[pos_] == '\t' || src_[pos_] == '\n' || src_[pos_] == '\r'))
      ++pos_;
  }

  // Length of a minus sign at the cursor: 1 for '-', 3 for U+2212, 0 otherwise.
  std::size_t minus_len() const {
    if (pos_ < src_.size() && src_[pos_] == '-') return 1;
    if (src_.substr(pos_, 3) == "\xE2\x88\x92") return 3;
    return 0;
  }

  bool peek(char c) {
    skip_ws();
    return pos_ < src_.size() && src_[pos_] == c;
  }

  NodePtr expr() {
    NodePtr lhs = term();
    for (;;) {
      skip_ws();
      const std::size_t at = pos_;
      if (peek('+')) {
        ++pos_;
        lhs = make_binary(NodeKind::Add, lhs, term(), at);
      } else if (std::size_t n = minus_len()) {
        pos_ += n;
        lhs = make_binary(NodeKind::Sub, lhs, term(), at);
      } else {
        return lhs;
      }
    }
  }

  NodePtr term() {
    NodePtr lhs = unary();
    for (;;) {
      skip_ws();
      const std::size_t at = pos_;
      if (peek('*')) {
        ++pos_;
        lhs = make_binary(NodeKind::Mul, lhs, unary(), at);
      } else if (peek('/')) {
        ++pos_;
        lhs = make_binary(NodeKind::Div, lhs, unary(), at);
      } else {
        return lhs;
      }
    }
  }

  NodePtr unary() {
    skip_ws();
    if (std::size_t n = minus_len()) {
      const std::size_t at = pos_;
      pos_ += n;
      return make_unary(NodeKind::Negate, unary(), at);
    }
    return power();
  }

  NodePtr power() {
    NodePtr base = primary();
    skip_ws();
    if (peek('^')) {
      const std::size_t at = pos_++;
      return make_binary(NodeKind::Pow, base, unary(), at);
    }
    return base;
  }

  NodePtr primary() {
    skip_ws();
    if (pos_ >= src_.size()) throw ParseError("unexpected end of expression", pos_);
    const std::size_t at = pos_;
    const char c = src_[pos_];
    if (c == '(') {
      ++pos_;
      skip_ws();
      if (peek(')')) throw ParseError("empty parentheses", pos_);
      NodePtr inner = expr();
      expect_close(at);
      return inner;
    }
    if (is_digit(c) || c == '.') return number();
    if (is_ident_start(c)) return identifier();
    if (c == ')') throw ParseError("unbalanced parentheses: unexpected ')'", pos_);
    throw ParseError("unexpected character '" + std::string(1, c) + "'", pos_);
  }

  void expect_close(std::size_t open_at) {
    skip_ws();
    if (pos_ >= src_.size() || src_[pos_] != ')')
      throw ParseError("unbalanced parentheses: '(' at byte " + std::to_string(open_at) + " is not closed", pos_);
    ++pos_;
  }

  NodePtr number() {
    const std::size_t at = pos_;
    std::size_t end = pos_;
    while (end < src_.size() && is_digit(src_[end])) ++end;
    if (end < src_.size() && src_[end] == '.') {
      ++end;
      while (end < src_.size() && is_digit(src_[end])) ++end;
    }
    if (end < src_.size() && (src_[end] == 'e' || src_[end] == 'E')) {
      std::size_t exp_end = end + 1;
      if (exp_end < src_.size() && (src_[exp_end] == '+' || src_[exp_end] == '-')) ++exp_end;
      if (exp_end < src_.size() && is_digit(src_[exp_end])) {
        while (exp_end < src_.size() && is_digit(src_[exp_end])) ++exp_end;
        end = exp_end;
      }
    }
    double value = 0.0;
    const auto res = std::from_chars(src_.data() + at, src_.data() + end, value);
    if (res.ec != std::errc() || res.ptr != src_.data() + end) throw ParseError("malformed number", at);
    pos_ = end;
    return make_number(value, at);
  }

  NodePtr identifier() {
    const std::size_t at = pos_;
    std::size_t end = pos_;
    while (end < src_.size() && (is_ident_start(src_[end]) || is_digit(src_[end]))) ++end;
    const std::string name(src_.substr(at, end - at));
    pos_ = end;
    if (auto f = lookup_func(name)) {
      skip_ws();
      if (!peek('(')) throw ParseError("function '" + name + "' requires a parenthesized argument", pos_);
      const std::size_t open = pos_++;
      skip_ws();
      if (peek(')')) throw ParseError("empty argument to '" + name + "'", pos_);
      NodePtr arg = expr();
      expect_close(open);
      return make_call(*f, arg, at);
    }
    if (name == "pi") return make_leaf(NodeKind::Pi, at);
    if (name == "e") return make_leaf(NodeKind::E, at);
    for (std::size_t i = 0; i < vars_.size(); ++i)
      if (vars_[i] == name) return make_variable(static_cast<int>(i), at);
    throw ParseError("undeclared identifier " + name, at);
  }

  std::string_view src_;
  const std::vector<std::string>& vars_;
  std::size_t pos_ = 0;
};

void print_node(const Node& n, const std::vector<std::string>& vars, std::string& out) {
  switch (n.kind) {
    case NodeKind::Number: {
      std::array<char, 64> buf{};
      const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), n.number);
      out.append(buf.data(), res.ptr);
      return;
    }
    case NodeKind::Pi: out += "pi"; return;
    case NodeKind::E: out += "e"; return;
    case NodeKind::Variable: out += vars.at(static_cast<std::size_t>(n.var)); return;
    case NodeKind::Negate:
      out += "(-";
      print_node(*n.lhs, vars, out);
      out += ')';
      return;
    case NodeKind::Call:
      out += func_name(n.func);
      out += '(';
      print_node(*n.lhs, vars, out);
      out += ')';
      return;
    default: break;
  }
  char op = '+';
  switch (n.kind) {
    case NodeKind::Sub: op = '-'; break;
    case NodeKind::Mul: op = '*'; break;
    case NodeKind::Div: op = '/'; break;
    case NodeKind::Pow: op = '^'; break;
    default: break;
  }
  out += '(';
  print_node(*n.lhs, vars, out);
  out += ' ';
  out += op;
  out += ' ';
  print_node(*n.rhs, vars, out);
  out += ')';
}

// ---- evaluation -------------------------------------------------------------

struct ScalarOps {
  using T = double;
  int n = 0;
  T constant(double c) const { return c; }
  T variable(std::span<const double> x, int i) const { return x[static_cast<std::size_t>(i)]; }
  static double value(const T& t) { return t; }
  static bool finite(const T& t) { return std::isfinite(t); }
  static bool is_constant(const T&) { return true; }
  static T apply(const T& a, double f0, double, double) {
    (void)a;
    return f0;
  }
  static T add(const T& a, const T& b) { return a + b; }
  static T sub(const T& a, const T& b) { return a - b; }
  static T mul(const T& a, const T& b) { return a * b; }
  static T div(const T& a, const T& b) { return a / b; }
  static T neg(const T& a) { return -a; }
};

struct JetOps {
  using T = Jet2;
  int n = 0;
  T constant(double c) const { return Jet2::constant(c, n); }
  T variable(std::span<const double> x, int i) const { return Jet2::variable(x[static_cast<std::size_t>(i)], i, n); }
  static double value(const T& t) { return t.v; }
  static bool finite(const T& t) { return t.all_finite(); }
  static bool is_constant(const T& t) { return t.is_constant(); }
  static T apply(const T& a, double f0, double f1, double f2) { return chain(a, f0, f1, f2); }
  static T add(const T& a, const T& b) { return a + b; }
  static T sub(const T& a, const T& b) { return a - b; }
  static T mul(const T& a, const T& b) { return a * b; }
  static T div(const T& a, const T& b) { return a / b; }
  static T neg(const T& a) { return -a; }
};

template <class Ops>
typename Ops::T apply_func(const Ops&, Func f, const typename Ops::T& a, const Node& node) {
  const double x = Ops::value(a);
  switch (f) {
    case Func::Sin: return Ops::apply(a, std::sin(x), std::cos(x), -std::sin(x));
    case Func::Cos: return Ops::apply(a, std::cos(x), -std::sin(x), -std::cos(x));
    case Func::Tan: {
      const double t = std::tan(x);
      const double sec2 = 1.0 + t * t;
      return Ops::apply(a, t, sec2, 2.0 * t * sec2);
    }
    case Func::Sinh: return Ops::apply(a, std::sinh(x), std::cosh(x), std::sinh(x));
    case Func::Cosh: return Ops::apply(a, std::cosh(x), std::sinh(x), std::cosh(x));
    case Func::Tanh: {
      const double t = std::tanh(x);
      const double s = 1.0 - t * t;
      return Ops::apply(a, t, s, -2.0 * t * s);
    }
    case Func::Exp: {
      const double e = std::exp(x);
      return Ops::apply(a, e, e, e);
    }
    case Func::Log:
      if (!(x > 0.0)) throw EvaluationError("log of non-positive argument", node.offset);
      return Ops::apply(a, std::log(x), 1.0 / x, -1.0 / (x * x));
    case Func::Sqrt: {
      if (x < 0.0) throw EvaluationError("sqrt of negative argument", node.offset);
      const double r = std::sqrt(x);
      return Ops::apply(a, r, 0.5 / r, -0.25 / (r * x));
    }
    case Func::Abs: {
      const double sgn = x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0);
      return Ops::apply(a, std::abs(x), sgn, 0.0);
    }
  }
  return a;
}

template <class Ops>
typename Ops::T power(const Ops& ops, const typename Ops::T& base, const typename Ops::T& expo, bool expo_constant,
                      const Node& node) {
  const double b = Ops::value(base);
  const double p = Ops::value(expo);
  if (expo_constant) {
    if (p == std::round(p)) {
      if (p == 0.0) return ops.constant(1.0);
      if (p == 1.0) return base;
      const double f1 = p * std::pow(b, p - 1.0);
      const double f2 = p * (p - 1.0) * std::pow(b, p - 2.0);
      return Ops::apply(base, std::pow(b, p), f1, f2);
    }
    if (b < 0.0) throw EvaluationError("negative base with non-integer exponent", node.offset);
    return Ops::apply(base, std::pow(b, p), p * std::pow(b, p - 1.0), p * (p - 1.0) * std::pow(b, p - 2.0));
  }
  if (!(b > 0.0)) throw EvaluationError("variable exponent requires a positive base", node.offset);
  // b^p = exp(p log b)
  const auto log_b = Ops::apply(base, std::log(b), 1.0 / b, -1.0 / (b * b));
  const auto arg = Ops::mul(expo, log_b);
  const double e = std::exp(Ops::value(arg));
  return Ops::apply(arg, e, e, e);
}

template <class Ops>
typename Ops::T eval_node(const Ops& ops, const Node& n, std::span<const double> x) {
  typename Ops::T r{};
  switch (n.kind) {
    case NodeKind::Number: r = ops.constant(n.number); break;
    case NodeKind::Pi: r = ops.constant(std::numbers::pi); break;
    case NodeKind::E: r = ops.constant(std::numbers::e); break;
    case NodeKind::Variable: r = ops.variable(x, n.var); break;
    case NodeKind::Negate: r = Ops::neg(eval_node(ops, *n.lhs, x)); break;
    case NodeKind::Call: r = apply_func(ops, n.func, eval_node(ops, *n.lhs, x), n); break;
    case NodeKind::Add: r = Ops::add(eval_node(ops, *n.lhs, x), eval_node(ops, *n.rhs, x)); break;
    case NodeKind::Sub: r = Ops::sub(eval_node(ops, *n.lhs, x), eval_node(ops, *n.rhs, x)); break;
    case NodeKind::Mul: r = Ops::mul(eval_node(ops, *n.lhs, x), eval_node(ops, *n.rhs, x)); break;
    case NodeKind::Div: {
      const auto den = eval_node(ops, *n.rhs, x);
      if (Ops::value(den) == 0.0) throw EvaluationError("division by zero", n.offset);
      r = Ops::div(eval_node(ops, *n.lhs, x), den);
      break;
    }
    case NodeKind::Pow:
      r = power(ops, eval_node(ops, *n.lhs, x), eval_node(ops, *n.rhs, x), !n.rhs->has_vars, n);
      break;
  }
  if (!Ops::finite(r)) throw EvaluationError("non-finite value", n.offset);
  return r;
}

}  // namespace

NodePtr make_number(double value, std::size_t offset) {
  auto n = std::make_shared<Node>();
  n->kind = NodeKind::Number;
  n->number = value;
  n->offset = offset;
  return n;
}

NodePtr make_leaf(NodeKind kind, std::size_t offset) {
  auto n = std::make_shared<Node>();
  n->kind = kind;
  n->offset = offset;
  return n;
}

NodePtr make_variable(int index, std::size_t offset) {
  auto n = std::make_shared<Node>();
  n->kind = NodeKind::Variable;
  n->var = index;
  n->offset = offset;
  n->has_vars = true;
  return n;
}

NodePtr make_unary(NodeKind kind, NodePtr operand, std::size_t offset) {
  auto n = std::make_shared<Node>();
  n->kind = kind;
  n->has_vars = operand->has_vars;
  n->lhs = std::move(operand);
  n->offset = offset;
  return n;
}

NodePtr make_call(Func func, NodePtr arg, std::size_t offset) {
  auto n = std::make_shared<Node>();
  n->kind = NodeKind::Call;
  n->func = func;
  n->has_vars = arg->has_vars;
  n->lhs = std::move(arg);
  n->offset = offset;
  return n;
}

NodePtr make_binary(NodeKind kind, NodePtr lhs, NodePtr rhs, std::size_t offset) {
  auto n = std::make_shared<Node>();
  n->kind = kind;
  n->has_vars = lhs->has_vars || rhs->has_vars;
  n->lhs = std::move(lhs);
  n->rhs = std::move(rhs);
  n->offset = offset;
  return n;
}

const char* func_name(Func f) {
  for (const auto& e : kFunctions)
    if (e.func == f) return e.name;
  return "?";
}

bool is_reserved_name(std::string_view name) { return name == "pi" || name == "e" || lookup_func(name).has_value(); }

Expression::Expression(NodePtr root, std::vector<std::string> vars, std::string source)
    : root_(std::move(root)), vars_(std::move(vars)), source_(std::move(source)) {
  if (static_cast<int>(vars_.size()) > kMaxChartDim)
    throw ParseError("at most " + std::to_string(kMaxChartDim) + " variables are supported", 0);
}

std::string Expression::print() const {
  std::string out;
  print_node(*root_, vars_, out);
  return out;
}

double Expression::evaluate(std::span<const double> x) const {
  ScalarOps ops{static_cast<int>(vars_.size())};
  return eval_node(ops, *root_, x);
}

Jet2 Expression::evaluate_jet(std::span<const double> x) const {
  JetOps ops{static_cast<int>(vars_.size())};
  return eval_node(ops, *root_, x);
}

bool Expression::structurally_equal(const Expression& other) const {
  return vars_ == other.vars_ && expr::structurally_equal(*root_, *other.root_);
}

bool structurally_equal(const Node& a, const Node& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case NodeKind::Number: return a.number == b.number;
    case NodeKind::Pi:
    case NodeKind::E: return true;
    case NodeKind::Variable: return a.var == b.var;
    case NodeKind::Negate: return structurally_equal(*a.lhs, *b.lhs);
    case NodeKind::Call: return a.func == b.func && structurally_equal(*a.lhs, *b.lhs);
    default: return structurally_equal(*a.lhs, *b.lhs) && structurally_equal(*a.rhs, *b.rhs);
  }
}

Expression parse_immersion(std::string_view source, const std::vector<std::string>& vars) {
  for (const auto& v : vars)
    if (is_reserved_name(v)) throw ParseError("variable name '" + v + "' is reserved", 0);
  Parser p(source, vars);
  return Expression(p.parse(), vars, std::string(source));
}

}  // namespace tamed::expr
