#pragma once

// Expression language for immersion components.
//
//   expr    := term (("+" | "-") term)*
//   term    := unary (("*" | "/") unary)*
//   unary   := "-" unary | power
//   power   := primary ("^" unary)?
//   primary := NUMBER | IDENT | IDENT "(" expr ")" | "(" expr ")"
//
// "^" binds tighter than unary minus and is right associative, so "-u^2" is
// -(u^2) and "a^b^c" is a^(b^c). The Unicode minus sign U+2212 is accepted
// wherever "-" is.

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tamed/jet.hpp"

namespace tamed::expr {

enum class Func { Sin, Cos, Tan, Sinh, Cosh, Tanh, Exp, Log, Sqrt, Abs };
enum class NodeKind { Number, Pi, E, Variable, Negate, Add, Sub, Mul, Div, Pow, Call };

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
  NodeKind kind = NodeKind::Number;
  double number = 0.0;  // Number
  int var = -1;         // Variable
  Func func = Func::Sin;
  NodePtr lhs;  // operand of Negate/Call, left of binary ops
  NodePtr rhs;
  std::size_t offset = 0;  // byte offset in the source text
  bool has_vars = false;
};

NodePtr make_number(double value, std::size_t offset = 0);
NodePtr make_leaf(NodeKind kind, std::size_t offset = 0);  // Pi or E
NodePtr make_variable(int index, std::size_t offset = 0);
NodePtr make_unary(NodeKind kind, NodePtr operand, std::size_t offset = 0);  // Negate
NodePtr make_call(Func func, NodePtr arg, std::size_t offset = 0);
NodePtr make_binary(NodeKind kind, NodePtr lhs, NodePtr rhs, std::size_t offset = 0);

const char* func_name(Func f);
bool is_reserved_name(std::string_view name);

/// Immutable parsed expression over a fixed list of variable names.
class Expression {
 public:
  Expression(NodePtr root, std::vector<std::string> vars, std::string source = {});

  const Node& root() const noexcept { return *root_; }
  const NodePtr& root_ptr() const noexcept { return root_; }
  const std::vector<std::string>& vars() const noexcept { return vars_; }
  const std::string& source() const noexcept { return source_; }

  /// Fully parenthesized canonical form; parse(print()) reproduces the tree.
  std::string print() const;

  double evaluate(std::span<const double> x) const;
  /// Value, gradient and Hessian with respect to all variables.
  Jet2 evaluate_jet(std::span<const double> x) const;

  bool structurally_equal(const Expression& other) const;

 private:
  NodePtr root_;
  std::vector<std::string> vars_;
  std::string source_;
};

/// Parses `source` against the declared variable names. Throws ParseError with a byte offset.
Expression parse_immersion(std::string_view source, const std::vector<std::string>& vars);

bool structurally_equal(const Node& a, const Node& b);

}  // namespace tamed::expr
