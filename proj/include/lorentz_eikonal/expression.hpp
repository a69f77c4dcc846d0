// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace lorentz_eikonal {

class BoundExpression;

// Immutable arithmetic expression tree over literals and named variables.
// Supported functions are listed in Expression::Function.
//
// Grammar (precedence from loosest to tightest):
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := '-' unary | power
//   power   := primary (('**' | '^') unary)?        right associative
//   primary := number | name | name '(' expr ')' | '(' expr ')'
class Expression {
 public:
  enum class Kind { Number, Variable, Negate, Add, Sub, Mul, Div, Pow, Call };
  enum class Function { Sin, Cos, Exp, Sqrt, Abs, Tanh };

  struct Node {
    Kind kind = Kind::Number;
    double value = 0.0;
    std::string name;
    Function function = Function::Sin;
    std::size_t position = 0;  // source offset, used for diagnostics
    std::shared_ptr<const Node> lhs;
    std::shared_ptr<const Node> rhs;
  };
  using NodePtr = std::shared_ptr<const Node>;

  Expression();  // the literal 0
  explicit Expression(NodePtr root);

  static Expression number(double v);
  static Expression variable(std::string name);

  const Node& root() const { return *root_; }
  const NodePtr& root_ptr() const { return root_; }

  // Resolves variable names to slots; throws Error(UnknownSymbol) naming the
  // offending identifier and its source position.
  BoundExpression bind(std::span<const std::string> names) const;

  double evaluate(const std::map<std::string, double>& values) const;

  // Symbolic partial derivative with light constant folding. Throws
  // Error(InvalidConfig) for powers whose exponent depends on `var`.
  Expression derivative(std::string_view var) const;

  bool depends_on(std::string_view var) const;
  std::vector<std::string> variables() const;

  // Canonical text: minimal parentheses, 17 significant digits for literals.
  std::string to_string() const;

  friend bool operator==(const Expression& a, const Expression& b);

 private:
  NodePtr root_;
};

Expression parse_expression(std::string_view text);

// Flattened, slot-indexed form used on hot paths.
class BoundExpression {
 public:
  BoundExpression() = default;

  double operator()(std::span<const double> values) const;
  std::size_t arity() const { return arity_; }

 private:
  friend class Expression;

  enum class Op : unsigned char { Push, Load, Neg, Add, Sub, Mul, Div, Pow, Sin, Cos, Exp, Sqrt, Abs, Tanh };
  struct Instr {
    Op op;
    int slot = 0;
    double value = 0.0;
  };

  std::vector<Instr> code_;
  std::size_t arity_ = 0;
  std::size_t max_stack_ = 0;
};

std::string_view function_name(Expression::Function f);

}  // namespace lorentz_eikonal
