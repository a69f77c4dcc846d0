// SPDX-License-Identifier: Apache-2.0
#include "lorentz_eikonal/expression.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <set>

#include "lorentz_eikonal/errors.hpp"

namespace lorentz_eikonal {

namespace {

using Node = Expression::Node;
using NodePtr = Expression::NodePtr;
using Kind = Expression::Kind;
using Function = Expression::Function;

NodePtr make_number(double v, std::size_t pos = 0) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Number;
  n->value = v;
  n->position = pos;
  return n;
}

NodePtr make_variable(std::string name, std::size_t pos = 0) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Variable;
  n->name = std::move(name);
  n->position = pos;
  return n;
}

NodePtr make_unary(Kind kind, NodePtr operand, std::size_t pos = 0) {
  auto n = std::make_shared<Node>();
  n->kind = kind;
  n->lhs = std::move(operand);
  n->position = pos;
  return n;
}

NodePtr make_binary(Kind kind, NodePtr lhs, NodePtr rhs, std::size_t pos = 0) {
  auto n = std::make_shared<Node>();
  n->kind = kind;
  n->lhs = std::move(lhs);
  n->rhs = std::move(rhs);
  n->position = pos;
  return n;
}

NodePtr make_call(Function f, NodePtr arg, std::size_t pos = 0) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Call;
  n->function = f;
  n->lhs = std::move(arg);
  n->position = pos;
  return n;
}

bool lookup_function(std::string_view name, Function& out) {
  static const std::pair<std::string_view, Function> table[] = {
      {"sin", Function::Sin},   {"cos", Function::Cos}, {"exp", Function::Exp},
      {"sqrt", Function::Sqrt}, {"abs", Function::Abs}, {"tanh", Function::Tanh},
  };
  for (const auto& [n, f] : table) {
    if (n == name) {
      out = f;
      return true;
    }
  }
  return false;
}

// ---------------------------------------------------------------------------
// Lexer / recursive-descent parser

enum class Tok { Number, Name, Plus, Minus, Star, Slash, Pow, LParen, RParen, End };

struct Token {
  Tok kind;
  std::size_t pos;
  double value = 0.0;
  std::string text;
};

std::vector<Token> tokenize(std::string_view s) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < s.size()) {
    const char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    const std::size_t start = i;
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      std::size_t j = i;
      bool digits = false;
      while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j, digits = true;
      if (j < s.size() && s[j] == '.') {
        ++j;
        while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j, digits = true;
      }
      if (!digits) throw SyntaxError(start, "digit", "malformed number");
      if (j < s.size() && (s[j] == 'e' || s[j] == 'E')) {
        std::size_t k = j + 1;
        if (k < s.size() && (s[k] == '+' || s[k] == '-')) ++k;
        if (k >= s.size() || !std::isdigit(static_cast<unsigned char>(s[k])))
          throw SyntaxError(k, "exponent digits", "malformed number");
        while (k < s.size() && std::isdigit(static_cast<unsigned char>(s[k]))) ++k;
        j = k;
      }
      const std::string lit(s.substr(i, j - i));
      out.push_back({Tok::Number, start, std::strtod(lit.c_str(), nullptr), lit});
      i = j;
      continue;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < s.size() && (std::isalnum(static_cast<unsigned char>(s[j])) || s[j] == '_')) ++j;
      out.push_back({Tok::Name, start, 0.0, std::string(s.substr(i, j - i))});
      i = j;
      continue;
    }
    switch (c) {
      case '+': out.push_back({Tok::Plus, start, 0.0, {}}); ++i; break;
      case '-': out.push_back({Tok::Minus, start, 0.0, {}}); ++i; break;
      case '/': out.push_back({Tok::Slash, start, 0.0, {}}); ++i; break;
      case '^': out.push_back({Tok::Pow, start, 0.0, {}}); ++i; break;
      case '(': out.push_back({Tok::LParen, start, 0.0, {}}); ++i; break;
      case ')': out.push_back({Tok::RParen, start, 0.0, {}}); ++i; break;
      case '*':
        if (i + 1 < s.size() && s[i + 1] == '*') {
          out.push_back({Tok::Pow, start, 0.0, {}});
          i += 2;
        } else {
          out.push_back({Tok::Star, start, 0.0, {}});
          ++i;
        }
        break;
      default:
        throw SyntaxError(start, "", std::string("unexpected character '") + c + "'");
    }
  }
  out.push_back({Tok::End, s.size(), 0.0, {}});
  return out;
}

class Parser {
 public:
  explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

  NodePtr parse() {
    NodePtr e = expr();
    if (peek().kind != Tok::End) throw SyntaxError(peek().pos, "operator or end of input", "trailing input");
    return e;
  }

 private:
  const Token& peek() const { return toks_[i_]; }
  const Token& next() { return toks_[i_++]; }

  NodePtr expr() {
    NodePtr lhs = term();
    while (peek().kind == Tok::Plus || peek().kind == Tok::Minus) {
      const Token& op = next();
      NodePtr rhs = term();
      lhs = make_binary(op.kind == Tok::Plus ? Kind::Add : Kind::Sub, lhs, rhs, op.pos);
    }
    return lhs;
  }

  NodePtr term() {
    NodePtr lhs = unary();
    while (peek().kind == Tok::Star || peek().kind == Tok::Slash) {
      const Token& op = next();
      NodePtr rhs = unary();
      lhs = make_binary(op.kind == Tok::Star ? Kind::Mul : Kind::Div, lhs, rhs, op.pos);
    }
    return lhs;
  }

  NodePtr unary() {
    if (peek().kind == Tok::Minus) {
      const Token& op = next();
      return make_unary(Kind::Negate, unary(), op.pos);
    }
    return power();
  }

  NodePtr power() {
    NodePtr base = primary();
    if (peek().kind == Tok::Pow) {
      const Token& op = next();
      return make_binary(Kind::Pow, base, unary(), op.pos);
    }
    return base;
  }

  NodePtr primary() {
    const Token& t = peek();
    switch (t.kind) {
      case Tok::Number:
        next();
        return make_number(t.value, t.pos);
      case Tok::Name: {
        next();
        if (peek().kind == Tok::LParen) {
          Function f;
          if (!lookup_function(t.text, f))
            throw SyntaxError(t.pos, "sin, cos, exp, sqrt, abs or tanh", "unknown function '" + t.text + "'");
          next();
          NodePtr arg = expr();
          if (peek().kind != Tok::RParen) throw SyntaxError(peek().pos, "')'", "unclosed call");
          next();
          return make_call(f, arg, t.pos);
        }
        return make_variable(t.text, t.pos);
      }
      case Tok::LParen: {
        next();
        NodePtr e = expr();
        if (peek().kind != Tok::RParen) throw SyntaxError(peek().pos, "')'", "unbalanced parenthesis");
        next();
        return e;
      }
      default:
        throw SyntaxError(t.pos, "number, name, '(' or '-'",
                          t.kind == Tok::End ? "unexpected end of input" : "unexpected token");
    }
  }

  std::vector<Token> toks_;
  std::size_t i_ = 0;
};

// ---------------------------------------------------------------------------
// Printing

int precedence(const Node& n) {
  switch (n.kind) {
    case Kind::Add:
    case Kind::Sub: return 1;
    case Kind::Mul:
    case Kind::Div: return 2;
    case Kind::Negate: return 3;
    case Kind::Pow: return 4;
    case Kind::Number: return n.value < 0 ? 0 : 5;
    default: return 5;
  }
}

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void print(const Node& n, std::string& out);

void print_wrapped(const Node& n, bool wrap, std::string& out) {
  if (wrap) out += '(';
  print(n, out);
  if (wrap) out += ')';
}

void print(const Node& n, std::string& out) {
  switch (n.kind) {
    case Kind::Number: out += format_number(n.value); return;
    case Kind::Variable: out += n.name; return;
    case Kind::Negate:
      out += '-';
      print_wrapped(*n.lhs, precedence(*n.lhs) < 3, out);
      return;
    case Kind::Call:
      out += function_name(n.function);
      out += '(';
      print(*n.lhs, out);
      out += ')';
      return;
    case Kind::Pow:
      print_wrapped(*n.lhs, precedence(*n.lhs) <= 4, out);
      out += "**";
      print_wrapped(*n.rhs, precedence(*n.rhs) < 3, out);
      return;
    default: {
      const int p = precedence(n);
      const char* op = n.kind == Kind::Add ? "+" : n.kind == Kind::Sub ? "-" : n.kind == Kind::Mul ? "*" : "/";
      print_wrapped(*n.lhs, precedence(*n.lhs) < p, out);
      out += op;
      print_wrapped(*n.rhs, precedence(*n.rhs) <= p, out);
      return;
    }
  }
}

bool equal(const Node& a, const Node& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case Kind::Number: return a.value == b.value;
    case Kind::Variable: return a.name == b.name;
    case Kind::Negate: return equal(*a.lhs, *b.lhs);
    case Kind::Call: return a.function == b.function && equal(*a.lhs, *b.lhs);
    default: return equal(*a.lhs, *b.lhs) && equal(*a.rhs, *b.rhs);
  }
}

void collect_variables(const Node& n, std::set<std::string>& out) {
  if (n.kind == Kind::Variable) out.insert(n.name);
  if (n.lhs) collect_variables(*n.lhs, out);
  if (n.rhs) collect_variables(*n.rhs, out);
}

// ---------------------------------------------------------------------------
// Differentiation with constant folding

bool is_const(const NodePtr& n, double v) { return n->kind == Kind::Number && n->value == v; }

NodePtr num(double v) { return v < 0 ? make_unary(Kind::Negate, make_number(-v)) : make_number(v); }

bool literal_value(const NodePtr& n, double& v) {
  if (n->kind == Kind::Number) {
    v = n->value;
    return true;
  }
  if (n->kind == Kind::Negate && n->lhs->kind == Kind::Number) {
    v = -n->lhs->value;
    return true;
  }
  return false;
}

NodePtr add(NodePtr a, NodePtr b) {
  double x, y;
  if (literal_value(a, x) && literal_value(b, y)) return num(x + y);
  if (is_const(a, 0)) return b;
  if (is_const(b, 0)) return a;
  return make_binary(Kind::Add, a, b);
}

NodePtr sub(NodePtr a, NodePtr b) {
  double x, y;
  if (literal_value(a, x) && literal_value(b, y)) return num(x - y);
  if (is_const(b, 0)) return a;
  if (is_const(a, 0)) return make_unary(Kind::Negate, b);
  return make_binary(Kind::Sub, a, b);
}

NodePtr mul(NodePtr a, NodePtr b) {
  double x, y;
  if (literal_value(a, x) && literal_value(b, y)) return num(x * y);
  if (is_const(a, 0) || is_const(b, 0)) return make_number(0.0);
  if (is_const(a, 1)) return b;
  if (is_const(b, 1)) return a;
  return make_binary(Kind::Mul, a, b);
}

NodePtr div(NodePtr a, NodePtr b) {
  if (is_const(a, 0)) return make_number(0.0);
  if (is_const(b, 1)) return a;
  return make_binary(Kind::Div, a, b);
}

NodePtr neg(NodePtr a) {
  double x;
  if (literal_value(a, x)) return num(-x);
  return make_unary(Kind::Negate, a);
}

bool depends(const Node& n, std::string_view var) {
  if (n.kind == Kind::Variable) return n.name == var;
  return (n.lhs && depends(*n.lhs, var)) || (n.rhs && depends(*n.rhs, var));
}

NodePtr diff(const NodePtr& n, std::string_view var) {
  if (!depends(*n, var)) return make_number(0.0);
  switch (n->kind) {
    case Kind::Number: return make_number(0.0);
    case Kind::Variable: return make_number(1.0);
    case Kind::Negate: return neg(diff(n->lhs, var));
    case Kind::Add: return add(diff(n->lhs, var), diff(n->rhs, var));
    case Kind::Sub: return sub(diff(n->lhs, var), diff(n->rhs, var));
    case Kind::Mul: return add(mul(diff(n->lhs, var), n->rhs), mul(n->lhs, diff(n->rhs, var)));
    case Kind::Div:
      return div(sub(mul(diff(n->lhs, var), n->rhs), mul(n->lhs, diff(n->rhs, var))),
                 make_binary(Kind::Pow, n->rhs, make_number(2.0)));
    case Kind::Pow: {
      if (depends(*n->rhs, var))
        throw Error(ErrorCode::InvalidConfig, "cannot differentiate a power with variable exponent");
      // d(u^c) = c * u^(c-1) * u'
      NodePtr exponent = sub(n->rhs, make_number(1.0));
      NodePtr powered = is_const(exponent, 1.0) ? n->lhs : make_binary(Kind::Pow, n->lhs, exponent);
      if (is_const(exponent, 0.0)) powered = make_number(1.0);
      return mul(mul(n->rhs, powered), diff(n->lhs, var));
    }
    case Kind::Call: {
      const NodePtr& u = n->lhs;
      NodePtr du = diff(u, var);
      switch (n->function) {
        case Function::Sin: return mul(make_call(Function::Cos, u), du);
        case Function::Cos: return mul(neg(make_call(Function::Sin, u)), du);
        case Function::Exp: return mul(n, du);
        case Function::Sqrt: return div(du, mul(make_number(2.0), n));
        case Function::Abs: return mul(div(u, n), du);
        case Function::Tanh:
          return mul(sub(make_number(1.0), make_binary(Kind::Pow, n, make_number(2.0))), du);
      }
    }
  }
  return make_number(0.0);
}

double eval_node(const Node& n, const std::map<std::string, double>& values) {
  switch (n.kind) {
    case Kind::Number: return n.value;
    case Kind::Variable: {
      auto it = values.find(n.name);
      if (it == values.end())
        throw Error(ErrorCode::UnknownSymbol,
                    "'" + n.name + "' at position " + std::to_string(n.position) + " has no value");
      return it->second;
    }
    case Kind::Negate: return -eval_node(*n.lhs, values);
    case Kind::Add: return eval_node(*n.lhs, values) + eval_node(*n.rhs, values);
    case Kind::Sub: return eval_node(*n.lhs, values) - eval_node(*n.rhs, values);
    case Kind::Mul: return eval_node(*n.lhs, values) * eval_node(*n.rhs, values);
    case Kind::Div: return eval_node(*n.lhs, values) / eval_node(*n.rhs, values);
    case Kind::Pow: return std::pow(eval_node(*n.lhs, values), eval_node(*n.rhs, values));
    case Kind::Call: {
      const double a = eval_node(*n.lhs, values);
      switch (n.function) {
        case Function::Sin: return std::sin(a);
        case Function::Cos: return std::cos(a);
        case Function::Exp: return std::exp(a);
        case Function::Sqrt: return std::sqrt(a);
        case Function::Abs: return std::abs(a);
        case Function::Tanh: return std::tanh(a);
      }
    }
  }
  return 0.0;
}

}  // namespace

std::string_view function_name(Expression::Function f) {
  switch (f) {
    case Function::Sin: return "sin";
    case Function::Cos: return "cos";
    case Function::Exp: return "exp";
    case Function::Sqrt: return "sqrt";
    case Function::Abs: return "abs";
    case Function::Tanh: return "tanh";
  }
  return "?";
}

Expression::Expression() : root_(make_number(0.0)) {}
Expression::Expression(NodePtr root) : root_(std::move(root)) {}

Expression Expression::number(double v) { return Expression(make_number(v)); }
Expression Expression::variable(std::string name) { return Expression(make_variable(std::move(name))); }

Expression parse_expression(std::string_view text) { return Expression(Parser(tokenize(text)).parse()); }

std::string Expression::to_string() const {
  std::string out;
  print(*root_, out);
  return out;
}

bool operator==(const Expression& a, const Expression& b) { return equal(*a.root_, *b.root_); }

double Expression::evaluate(const std::map<std::string, double>& values) const { return eval_node(*root_, values); }

Expression Expression::derivative(std::string_view var) const { return Expression(diff(root_, var)); }

bool Expression::depends_on(std::string_view var) const { return depends(*root_, var); }

std::vector<std::string> Expression::variables() const {
  std::set<std::string> names;
  collect_variables(*root_, names);
  return {names.begin(), names.end()};
}

BoundExpression Expression::bind(std::span<const std::string> names) const {
  BoundExpression out;
  out.arity_ = names.size();
  std::size_t depth = 0;

  auto emit = [&](auto&& self, const Node& n) -> void {
    using Op = BoundExpression::Op;
    switch (n.kind) {
      case Kind::Number:
        out.code_.push_back({Op::Push, 0, n.value});
        ++depth;
        break;
      case Kind::Variable: {
        auto it = std::find(names.begin(), names.end(), n.name);
        if (it == names.end())
          throw Error(ErrorCode::UnknownSymbol,
                      "'" + n.name + "' at position " + std::to_string(n.position) + " is not a declared coordinate");
        out.code_.push_back({Op::Load, static_cast<int>(it - names.begin()), 0.0});
        ++depth;
        break;
      }
      case Kind::Negate:
        self(self, *n.lhs);
        out.code_.push_back({Op::Neg});
        break;
      case Kind::Call: {
        self(self, *n.lhs);
        static constexpr Op ops[] = {Op::Sin, Op::Cos, Op::Exp, Op::Sqrt, Op::Abs, Op::Tanh};
        out.code_.push_back({ops[static_cast<int>(n.function)]});
        break;
      }
      default: {
        self(self, *n.lhs);
        self(self, *n.rhs);
        const Op op = n.kind == Kind::Add   ? Op::Add
                      : n.kind == Kind::Sub ? Op::Sub
                      : n.kind == Kind::Mul ? Op::Mul
                      : n.kind == Kind::Div ? Op::Div
                                            : Op::Pow;
        out.code_.push_back({op});
        --depth;
        break;
      }
    }
    out.max_stack_ = std::max(out.max_stack_, depth);
  };
  emit(emit, *root_);
  return out;
}

double BoundExpression::operator()(std::span<const double> values) const {
  constexpr std::size_t kInline = 32;
  double inline_stack[kInline];
  std::vector<double> heap;
  double* stack = inline_stack;
  if (max_stack_ > kInline) {
    heap.resize(max_stack_);
    stack = heap.data();
  }
  std::size_t sp = 0;
  for (const Instr& in : code_) {
    switch (in.op) {
      case Op::Push: stack[sp++] = in.value; break;
      case Op::Load: stack[sp++] = values[static_cast<std::size_t>(in.slot)]; break;
      case Op::Neg: stack[sp - 1] = -stack[sp - 1]; break;
      case Op::Add: --sp; stack[sp - 1] += stack[sp]; break;
      case Op::Sub: --sp; stack[sp - 1] -= stack[sp]; break;
      case Op::Mul: --sp; stack[sp - 1] *= stack[sp]; break;
      case Op::Div: --sp; stack[sp - 1] /= stack[sp]; break;
      case Op::Pow: --sp; stack[sp - 1] = std::pow(stack[sp - 1], stack[sp]); break;
      case Op::Sin: stack[sp - 1] = std::sin(stack[sp - 1]); break;
      case Op::Cos: stack[sp - 1] = std::cos(stack[sp - 1]); break;
      case Op::Exp: stack[sp - 1] = std::exp(stack[sp - 1]); break;
      case Op::Sqrt: stack[sp - 1] = std::sqrt(stack[sp - 1]); break;
      case Op::Abs: stack[sp - 1] = std::abs(stack[sp - 1]); break;
      case Op::Tanh: stack[sp - 1] = std::tanh(stack[sp - 1]); break;
    }
  }
  return sp ? stack[0] : 0.0;
}

}  // namespace lorentz_eikonal
