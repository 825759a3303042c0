#pragma once

// Math-expression DSL: parsing, printing, evaluation (plain and dual) and a
// few tree rewrites (differentiation, substitution) used to generate
// pushed-forward vector fields.
//
// Grammar (whitespace insignificant):
//
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := '-' unary | power
//   power   := primary ('^' unary)?
//   primary := number | constant | variable | call | '(' expr ')'
//   call    := function '(' expr (',' expr)* ')'
//
// Constants: pi, e. Functions: sin cos tan exp log sqrt atan atan2 abs.

#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "invman/dual.hpp"

namespace invman {

enum class Function { sin, cos, tan, exp, log, sqrt, atan, atan2, abs };

struct Node {
  enum class Kind { number, constant, variable, neg, add, sub, mul, div, pow, call };

  Kind kind = Kind::number;
  double number = 0.0;  // literal value, or the value of a named constant
  std::string name;     // variable / constant name
  Function function = Function::sin;
  int slot = -1;  // variable slot once resolved with Expression::resolve
  std::vector<std::shared_ptr<const Node>> args;
};

using Bindings = std::map<std::string, double, std::less<>>;

/// Immutable expression tree. Copies share structure.
class Expression {
 public:
  Expression();  // the literal 0
  explicit Expression(std::shared_ptr<const Node> root);

  static Expression number(double value);
  static Expression variable(std::string name);

  const Node& root() const { return *root_; }
  std::shared_ptr<const Node> node() const { return root_; }

  /// Free variable names in first-occurrence order.
  std::vector<std::string> variables() const;
  bool is_literal_zero() const;
  bool is_constant() const { return variables().empty(); }

  /// Copy of the tree with every variable tagged by its index in `slots`.
  /// Throws EvalError (unbound_variable) when a variable is missing.
  Expression resolve(std::span<const std::string> slots) const;

  std::string to_string() const;

  friend Expression operator+(const Expression& a, const Expression& b);
  friend Expression operator-(const Expression& a, const Expression& b);
  friend Expression operator*(const Expression& a, const Expression& b);
  friend Expression operator/(const Expression& a, const Expression& b);
  friend Expression operator-(const Expression& a);
  friend Expression pow(const Expression& a, const Expression& b);
  friend Expression call(Function f, std::vector<Expression> args);

 private:
  std::shared_ptr<const Node> root_;
};

Expression parse(std::string_view source);

/// True if the two trees have the same shape, operators, names and literals.
bool structurally_equal(const Expression& a, const Expression& b);

std::string_view function_name(Function f);
int function_arity(Function f);

double eval(const Expression& expr, const Bindings& bindings);

/// Value and directional derivative along `seed` (missing names seed 0).
DualValue eval_dual(const Expression& expr, const Bindings& bindings,
                    const Bindings& seed);

/// Slot-indexed evaluation of a resolved expression. Used by the hot paths;
/// `values[i]` is the value of slot i.
double eval_slots(const Expression& resolved, std::span<const double> values);
DualValue eval_slots(const Expression& resolved, std::span<const DualValue> values);

/// d expr / d var, built symbolically with literal 0/1 folding only.
Expression differentiate(const Expression& expr, std::string_view var);

/// Replace free variables by expressions.
Expression substitute(const Expression& expr,
                      const std::map<std::string, Expression, std::less<>>& replacements);

}  // namespace invman
