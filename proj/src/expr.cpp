#include "invman/expr.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <numbers>
#include <optional>
#include <sstream>

#include "invman/errors.hpp"

namespace invman {

namespace {

using NodePtr = std::shared_ptr<const Node>;
using Kind = Node::Kind;

constexpr std::array<std::pair<std::string_view, Function>, 9> kFunctions{{
    {"sin", Function::sin},
    {"cos", Function::cos},
    {"tan", Function::tan},
    {"exp", Function::exp},
    {"log", Function::log},
    {"sqrt", Function::sqrt},
    {"atan", Function::atan},
    {"atan2", Function::atan2},
    {"abs", Function::abs},
}};

std::optional<Function> lookup_function(std::string_view name) {
  for (const auto& [n, f] : kFunctions)
    if (n == name) return f;
  return std::nullopt;
}

std::optional<double> lookup_constant(std::string_view name) {
  if (name == "pi") return std::numbers::pi;
  if (name == "e") return std::numbers::e;
  return std::nullopt;
}

NodePtr make_leaf_number(double v) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::number;
  n->number = v;
  return n;
}

NodePtr make_node(Kind kind, std::vector<NodePtr> args) {
  auto n = std::make_shared<Node>();
  n->kind = kind;
  n->args = std::move(args);
  return n;
}

NodePtr make_call(Function f, std::vector<NodePtr> args) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::call;
  n->function = f;
  n->args = std::move(args);
  return n;
}

bool is_number(const NodePtr& n, double v) { return n->kind == Kind::number && n->number == v; }

// ---------------------------------------------------------------------------
// Lexer

enum class Tok { number, ident, plus, minus, star, slash, caret, lparen, rparen, comma, end };

struct Token {
  Tok kind;
  std::size_t pos;
  std::string text;
  double value = 0.0;
};

std::vector<Token> tokenize(std::string_view src) {
  std::vector<Token> out;
  std::size_t i = 0;
  const auto digit = [&](std::size_t j) {
    return j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]));
  };
  while (i < src.size()) {
    const char c = src[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    const std::size_t start = i;
    if (digit(i) || (c == '.' && digit(i + 1))) {
      while (digit(i)) ++i;
      if (i < src.size() && src[i] == '.') {
        ++i;
        while (digit(i)) ++i;
      }
      if (i < src.size() && (src[i] == 'e' || src[i] == 'E')) {
        std::size_t j = i + 1;
        if (j < src.size() && (src[j] == '+' || src[j] == '-')) ++j;
        if (digit(j)) {
          i = j;
          while (digit(i)) ++i;
        }
      }
      Token t{Tok::number, start, std::string(src.substr(start, i - start))};
      t.value = std::stod(t.text);
      out.push_back(std::move(t));
      continue;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      while (i < src.size() &&
             (std::isalnum(static_cast<unsigned char>(src[i])) || src[i] == '_'))
        ++i;
      out.push_back({Tok::ident, start, std::string(src.substr(start, i - start))});
      continue;
    }
    Tok kind;
    switch (c) {
      case '+': kind = Tok::plus; break;
      case '-': kind = Tok::minus; break;
      case '*': kind = Tok::star; break;
      case '/': kind = Tok::slash; break;
      case '^': kind = Tok::caret; break;
      case '(': kind = Tok::lparen; break;
      case ')': kind = Tok::rparen; break;
      case ',': kind = Tok::comma; break;
      default:
        throw ParseError("unexpected character '" + std::string(1, c) + "'", i,
                         {"number", "identifier", "operator"});
    }
    out.push_back({kind, start, std::string(1, c)});
    ++i;
  }
  out.push_back({Tok::end, src.size(), ""});
  return out;
}

std::string describe(const Token& t) {
  return t.kind == Tok::end ? std::string("end of input") : "'" + t.text + "'";
}

// ---------------------------------------------------------------------------
// Recursive-descent parser

class Parser {
 public:
  explicit Parser(std::string_view src) : tokens_(tokenize(src)) {}

  NodePtr parse_all() {
    NodePtr e = expr();
    if (peek().kind != Tok::end)
      fail("unexpected " + describe(peek()), {"+", "-", "*", "/", "^", "end of input"});
    return e;
  }

 private:
  const Token& peek() const { return tokens_[pos_]; }
  const Token& next() { return tokens_[pos_++]; }

  [[noreturn]] void fail(const std::string& msg, std::vector<std::string> expected) const {
    throw ParseError(msg + " at position " + std::to_string(peek().pos), peek().pos,
                     std::move(expected));
  }

  void expect(Tok kind, const char* what) {
    if (peek().kind != kind) fail("expected '" + std::string(what) + "' but found " + describe(peek()), {what});
    ++pos_;
  }

  NodePtr expr() {
    NodePtr lhs = term();
    while (peek().kind == Tok::plus || peek().kind == Tok::minus) {
      const Kind k = next().kind == Tok::plus ? Kind::add : Kind::sub;
      lhs = make_node(k, {lhs, term()});
    }
    return lhs;
  }

  NodePtr term() {
    NodePtr lhs = unary();
    while (peek().kind == Tok::star || peek().kind == Tok::slash) {
      const Kind k = next().kind == Tok::star ? Kind::mul : Kind::div;
      lhs = make_node(k, {lhs, unary()});
    }
    return lhs;
  }

  NodePtr unary() {
    if (peek().kind == Tok::minus) {
      ++pos_;
      return make_node(Kind::neg, {unary()});
    }
    return power();
  }

  NodePtr power() {
    NodePtr base = primary();
    if (peek().kind == Tok::caret) {
      ++pos_;
      return make_node(Kind::pow, {base, unary()});
    }
    return base;
  }

  NodePtr primary() {
    const Token& t = peek();
    switch (t.kind) {
      case Tok::number:
        ++pos_;
        return make_leaf_number(t.value);
      case Tok::lparen: {
        ++pos_;
        NodePtr inner = expr();
        expect(Tok::rparen, ")");
        return inner;
      }
      case Tok::ident:
        return identifier();
      default:
        fail("unexpected " + describe(t), {"number", "identifier", "(", "-"});
    }
  }

  NodePtr identifier() {
    const Token& t = next();
    const bool is_call = peek().kind == Tok::lparen;
    if (const auto f = lookup_function(t.text)) {
      if (!is_call) fail("function '" + t.text + "' must be called", {"("});
      ++pos_;
      std::vector<NodePtr> args{expr()};
      while (peek().kind == Tok::comma) {
        ++pos_;
        args.push_back(expr());
      }
      expect(Tok::rparen, ")");
      if (static_cast<int>(args.size()) != function_arity(*f))
        throw ParseError("function '" + t.text + "' takes " +
                             std::to_string(function_arity(*f)) + " argument(s)",
                         t.pos, {std::to_string(function_arity(*f)) + " argument(s)"});
      return make_call(*f, std::move(args));
    }
    if (is_call) {
      std::vector<std::string> known;
      for (const auto& [n, f] : kFunctions) known.emplace_back(n);
      throw ParseError("unknown function '" + t.text + "'", t.pos, std::move(known));
    }
    auto n = std::make_shared<Node>();
    if (const auto c = lookup_constant(t.text)) {
      n->kind = Kind::constant;
      n->number = *c;
    } else {
      n->kind = Kind::variable;
    }
    n->name = t.text;
    return n;
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
};

// ---------------------------------------------------------------------------
// Printer

int precedence(const Node& n) {
  switch (n.kind) {
    case Kind::add:
    case Kind::sub: return 1;
    case Kind::mul:
    case Kind::div: return 2;
    case Kind::neg: return 3;
    case Kind::pow: return 4;
    default: return 5;
  }
}

std::string format_number(double v) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

void print(const Node& n, std::ostream& os);

void print_at(const Node& n, int min_prec, std::ostream& os) {
  if (precedence(n) < min_prec) {
    os << '(';
    print(n, os);
    os << ')';
  } else {
    print(n, os);
  }
}

void print(const Node& n, std::ostream& os) {
  switch (n.kind) {
    case Kind::number:
      if (n.number < 0 || std::signbit(n.number)) {
        // Only constructed programmatically; keep it an atom.
        os << "(-" << format_number(-n.number) << ')';
      } else {
        os << format_number(n.number);
      }
      return;
    case Kind::constant:
    case Kind::variable: os << n.name; return;
    case Kind::neg:
      os << '-';
      print_at(*n.args[0], 3, os);
      return;
    case Kind::add:
    case Kind::sub:
      print_at(*n.args[0], 1, os);
      os << (n.kind == Kind::add ? " + " : " - ");
      print_at(*n.args[1], 2, os);
      return;
    case Kind::mul:
    case Kind::div:
      print_at(*n.args[0], 2, os);
      os << (n.kind == Kind::mul ? "*" : "/");
      print_at(*n.args[1], 3, os);
      return;
    case Kind::pow:
      print_at(*n.args[0], 5, os);
      os << '^';
      print_at(*n.args[1], 3, os);
      return;
    case Kind::call:
      os << function_name(n.function) << '(';
      for (std::size_t i = 0; i < n.args.size(); ++i) {
        if (i) os << ", ";
        print(*n.args[i], os);
      }
      os << ')';
      return;
  }
}

std::string node_string(const Node& n) {
  std::ostringstream os;
  print(n, os);
  return os.str();
}

// ---------------------------------------------------------------------------
// Evaluation

double value_of(double v) { return v; }
double value_of(const DualValue& v) { return v.value; }
bool finite(double v) { return std::isfinite(v); }
bool finite(const DualValue& v) { return std::isfinite(v.value) && std::isfinite(v.derivative); }

[[noreturn]] void domain_error(const Node& n, const std::string& what) {
  const std::string sub = node_string(n);
  throw EvalError(EvalError::Kind::domain, sub, what + " in '" + sub + "'");
}

template <typename T>
T checked(const Node& n, T v) {
  if (!finite(v)) domain_error(n, "non-finite result");
  return v;
}

template <typename T, typename Lookup>
T evaluate(const Node& n, const Lookup& lookup) {
  using std::abs, std::atan, std::atan2, std::cos, std::exp, std::log, std::pow, std::sin,
      std::sqrt, std::tan;
  switch (n.kind) {
    case Kind::number:
    case Kind::constant: return T(n.number);
    case Kind::variable: return lookup(n);
    case Kind::neg: return -evaluate<T>(*n.args[0], lookup);
    case Kind::add: return evaluate<T>(*n.args[0], lookup) + evaluate<T>(*n.args[1], lookup);
    case Kind::sub: return evaluate<T>(*n.args[0], lookup) - evaluate<T>(*n.args[1], lookup);
    case Kind::mul: return evaluate<T>(*n.args[0], lookup) * evaluate<T>(*n.args[1], lookup);
    case Kind::div: {
      const T a = evaluate<T>(*n.args[0], lookup);
      const T b = evaluate<T>(*n.args[1], lookup);
      if (value_of(b) == 0.0) domain_error(n, "division by zero");
      return checked(n, a / b);
    }
    case Kind::pow: {
      const T a = evaluate<T>(*n.args[0], lookup);
      const T b = evaluate<T>(*n.args[1], lookup);
      const double av = value_of(a), bv = value_of(b);
      if (av < 0.0 && bv != std::round(bv)) domain_error(n, "negative base with non-integer exponent");
      if (av == 0.0 && bv < 0.0) domain_error(n, "division by zero");
      return checked(n, pow(a, b));
    }
    case Kind::call: {
      const T a = evaluate<T>(*n.args[0], lookup);
      const double av = value_of(a);
      switch (n.function) {
        case Function::sin: return sin(a);
        case Function::cos: return cos(a);
        case Function::tan: return checked(n, tan(a));
        case Function::exp: return checked(n, exp(a));
        case Function::log:
          if (av <= 0.0) domain_error(n, "logarithm of non-positive value");
          return log(a);
        case Function::sqrt:
          if (av < 0.0) domain_error(n, "square root of negative value");
          return checked(n, sqrt(a));
        case Function::atan: return atan(a);
        case Function::atan2: {
          const T b = evaluate<T>(*n.args[1], lookup);
          if constexpr (!std::is_same_v<T, double>) {
            if (av == 0.0 && value_of(b) == 0.0) domain_error(n, "atan2 derivative at the origin");
          }
          return atan2(a, b);
        }
        case Function::abs: return abs(a);
      }
    }
  }
  domain_error(n, "malformed node");
}

NodePtr resolve_node(const NodePtr& n, std::span<const std::string> slots) {
  if (n->kind == Kind::variable) {
    for (std::size_t i = 0; i < slots.size(); ++i) {
      if (slots[i] == n->name) {
        auto copy = std::make_shared<Node>(*n);
        copy->slot = static_cast<int>(i);
        return copy;
      }
    }
    throw EvalError(EvalError::Kind::unbound_variable, n->name,
                    "unbound variable '" + n->name + "'");
  }
  if (n->args.empty()) return n;
  auto copy = std::make_shared<Node>(*n);
  for (auto& a : copy->args) a = resolve_node(a, slots);
  return copy;
}

void collect_variables(const Node& n, std::vector<std::string>& out) {
  if (n.kind == Kind::variable) {
    for (const auto& v : out)
      if (v == n.name) return;
    out.push_back(n.name);
    return;
  }
  for (const auto& a : n.args) collect_variables(*a, out);
}

bool equal_nodes(const Node& a, const Node& b) {
  if (a.kind != b.kind || a.args.size() != b.args.size()) return false;
  switch (a.kind) {
    case Kind::number:
      if (a.number != b.number) return false;
      break;
    case Kind::constant:
    case Kind::variable:
      if (a.name != b.name) return false;
      break;
    case Kind::call:
      if (a.function != b.function) return false;
      break;
    default: break;
  }
  for (std::size_t i = 0; i < a.args.size(); ++i)
    if (!equal_nodes(*a.args[i], *b.args[i])) return false;
  return true;
}

}  // namespace

// ---------------------------------------------------------------------------

ParseError::ParseError(const std::string& message, std::size_t position,
                       std::vector<std::string> expected)
    : Error(message), position_(position), expected_(std::move(expected)) {}

EvalError::EvalError(Kind kind, std::string subterm, const std::string& message)
    : Error(message), kind_(kind), subterm_(std::move(subterm)) {}

ScenarioError::ScenarioError(std::string path, const std::string& message)
    : Error(path + ": " + message), path_(std::move(path)) {}

std::string_view function_name(Function f) {
  for (const auto& [n, fn] : kFunctions)
    if (fn == f) return n;
  return "?";
}

int function_arity(Function f) { return f == Function::atan2 ? 2 : 1; }

Expression::Expression() : root_(make_leaf_number(0.0)) {}

Expression::Expression(std::shared_ptr<const Node> root) : root_(std::move(root)) {}

Expression Expression::number(double value) {
  if (std::signbit(value)) return Expression(make_node(Kind::neg, {make_leaf_number(-value)}));
  return Expression(make_leaf_number(value));
}

Expression Expression::variable(std::string name) {
  auto n = std::make_shared<Node>();
  if (const auto c = lookup_constant(name)) {
    n->kind = Kind::constant;
    n->number = *c;
  } else {
    n->kind = Kind::variable;
  }
  n->name = std::move(name);
  return Expression(n);
}

std::vector<std::string> Expression::variables() const {
  std::vector<std::string> out;
  collect_variables(*root_, out);
  return out;
}

bool Expression::is_literal_zero() const { return is_number(root_, 0.0); }

Expression Expression::resolve(std::span<const std::string> slots) const {
  return Expression(resolve_node(root_, slots));
}

std::string Expression::to_string() const { return node_string(*root_); }

Expression operator+(const Expression& a, const Expression& b) {
  if (a.is_literal_zero()) return b;
  if (b.is_literal_zero()) return a;
  return Expression(make_node(Kind::add, {a.root_, b.root_}));
}

Expression operator-(const Expression& a, const Expression& b) {
  if (b.is_literal_zero()) return a;
  if (a.is_literal_zero()) return -b;
  return Expression(make_node(Kind::sub, {a.root_, b.root_}));
}

Expression operator*(const Expression& a, const Expression& b) {
  if (a.is_literal_zero() || b.is_literal_zero()) return Expression();
  if (is_number(a.root_, 1.0)) return b;
  if (is_number(b.root_, 1.0)) return a;
  return Expression(make_node(Kind::mul, {a.root_, b.root_}));
}

Expression operator/(const Expression& a, const Expression& b) {
  if (a.is_literal_zero()) return Expression();
  if (is_number(b.root_, 1.0)) return a;
  return Expression(make_node(Kind::div, {a.root_, b.root_}));
}

Expression operator-(const Expression& a) {
  if (a.is_literal_zero()) return a;
  return Expression(make_node(Kind::neg, {a.root_}));
}

Expression pow(const Expression& a, const Expression& b) {
  if (is_number(b.root_, 1.0)) return a;
  return Expression(make_node(Kind::pow, {a.root_, b.root_}));
}

Expression call(Function f, std::vector<Expression> args) {
  std::vector<NodePtr> nodes;
  for (auto& a : args) nodes.push_back(a.root_);
  return Expression(make_call(f, std::move(nodes)));
}

Expression parse(std::string_view source) {
  if (source.find_first_not_of(" \t\r\n") == std::string_view::npos)
    throw ParseError("empty expression", 0, {"number", "identifier", "(", "-"});
  return Expression(Parser(source).parse_all());
}

bool structurally_equal(const Expression& a, const Expression& b) {
  return equal_nodes(a.root(), b.root());
}

double eval(const Expression& expr, const Bindings& bindings) {
  return evaluate<double>(expr.root(), [&](const Node& v) {
    const auto it = bindings.find(v.name);
    if (it == bindings.end())
      throw EvalError(EvalError::Kind::unbound_variable, v.name, "unbound variable '" + v.name + "'");
    return it->second;
  });
}

DualValue eval_dual(const Expression& expr, const Bindings& bindings, const Bindings& seed) {
  return evaluate<DualValue>(expr.root(), [&](const Node& v) {
    const auto it = bindings.find(v.name);
    if (it == bindings.end())
      throw EvalError(EvalError::Kind::unbound_variable, v.name, "unbound variable '" + v.name + "'");
    const auto s = seed.find(v.name);
    return DualValue(it->second, s == seed.end() ? 0.0 : s->second);
  });
}

namespace {
template <typename T>
T eval_resolved(const Expression& resolved, std::span<const T> values) {
  return evaluate<T>(resolved.root(), [&](const Node& v) -> T {
    if (v.slot < 0 || static_cast<std::size_t>(v.slot) >= values.size())
      throw EvalError(EvalError::Kind::unbound_variable, v.name, "unbound variable '" + v.name + "'");
    return values[static_cast<std::size_t>(v.slot)];
  });
}
}  // namespace

double eval_slots(const Expression& resolved, std::span<const double> values) {
  return eval_resolved<double>(resolved, values);
}

DualValue eval_slots(const Expression& resolved, std::span<const DualValue> values) {
  return eval_resolved<DualValue>(resolved, values);
}

Expression differentiate(const Expression& expr, std::string_view var) {
  const Node& n = expr.root();
  const auto arg = [&](std::size_t i) { return Expression(n.args[i]); };
  const auto d = [&](std::size_t i) { return differentiate(arg(i), var); };
  const Expression one = Expression::number(1.0);
  const Expression two = Expression::number(2.0);
  switch (n.kind) {
    case Kind::number:
    case Kind::constant: return Expression();
    case Kind::variable: return n.name == var ? one : Expression();
    case Kind::neg: return -d(0);
    case Kind::add: return d(0) + d(1);
    case Kind::sub: return d(0) - d(1);
    case Kind::mul: return d(0) * arg(1) + arg(0) * d(1);
    case Kind::div: return (d(0) * arg(1) - arg(0) * d(1)) / pow(arg(1), two);
    case Kind::pow: {
      const Expression base = arg(0), ex = arg(1);
      const Expression dex = d(1);
      if (dex.is_literal_zero()) return ex * pow(base, ex - one) * d(0);
      return expr * (dex * call(Function::log, {base}) + ex * d(0) / base);
    }
    case Kind::call: {
      const Expression a = arg(0);
      const Expression da = d(0);
      switch (n.function) {
        case Function::sin: return call(Function::cos, {a}) * da;
        case Function::cos: return -(call(Function::sin, {a}) * da);
        case Function::tan: return da / pow(call(Function::cos, {a}), two);
        case Function::exp: return expr * da;
        case Function::log: return da / a;
        case Function::sqrt: return da / (two * expr);
        case Function::atan: return da / (one + pow(a, two));
        case Function::atan2: {
          const Expression x = arg(1);
          const Expression dx = d(1);
          return (x * da - a * dx) / (pow(x, two) + pow(a, two));
        }
        case Function::abs: return a / expr * da;
      }
    }
  }
  return Expression();
}

Expression substitute(const Expression& expr,
                      const std::map<std::string, Expression, std::less<>>& replacements) {
  const Node& n = expr.root();
  if (n.kind == Kind::variable) {
    const auto it = replacements.find(n.name);
    return it == replacements.end() ? expr : it->second;
  }
  if (n.args.empty()) return expr;
  auto copy = std::make_shared<Node>(n);
  for (auto& a : copy->args) a = substitute(Expression(a), replacements).node();
  return Expression(std::move(copy));
}

}  // namespace invman
