#include <cctype>
#include <cmath>
#include <fstream>
#include <random>
#include <set>

#include "doctest.h"
#include "json.hpp"

#include "invman/errors.hpp"
#include "invman/expr.hpp"

using namespace invman;

namespace {

// Minimal recognizer for the DSL, written against the EBNF only. Used to
// cross-check accept/reject decisions of the real parser.
class Recognizer {
 public:
  explicit Recognizer(std::string s) : s_(std::move(s)) {}

  bool accepts() {
    try {
      skip();
      expr();
      skip();
      return i_ == s_.size();
    } catch (int) {
      return false;
    }
  }

 private:
  void skip() {
    while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) ++i_;
  }
  bool eat(char c) {
    skip();
    if (i_ < s_.size() && s_[i_] == c) {
      ++i_;
      return true;
    }
    return false;
  }
  void expr() {
    term();
    while (eat('+') || eat('-')) term();
  }
  void term() {
    unary();
    while (eat('*') || eat('/')) unary();
  }
  void unary() {
    if (eat('-')) return unary();
    primary();
    if (eat('^')) unary();
  }
  void primary() {
    skip();
    if (i_ >= s_.size()) throw 0;
    if (eat('(')) {
      expr();
      if (!eat(')')) throw 0;
      return;
    }
    const char c = s_[i_];
    if (std::isdigit(static_cast<unsigned char>(c))) {
      while (i_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[i_]))) ++i_;
      if (i_ < s_.size() && s_[i_] == '.') {
        ++i_;
        while (i_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[i_]))) ++i_;
      }
      if (i_ < s_.size() && (s_[i_] == 'e' || s_[i_] == 'E')) {
        ++i_;
        if (i_ < s_.size() && (s_[i_] == '+' || s_[i_] == '-')) ++i_;
        if (i_ >= s_.size() || !std::isdigit(static_cast<unsigned char>(s_[i_]))) throw 0;
        while (i_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[i_]))) ++i_;
      }
      return;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::string name;
      while (i_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[i_])) || s_[i_] == '_'))
        name += s_[i_++];
      static const std::map<std::string, int> arity{{"sin", 1}, {"cos", 1},  {"tan", 1},
                                                    {"exp", 1}, {"log", 1},  {"sqrt", 1},
                                                    {"atan", 1}, {"atan2", 2}, {"abs", 1}};
      const auto it = arity.find(name);
      if (it == arity.end()) {
        skip();
        if (i_ < s_.size() && s_[i_] == '(') throw 0;  // unknown function
        return;
      }
      if (!eat('(')) throw 0;
      expr();
      for (int k = 1; k < it->second; ++k) {
        if (!eat(',')) throw 0;
        expr();
      }
      if (!eat(')')) throw 0;
      return;
    }
    throw 0;
  }

  std::string s_;
  std::size_t i_ = 0;
};

// Random smooth expressions in x and y, safe on |x|, |y| <= 1.
std::string random_expr(std::mt19937_64& rng, int depth) {
  std::uniform_int_distribution<int> pick(0, depth <= 0 ? 2 : 11);
  std::uniform_real_distribution<double> c(-2.0, 2.0);
  auto sub = [&] { return random_expr(rng, depth - 1); };
  switch (pick(rng)) {
    case 0: return "x";
    case 1: return "y";
    case 2: return std::to_string(c(rng));
    case 3: return "(" + sub() + " + " + sub() + ")";
    case 4: return "(" + sub() + " - " + sub() + ")";
    case 5: return "(" + sub() + ")*(" + sub() + ")";
    case 6: return "sin(" + sub() + ")";
    case 7: return "cos(" + sub() + ")";
    case 8: return "exp(0.3*sin(" + sub() + "))";
    case 9: return "sqrt(1 + (" + sub() + ")^2)";
    case 10: return "(" + sub() + ")/(2 + cos(" + sub() + "))";
    default: return "atan2(" + sub() + ", 3 + sin(" + sub() + "))";
  }
}

}  // namespace

TEST_CASE("grammar fixture: acceptance agrees with the EBNF recognizer, values agree") {
  std::ifstream in(INVMAN_TEST_DATA "/grammar_cases.json");
  REQUIRE(in);
  const auto j = nlohmann::json::parse(in);
  Bindings b;
  for (const auto& [k, v] : j["bindings"].items()) b[k] = v.get<double>();
  int n = 0;
  for (const auto& c : j["cases"]) {
    const std::string src = c["source"];
    const bool accept = c["accept"];
    CAPTURE(src);
    CHECK(Recognizer(src).accepts() == accept);
    if (!accept) {
      CHECK_THROWS_AS(parse(src), ParseError);
      continue;
    }
    const Expression e = parse(src);
    if (c.contains("value")) {
      const double expected = c["value"];
      CHECK(eval(e, b) == doctest::Approx(expected).epsilon(1e-14));
    }
    // Printing is a fixed point of parse.
    const Expression again = parse(e.to_string());
    CHECK(structurally_equal(e, again));
    ++n;
  }
  CHECK(n >= 15);
}

TEST_CASE("precedence and associativity") {
  const Bindings none;
  CHECK(eval(parse("2^3^2"), none) == 512.0);
  CHECK(eval(parse("-2^2"), none) == -4.0);
  CHECK(eval(parse("8/4/2"), none) == 1.0);
  CHECK(eval(parse("10-4-3"), none) == 3.0);
  CHECK(parse("(a+b)*c").to_string() == "(a + b)*c");
  CHECK(parse("a-(b-c)").to_string() == "a - (b - c)");
  CHECK(parse("(a^b)^c").to_string() == "(a^b)^c");
}

TEST_CASE("parse errors carry a position and expectations") {
  try {
    parse("1 + (2 * x");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.position() == 10);
    CHECK_FALSE(e.expected().empty());
  }
  CHECK_THROWS_AS(parse("frob(x)"), ParseError);
  CHECK_THROWS_AS(parse("atan2(1)"), ParseError);
}

TEST_CASE("evaluation errors name the offending subterm") {
  auto domain = [](const std::string& src, const Bindings& b) {
    try {
      eval(parse(src), b);
    } catch (const EvalError& e) {
      CHECK(e.kind() == EvalError::Kind::domain);
      return e.subterm();
    }
    return std::string("no error");
  };
  CHECK(domain("1 + log(x - 1)", {{"x", 1.0}}) == "log(x - 1)");
  CHECK(domain("sqrt(-x)", {{"x", 2.0}}) == "sqrt(-x)");
  CHECK(domain("3/(x - x)", {{"x", 2.0}}) == "3/(x - x)");
  CHECK(domain("(-2)^0.5", {}) == "(-2)^0.5");
  try {
    eval(parse("x + w"), {{"x", 1.0}});
    FAIL("expected an unbound variable");
  } catch (const EvalError& e) {
    CHECK(e.kind() == EvalError::Kind::unbound_variable);
    CHECK(e.subterm() == "w");
  }
  CHECK(eval(parse("(-2)^3"), {}) == -8.0);
}

TEST_CASE("variables in first-occurrence order; literal zero") {
  CHECK(parse("y*x + sin(y) + z").variables() == std::vector<std::string>{"y", "x", "z"});
  CHECK(parse("0").is_literal_zero());
  CHECK_FALSE(parse("0*x").is_literal_zero());
  CHECK(parse("pi + e").is_constant());
}

TEST_CASE("dual numbers match central differences on 1000 random expressions") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double h = 1e-6;
  for (int n = 0; n < 1000; ++n) {
    const std::string src = random_expr(rng, 3);
    const Expression e = parse(src);
    const double x = u(rng), y = u(rng), dx = u(rng), dy = u(rng);
    const DualValue d = eval_dual(e, {{"x", x}, {"y", y}}, {{"x", dx}, {"y", dy}});
    const double fp = eval(e, {{"x", x + h * dx}, {"y", y + h * dy}});
    const double fm = eval(e, {{"x", x - h * dx}, {"y", y - h * dy}});
    const double fd = (fp - fm) / (2 * h);
    CAPTURE(src);
    CHECK(d.value == doctest::Approx(eval(e, {{"x", x}, {"y", y}})).epsilon(1e-15));
    CHECK(std::abs(d.derivative - fd) <= 1e-6 * (1.0 + std::abs(fd)));
  }
}

TEST_CASE("symbolic derivative agrees with the dual derivative") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int n = 0; n < 200; ++n) {
    const Expression e = parse(random_expr(rng, 3));
    const Expression de = differentiate(e, "x");
    const double x = u(rng), y = u(rng);
    const double dual = eval_dual(e, {{"x", x}, {"y", y}}, {{"x", 1.0}}).derivative;
    CHECK(eval(de, {{"x", x}, {"y", y}}) == doctest::Approx(dual).epsilon(1e-12));
  }
  CHECK(differentiate(parse("y"), "x").is_literal_zero());
}

TEST_CASE("substitution and slot evaluation") {
  const Expression e = parse("x*cos(y)");
  const Expression s = substitute(e, {{"x", parse("1 + t")}, {"y", parse("2*t")}});
  CHECK(eval(s, {{"t", 0.5}}) == doctest::Approx(1.5 * std::cos(1.0)));
  const std::vector<std::string> slots{"y", "x"};
  const Expression r = e.resolve(slots);
  const std::vector<double> vals{0.3, 2.0};
  CHECK(eval_slots(r, vals) == doctest::Approx(2.0 * std::cos(0.3)));
  const std::vector<std::string> missing{"x"};
  CHECK_THROWS_AS(e.resolve(missing), EvalError);
}
