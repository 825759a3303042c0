#include "invman/scenarios.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "invman/errors.hpp"

namespace invman {

const Loop& Scenario::loop(std::string_view label) const {
  for (const auto& l : loops)
    if (l.label == label) return l;
  throw AtlasError("scenario '" + name + "' has no loop '" + std::string(label) + "'");
}

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<Expression> parse_all(std::initializer_list<std::string_view> sources) {
  std::vector<Expression> out;
  for (auto s : sources) out.push_back(parse(s));
  return out;
}

Region box(const Constants& c, std::vector<std::pair<std::string, std::string>> bounds,
           std::vector<std::string> constraints = {}) {
  Region r;
  for (const auto& [lo, hi] : bounds)
    r.box.emplace_back(make_bound(parse(lo), c), make_bound(parse(hi), c));
  for (const auto& g : constraints) r.constraints.push_back(parse(g));
  return r;
}

Generator generator(std::string label, std::initializer_list<std::string_view> base,
                    std::string_view phase) {
  return {std::move(label), parse_all(base), {parse(phase)}, {Expression()}};
}

Segment segment(std::string chart, std::initializer_list<std::string_view> path,
                std::optional<Junction> exit = std::nullopt) {
  return {std::move(chart), parse_all(path), 0.0, 1.0, std::move(exit)};
}

Vector point(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

Matrix expected_cycle(double b) {
  const double kappa = std::exp(2.0 * kPi);
  Matrix m(2, 2);
  m << kappa, (1.0 - kappa) * b, 0.0, 1.0;
  return m;
}

// Only x and named constants may appear in q.
Expression parse_q(const std::string& q) {
  Expression e = parse(q);
  for (const auto& v : e.variables())
    if (v != "x") throw FieldError("q may only depend on x, found '" + v + "'");
  return e;
}

double eval_q(const Expression& q, double x) { return eval(q, Bindings{{"x", x}}); }

// h(x) (q(x) -+ sin y) must keep one sign on the closed strip.
void check_chi(const Expression& q, double r0, double x0, double x1, double mirror,
               const std::string& where) {
  constexpr int nx = 31, ny = 721;
  int sign = 0;
  for (int i = 0; i < nx; ++i) {
    const double x = x0 + (x1 - x0) * i / (nx - 1);
    const double h = 1.0 + r0 + mirror * x;
    const double qx = eval_q(q, x);
    for (int j = 0; j < ny; ++j) {
      const double y = -kPi + 2.0 * kPi * j / (ny - 1);
      const double chi = h * (qx - mirror * std::sin(y));
      const int s = chi > 1e-12 ? 1 : chi < -1e-12 ? -1 : 0;
      if (s == 0 || (sign != 0 && s != sign))
        throw FieldError("chi = h(x) (q(x) - sin y) vanishes on the " + where + " overlap near (x, y) = (" +
                         std::to_string(x) + ", " + std::to_string(y) + ")");
      sign = s;
    }
  }
}

}  // namespace

// ---------------------------------------------------------------------------

Scenario build_example1(const Example1Config& cfg) {
  Constants c{{"r0", cfg.r0}};
  Dimensions dims{2, 1, 1};
  std::vector<Chart> charts{
      {"S", {"phi", "theta"}, box(c, {{"-pi", "pi"}, {"0.2", "pi - 0.2"}})}};
  Atlas atlas(dims, {"dr", "lambda_"}, c, charts, {});

  const std::map<std::string, Expression, std::less<>> radial{
      {"r", parse("r0 + dr")}};
  auto field = [&](const std::string& s) {
    Expression e = parse(s);
    for (const auto& v : e.variables())
      if (v != "r" && v != "lambda_")
        throw FieldError("sphere field components depend on r and lambda_ only, found '" + v + "'");
    return substitute(e, radial);
  };
  const Expression f1 = field(cfg.f1), f2 = field(cfg.f2), f3 = field(cfg.f3);
  const Expression a1 = field(cfg.alpha1), a2 = field(cfg.alpha2), a3 = field(cfg.alpha3);

  // Isolated-manifold conditions at r = r0, lambda = 0.
  const Bindings at_manifold{{"dr", 0.0}, {"lambda_", 0.0}, {"r0", cfg.r0}};
  const double f3_0 = eval(f3, at_manifold);
  if (std::abs(f3_0) > 1e-9)
    throw FieldError("f3(r0, 0) = " + std::to_string(f3_0) + " is not zero");
  const double df3 = eval_dual(f3, at_manifold, Bindings{{"dr", 1.0}}).derivative;
  if (std::abs(df3) <= 1e-9) throw FieldError("d f3 / d r vanishes at (r0, 0)");

  Generator x{"X", {f1, f2}, {f3}, {Expression()}};
  Generator y{"Y", {a1 + a3 * f1, a2 + a3 * f2}, {a3 * f3}, {Expression()}};
  FieldSystem system(std::move(atlas), {{"S", {x, y}}});

  // Regularity: |X x Y| on a grid of the manifold.
  const auto& fields = system.fields("S");
  for (int i = 0; i <= 20; ++i)
    for (int j = 0; j <= 20; ++j) {
      Vector p = Vector::Zero(4);
      p[0] = -kPi + 2.0 * kPi * i / 20.0;
      p[1] = 0.2 + (kPi - 0.4) * j / 20.0;
      if (cross_product_norm(fields, p) <= 1e-9)
        throw FieldError("X and Y are parallel on the manifold at (phi, theta) = (" +
                         std::to_string(p[0]) + ", " + std::to_string(p[1]) + ")");
    }

  Loop circle{"small_circle", "S", point(0.5, kPi / 2), {}};
  circle.segments.push_back(segment("S", {"0.5*cos(2*pi*t)", "pi/2 + 0.5*sin(2*pi*t)"}));

  Scenario s{"example1",
             "sphere in R^3 with two commuting fields; trivial fundamental group",
             std::move(system),
             {std::move(circle)},
             {},
             {},
             true,
             1.0,
             {}};
  return s;
}

// ---------------------------------------------------------------------------

Scenario build_example2(const Example2Config& cfg) {
  if (!(cfg.r0 > 0.0 && cfg.r0 < 1.0)) throw FieldError("r0 must lie in (0, 1)");
  if (!(cfg.delta > 0.0 && cfg.delta < 1.0)) throw FieldError("delta must lie in (0, 1)");
  if (!(cfg.wrap_width > 0.0 && cfg.wrap_width < kPi - cfg.r0 - cfg.delta))
    throw FieldError("wrap width out of range");
  const Expression q = parse_q(cfg.q);
  check_chi(q, cfg.r0, -1.0, -1.0 + cfg.delta, 1.0, "first");
  check_chi(q, cfg.r0, 1.0 - cfg.delta, 1.0, -1.0, "second");
  for (int i = 0; i <= 100; ++i) {
    const double x = -1.0 + cfg.delta * i / 100.0;
    if (std::abs(eval_q(q, x)) <= 1.0)
      throw FieldError("|q(x)| must exceed 1 on the overlap strip, fails at x = " + std::to_string(x));
  }

  Constants c{{"r0", cfg.r0},
              {"delta", cfg.delta},
              {"w", cfg.wrap_width},
              {"b1", cfg.b1},
              {"b2", cfg.b2},
              {"b3", cfg.b3},
              {"xa", 1.0 - cfg.delta / 2.0},
              {"rho0", cfg.r0 + cfg.delta / 2.0}};
  Dimensions dims{2, 1, 1};

  std::vector<Chart> charts{
      {"B1", {"xi", "eta"}, box(c, {{"-pi", "pi"}, {"-pi", "pi"}}, {"xi^2 + eta^2 - r0^2"})},
      {"B2", {"x", "y"}, box(c, {{"-1", "1"}, {"-pi", "pi"}})},
      {"B3", {"xi3", "eta3"}, box(c, {{"-pi", "pi"}, {"-pi", "pi"}}, {"xi3^2 + eta3^2 - r0^2"})},
  };
  auto wrap = [&](std::string id, std::string chart, std::vector<std::string> vars, int axis) {
    const std::string& v = vars[static_cast<std::size_t>(axis)];
    const std::string& u = vars[static_cast<std::size_t>(1 - axis)];
    TransitionMap t{std::move(id), chart, chart, {}, {}, {}};
    t.forward.resize(2);
    t.backward.resize(2);
    t.forward[static_cast<std::size_t>(axis)] = parse(v + " - 2*pi");
    t.forward[static_cast<std::size_t>(1 - axis)] = parse(u);
    t.backward[static_cast<std::size_t>(axis)] = parse(v + " + 2*pi");
    t.backward[static_cast<std::size_t>(1 - axis)] = parse(u);
    std::vector<std::pair<std::string, std::string>> b{{"-pi", "pi"}, {"-pi", "pi"}};
    if (chart == "B2") b[0] = {"-1", "1"};
    b[static_cast<std::size_t>(axis)] = {"pi - w", "pi"};
    std::vector<std::string> g;
    if (chart != "B2") g.push_back(vars[0] + "^2 + " + vars[1] + "^2 - r0^2");
    t.overlap = box(c, b, g);
    return t;
  };
  std::vector<TransitionMap> transitions{
      {"B2_B1",
       "B2",
       "B1",
       parse_all({"(1 + r0 + x)*cos(y)", "(1 + r0 + x)*sin(y)"}),
       parse_all({"sqrt(xi^2 + eta^2) - (1 + r0)", "atan2(eta, xi)"}),
       box(c, {{"-1", "-1 + delta"}, {"-pi", "pi"}})},
      {"B2_B3",
       "B2",
       "B3",
       parse_all({"(1 + r0 - x)*cos(y)", "(1 + r0 - x)*sin(y)"}),
       parse_all({"(1 + r0) - sqrt(xi3^2 + eta3^2)", "atan2(eta3, xi3)"}),
       box(c, {{"1 - delta", "1"}, {"-pi", "pi"}})},
      wrap("B2_wrap", "B2", {"x", "y"}, 1),
      wrap("B1_wrap_xi", "B1", {"xi", "eta"}, 0),
      wrap("B1_wrap_eta", "B1", {"xi", "eta"}, 1),
      wrap("B3_wrap_xi", "B3", {"xi3", "eta3"}, 0),
      wrap("B3_wrap_eta", "B3", {"xi3", "eta3"}, 1),
  };
  Atlas atlas(dims, {"z", "lambda_"}, c, charts, transitions);

  const std::string x2 = "(" + q.to_string() + ")*(z - b2*lambda_)";
  std::map<std::string, std::vector<Generator>, std::less<>> gens{
      {"B1", {generator("X1", {"1", "0"}, "0"), generator("Y1", {"0", "1"}, "z - b1*lambda_")}},
      {"B2", {generator("X2", {"1", "0"}, x2), generator("Y2", {"0", "1"}, "z - b2*lambda_")}},
      {"B3", {generator("X3", {"1", "0"}, "0"), generator("Y3", {"0", "1"}, "z - b3*lambda_")}},
  };
  FieldSystem system(std::move(atlas), std::move(gens));

  std::vector<Loop> loops;
  loops.push_back({"eta1", "B1", point(2.0, -kPi),
                   {segment("B1", {"2", "-pi + 2*pi*t"}, Junction{"B1_wrap_eta", false})}});
  loops.push_back({"eta2", "B2", point(0.0, -kPi),
                   {segment("B2", {"0", "-pi + 2*pi*t"}, Junction{"B2_wrap", false})}});
  loops.push_back({"eta3", "B3", point(2.0, -kPi),
                   {segment("B3", {"2", "-pi + 2*pi*t"}, Junction{"B3_wrap_eta", false})}});
  const double xa = 1.0 - cfg.delta / 2.0;
  loops.push_back({"eta4",
                   "B2",
                   point(-xa, 0.0),
                   {
                       segment("B2", {"-xa + 2*xa*t", "0"}),
                       segment("B3", {"rho0 + (pi - rho0)*t", "0"}, Junction{"B3_wrap_xi", false}),
                       segment("B3", {"-pi + (pi - rho0)*t", "0"}),
                       segment("B2", {"xa - 2*xa*t", "pi"}),
                       segment("B1", {"-rho0 - (pi - rho0)*t", "0"}, Junction{"B1_wrap_xi", true}),
                       segment("B1", {"pi - (pi - rho0)*t", "0"}),
                   }});

  Scenario s{"example2",
             "double torus: two punctured tori joined by a cylinder",
             std::move(system),
             std::move(loops),
             {{"eta1", "B1"}, {"eta2", "B2"}, {"eta3", "B3"}, {"eta4", std::nullopt}},
             {{"eta1", "eta2"}, {"eta2", "eta3"}, {"eta2", "eta4"}},
             false,
             1.0,
             {{"eta1", expected_cycle(cfg.b1)},
              {"eta2", expected_cycle(cfg.b2)},
              {"eta3", expected_cycle(cfg.b3)},
              {"eta4", Matrix::Identity(2, 2)}}};
  return s;
}

// ---------------------------------------------------------------------------

std::string to_string(AppendixPair p) {
  switch (p) {
    case AppendixPair::X1_Y2: return "[X1,Y2]";
    case AppendixPair::X1_X2: return "[X1,X2]";
    case AppendixPair::Y1_X2: return "[Y1,X2]";
    case AppendixPair::Y1_Y2: return "[Y1,Y2]";
  }
  return "?";
}

std::array<double, 4> appendix_coefficients(AppendixPair pair, double x, double y,
                                            const std::string& q_source, double r0) {
  const Expression q_expr = parse_q(q_source);
  const DualValue qd = eval_dual(q_expr, Bindings{{"x", x}}, Bindings{{"x", 1.0}});
  const double q = qd.value, dq = qd.derivative;
  const double h = 1.0 + r0 + x;
  const double s = std::sin(y), c = std::cos(y);
  const double eta = q - s;
  const double chi = h * eta;
  constexpr double tiny = 1e-12;
  switch (pair) {
    case AppendixPair::X1_Y2:
      if (std::abs(eta) < tiny) throw FieldError("eta(x, y) vanishes");
      return {c / eta, -1.0 / eta, q / eta, 0.0};
    case AppendixPair::X1_X2:
      if (std::abs(chi) < tiny) throw FieldError("chi(x, y) vanishes");
      return {-(h * dq * c * c + s - q * s * s) / chi, (c * (h * dq + s)) / chi,
              -(s * c * (h * dq + q)) / chi, 0.0};
    case AppendixPair::Y1_X2:
      if (std::abs(chi) < tiny) throw FieldError("chi(x, y) vanishes");
      return {-(c * (s * (h * dq + q) - 1.0)) / chi, -(c * c - h * dq * s) / chi,
              (q * c * c - h * dq * s * s) / chi, 0.0};
    case AppendixPair::Y1_Y2:
      return {-1.0, 0.0, 0.0, 0.0};
  }
  return {};
}

}  // namespace invman

namespace invman {

bool AppendixReport::passed() const {
  if (pushforward_error > tolerance) return false;
  for (const auto& p : pairs)
    if (!p.passed) return false;
  return !pairs.empty();
}

AppendixReport verify_appendix(const Example2Config& cfg, std::size_t points, std::uint64_t seed,
                               double tol) {
  const Scenario s = build_example2(cfg);
  const FieldSet& fields = s.system.overlap_fields("B2_B1");
  const std::size_t x1 = fields.index_of("X1"), y1 = fields.index_of("Y1");
  const std::size_t x2 = fields.index_of("X2"), y2 = fields.index_of("Y2");
  const std::array<std::size_t, 3> basis{x1, x2, y1};

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(-1.0, -1.0 + cfg.delta), uy(-kPi, kPi);
  std::uniform_real_distribution<double> ul(-0.1, 0.1), uw(0.02, 0.1);
  std::bernoulli_distribution sign(0.5);

  AppendixReport r;
  r.points = points;
  r.tolerance = tol;
  const std::array<std::pair<AppendixPair, std::pair<std::size_t, std::size_t>>, 4> pairs{{
      {AppendixPair::X1_Y2, {x1, y2}},
      {AppendixPair::X1_X2, {x1, x2}},
      {AppendixPair::Y1_X2, {y1, x2}},
      {AppendixPair::Y1_Y2, {y1, y2}},
  }};
  for (const auto& [pair, ab] : pairs) r.pairs.push_back({pair, 0.0, 0.0, true});

  for (std::size_t n = 0; n < points; ++n) {
    const double x = ux(rng), y = uy(rng), lambda = ul(rng);
    const double w = sign(rng) ? uw(rng) : -uw(rng);
    Vector p(4);
    p << x, y, cfg.b2 * lambda + w, lambda;

    // Printed polar form of the first torus' fields.
    const double h = 1.0 + cfg.r0 + x;
    Vector px(4), py(4);
    px << std::cos(y), -std::sin(y) / h, 0.0, 0.0;
    py << std::sin(y), std::cos(y) / h, p[2] - cfg.b1 * lambda, 0.0;
    r.pushforward_error = std::max({r.pushforward_error, (fields.value(x1, p) - px).cwiseAbs().maxCoeff(),
                                    (fields.value(y1, p) - py).cwiseAbs().maxCoeff()});

    for (std::size_t i = 0; i < pairs.size(); ++i) {
      const auto& [pair, ab] = pairs[i];
      const auto res = involutivity_residual(fields, ab.first, ab.second, p, basis, tol);
      const auto expected = appendix_coefficients(pair, x, y, cfg.q, cfg.r0);
      double err = std::abs(expected[3]);  // mu2: Y2 is left out of the basis
      for (int c = 0; c < 3; ++c) err = std::max(err, std::abs(res.coefficients[c] - expected[static_cast<std::size_t>(c)]));
      auto& check = r.pairs[i];
      check.max_error = std::max(check.max_error, err);
      check.max_residual = std::max(check.max_residual, res.residual);
      check.passed = check.passed && err < tol && res.involutive && !res.rank_deficient;
    }
  }
  return r;
}

}  // namespace invman
