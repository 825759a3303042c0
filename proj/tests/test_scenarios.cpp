#include <cmath>
#include <numbers>

#include "doctest.h"
#include "json.hpp"

#include "invman/errors.hpp"
#include "invman/persistence.hpp"
#include "invman/scenario_io.hpp"
#include "invman/scenarios.hpp"

using namespace invman;
using nlohmann::ordered_json;

namespace {

constexpr double kPi = std::numbers::pi;

// Cylinder coordinates (x, y, z, lambda) with b1 = b2 = b.
struct Fields {
  double b = 1.0, r0 = 0.5;
  double q(double x) const { return 2.0 + 0.5 * x; }
  Vector X1(const Vector& p) const {
    const double h = 1 + r0 + p[0];
    return (Vector(4) << std::cos(p[1]), -std::sin(p[1]) / h, 0, 0).finished();
  }
  Vector Y1(const Vector& p) const {
    const double h = 1 + r0 + p[0];
    return (Vector(4) << std::sin(p[1]), std::cos(p[1]) / h, p[2] - b * p[3], 0).finished();
  }
  Vector X2(const Vector& p) const {
    return (Vector(4) << 1, 0, q(p[0]) * (p[2] - b * p[3]), 0).finished();
  }
  Vector Y2(const Vector& p) const { return (Vector(4) << 0, 1, p[2] - b * p[3], 0).finished(); }
};

template <class A, class B>
Vector fd_bracket(A a, B b, const Vector& p) {
  // [A, B] = DB A - DA B, directional derivatives by central differences.
  const double h = 1e-6;
  auto dir = [&](auto f, const Vector& v) { return Vector((f(p + h * v) - f(p - h * v)) / (2 * h)); };
  return dir(b, a(p)) - dir(a, b(p));
}

}  // namespace

TEST_CASE("closed-form coefficients at a hand-checked point") {
  // x = -0.9, y = pi/2, q = 2: eta = 1 so [X1, Y2] = -X2 + 2 Y1.
  const auto c = appendix_coefficients(AppendixPair::X1_Y2, -0.9, kPi / 2, "2", 0.5);
  CHECK(std::abs(c[0]) < 1e-15);
  CHECK(c[1] == doctest::Approx(-1.0));
  CHECK(c[2] == doctest::Approx(2.0));
  CHECK(c[3] == 0.0);
  const auto d = appendix_coefficients(AppendixPair::Y1_Y2, -0.8, 0.3, "2", 0.5);
  CHECK(d == std::array<double, 4>{-1.0, 0.0, 0.0, 0.0});
  CHECK_THROWS_WITH_AS(appendix_coefficients(AppendixPair::X1_X2, -0.9, kPi / 2, "1", 0.5),
                       doctest::Contains("chi"), FieldError);
}

TEST_CASE("closed-form coefficients against finite-difference brackets") {
  const Fields f;
  const std::vector<std::tuple<AppendixPair, Vector (Fields::*)(const Vector&) const,
                               Vector (Fields::*)(const Vector&) const>>
      pairs{{AppendixPair::X1_Y2, &Fields::X1, &Fields::Y2},
            {AppendixPair::X1_X2, &Fields::X1, &Fields::X2},
            {AppendixPair::Y1_X2, &Fields::Y1, &Fields::X2},
            {AppendixPair::Y1_Y2, &Fields::Y1, &Fields::Y2}};
  for (double y : {-2.5, -0.4, 0.7, 1.9}) {
    for (double x : {-0.95, -0.8}) {
      Vector p(4);
      p << x, y, 0.06 + 0.01, 0.01;
      Matrix basis(4, 3);
      basis << f.X1(p), f.X2(p), f.Y1(p);
      for (const auto& [pair, a, b] : pairs) {
        CAPTURE(to_string(pair));
        const Vector br = fd_bracket([&](const Vector& v) { return (f.*a)(v); },
                                     [&](const Vector& v) { return (f.*b)(v); }, p);
        const Vector coef = basis.colPivHouseholderQr().solve(br);
        CHECK((basis * coef - br).norm() < 1e-7);
        const auto expected = appendix_coefficients(pair, x, y, "2 + 0.5*x", 0.5);
        for (int k = 0; k < 3; ++k) CHECK(coef[k] == doctest::Approx(expected[k]).epsilon(1e-6));
      }
    }
  }
}

TEST_CASE("generated overlap fields reproduce the closed form") {
  Example2Config cfg;
  const auto r = verify_appendix(cfg, 100, 42);
  CHECK(r.passed());
  CHECK(r.pushforward_error < 1e-12);
  REQUIRE(r.pairs.size() == 4);
  for (const auto& p : r.pairs) {
    CAPTURE(to_string(p.pair));
    CHECK(p.max_error < 1e-7);
    CHECK(p.max_residual < 1e-7);
  }
  cfg.q = "2 + 0.5*x";
  CHECK(verify_appendix(cfg, 50, 1).passed());
}

TEST_CASE("construction refuses invalid double torus parameters") {
  Example2Config c;
  c.q = "0";
  CHECK_THROWS_WITH_AS(build_example2(c), doctest::Contains("chi"), FieldError);
  c.q = "0.5";
  CHECK_THROWS_AS(build_example2(c), FieldError);
  c.q = "y";
  CHECK_THROWS_WITH_AS(build_example2(c), doctest::Contains("only depend on x"), FieldError);
  c = {};
  c.r0 = 1.2;
  CHECK_THROWS_AS(build_example2(c), FieldError);
  c = {};
  c.delta = 0.0;
  CHECK_THROWS_AS(build_example2(c), FieldError);
  c = {};
  c.q = "-3";
  CHECK_NOTHROW(build_example2(c));
}

TEST_CASE("construction refuses degenerate sphere fields") {
  Example1Config c;
  c.f3 = "0";
  CHECK_THROWS_WITH_AS(build_example1(c), doctest::Contains("vanishes"), FieldError);
  c = {};
  c.f3 = "r";
  CHECK_THROWS_WITH_AS(build_example1(c), doctest::Contains("not zero"), FieldError);
  c = {};
  // alpha2 f1 - alpha1 f2 = 0 and alpha3 = 0: Y is parallel to X.
  c.alpha1 = "1";
  c.alpha2 = "0.5";
  c.alpha3 = "0";
  CHECK_THROWS_WITH_AS(build_example1(c), doctest::Contains("parallel"), FieldError);
  c = {};
  c.f1 = "theta";
  CHECK_THROWS_AS(build_example1(c), FieldError);
}

TEST_CASE("expected monodromies of the built-in double torus") {
  Example2Config c;
  c.b1 = 2.0;
  const Scenario s = build_example2(c);
  REQUIRE(s.expected.size() == 4);
  const double k = std::exp(2 * kPi);
  CHECK(s.expected[0].M(0, 0) == doctest::Approx(k));
  CHECK(s.expected[0].M(0, 1) == doctest::Approx(2.0 * (1 - k)));
  CHECK(s.expected[3].M.isIdentity());
  CHECK(s.intersecting.size() == 3);
  CHECK_FALSE(s.cycles[3].region);
}

TEST_CASE("JSON export and import round trip") {
  for (const Scenario& s : {build_example1(), build_example2()}) {
    CAPTURE(s.name);
    const ordered_json j = scenario_to_json(s);
    const Scenario back = scenario_from_json(j);
    CHECK(scenario_to_json(back).dump() == j.dump());
    CHECK(back.loops.size() == s.loops.size());
    CHECK(back.trivial_pi1 == s.trivial_pi1);
    for (const auto& l : s.loops) {
      const auto a = monodromy(s.system, l);
      const auto b = monodromy(back.system, back.loop(l.label));
      CHECK(a.M == b.M);
    }
  }
}

TEST_CASE("loading a hand-written scenario") {
  const Scenario s = load_scenario(INVMAN_TEST_DATA "/circle.json");
  CHECK(s.system.atlas().constants().at("c") == 1.0);
  CHECK(s.fiber_box == 2.0);
  const auto m = monodromy(s.system, s.loop("gamma"));
  // z' = pi (z - mu) over one turn.
  CHECK(m.M0(0, 0) == doctest::Approx(std::exp(kPi)).epsilon(1e-9));
  CHECK(m.M1(0, 0) == doctest::Approx(1 - std::exp(kPi)).epsilon(1e-9));
  const auto r = persistence_verdict(s, {});
  CHECK(r.verdict == Verdict::persists);
  CHECK((*r.section)(0, 0) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("scenario errors carry JSON paths") {
  const ordered_json base = scenario_to_json(build_example2());
  auto error_of = [](const ordered_json& j) {
    try {
      scenario_from_json(j);
    } catch (const ScenarioError& e) {
      return std::string(e.what());
    }
    return std::string("accepted");
  };
  ordered_json j = base;
  j["charts"][1]["domain"]["box"] = ordered_json::array({ordered_json::array({"-1", "1"})});
  CHECK(error_of(j).find("$.charts[1].domain.box") != std::string::npos);

  j = base;
  j["generators"]["B2"][0]["phase"][0] = "z - (";
  CHECK(error_of(j).find("$.generators.B2[0].phase[0]") != std::string::npos);

  j = base;
  j["loops"][0]["segments"][0]["t1"] = -1.0;
  CHECK(error_of(j).find("$.loops[0].segments[0].t1") != std::string::npos);

  j = base;
  j["cycles"][0]["loop"] = "nope";
  CHECK(error_of(j).find("$.cycles[0].loop") != std::string::npos);

  j = base;
  j.erase("fiber_vars");
  CHECK(error_of(j).find("$.fiber_vars") != std::string::npos);

  j = base;
  j["intersecting"][0][1] = "eta9";
  CHECK(error_of(j).find("$.intersecting[0]") != std::string::npos);

  CHECK_THROWS_AS(load_scenario("/nonexistent/scenario.json"), ScenarioError);
}
