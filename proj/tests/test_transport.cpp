#include <chrono>
#include <cmath>
#include <numbers>

#include "doctest.h"

#include "invman/errors.hpp"
#include "invman/scenarios.hpp"
#include "invman/transport.hpp"

using namespace invman;

namespace {

constexpr double kPi = std::numbers::pi;

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

std::vector<Expression> exprs(std::initializer_list<const char*> xs) {
  std::vector<Expression> out;
  for (const char* x : xs) out.push_back(parse(x));
  return out;
}

// z' = Q (z - b lambda) integrated over a path with total Q: the solution is
// z(1) = e^Q (z0 - b lambda) + b lambda.
Matrix cycle_oracle(double total, double b) {
  Matrix m(2, 2);
  m << std::exp(total), b * (1.0 - std::exp(total)), 0.0, 1.0;
  return m;
}

double rel_err(const Matrix& a, const Matrix& b) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      worst = std::max(worst, std::abs(a(i, j) - b(i, j)) / std::max(1.0, std::abs(b(i, j))));
  return worst;
}

Scenario torus(double b1 = 1, double b2 = 1, double b3 = 1, const char* q = "2") {
  Example2Config c;
  c.b1 = b1;
  c.b2 = b2;
  c.b3 = b3;
  c.q = q;
  return build_example2(c);
}

}  // namespace

TEST_CASE("cycle monodromies match the closed form") {
  const Scenario s = torus(0.7, 1.3, -2.0);
  const std::map<std::string, double> b{{"eta1", 0.7}, {"eta2", 1.3}, {"eta3", -2.0}};
  for (const auto& [label, bi] : b) {
    CAPTURE(label);
    const auto m = monodromy(s.system, s.loop(label));
    CHECK(rel_err(m.M, cycle_oracle(2 * kPi, bi)) < 1e-6);
    CHECK(m.M0(0, 0) == doctest::Approx(std::exp(2 * kPi)).epsilon(1e-8));
    CHECK(m.restricted_exponents[0].real() == doctest::Approx(2 * kPi).epsilon(1e-8));
    CHECK(m.block_error < 1e-12);
    CHECK(m.steps == 1000);
  }
  const auto m4 = monodromy(s.system, s.loop("eta4"));
  CHECK(max_abs(m4.M - Matrix::Identity(2, 2)) < 1e-6);
}

TEST_CASE("nonlinear lift follows the explicit solution and fixes the section") {
  const Scenario s = torus(1.0, 1.5, 1.0);
  IntegratorConfig cfg;
  cfg.fiber_box = 10.0;
  const double lambda = 0.01, b2 = 1.5;
  const double z0 = b2 * lambda + 1e-4;
  const Vector end = lift_loop(s.system, s.loop("eta2"), vec({z0, lambda}), cfg);
  const double k = std::exp(2 * kPi);
  CHECK(end[0] == doctest::Approx(k * z0 + b2 * (1 - k) * lambda).epsilon(1e-7));
  CHECK(end[1] == lambda);
  const Vector fixed = lift_loop(s.system, s.loop("eta2"), vec({b2 * lambda, lambda}), cfg);
  CHECK(std::abs(fixed[0] - b2 * lambda) < 1e-14);
  // Leaving the fiber box is an error.
  cfg.fiber_box = 0.02;
  CHECK_THROWS_WITH_AS(lift_loop(s.system, s.loop("eta2"), vec({z0, lambda}), cfg),
                       doctest::Contains("fiber box"), TransportError);
}

TEST_CASE("monodromy is a homomorphism on loop products") {
  const Scenario s = torus(0.4, 1.0, 1.0);
  const auto m1 = monodromy(s.system, s.loop("eta1"));
  const Loop sq = concatenate(s.loop("eta1"), s.loop("eta1"));
  IntegratorConfig fine;
  fine.step = 5e-4;
  const auto m11 = monodromy(s.system, sq, fine);
  CHECK(rel_err(m11.M, m1.M * m1.M) < 1e-6);
  CHECK(rel_err(compose_monodromy(m1, m1).M, m1.M * m1.M) == 0.0);

  const auto p3 = monodromy(s.system, loop_power(s.loop("eta2"), 3), fine);
  const auto m2 = monodromy(s.system, s.loop("eta2"));
  CHECK(rel_err(p3.M, m2.M * m2.M * m2.M) < 1e-6);
  CHECK(rel_err(p3.M, cycle_oracle(6 * kPi, 1.0)) < 1e-6);
}

TEST_CASE("reversed loops give the inverse") {
  const Scenario s = torus(0.4, 1.0, 1.0);
  const auto m = monodromy(s.system, s.loop("eta1"));
  const auto r = monodromy(s.system, reverse_loop(s.system.atlas(), s.loop("eta1")));
  CHECK((r.M * m.M - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-6);
  CHECK(rel_err(r.M, cycle_oracle(-2 * kPi, 0.4)) < 1e-9);
}

TEST_CASE("contractible loops have trivial monodromy") {
  const Scenario s = torus(1.0, 1.0, 1.0, "2 + 0.5*x");
  Loop disc{"disc", "B2", vec({0.5, 0.0}),
            {{"B2", exprs({"0.5*cos(2*pi*t)", "0.5*sin(2*pi*t)"}), 0.0, 1.0, {}}}};
  CHECK(max_abs(monodromy(s.system, disc).M - Matrix::Identity(2, 2)) < 1e-9);

  const Scenario e1 = build_example1();
  const auto m = monodromy(e1.system, e1.loop("small_circle"));
  CHECK(max_abs(m.M - Matrix::Identity(2, 2)) < 1e-9);
}

TEST_CASE("homotopic loops share the monodromy") {
  const Scenario s = torus(0.8, 1.0, 1.0);
  Loop wobble{"wobble", "B1", vec({2.0, -kPi}),
              {{"B1", exprs({"2 + 0.3*sin(2*pi*t)", "-pi + 2*pi*t"}), 0.0, 1.0,
                Junction{"B1_wrap_eta", false}}}};
  const auto a = monodromy(s.system, wobble);
  const auto b = monodromy(s.system, s.loop("eta1"));
  CHECK(rel_err(a.M, b.M) < 1e-9);
}

TEST_CASE("RK4 error drops by at least 12 per step halving") {
  const Scenario s = torus(1.0, 1.0, 1.0);
  const Matrix exact = cycle_oracle(2 * kPi, 1.0);
  double prev = 0.0;
  for (double h : {4e-3, 2e-3, 1e-3, 5e-4}) {
    const double err = rel_err(transport_matrix(s.system, s.loop("eta1"), h), exact);
    if (prev > 0.0) CHECK(prev / err >= 12.0);
    prev = err;
  }
}

TEST_CASE("open path on the cylinder against the integrated coefficient") {
  // With q = 2 + 0.5 x the first leg of the connecting cycle has
  // Q = int_{-xa}^{xa} q dx = 4 xa.
  const Scenario s = torus(1.0, 1.3, 1.0, "2 + 0.5*x");
  const double xa = 1.0 - 0.3 / 2;
  Loop leg = s.loop("eta4");
  leg.segments.resize(1);
  // Simpson rule as the quadrature oracle.
  const int n = 200;
  double q = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double x = -xa + 2 * xa * i / n;
    const double w = (i == 0 || i == n) ? 1 : (i % 2 ? 4 : 2);
    q += w * (2 + 0.5 * x);
  }
  q *= 2 * xa / n / 3;
  CHECK(q == doctest::Approx(4 * xa).epsilon(1e-14));
  std::size_t steps = 0;
  const Matrix m = transport_matrix(s.system, leg, 1e-3, false, &steps);
  CHECK(steps == 1000);
  CHECK(rel_err(m, cycle_oracle(q, 1.3)) < 1e-8);
  CHECK_THROWS_AS(transport_matrix(s.system, leg, 1e-3, true), AtlasError);
  // The full cycle returns to the identity for any such q.
  CHECK(max_abs(monodromy(s.system, s.loop("eta4")).M - Matrix::Identity(2, 2)) < 1e-6);
}

TEST_CASE("block form, spectra and conjugation") {
  Matrix m(2, 2);
  m << 3.0, -2.0, 0.0, 1.0;
  const auto r = make_monodromy_result("m", m, 1, 1);
  CHECK(r.M1(0, 0) == -2.0);
  CHECK(r.R0(0, 0) == -2.0);
  CHECK(r.restricted_multipliers[0].real() == 3.0);
  CHECK(r.restricted_exponents[0].real() == doctest::Approx(std::log(3.0)));
  Matrix bad = m;
  bad(1, 0) = 1e-3;
  CHECK_THROWS_WITH_AS(make_monodromy_result("bad", bad, 1, 1), doctest::Contains("block form"),
                       TransportError);

  Matrix p(2, 2);
  p << 2.0, 0.5, 0.0, 1.0;
  const auto c = conjugate_monodromy(r, p);
  CHECK((c.M - p * m * p.inverse()).norm() < 1e-14);
  CHECK(c.M0(0, 0) == doctest::Approx(3.0));
  CHECK_THROWS_AS(conjugate_monodromy(r, Matrix::Zero(2, 2)), TransportError);
}

TEST_CASE("each cycle integrates in well under a second") {
  const Scenario s = torus();
  for (const auto& l : s.loops) {
    const auto t0 = std::chrono::steady_clock::now();
    monodromy(s.system, l);
    const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
    CHECK(dt.count() < 1.0);
  }
}
