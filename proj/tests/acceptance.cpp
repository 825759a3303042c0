// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "invman/cli.hpp"
#include "invman/persistence.hpp"
#include "invman/scenarios.hpp"

using namespace invman;

namespace {

constexpr double kPi = std::numbers::pi;

struct Outcome {
  bool passed = true;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[96];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

void require(Outcome& o, bool ok, const std::string& what) {
  if (!ok) {
    o.passed = false;
    o.detail += (o.detail.empty() ? "" : "; ") + what;
  }
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double rel_entry_error(const Matrix& got, const Matrix& want) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < want.rows(); ++i)
    for (Eigen::Index j = 0; j < want.cols(); ++j) {
      const double scale = std::abs(want(i, j)) > 0 ? std::abs(want(i, j)) : 1.0;
      worst = std::max(worst, std::abs(got(i, j) - want(i, j)) / scale);
    }
  return worst;
}

Scenario torus(double b1, double b2, double b3) {
  Example2Config c;
  c.b1 = b1;
  c.b2 = b2;
  c.b3 = b3;
  return build_example2(c);
}

Outcome closed_form_monodromy() {
  Outcome o;
  const Scenario s = torus(1, 1, 1);
  const double kappa = std::exp(2 * kPi);
  double worst = 0.0, slowest = 0.0;
  for (const char* label : {"eta1", "eta2", "eta3"}) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto m = monodromy(s.system, s.loop(label));
    slowest = std::max(slowest, seconds_since(t0));
    Matrix want(2, 2);
    want << kappa, (1 - kappa) * 1.0, 0, 1;
    worst = std::max(worst, rel_entry_error(m.M, want));
  }
  require(o, worst < 1e-6, "relative error " + fmt("%.3e", worst));
  require(o, slowest < 1.0, "slowest cycle " + fmt("%.3f s", slowest));
  if (o.passed) o.detail = "max rel error " + fmt("%.2e", worst) + ", slowest cycle " + fmt("%.3f s", slowest);
  return o;
}

Outcome connecting_cycle_identity() {
  Outcome o;
  const Scenario s = torus(1, 1, 1);
  const auto m = monodromy(s.system, s.loop("eta4"));
  const double e = max_abs(m.M - Matrix::Identity(2, 2));
  require(o, e < 1e-6, "|M4 - I|max = " + fmt("%.3e", e));
  if (o.passed) o.detail = "|M4 - I|max = " + fmt("%.2e", e);
  return o;
}

Outcome invariant_sections() {
  Outcome o;
  const PersistenceConfig cfg;
  const std::array<double, 3> bs{1.0, 2.0, 1.0};
  const auto bad = persistence_verdict(torus(bs[0], bs[1], bs[2]), cfg);
  for (std::size_t i = 0; i < 3; ++i) {
    const auto& sec = bad.sections[i];
    require(o, sec.B && std::abs((*sec.B)(0, 0) - bs[i]) < 1e-9 * std::max(1.0, bs[i]),
            "B(" + sec.loop + ") differs from b");
  }
  require(o, bad.verdict == Verdict::fails_compatibility,
          "b = (1,2,1) verdict " + to_string(bad.verdict));
  double disc = 0.0;
  for (const auto& c : bad.compatibility) {
    disc = std::max(disc, c.discrepancy);
    require(o, std::abs(c.discrepancy - 1.0) <= 1e-9, "discrepancy " + fmt("%.12f", c.discrepancy));
  }
  require(o, !bad.compatibility.empty(), "no compatibility pairs");

  const auto ok = persistence_verdict(torus(1, 1, 1), cfg);
  double resid = 0.0;
  for (const auto& c : ok.compatibility) resid = std::max(resid, c.discrepancy);
  require(o, resid < 1e-9, "equal-b residual " + fmt("%.3e", resid));
  require(o, ok.verdict == Verdict::persists, "equal-b verdict " + to_string(ok.verdict));
  if (o.passed)
    o.detail = "equal b: persists, residual " + fmt("%.1e", resid) + "; b=(1,2,1): fails_compatibility, discrepancy " +
               fmt("%.12f", disc);
  return o;
}

Outcome appendix() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = verify_appendix(Example2Config{}, 100, 42, 1e-7);
  const double dt = seconds_since(t0);
  double worst = 0.0;
  for (const auto& p : r.pairs) {
    worst = std::max(worst, p.max_error);
    require(o, p.passed, to_string(p.pair) + " error " + fmt("%.3e", p.max_error));
  }
  require(o, r.pairs.size() == 4, "expected four pairs");
  require(o, r.pushforward_error <= 1e-7, "pushforward error " + fmt("%.3e", r.pushforward_error));
  require(o, dt < 5.0, "runtime " + fmt("%.2f s", dt));
  if (o.passed) o.detail = "4 pairs at 100 points, max error " + fmt("%.2e", worst) + ", " + fmt("%.2f s", dt);
  return o;
}

Outcome hypothesis_suite() {
  Outcome o;
  HypothesisConfig cfg;
  const Scenario two = torus(1, 1, 1);
  const auto r2 = check_hypotheses(two.system, two.loops, cfg);
  double worst_inv = 0.0;
  for (const auto& c : r2.checks) {
    if (c.check == "rank") require(o, c.passed && c.value == 2.0, "rank on " + c.subject);
    if (c.check == "involutivity") {
      worst_inv = std::max(worst_inv, c.value);
      require(o, c.passed && c.value < 1e-7, "involutivity on " + c.subject);
    }
  }
  require(o, r2.passed(), "double torus suite failed");

  const Scenario one = build_example1();
  const auto r1 = check_hypotheses(one.system, one.loops, cfg);
  bool cross = false;
  for (const auto& c : r1.checks)
    if (c.check == "cross_product") {
      cross = true;
      require(o, c.passed && c.value > 0.0, "cross product");
    }
  require(o, cross, "no cross product check ran");
  const auto p = persistence_verdict(one, {});
  require(o, p.corollary1_applied && p.verdict == Verdict::persists, "sphere verdict " + to_string(p.verdict));
  if (o.passed) o.detail = "max involutivity residual " + fmt("%.2e", worst_inv) + "; sphere persists";
  return o;
}

Outcome step_halving() {
  Outcome o;
  const Scenario s = torus(1, 1, 1);
  std::string ratios;
  for (const char* label : {"eta1", "eta2", "eta3"}) {
    std::vector<Matrix> ms;
    for (double h = 4e-3; h > 2e-4; h /= 2) ms.push_back(monodromy(s.system, s.loop(label), {h}).M);
    // d_k = |M(h_k) - M(h_k / 2)|, three halvings give three ratios.
    std::vector<double> d;
    for (std::size_t k = 0; k + 1 < ms.size(); ++k) d.push_back(max_abs(ms[k] - ms[k + 1]));
    for (std::size_t k = 0; k + 1 < d.size(); ++k) {
      const double ratio = d[k] / d[k + 1];
      require(o, ratio >= 12.0, std::string(label) + " ratio " + fmt("%.2f", ratio));
      if (std::string(label) == "eta1") ratios += (ratios.empty() ? "" : ", ") + fmt("%.2f", ratio);
    }
  }
  if (o.passed) o.detail = "eta1 ratios " + ratios;
  return o;
}

Outcome properties() {
  Outcome o;
  Example2Config qcfg;
  qcfg.b1 = 0.4;
  qcfg.q = "2 + 0.5*x";
  const Scenario s = build_example2(qcfg);
  const Atlas& atlas = s.system.atlas();
  IntegratorConfig fine{5e-4};

  const auto m1 = monodromy(s.system, s.loop("eta1"));
  const auto m11 = monodromy(s.system, concatenate(s.loop("eta1"), s.loop("eta1")), fine);
  require(o, rel_entry_error(m11.M, m1.M * m1.M) < 1e-6, "concatenation");

  const auto inv = monodromy(s.system, reverse_loop(atlas, s.loop("eta1")));
  require(o, max_abs(inv.M * m1.M - Matrix::Identity(2, 2)) < 1e-6, "reversal");

  Vector base(2);
  base << 0.5, 0.0;
  std::vector<Expression> path{parse("0.5*cos(2*pi*t)"), parse("0.5*sin(2*pi*t)")};
  Loop disc{"disc", "B2", base, {{"B2", path, 0.0, 1.0, {}}}};
  require(o, max_abs(monodromy(s.system, disc).M - Matrix::Identity(2, 2)) < 1e-6, "contractible");
  const Scenario sphere = build_example1();
  require(o, max_abs(monodromy(sphere.system, sphere.loop("small_circle")).M - Matrix::Identity(2, 2)) < 1e-6,
          "contractible on the sphere");

  const auto m2 = monodromy(s.system, s.loop("eta2"));
  for (int k : {2, 3}) {
    const auto mk = monodromy(s.system, loop_power(s.loop("eta2"), k), fine);
    const double want = std::pow(m2.restricted_multipliers[0].real(), k);
    const double got = mk.restricted_multipliers[0].real();
    require(o, std::abs(got - want) / want < 1e-6, "power law k=" + std::to_string(k));
  }

  // Scalar blocks against an independent brute-force fold.
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.3, 2.5);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> v;
    std::vector<Matrix> blocks;
    for (int i = 0; i < 3; ++i) {
      v.push_back(u(rng));
      blocks.push_back(Matrix::Constant(1, 1, v.back()));
    }
    double best = std::numeric_limits<double>::infinity();
    for (int len = 1; len <= 3; ++len) {
      int total = 1;
      for (int k = 0; k < len; ++k) total *= 3;
      for (int w = 0; w < total; ++w) {
        int rest = w, div = total / 3;
        double p = v[static_cast<std::size_t>(rest / div)];
        for (int k = 1; k < len; ++k) {
          rest %= div;
          div /= 3;
          p = p * v[static_cast<std::size_t>(rest / div)];
        }
        best = std::min(best, std::abs(std::abs(p) - 1.0));
      }
    }
    SpectrumConfig sc;
    sc.margin = 0.0;
    const auto r = spectrum_test(blocks, sc);
    require(o, r.min_distance == best, "scalar enumeration trial " + std::to_string(trial));
  }

  // Dual numbers against central differences on 1000 seeded expressions.
  const std::array<const char*, 5> shapes{"sin(a*x + y)*exp(b*y)", "atan2(x + a, 2 + b*y^2)",
                                          "sqrt(1 + (a*x - y)^2)/(2 + cos(b*x))", "log(2 + sin(a*x*y))",
                                          "(a*x + b)^3 - tan(0.3*y)"};
  std::uniform_real_distribution<double> c(-1.0, 1.0);
  int bad = 0;
  for (int n = 0; n < 1000; ++n) {
    const Expression e = parse(shapes[static_cast<std::size_t>(n) % shapes.size()]);
    Bindings b{{"a", c(rng)}, {"b", c(rng)}, {"x", c(rng)}, {"y", c(rng)}};
    const double dx = c(rng), dy = c(rng), h = 1e-6;
    Bindings bp = b, bm = b;
    bp["x"] += h * dx;
    bp["y"] += h * dy;
    bm["x"] -= h * dx;
    bm["y"] -= h * dy;
    const double fd = (eval(e, bp) - eval(e, bm)) / (2 * h);
    const double ad = eval_dual(e, b, Bindings{{"x", dx}, {"y", dy}}).derivative;
    if (std::abs(ad - fd) > 1e-6 * (1 + std::abs(fd))) ++bad;
  }
  require(o, bad == 0, std::to_string(bad) + " derivative mismatches");
  if (o.passed) o.detail = "concatenation, reversal, contractible, power law, scalar enumeration, 1000 derivatives";
  return o;
}

Outcome determinism() {
  Outcome o;
  auto once = [] {
    const char* argv[] = {"invman", "persist", "--builtin", "example2", "--b", "1,2,1"};
    std::ostringstream out, err;
    run(6, argv, out, err);
    return out.str();
  };
  const std::string a = once(), b = once();
  require(o, !a.empty() && a == b, "reports differ");
  if (o.passed) o.detail = std::to_string(a.size()) + " identical bytes";
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"closed-form cycle monodromy", closed_form_monodromy},
      {"connecting cycle is the identity", connecting_cycle_identity},
      {"invariant sections and compatibility", invariant_sections},
      {"overlap commutator coefficients", appendix},
      {"hypothesis suite", hypothesis_suite},
      {"RK4 step-halving order", step_halving},
      {"property suites", properties},
      {"byte-identical persist reports", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.passed;
    std::printf("%s [%zu] %s: %s\n", o.passed ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
