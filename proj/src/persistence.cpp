#include "invman/persistence.hpp"

#include <algorithm>
#include <random>

#include "invman/errors.hpp"

namespace invman {

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::persists: return "persists";
    case Verdict::fails_spectrum: return "fails_spectrum";
    case Verdict::fails_compatibility: return "fails_compatibility";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "?";
}

Matrix invariant_section(const MonodromyResult& m, double tol) {
  const double scale = std::max(1.0, max_abs(m.M0));
  for (const auto& mu : m.restricted_multipliers)
    if (std::abs(mu - 1.0) <= tol * scale)
      throw PersistenceError("degenerate section for '" + m.loop + "': restricted multiplier (" +
                             std::to_string(mu.real()) + ", " + std::to_string(mu.imag()) +
                             ") equals 1");
  Eigen::PartialPivLU<Matrix> lu(m.R0);
  return lu.solve(m.M1);
}

KernelLemmaResult kernel_lemma(const MonodromyResult& m, double rel_tol) {
  KernelLemmaResult r;
  r.basis = kernel_basis(m.R, rel_tol);
  r.dimension = static_cast<int>(r.basis.cols());
  return r;
}

Matrix section_vectors(const Matrix& section) {
  const auto s = section.rows(), q = section.cols();
  Matrix v(s + q, q);
  v.topRows(s) = section;
  v.bottomRows(q).setIdentity();
  return v;
}

KernelTestResult kernel_test(const MonodromyResult& mi, const MonodromyResult& mj,
                             const Matrix& candidates, double rel_tol) {
  if (mi.M.rows() != mj.M.rows()) throw PersistenceError("kernel test on mismatched monodromies");
  KernelTestResult r;
  r.first = mi.loop;
  r.second = mj.loop;
  r.commutator = mi.M * mj.M - mj.M * mi.M;
  // Rounding in the products grows with |Mi| |Mj|.
  r.tolerance = rel_tol * std::max(1.0, max_abs(mi.M) * max_abs(mj.M));
  const auto n = r.commutator.rows();
  if (max_abs(r.commutator) <= r.tolerance)
    r.basis = Matrix::Identity(n, n);
  else
    r.basis = kernel_basis(r.commutator, rel_tol);
  r.dimension = static_cast<int>(r.basis.cols());
  r.nontrivial = r.dimension > 0;
  for (Eigen::Index c = 0; c < candidates.cols(); ++c) {
    const double norm = candidates.col(c).norm();
    if (norm == 0.0) continue;
    r.section_residual = std::max(r.section_residual, (r.commutator * candidates.col(c)).norm() / norm);
  }
  r.contains_section = r.section_residual <= r.tolerance;
  return r;
}

std::vector<CompatibilityResult> compatibility_check(const std::vector<RegionSection>& sections,
                                                     const Atlas& atlas, double tol) {
  auto adjacent = [&](const std::string& a, const std::string& b) {
    if (a == b) return true;
    for (const auto& t : atlas.transitions())
      if ((t.from == a && t.to == b) || (t.from == b && t.to == a)) return true;
    return false;
  };
  std::vector<CompatibilityResult> out;
  for (std::size_t i = 0; i < sections.size(); ++i)
    for (std::size_t j = i + 1; j < sections.size(); ++j) {
      const auto& a = sections[i];
      const auto& b = sections[j];
      if (!adjacent(a.region, b.region)) continue;
      if (a.B.rows() != b.B.rows() || a.B.cols() != b.B.cols())
        throw PersistenceError("sections of different shapes");
      CompatibilityResult c{a.region, b.region, a.loop, b.loop, 0.0, true};
      if (a.B.size()) c.discrepancy = Eigen::JacobiSVD<Matrix>(a.B - b.B).singularValues()[0];
      c.passed = c.discrepancy <= tol;
      out.push_back(std::move(c));
    }
  return out;
}

PersistenceReport persistence_verdict(const Scenario& scenario, const PersistenceConfig& config) {
  const FieldSystem& system = scenario.system;
  const auto& d = system.dims();
  PersistenceReport report;
  report.scenario = scenario.name;

  if (!config.waive_hypotheses) {
    report.hypotheses = check_hypotheses(system, scenario.loops, config.hypotheses);
    if (!report.hypotheses->passed()) {
      report.verdict = Verdict::inconclusive;
      for (const auto& c : report.hypotheses->checks)
        if (!c.passed) report.reasons.push_back("hypothesis " + c.check + " failed on " + c.subject);
      return report;
    }
  }
  if (scenario.trivial_pi1) {
    report.corollary1_applied = true;
    report.verdict = Verdict::persists;
    report.reasons.push_back("trivial fundamental group asserted");
    return report;
  }
  if (scenario.cycles.empty()) {
    report.verdict = Verdict::inconclusive;
    report.reasons.push_back("no cycles declared");
    return report;
  }

  const auto& cycles = scenario.cycles;
  report.per_cycle = map_indices(cycles.size(), config.execution, [&](std::size_t i) {
    return monodromy(system, scenario.loop(cycles[i].loop), config.integrator);
  });

  std::vector<Matrix> blocks;
  std::vector<bool> trivial(cycles.size());
  for (std::size_t i = 0; i < cycles.size(); ++i) {
    const auto& m = report.per_cycle[i];
    trivial[i] = max_abs(m.M - Matrix::Identity(m.M.rows(), m.M.cols())) < config.identity_tol;
    if (trivial[i])
      report.identity_cycles.push_back(m.loop);
    else
      blocks.push_back(m.M0);
  }
  SpectrumConfig sc = config.spectrum;
  sc.execution = config.execution;
  report.spectrum = spectrum_test(blocks, sc);

  std::vector<RegionSection> regional;
  bool degenerate = false;
  for (std::size_t i = 0; i < cycles.size(); ++i) {
    SectionResult s{cycles[i].loop, std::nullopt, ""};
    if (trivial[i]) {
      s.error = "identity monodromy places no constraint";
    } else {
      try {
        s.B = invariant_section(report.per_cycle[i], config.kernel_tol);
        if (cycles[i].region) regional.push_back({cycles[i].loop, *cycles[i].region, *s.B});
      } catch (const PersistenceError& e) {
        s.error = e.what();
        degenerate = true;
      }
    }
    report.sections.push_back(std::move(s));
  }
  report.compatibility = compatibility_check(regional, system.atlas(), config.compatibility_tol);

  auto index_of = [&](const std::string& label) {
    for (std::size_t i = 0; i < cycles.size(); ++i)
      if (cycles[i].loop == label) return i;
    throw PersistenceError("intersecting pair names unknown cycle '" + label + "'");
  };
  for (const auto& [a, b] : scenario.intersecting) {
    const auto i = index_of(a), j = index_of(b);
    std::vector<Matrix> cols;
    for (auto k : {i, j})
      if (report.sections[k].B) cols.push_back(section_vectors(*report.sections[k].B));
    Matrix candidates(d.fiber(), 0);
    for (const auto& c : cols) {
      Matrix joined(d.fiber(), candidates.cols() + c.cols());
      joined << candidates, c;
      candidates = std::move(joined);
    }
    report.kernel_tests.push_back(
        kernel_test(report.per_cycle[i], report.per_cycle[j], candidates, config.kernel_tol));
  }

  const bool compatible = std::all_of(report.compatibility.begin(), report.compatibility.end(),
                                      [](const auto& c) { return c.passed; });
  if (compatible) {
    if (!regional.empty()) {
      report.section = regional.front().B;
    } else {
      for (const auto& s : report.sections)
        if (s.B) {
          report.section = *s.B;
          break;
        }
    }
  }

  bool lift_error = false;
  if (report.section) {
    std::mt19937_64 rng(config.hypotheses.seed);
    std::uniform_real_distribution<double> u(-config.probe_radius, config.probe_radius);
    std::vector<Vector> probes;
    for (std::size_t p = 0; p < std::max<std::size_t>(config.probes, 1); ++p) {
      Vector z(d.params);
      for (int a = 0; a < d.params; ++a) z[a] = u(rng);
      Vector w(d.fiber());
      w << *report.section * z, z;
      probes.push_back(std::move(w));
    }
    IntegratorConfig ic = config.integrator;
    ic.fiber_box = scenario.fiber_box;
    for (const auto& c : cycles) {
      if (c.region) continue;
      LiftCheck lc{c.loop, 0.0, true, ""};
      try {
        for (const auto& w0 : probes) {
          const Vector w1 = lift_loop(system, scenario.loop(c.loop), w0, ic);
          lc.max_error = std::max(lc.max_error, (w1 - w0).cwiseAbs().maxCoeff());
        }
        lc.passed = lc.max_error <= config.lift_tol;
      } catch (const TransportError& e) {
        lc.passed = false;
        lc.error = e.what();
        lift_error = true;
      }
      report.lift_checks.push_back(std::move(lc));
    }
  }

  std::vector<std::string>& why = report.reasons;
  if (report.spectrum.status == TestStatus::fail) {
    report.verdict = Verdict::fails_spectrum;
    why.push_back("a restricted multiplier lies on the unit circle");
    return report;
  }
  bool fails = false;
  for (const auto& c : report.compatibility)
    if (!c.passed) {
      fails = true;
      why.push_back("sections of " + c.first_loop + " and " + c.second_loop + " disagree");
    }
  for (const auto& k : report.kernel_tests)
    if (!k.contains_section) {
      fails = true;
      why.push_back("section not in the kernel of [M(" + k.first + "), M(" + k.second + ")]");
    }
  for (const auto& l : report.lift_checks)
    if (!l.passed && l.error.empty()) {
      fails = true;
      why.push_back("section not fixed by the holonomy of " + l.loop);
    }
  if (fails) {
    report.verdict = Verdict::fails_compatibility;
    return report;
  }
  if (report.spectrum.status == TestStatus::inconclusive)
    why.push_back("spectrum test inconclusive: " + report.spectrum.detail);
  if (degenerate) why.push_back("a cycle has a degenerate section");
  if (!report.section) why.push_back("no cycle determines an invariant section");
  if (lift_error) why.push_back("a lift check could not be completed");
  report.verdict = why.empty() ? Verdict::persists : Verdict::inconclusive;
  return report;
}

}  // namespace invman
