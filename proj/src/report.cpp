#include "invman/report.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace invman {

using nlohmann::ordered_json;

namespace {

ordered_json number(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

ordered_json matrix(const Matrix& m) {
  ordered_json out = ordered_json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    ordered_json row = ordered_json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(number(m(i, j)));
    out.push_back(row);
  }
  return out;
}

ordered_json complexes(const std::vector<Complex>& v) {
  ordered_json out = ordered_json::array();
  for (const auto& c : v) out.push_back({number(c.real()), number(c.imag())});
  return out;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string sci(double v) { return std::isfinite(v) ? fmt("%.6e", v) : "-"; }

std::string complex_text(const Complex& c) {
  if (c.imag() == 0.0) return fmt("%.9g", c.real());
  return fmt("%.9g", c.real()) + (c.imag() < 0 ? "-" : "+") + fmt("%.9g", std::abs(c.imag())) + "i";
}

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

std::string matrix_text(const Matrix& m) {
  std::string s = "[";
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    if (i) s += "; ";
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) s += ", ";
      s += fmt("%.9g", m(i, j));
    }
  }
  return s + "]";
}

std::string word_text(const std::vector<std::size_t>& w, const std::vector<std::string>& labels) {
  std::string s;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (i) s += "*";
    s += w[i] < labels.size() ? labels[w[i]] : std::to_string(w[i]);
  }
  return s;
}

std::vector<std::string> block_labels(const PersistenceReport& r) {
  std::vector<std::string> labels;
  for (const auto& m : r.per_cycle) {
    bool identity = false;
    for (const auto& l : r.identity_cycles) identity = identity || l == m.loop;
    if (!identity) labels.push_back(m.loop);
  }
  return labels;
}

}  // namespace

ordered_json config_json(const PersistenceConfig& c) {
  ordered_json j;
  j["step"] = c.integrator.step;
  j["fiber_box"] = c.integrator.fiber_box;
  j["block_tol"] = c.integrator.block_tol;
  j["word_cap"] = c.spectrum.word_cap;
  j["max_words"] = c.spectrum.max_words;
  j["unit_circle_margin"] = c.spectrum.margin;
  j["commute_tol"] = c.spectrum.commute_tol;
  j["samples"] = c.hypotheses.samples;
  j["seed"] = c.hypotheses.seed;
  j["involutivity_tol"] = c.hypotheses.involutivity_tol;
  j["vanishing_tol"] = c.hypotheses.vanishing_tol;
  j["round_trip_tol"] = c.hypotheses.round_trip_tol;
  j["fiber_radius"] = c.hypotheses.fiber_radius;
  j["identity_tol"] = c.identity_tol;
  j["compatibility_tol"] = c.compatibility_tol;
  j["kernel_tol"] = c.kernel_tol;
  j["probe_radius"] = c.probe_radius;
  j["probes"] = c.probes;
  j["lift_tol"] = c.lift_tol;
  j["waive_hypotheses"] = c.waive_hypotheses;
  return j;
}

ordered_json monodromy_json(const MonodromyResult& m) {
  ordered_json j;
  j["loop"] = m.loop;
  j["M"] = matrix(m.M);
  j["M0"] = matrix(m.M0);
  j["M1"] = matrix(m.M1);
  j["R"] = matrix(m.R);
  j["R0"] = matrix(m.R0);
  j["multipliers"] = complexes(m.multipliers);
  j["restricted_multipliers"] = complexes(m.restricted_multipliers);
  j["restricted_exponents"] = complexes(m.restricted_exponents);
  j["integrator"] = {{"method", "rk4"}, {"step", m.step}, {"steps", m.steps}};
  j["block_error"] = number(m.block_error);
  return j;
}

ordered_json hypotheses_json(const HypothesisReport& h) {
  ordered_json checks = ordered_json::array();
  for (const auto& c : h.checks) {
    ordered_json o;
    o["check"] = c.check;
    o["subject"] = c.subject;
    o["passed"] = c.passed;
    o["value"] = number(c.value);
    o["tolerance"] = c.tolerance;
    o["detail"] = c.detail;
    checks.push_back(o);
  }
  return {{"passed", h.passed()}, {"checks", checks}};
}

ordered_json persistence_json(const PersistenceReport& r) {
  ordered_json j;
  j["verdict"] = to_string(r.verdict);
  j["corollary1_applied"] = r.corollary1_applied;
  j["reasons"] = r.reasons;
  j["hypotheses"] = r.hypotheses ? hypotheses_json(*r.hypotheses) : ordered_json(nullptr);

  ordered_json cycles = ordered_json::array();
  for (const auto& m : r.per_cycle) cycles.push_back(monodromy_json(m));
  j["per_cycle"] = cycles;
  j["identity_cycles"] = r.identity_cycles;

  const auto labels = block_labels(r);
  ordered_json witness = ordered_json::array();
  for (auto w : r.spectrum.witness) witness.push_back(word_text({w}, labels));
  j["spectrum_test"] = {{"status", to_string(r.spectrum.status)},
                        {"method", r.spectrum.method},
                        {"min_distance", number(r.spectrum.min_distance)},
                        {"witness", witness},
                        {"words_tested", r.spectrum.words_tested},
                        {"detail", r.spectrum.detail}};

  ordered_json sections = ordered_json::array();
  for (const auto& s : r.sections) {
    ordered_json o;
    o["loop"] = s.loop;
    o["B"] = s.B ? matrix(*s.B) : ordered_json(nullptr);
    o["error"] = s.error;
    sections.push_back(o);
  }
  j["sections"] = sections;

  ordered_json kernels = ordered_json::array();
  for (const auto& k : r.kernel_tests) {
    ordered_json o;
    o["pair"] = {k.first, k.second};
    o["commutator"] = matrix(k.commutator);
    o["kernel_dimension"] = k.dimension;
    o["kernel_basis"] = matrix(k.basis.transpose());
    o["nontrivial"] = k.nontrivial;
    o["contains_section"] = k.contains_section;
    o["section_residual"] = number(k.section_residual);
    o["tolerance"] = k.tolerance;
    kernels.push_back(o);
  }
  j["kernel_tests"] = kernels;

  ordered_json compat = ordered_json::array();
  for (const auto& c : r.compatibility)
    compat.push_back({{"regions", {c.first_region, c.second_region}},
                      {"loops", {c.first_loop, c.second_loop}},
                      {"discrepancy", number(c.discrepancy)},
                      {"passed", c.passed}});
  j["compatibility"] = compat;
  j["section"] = r.section ? matrix(*r.section) : ordered_json(nullptr);

  ordered_json lifts = ordered_json::array();
  for (const auto& l : r.lift_checks)
    lifts.push_back({{"loop", l.loop}, {"max_error", number(l.max_error)}, {"passed", l.passed},
                     {"error", l.error}});
  j["lift_checks"] = lifts;
  return j;
}

ordered_json appendix_json(const AppendixReport& r) {
  ordered_json pairs = ordered_json::array();
  for (const auto& p : r.pairs)
    pairs.push_back({{"pair", to_string(p.pair)},
                     {"max_error", number(p.max_error)},
                     {"max_residual", number(p.max_residual)},
                     {"passed", p.passed}});
  return {{"passed", r.passed()},
          {"points", r.points},
          {"tolerance", r.tolerance},
          {"pushforward_error", number(r.pushforward_error)},
          {"pairs", pairs}};
}

ordered_json report_document(const std::string& command, const std::string& scenario,
                             const PersistenceConfig& config, ordered_json result) {
  ordered_json j;
  j["schema_version"] = kSchemaVersion;
  j["command"] = command;
  j["scenario"] = scenario;
  j["config"] = config_json(config);
  j["result"] = std::move(result);
  return j;
}

// ---------------------------------------------------------------------------

std::string monodromy_text(const MonodromyResult& m) {
  std::ostringstream s;
  s << "loop        " << m.loop << "\n";
  s << "M           " << matrix_text(m.M) << "\n";
  s << "M0          " << matrix_text(m.M0) << "\n";
  s << "M1          " << matrix_text(m.M1) << "\n";
  s << "multipliers";
  for (const auto& c : m.multipliers) s << " " << complex_text(c);
  s << "\nexponents  ";
  for (const auto& c : m.restricted_exponents) s << " " << complex_text(c);
  s << "\nintegrator  rk4, step " << m.step << ", " << m.steps << " steps\n";
  return s.str();
}

std::string hypotheses_text(const HypothesisReport& h) {
  std::ostringstream s;
  s << pad("check", 20) << pad("subject", 14) << pad("status", 8) << pad("value", 15) << "tol\n";
  for (const auto& c : h.checks)
    s << pad(c.check, 20) << pad(c.subject, 14) << pad(c.passed ? "pass" : "FAIL", 8)
      << pad(sci(c.value), 15) << sci(c.tolerance) << "\n";
  s << "hypotheses: " << (h.passed() ? "pass" : "FAIL") << "\n";
  return s.str();
}

std::string persistence_text(const PersistenceReport& r, const PersistenceConfig& c) {
  std::ostringstream s;
  s << "scenario: " << r.scenario << "\n";
  if (r.hypotheses) s << hypotheses_text(*r.hypotheses) << "\n";
  if (r.corollary1_applied) s << "trivial fundamental group asserted; no cycles analysed\n";
  if (!r.per_cycle.empty()) {
    s << pad("cycle", 10) << pad("restricted multipliers", 28) << pad("dist to circle", 16)
      << "section\n";
    for (std::size_t i = 0; i < r.per_cycle.size(); ++i) {
      const auto& m = r.per_cycle[i];
      std::string mult;
      double dist = std::numeric_limits<double>::infinity();
      for (const auto& mu : m.restricted_multipliers) {
        if (!mult.empty()) mult += " ";
        mult += complex_text(mu);
        dist = std::min(dist, std::abs(std::abs(mu) - 1.0));
      }
      const auto& sec = r.sections[i];
      s << pad(m.loop, 10) << pad(mult, 28) << pad(sci(dist), 16)
        << (sec.B ? matrix_text(*sec.B) : "-") << "\n";
    }
    s << "\nspectrum test: " << to_string(r.spectrum.status) << " (" << r.spectrum.method
      << ", min distance " << sci(r.spectrum.min_distance) << ", margin " << sci(c.spectrum.margin)
      << ", word cap " << c.spectrum.word_cap << ", witness "
      << word_text(r.spectrum.witness, block_labels(r)) << ")\n";
    for (const auto& k : r.kernel_tests)
      s << "kernel [" << k.first << "," << k.second << "]: dim " << k.dimension << ", section "
        << (k.contains_section ? "inside" : "OUTSIDE") << " (residual " << sci(k.section_residual)
        << ", tol " << sci(k.tolerance) << ")\n";
    for (const auto& cp : r.compatibility)
      s << "compatibility " << cp.first_region << "/" << cp.second_region << ": "
        << sci(cp.discrepancy) << " " << (cp.passed ? "pass" : "FAIL") << " (tol "
        << sci(c.compatibility_tol) << ")\n";
    for (const auto& l : r.lift_checks)
      s << "lift " << l.loop << ": " << sci(l.max_error) << " " << (l.passed ? "pass" : "FAIL")
        << " (tol " << sci(c.lift_tol) << ")" << (l.error.empty() ? "" : " " + l.error) << "\n";
  }
  for (const auto& why : r.reasons) s << "note: " << why << "\n";
  s << "verdict: " << to_string(r.verdict) << "\n";
  return s.str();
}

std::string appendix_text(const AppendixReport& r) {
  std::ostringstream s;
  s << "points " << r.points << ", tolerance " << sci(r.tolerance) << "\n";
  s << "pushforward vs printed form: " << sci(r.pushforward_error) << "\n";
  s << pad("pair", 10) << pad("coef error", 16) << pad("residual", 16) << "status\n";
  for (const auto& p : r.pairs)
    s << pad(to_string(p.pair), 10) << pad(sci(p.max_error), 16) << pad(sci(p.max_residual), 16)
      << (p.passed ? "pass" : "FAIL") << "\n";
  s << "appendix: " << (r.passed() ? "pass" : "FAIL") << "\n";
  return s.str();
}

}  // namespace invman
