#include "invman/cli.hpp"

#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"

#include "invman/errors.hpp"
#include "invman/report.hpp"
#include "invman/scenario_io.hpp"

namespace invman {

namespace {

struct RunConfig {
  std::string builtin;
  std::string scenario_file;
  std::vector<double> b{1.0, 1.0, 1.0};
  std::string q = "2";
  double r0 = 0.5;
  double delta = 0.3;
  PersistenceConfig persistence;
  std::string loop;
  std::string output;
  std::string format = "json";
  int threads = 0;
  std::string export_name;
  std::size_t appendix_points = 100;
};

void add_common(CLI::App* app, RunConfig& rc) {
  auto* source = app->add_option_group("source");
  source->add_option("--builtin", rc.builtin, "built-in scenario")
      ->check(CLI::IsMember({"example1", "example2"}));
  source->add_option("--scenario", rc.scenario_file, "scenario JSON file")->check(CLI::ExistingFile);
  source->require_option(1);

  app->add_option("--b", rc.b, "example2 constants b1,b2,b3")->delimiter(',')->expected(3);
  app->add_option("--q", rc.q, "example2 function q(x)");
  app->add_option("--r0", rc.r0, "example2 puncture radius")->check(CLI::Range(0.0, 1.0));
  app->add_option("--delta", rc.delta, "example2 overlap width")->check(CLI::PositiveNumber);

  auto& p = rc.persistence;
  app->add_option("--step", p.integrator.step, "RK4 step in the loop parameter")
      ->check(CLI::PositiveNumber);
  app->add_option("--involutivity-tol", p.hypotheses.involutivity_tol)->check(CLI::PositiveNumber);
  app->add_option("--margin", p.spectrum.margin, "unit-circle margin")->check(CLI::PositiveNumber);
  app->add_option("--compatibility-tol", p.compatibility_tol)->check(CLI::PositiveNumber);
  app->add_option("--identity-tol", p.identity_tol)->check(CLI::PositiveNumber);
  app->add_option("--kernel-tol", p.kernel_tol)->check(CLI::PositiveNumber);
  app->add_option("--word-cap", p.spectrum.word_cap)->check(CLI::Range(1, 64));
  app->add_option("--max-words", p.spectrum.max_words)->check(CLI::PositiveNumber);
  app->add_option("--samples", p.hypotheses.samples)->check(CLI::PositiveNumber);
  app->add_option("--seed", p.hypotheses.seed);
  app->add_flag("--waive-hypotheses", p.waive_hypotheses);
  app->add_option("--output,-o", rc.output, "write the report here instead of stdout");
  app->add_option("--format", rc.format)->check(CLI::IsMember({"json", "text"}));
  app->add_option("--threads", rc.threads, "worker threads (default: all cores)")
      ->check(CLI::NonNegativeNumber);
}

Scenario load(const RunConfig& rc) {
  if (!rc.scenario_file.empty()) return load_scenario(rc.scenario_file);
  if (rc.builtin == "example1") return build_example1();
  Example2Config c;
  c.b1 = rc.b[0];
  c.b2 = rc.b[1];
  c.b3 = rc.b[2];
  c.q = rc.q;
  c.r0 = rc.r0;
  c.delta = rc.delta;
  return build_example2(c);
}

void emit(const RunConfig& rc, std::ostream& out, const std::string& text,
          const nlohmann::ordered_json& doc) {
  const std::string body = rc.format == "text" ? text : doc.dump(2) + "\n";
  if (rc.output.empty()) {
    out << body;
    return;
  }
  std::ofstream f(rc.output, std::ios::binary);
  if (!f) throw Error("cannot write '" + rc.output + "'");
  f << body;
}

int verdict_code(Verdict v) {
  switch (v) {
    case Verdict::persists: return kExitPersists;
    case Verdict::fails_spectrum:
    case Verdict::fails_compatibility: return kExitFails;
    case Verdict::inconclusive: return kExitInconclusive;
  }
  return kExitError;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"invman: persistence of invariant manifolds of involutory systems"};
  app.require_subcommand(1);
  RunConfig rc;

  auto* check = app.add_subcommand("check", "rank, manifold invariance and involutivity checks");
  auto* mono = app.add_subcommand("monodromy", "monodromy matrix of one loop");
  auto* persist = app.add_subcommand("persist", "full persistence analysis");
  auto* appendix = app.add_subcommand("verify-appendix", "closed-form commutator coefficients");
  auto* scen = app.add_subcommand("scenario", "scenario utilities");
  auto* exp = scen->add_subcommand("export", "write a built-in scenario as JSON");
  scen->require_subcommand(1);
  for (auto* a : {check, mono, persist}) add_common(a, rc);
  mono->add_option("--loop", rc.loop, "loop label")->required();

  // verify-appendix and export always use the double torus parameters.
  for (auto* a : {appendix, exp}) {
    a->add_option("--b", rc.b)->delimiter(',')->expected(3);
    a->add_option("--q", rc.q);
    a->add_option("--r0", rc.r0)->check(CLI::Range(0.0, 1.0));
    a->add_option("--delta", rc.delta)->check(CLI::PositiveNumber);
    a->add_option("--output,-o", rc.output);
  }
  appendix->add_option("--samples", rc.appendix_points)->check(CLI::PositiveNumber);
  appendix->add_option("--seed", rc.persistence.hypotheses.seed);
  appendix->add_option("--format", rc.format)->check(CLI::IsMember({"json", "text"}));
  exp->add_option("name", rc.export_name)->required()->check(CLI::IsMember({"example1", "example2"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);
      return 0;
    }
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    if (rc.threads > 0) set_threads(rc.threads);
    const Execution exec = available_threads() > 1 ? Execution::parallel : Execution::serial;
    auto& pc = rc.persistence;
    pc.execution = exec;
    pc.hypotheses.execution = exec;
    pc.spectrum.execution = exec;
    pc.hypotheses.step = pc.integrator.step;

    if (*exp) {
      rc.builtin = rc.export_name;
      const Scenario s = load(rc);
      const auto j = scenario_to_json(s);
      emit(rc, out, j.dump(2) + "\n", j);
      return 0;
    }
    if (*appendix) {
      Example2Config c;
      c.b1 = rc.b[0];
      c.b2 = rc.b[1];
      c.b3 = rc.b[2];
      c.q = rc.q;
      c.r0 = rc.r0;
      c.delta = rc.delta;
      const auto r = verify_appendix(c, rc.appendix_points, pc.hypotheses.seed);
      emit(rc, out, appendix_text(r),
           report_document("verify-appendix", "example2", pc, appendix_json(r)));
      return r.passed() ? 0 : kExitFails;
    }

    const Scenario s = load(rc);
    pc.integrator.fiber_box = s.fiber_box;
    if (*check) {
      const auto h = check_hypotheses(s.system, s.loops, pc.hypotheses);
      emit(rc, out, hypotheses_text(h), report_document("check", s.name, pc, hypotheses_json(h)));
      return h.passed() ? 0 : kExitFails;
    }
    if (*mono) {
      const auto m = monodromy(s.system, s.loop(rc.loop), pc.integrator);
      nlohmann::ordered_json result;
      result["monodromy"] = monodromy_json(m);
      std::string text = monodromy_text(m);
      result["expected"] = nullptr;
      for (const auto& e : s.expected)
        if (e.loop == rc.loop) {
          const double scale = std::max(1.0, max_abs(e.M));
          const double rel = max_abs(m.M - e.M) / scale;
          result["expected"] = {{"M", nlohmann::ordered_json::array()}, {"relative_error", rel}};
          for (Eigen::Index i = 0; i < e.M.rows(); ++i) {
            nlohmann::ordered_json row = nlohmann::ordered_json::array();
            for (Eigen::Index k = 0; k < e.M.cols(); ++k) row.push_back(e.M(i, k));
            result["expected"]["M"].push_back(row);
          }
          char buf[64];
          std::snprintf(buf, sizeof buf, "%.3e", rel);
          text += "expected    relative error " + std::string(buf) + "\n";
        }
      emit(rc, out, text, report_document("monodromy", s.name, pc, result));
      return 0;
    }
    const auto r = persistence_verdict(s, pc);
    emit(rc, out, persistence_text(r, pc), report_document("persist", s.name, pc, persistence_json(r)));
    return verdict_code(r.verdict);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
  }
  return kExitError;
}

}  // namespace invman
