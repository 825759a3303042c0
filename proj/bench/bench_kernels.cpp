// Serial reference vs OpenMP kernels on the double torus.

#include <benchmark/benchmark.h>

#include "invman/hypotheses.hpp"
#include "invman/scenarios.hpp"
#include "invman/spectrum.hpp"

namespace {

using namespace invman;

const Scenario& torus() {
  static const Scenario s = build_example2();
  return s;
}

void BM_Hypotheses(benchmark::State& state) {
  HypothesisConfig cfg;
  cfg.samples = 100;
  cfg.execution = state.range(0) ? Execution::parallel : Execution::serial;
  for (auto _ : state) {
    auto r = check_hypotheses(torus().system, {}, cfg);
    benchmark::DoNotOptimize(r);
  }
}
BENCHMARK(BM_Hypotheses)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

std::vector<Matrix> random_blocks(std::size_t n, int s) {
  std::vector<Matrix> out;
  for (std::size_t i = 0; i < n; ++i) {
    Matrix m = Matrix::Random(s, s);
    m.diagonal().array() += 2.0;
    out.push_back(m);
  }
  return out;
}

void BM_WordScan(benchmark::State& state) {
  const auto blocks = random_blocks(6, 3);
  for (auto _ : state) {
    auto r = state.range(0) ? scan_words_parallel(blocks, 4) : scan_words_serial(blocks, 4);
    benchmark::DoNotOptimize(r);
  }
}
BENCHMARK(BM_WordScan)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
