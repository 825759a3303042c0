#pragma once

// Unit-circle test on the restricted monodromy blocks and all their products
// up to a word-length cap.

#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "invman/kernels.hpp"
#include "invman/linalg.hpp"

namespace invman {

enum class TestStatus { pass, fail, inconclusive };

std::string to_string(TestStatus s);

struct SpectrumConfig {
  int word_cap = 3;
  double margin = 1e-6;  // | |mu| - 1 | <= margin counts as on the circle
  std::size_t max_words = 10000;
  double commute_tol = 1e-9;
  Execution execution = Execution::parallel;
};

/// Closest approach of the spectra of all products M_{j1} ... M_{jl},
/// 1 <= l <= cap. Ties are broken by shorter word, then lexicographic order.
struct WordScan {
  double min_distance = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> witness;  // 0-based block indices
  std::size_t words = 0;
};

/// Number of words of length 1..cap over n letters, saturating at SIZE_MAX.
std::size_t word_count(std::size_t n, int cap);

/// Distance of the spectrum of m to the unit circle.
double unit_circle_distance(const Matrix& m);

/// Depth-first reference enumeration.
WordScan scan_words_serial(const std::vector<Matrix>& blocks, int cap);
/// Index-decoding enumeration distributed over OpenMP threads.
WordScan scan_words_parallel(const std::vector<Matrix>& blocks, int cap);

struct SpectrumResult {
  TestStatus status = TestStatus::pass;
  double min_distance = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> witness;
  std::size_t words_tested = 0;
  std::string method;  // enumeration, scalar, commuting, singular_values, budget, none
  std::string detail;
};

SpectrumResult spectrum_test(const std::vector<Matrix>& blocks, const SpectrumConfig& config = {});

}  // namespace invman
