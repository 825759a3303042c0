#include "invman/spectrum.hpp"

#include <algorithm>
#include <cmath>

#include "invman/errors.hpp"

namespace invman {

std::string to_string(TestStatus s) {
  switch (s) {
    case TestStatus::pass: return "pass";
    case TestStatus::fail: return "fail";
    case TestStatus::inconclusive: return "inconclusive";
  }
  return "?";
}

std::size_t word_count(std::size_t n, int cap) {
  constexpr std::size_t kMax = std::numeric_limits<std::size_t>::max();
  std::size_t total = 0, power = 1;
  for (int l = 1; l <= cap; ++l) {
    if (n != 0 && power > kMax / n) return kMax;
    power *= n;
    if (total > kMax - power) return kMax;
    total += power;
  }
  return total;
}

double unit_circle_distance(const Matrix& m) {
  double d = std::numeric_limits<double>::infinity();
  for (const auto& mu : sorted_eigenvalues(m)) d = std::min(d, std::abs(std::abs(mu) - 1.0));
  return d;
}

namespace {

bool better(double d, const std::vector<std::size_t>& word, const WordScan& best) {
  if (d != best.min_distance) return d < best.min_distance;
  if (word.size() != best.witness.size()) return word.size() < best.witness.size();
  return word < best.witness;
}

void check_blocks(const std::vector<Matrix>& blocks, int cap) {
  if (cap < 1) throw PersistenceError("word cap must be at least 1");
  for (const auto& b : blocks)
    if (b.rows() != b.cols() || b.rows() != blocks.front().rows())
      throw PersistenceError("spectrum blocks must be square and of equal size");
}

void dfs(const std::vector<Matrix>& blocks, int cap, std::vector<std::size_t>& word,
         const Matrix& product, WordScan& best) {
  for (std::size_t j = 0; j < blocks.size(); ++j) {
    word.push_back(j);
    const Matrix next = word.size() == 1 ? blocks[j] : Matrix(product * blocks[j]);
    const double d = unit_circle_distance(next);
    ++best.words;
    if (better(d, word, best)) {
      best.min_distance = d;
      best.witness = word;
    }
    if (static_cast<int>(word.size()) < cap) dfs(blocks, cap, word, next, best);
    word.pop_back();
  }
}

}  // namespace

WordScan scan_words_serial(const std::vector<Matrix>& blocks, int cap) {
  WordScan best;
  if (blocks.empty()) return best;
  check_blocks(blocks, cap);
  std::vector<std::size_t> word;
  dfs(blocks, cap, word, Matrix(), best);
  return best;
}

WordScan scan_words_parallel(const std::vector<Matrix>& blocks, int cap) {
  WordScan best;
  if (blocks.empty()) return best;
  check_blocks(blocks, cap);
  const std::size_t n = blocks.size();
  std::size_t count = 1;
  for (int l = 1; l <= cap; ++l) {
    count *= n;
    const auto distances = map_indices(count, Execution::parallel, [&](std::size_t index) {
      // Most significant digit first, so index order is lexicographic.
      std::vector<std::size_t> word(static_cast<std::size_t>(l));
      for (int p = l - 1; p >= 0; --p) {
        word[static_cast<std::size_t>(p)] = index % n;
        index /= n;
      }
      Matrix product = blocks[word[0]];
      for (std::size_t p = 1; p < word.size(); ++p) product = Matrix(product * blocks[word[p]]);
      return std::make_pair(unit_circle_distance(product), word);
    });
    for (const auto& [d, word] : distances)
      if (better(d, word, best)) {
        best.min_distance = d;
        best.witness = word;
      }
    best.words += count;
  }
  return best;
}

SpectrumResult spectrum_test(const std::vector<Matrix>& blocks, const SpectrumConfig& config) {
  SpectrumResult r;
  if (blocks.empty()) {
    r.method = "none";
    r.detail = "no nontrivial monodromy blocks";
    return r;
  }
  check_blocks(blocks, config.word_cap);
  const std::size_t total = word_count(blocks.size(), config.word_cap);
  const bool scanned = total <= config.max_words;
  if (scanned) {
    const WordScan scan = config.execution == Execution::serial
                              ? scan_words_serial(blocks, config.word_cap)
                              : scan_words_parallel(blocks, config.word_cap);
    r.min_distance = scan.min_distance;
    r.witness = scan.witness;
    r.words_tested = scan.words;
    if (scan.min_distance <= config.margin) {
      r.status = TestStatus::fail;
      r.method = "enumeration";
      r.detail = "a product has a multiplier on the unit circle";
      return r;
    }
  } else {
    const WordScan single = scan_words_serial(blocks, 1);
    r.min_distance = single.min_distance;
    r.witness = single.witness;
    r.words_tested = single.words;
  }

  // No violation up to the cap. Decide whether that extends to all products.
  bool expanding = true, contracting = true;
  for (const auto& b : blocks)
    for (const auto& mu : sorted_eigenvalues(b)) {
      expanding = expanding && std::abs(mu) > 1.0 + config.margin;
      contracting = contracting && std::abs(mu) < 1.0 - config.margin;
    }
  const auto s = blocks.front().rows();
  if (s == 1) {
    r.method = "scalar";
    if (expanding || contracting) {
      r.status = TestStatus::pass;
      r.detail = "all scalar blocks on the same side of the unit circle";
    } else {
      r.status = TestStatus::inconclusive;
      r.detail = "scalar blocks on both sides of the unit circle; longer words may reach it";
    }
    return r;
  }

  bool commute = true;
  for (std::size_t i = 0; i < blocks.size() && commute; ++i)
    for (std::size_t j = i + 1; j < blocks.size() && commute; ++j)
      commute = max_abs(blocks[i] * blocks[j] - blocks[j] * blocks[i]) <= config.commute_tol;
  if (commute && (expanding || contracting)) {
    r.status = TestStatus::pass;
    r.method = "commuting";
    r.detail = "blocks commute and are uniformly expanding or contracting";
    return r;
  }

  bool sigma_above = true, sigma_below = true;
  for (const auto& b : blocks) {
    const Vector sv = Eigen::JacobiSVD<Matrix>(b).singularValues();
    sigma_above = sigma_above && sv[sv.size() - 1] > 1.0 + config.margin;
    sigma_below = sigma_below && sv[0] < 1.0 - config.margin;
  }
  if (sigma_above || sigma_below) {
    r.status = TestStatus::pass;
    r.method = "singular_values";
    r.detail = "every block strictly expands or strictly contracts all vectors";
    return r;
  }

  r.status = TestStatus::inconclusive;
  r.method = scanned ? "enumeration" : "budget";
  r.detail = scanned ? "no violation up to the word cap, but no certificate for longer words"
                     : "word budget exceeded";
  return r;
}

}  // namespace invman
