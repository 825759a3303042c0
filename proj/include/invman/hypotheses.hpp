#pragma once

// Sample-based checks of the standing assumptions: regular distribution of
// rank k on the invariant manifold, invariance of the manifold (fiber
// components vanish there), involutivity on charts and overlaps, transition
// round trips and liftability of the declared loops.

#include <cstdint>
#include <string>
#include <vector>

#include "invman/fields.hpp"
#include "invman/kernels.hpp"

namespace invman {

struct HypothesisConfig {
  std::size_t samples = 200;
  std::uint64_t seed = 42;
  double involutivity_tol = 1e-7;
  double vanishing_tol = 1e-9;
  double round_trip_tol = 1e-9;
  double fiber_radius = 0.1;  // involutivity samples use |w_i| <= fiber_radius
  double step = 1e-3;         // loop discretization for the liftability check
  Execution execution = Execution::parallel;
};

struct CheckLine {
  std::string check;    // rank, manifold_invariance, involutivity, round_trip, loop, cross_product
  std::string subject;  // chart, transition or loop id
  bool passed = false;
  double value = 0.0;      // worst value seen
  double tolerance = 0.0;  // threshold the value was compared with
  std::string detail;
};

struct HypothesisReport {
  std::vector<CheckLine> checks;
  bool passed() const;
};

HypothesisReport check_hypotheses(const FieldSystem& system, const std::vector<Loop>& loops,
                                  const HypothesisConfig& config);

}  // namespace invman
