#pragma once

// Lifting loops through the connection defined by the generators, and
// monodromy matrices from the variational equation W' = L(t) W.

#include <string>
#include <vector>

#include "invman/fields.hpp"

namespace invman {

struct IntegratorConfig {
  double step = 1e-3;       // in the loop parameter rescaled to [0, 1]
  double fiber_box = 1.0;   // lift_loop aborts once some |w_i| exceeds this
  double block_tol = 1e-8;  // block-form and unit-multiplier checks
};

struct MonodromyResult {
  std::string loop;
  Matrix M;   // (s+q) x (s+q)
  Matrix M0;  // s x s
  Matrix M1;  // s x q
  Matrix R;   // I - M
  Matrix R0;  // I - M0
  std::vector<Complex> multipliers;
  std::vector<Complex> restricted_multipliers;
  std::vector<Complex> restricted_exponents;  // principal logs, period 1
  double step = 0.0;
  std::size_t steps = 0;     // RK4 steps taken
  double block_error = 0.0;  // max deviation of the bottom rows from [0, I]
};

/// End fiber point of the nonlinear lift of `loop` starting at w0.
Vector lift_loop(const FieldSystem& system, const Loop& loop, const Vector& w0,
                 const IntegratorConfig& config = {});

/// Fundamental matrix W(end) of the variational equation along the loop,
/// without any block-form checks. `closed = false` allows open paths.
Matrix transport_matrix(const FieldSystem& system, const Loop& loop, double step,
                        bool closed = true, std::size_t* steps_taken = nullptr);

MonodromyResult monodromy(const FieldSystem& system, const Loop& loop,
                          const IntegratorConfig& config = {});

/// Split M into blocks, check the block form and compute spectra.
MonodromyResult make_monodromy_result(std::string label, const Matrix& m, int phase, int params,
                                      double block_tol = 1e-8);

/// Monodromy of `a` after `b`: M = M_a M_b.
MonodromyResult compose_monodromy(const MonodromyResult& a, const MonodromyResult& b,
                                  double block_tol = 1e-8);

/// P M P^-1: the same loop seen from another base point, P being the
/// transport matrix along a connecting path.
MonodromyResult conjugate_monodromy(const MonodromyResult& m, const Matrix& p,
                                    double block_tol = 1e-8);

}  // namespace invman
