#pragma once

// Built-in scenarios: a sphere in R^3 with two commuting fields, and the
// double torus assembled from two punctured tori and a connecting cylinder.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "invman/scenario.hpp"

namespace invman {

struct Example1Config {
  // Components are expressions in r and lambda_.
  std::string f1 = "1";
  std::string f2 = "0.5";
  std::string f3 = "r - (1 + lambda_)";
  std::string alpha1 = "0.3";
  std::string alpha2 = "1 + lambda_";
  std::string alpha3 = "0.2";
  double r0 = 1.0;
};

Scenario build_example1(const Example1Config& config = {});

struct Example2Config {
  double b1 = 1.0, b2 = 1.0, b3 = 1.0;
  std::string q = "2";  // expression in x
  double r0 = 0.5;
  double delta = 0.3;
  double wrap_width = 0.5;  // overlap width of the periodic identifications
};

Scenario build_example2(const Example2Config& config = {});

enum class AppendixPair { X1_Y2, X1_X2, Y1_X2, Y1_Y2 };

std::string to_string(AppendixPair p);

/// (sigma1, sigma2, mu1, mu2) with [A, B] = sigma1 X1 + sigma2 X2 + mu1 Y1 + mu2 Y2
/// on the overlap of the first punctured torus and the cylinder, in
/// cylinder coordinates (x, y).
std::array<double, 4> appendix_coefficients(AppendixPair pair, double x, double y,
                                            const std::string& q, double r0);

struct AppendixCheck {
  AppendixPair pair = AppendixPair::X1_Y2;
  double max_error = 0.0;     // coefficients vs the closed form
  double max_residual = 0.0;  // least-squares residual of the commutator
  bool passed = false;
};

struct AppendixReport {
  std::size_t points = 0;
  double tolerance = 0.0;
  double pushforward_error = 0.0;  // generated vs printed polar form of X1, Y1
  std::vector<AppendixCheck> pairs;
  bool passed() const;
};

/// Commutators on the first overlap expressed in the basis {X1, X2, Y1} at
/// seeded random points, compared with appendix_coefficients. Points keep
/// |z - b lambda| in [0.02, 0.1] so the basis has full rank.
AppendixReport verify_appendix(const Example2Config& config, std::size_t points,
                               std::uint64_t seed, double tol = 1e-7);

}  // namespace invman
