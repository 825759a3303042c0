#pragma once

// Persistence decision: restricted spectra, commutator kernels, invariant
// sections and their agreement across regions.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "invman/hypotheses.hpp"
#include "invman/scenario.hpp"
#include "invman/spectrum.hpp"
#include "invman/transport.hpp"

namespace invman {

enum class Verdict { persists, fails_spectrum, fails_compatibility, inconclusive };

std::string to_string(Verdict v);

/// B = (I - M0)^-1 M1, so that Ker R = {(B z, z)}. Throws PersistenceError
/// naming the restricted multiplier closest to 1 when I - M0 is singular.
Matrix invariant_section(const MonodromyResult& m, double tol = 1e-8);

struct KernelLemmaResult {
  int dimension = 0;
  Matrix basis;  // orthonormal columns
};

KernelLemmaResult kernel_lemma(const MonodromyResult& m, double rel_tol = 1e-8);

struct KernelTestResult {
  std::string first, second;
  Matrix commutator;
  int dimension = 0;
  Matrix basis;
  bool nontrivial = false;
  bool contains_section = false;
  double section_residual = 0.0;  // max |C v| / |v| over the candidates
  double tolerance = 0.0;
};

/// Kernel of C = Mi Mj - Mj Mi and whether every candidate column lies in it.
KernelTestResult kernel_test(const MonodromyResult& mi, const MonodromyResult& mj,
                             const Matrix& candidates, double rel_tol = 1e-8);

/// Columns (B e_a, e_a) spanning the section y = B z.
Matrix section_vectors(const Matrix& section);

struct RegionSection {
  std::string loop;
  std::string region;
  Matrix B;
};

struct CompatibilityResult {
  std::string first_region, second_region;
  std::string first_loop, second_loop;
  double discrepancy = 0.0;  // max over unit z of |(Bi - Bj) z|
  bool passed = false;
};

/// Sections compared on every pair of regions that are equal or share a
/// transition. Fibers are shared, so the comparison is pointwise in z.
std::vector<CompatibilityResult> compatibility_check(const std::vector<RegionSection>& sections,
                                                     const Atlas& atlas, double tol);

struct PersistenceConfig {
  IntegratorConfig integrator;
  SpectrumConfig spectrum;
  HypothesisConfig hypotheses;
  double identity_tol = 1e-6;
  double compatibility_tol = 1e-8;
  double kernel_tol = 1e-8;
  double probe_radius = 1e-3;  // z offsets of the lift probes
  std::size_t probes = 4;
  double lift_tol = 1e-6;
  bool waive_hypotheses = false;
  Execution execution = Execution::parallel;
};

struct SectionResult {
  std::string loop;
  std::optional<Matrix> B;
  std::string error;
};

struct LiftCheck {
  std::string loop;
  double max_error = 0.0;
  bool passed = false;
  std::string error;
};

struct PersistenceReport {
  std::string scenario;
  bool corollary1_applied = false;
  std::optional<HypothesisReport> hypotheses;
  std::vector<MonodromyResult> per_cycle;
  std::vector<std::string> identity_cycles;  // dropped from the spectrum test
  SpectrumResult spectrum;
  std::vector<SectionResult> sections;
  std::vector<KernelTestResult> kernel_tests;
  std::vector<CompatibilityResult> compatibility;
  std::optional<Matrix> section;  // glued y = B z
  std::vector<LiftCheck> lift_checks;
  Verdict verdict = Verdict::inconclusive;
  std::vector<std::string> reasons;
};

PersistenceReport persistence_verdict(const Scenario& scenario, const PersistenceConfig& config);

}  // namespace invman
