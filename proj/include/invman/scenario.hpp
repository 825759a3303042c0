#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "invman/fields.hpp"

namespace invman {

/// A homology generator. Cycles with a region take part in the section
/// compatibility check; cycles without one are extra loops whose full
/// holonomy must fix the glued section.
struct CycleSpec {
  std::string loop;
  std::optional<std::string> region;
};

struct ExpectedMonodromy {
  std::string loop;
  Matrix M;
};

struct Scenario {
  std::string name;
  std::string description;
  FieldSystem system;
  std::vector<Loop> loops;
  std::vector<CycleSpec> cycles;
  std::vector<std::pair<std::string, std::string>> intersecting;
  bool trivial_pi1 = false;
  double fiber_box = 1.0;
  std::vector<ExpectedMonodromy> expected;

  const Loop& loop(std::string_view label) const;
};

}  // namespace invman
