#pragma once

// Chart atlas for the base manifold and its tubular neighbourhood.
//
// Each chart carries k base coordinates. The fiber coordinates (s phase
// coordinates followed by q parameter coordinates) are shared by every chart:
// fibers are glued by the identity. Transition maps act on base coordinates
// only.

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "invman/expr.hpp"
#include "invman/linalg.hpp"

namespace invman {

using Constants = std::map<std::string, double, std::less<>>;

struct Dimensions {
  int base = 1;    // k, dimension of the base manifold
  int phase = 1;   // s, transverse phase-space directions
  int params = 0;  // q, parameter directions

  int fiber() const { return phase + params; }
  int total() const { return base + phase + params; }
};

/// A constant expression (bound, e.g. "pi" or "-1 + delta") and its value.
struct Bound {
  Expression expr;
  double value = 0.0;
};

/// Axis-aligned box intersected with {g_i >= 0} for each constraint g_i.
struct Region {
  std::vector<std::pair<Bound, Bound>> box;
  std::vector<Expression> constraints;
};

struct Chart {
  std::string id;
  std::vector<std::string> base_vars;
  Region domain;
};

struct TransitionMap {
  std::string id;
  std::string from;
  std::string to;
  std::vector<Expression> forward;   // to-coordinates in terms of from-coordinates
  std::vector<Expression> backward;  // from-coordinates in terms of to-coordinates
  Region overlap;                    // predicate on the `from` chart
};

/// Explicit chart change applied at the end of a loop segment.
struct Junction {
  std::string transition;
  bool inverse = false;
};

struct Segment {
  std::string chart;
  std::vector<Expression> path;  // k expressions in the parameter "t"
  double t0 = 0.0;
  double t1 = 1.0;
  std::optional<Junction> exit;
};

/// Chart-labelled piecewise path. Closed loops end where they start.
struct Loop {
  std::string label;
  std::string base_chart;
  Vector base_point;
  std::vector<Segment> segments;
};

struct LoopSample {
  std::size_t segment = 0;
  std::string chart;
  double t = 0.0;
  Vector phi;
  Vector tangent;  // d phi / dt
};

class Atlas {
 public:
  static constexpr double kPointTolerance = 1e-9;

  Atlas() = default;
  Atlas(Dimensions dims, std::vector<std::string> fiber_vars, Constants constants,
        std::vector<Chart> charts, std::vector<TransitionMap> transitions);

  const Dimensions& dims() const { return dims_; }
  const std::vector<std::string>& fiber_vars() const { return fiber_vars_; }
  const Constants& constants() const { return constants_; }
  const std::vector<Chart>& charts() const { return charts_; }
  const std::vector<TransitionMap>& transitions() const { return transitions_; }

  const Chart& chart(std::string_view id) const;
  const TransitionMap& transition_map(std::string_view id) const;
  bool has_chart(std::string_view id) const;

  /// Slot layout used to resolve chart expressions: base vars, fiber vars,
  /// then the named constants.
  std::vector<std::string> chart_slots(std::string_view chart) const;
  /// Slot layout for path expressions: "t", then the named constants.
  std::vector<std::string> path_slots() const;
  const std::vector<double>& constant_values() const { return constant_values_; }

  bool in_domain(std::string_view chart, const Vector& phi, double tol = kPointTolerance) const;
  bool in_overlap(std::string_view transition, const Vector& phi,
                  double tol = kPointTolerance) const;

  /// Map base coordinates from one chart to another through the declared
  /// transition (forward when declared from->to, backward when to->from).
  Vector transition(std::string_view from, std::string_view to, const Vector& point) const;
  /// Apply a specific transition, checking the overlap predicate.
  Vector apply(const Junction& junction, const Vector& point) const;
  /// Chart reached after crossing `junction`.
  const std::string& junction_target(const Junction& junction) const;

  std::vector<Vector> sample_domain(std::string_view chart, std::size_t count,
                                    std::mt19937_64& rng) const;
  std::vector<Vector> sample_overlap(std::string_view transition, std::size_t count,
                                     std::mt19937_64& rng) const;

  /// Largest |backward(forward(p)) - p| over the given overlap samples.
  double round_trip_error(std::string_view transition, const std::vector<Vector>& samples) const;

 private:
  struct CompiledRegion {
    std::vector<std::pair<double, double>> box;
    std::vector<Expression> constraints;  // resolved against base vars + constants
  };
  struct CompiledTransition {
    std::vector<Expression> forward;
    std::vector<Expression> backward;
    CompiledRegion overlap;
  };

  std::size_t chart_index(std::string_view id) const;
  std::size_t transition_index(std::string_view id) const;
  CompiledRegion compile_region(const Region& region, const std::vector<std::string>& vars,
                                const std::string& where);
  bool region_contains(const CompiledRegion& r, const Vector& phi, double tol) const;
  Vector eval_map(const std::vector<Expression>& exprs, const Vector& point) const;
  std::vector<Vector> sample_region(const CompiledRegion& r, std::size_t count,
                                    std::mt19937_64& rng, const std::string& what) const;

  Dimensions dims_;
  std::vector<std::string> fiber_vars_;
  Constants constants_;
  std::vector<double> constant_values_;
  std::vector<Chart> charts_;
  std::vector<TransitionMap> transitions_;
  std::vector<CompiledRegion> domains_;
  std::vector<CompiledTransition> compiled_transitions_;
};

/// Evaluate a region bound expression against the constants.
Bound make_bound(const Expression& expr, const Constants& constants);

/// Loop validated and resolved against an atlas, ready for repeated
/// evaluation along its segments.
class CompiledLoop {
 public:
  CompiledLoop(const Atlas& atlas, Loop loop);

  const Loop& loop() const { return loop_; }
  std::size_t size() const { return loop_.segments.size(); }

  /// Position and tangent on segment `i` at parameter t.
  void evaluate(std::size_t i, double t, Vector& phi, Vector& tangent) const;
  Vector position(std::size_t i, double t) const;

  /// Steps used on each segment so that a global step `step` on the loop
  /// reparametrized to [0, 1] is honoured.
  std::vector<std::size_t> steps(double step) const;

  /// Max mismatch at the segment junctions (including closure when
  /// `closed`); throws AtlasError when above tolerance.
  void check_junctions(bool closed) const;

 private:
  const Atlas* atlas_;
  Loop loop_;
  std::vector<std::vector<Expression>> resolved_;
};

/// Ordered sample list (segment start points at the integration grid).
std::vector<LoopSample> discretize_loop(const Atlas& atlas, const Loop& loop, double step,
                                        bool closed = true);

/// Same path traversed backwards.
Loop reverse_loop(const Atlas& atlas, const Loop& loop);
/// `second` after `first`; both must share the base point.
Loop concatenate(const Loop& first, const Loop& second);
Loop loop_power(const Loop& loop, int k);

}  // namespace invman
