#pragma once

#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "invman/atlas.hpp"

namespace invman {

/// One generator X_a in chart coordinates: base components (k), phase fiber
/// components (s) and parameter components (q, which must be literal zero).
struct Generator {
  std::string label;
  std::vector<Expression> base;
  std::vector<Expression> phase;
  std::vector<Expression> params;
};

/// Generators resolved against one chart's coordinates (phi, y, z).
class FieldSet {
 public:
  FieldSet(std::shared_ptr<const Atlas> atlas, std::string chart, std::vector<Generator> generators);

  const std::string& chart() const { return chart_; }
  std::size_t size() const { return generators_.size(); }
  const Generator& generator(std::size_t a) const { return generators_[a]; }
  const std::vector<Generator>& generators() const { return generators_; }
  const Dimensions& dims() const { return atlas_->dims(); }
  std::size_t index_of(std::string_view label) const;

  /// All N = k+s+q components of generator a at x = (phi, y, z).
  Vector value(std::size_t a, const Vector& x) const;
  /// N x d matrix whose columns are the generators at x.
  Matrix values(const Vector& x) const;
  /// Directional derivative of generator a's components along `direction`.
  Vector derivative(std::size_t a, const Vector& x, const Vector& direction) const;
  /// d(fiber components)/d(fiber coordinates), (s+q) x (s+q).
  Matrix fiber_jacobian(std::size_t a, const Vector& x) const;

 private:
  std::shared_ptr<const Atlas> atlas_;
  std::string chart_;
  std::vector<Generator> generators_;
  std::vector<std::vector<Expression>> resolved_;
};

/// The generator family on every chart of an atlas. Overlap field sets (own
/// generators followed by the neighbour's pushed-forward generators) are
/// generated at construction for every transition.
class FieldSystem {
 public:
  FieldSystem(Atlas atlas, std::map<std::string, std::vector<Generator>, std::less<>> generators);

  const Atlas& atlas() const { return *atlas_; }
  std::shared_ptr<const Atlas> atlas_ptr() const { return atlas_; }
  const Dimensions& dims() const { return atlas_->dims(); }
  const std::map<std::string, std::vector<Generator>, std::less<>>& generators() const {
    return generators_;
  }

  const FieldSet& fields(std::string_view chart) const;
  const FieldSet& overlap_fields(std::string_view transition) const;

 private:
  std::shared_ptr<const Atlas> atlas_;
  std::map<std::string, std::vector<Generator>, std::less<>> generators_;
  std::map<std::string, FieldSet, std::less<>> chart_fields_;
  std::map<std::string, FieldSet, std::less<>> overlap_fields_;
};

/// Generators of `transition.to` rewritten in `transition.from` coordinates:
/// base part J_backward(forward(v)) * X(forward(v)), fiber part unchanged.
std::vector<Generator> pushforward(const TransitionMap& transition, const Chart& to_chart,
                                   const std::vector<Generator>& generators);

struct RankResult {
  int rank = 0;
  double smallest_retained = 0.0;
  Vector singular_values;
};

/// Rank of the d x (k+s) component matrix at a point, threshold
/// 1e-8 * largest singular value.
RankResult distribution_rank(const FieldSet& fields, const Vector& point);
RankResult distribution_rank(const FieldSystem& system, std::string_view chart, const Vector& point);

/// |X x Y| for exactly two generators on k + s = 3.
double cross_product_norm(const FieldSet& fields, const Vector& point);
double cross_product_norm(const FieldSystem& system, std::string_view chart, const Vector& point);

/// [X_a, X_b] = D X_b . X_a - D X_a . X_b.
Vector commutator(const FieldSet& fields, std::size_t a, std::size_t b, const Vector& point);

struct InvolutivityResult {
  double residual = 0.0;
  Vector coefficients;  // least-squares coefficients on the basis, in basis order
  Vector commutator;
  double commutator_norm = 0.0;
  int basis_rank = 0;
  bool rank_deficient = false;
  bool involutive = false;  // residual < tol * (1 + |commutator|)
};

InvolutivityResult involutivity_residual(const FieldSet& fields, std::size_t a, std::size_t b,
                                         const Vector& point, std::span<const std::size_t> basis,
                                         double tol = 1e-7);

/// Lifting coefficients alpha (beta(phi) alpha = tangent) and the linear
/// connection L = sum_a alpha_a d f_a / dw at (phi, 0).
struct LinearLift {
  Vector alpha;
  Matrix L;  // (s+q) x (s+q): [[F, G], [H, K]]
};

LinearLift linear_connection(const FieldSet& fields, const Vector& phi, const Vector& tangent);

/// dw/dt of the nonlinear lift at (phi, w) for a base tangent.
Vector nonlinear_connection(const FieldSet& fields, const Vector& phi, const Vector& w,
                            const Vector& tangent);

struct ConnectionSample {
  std::size_t segment = 0;
  std::string chart;
  double t = 0.0;
  Vector phi;
  Vector alpha;
  Matrix F, G, H, K;
};

struct LinearizedConnection {
  std::string loop;
  std::vector<ConnectionSample> samples;
};

/// F = df/dy, G = df/dz (and H, K, verified zero) along the loop grid.
LinearizedConnection linearize(const FieldSystem& system, const Loop& loop, double step = 1e-3);

}  // namespace invman
