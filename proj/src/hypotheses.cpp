#include "invman/hypotheses.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "invman/errors.hpp"

namespace invman {

bool HypothesisReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckLine& c) { return c.passed; });
}

namespace {

// Points (phi, 0) over the chart domain.
std::vector<Vector> manifold_points(const Atlas& atlas, const std::vector<Vector>& base) {
  std::vector<Vector> out;
  for (const auto& phi : base) {
    Vector x = Vector::Zero(atlas.dims().total());
    x.head(atlas.dims().base) = phi;
    out.push_back(std::move(x));
  }
  return out;
}

// Points (phi, w) with w uniform in the fiber cube of the given radius.
std::vector<Vector> tube_points(const Atlas& atlas, const std::vector<Vector>& base, double radius,
                                std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-radius, radius);
  auto out = manifold_points(atlas, base);
  for (auto& x : out)
    for (int i = atlas.dims().base; i < atlas.dims().total(); ++i) x[i] = u(rng);
  return out;
}

CheckLine rank_check(const FieldSet& fields, const std::vector<Vector>& points, Execution exec) {
  const int k = fields.dims().base;
  const auto ranks = map_indices(points.size(), exec,
                                 [&](std::size_t i) { return distribution_rank(fields, points[i]); });
  CheckLine c{"rank", fields.chart(), true, static_cast<double>(k), static_cast<double>(k), ""};
  double smallest = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < ranks.size(); ++i) {
    smallest = std::min(smallest, ranks[i].smallest_retained);
    if (ranks[i].rank != k && c.passed) {
      c.passed = false;
      c.value = ranks[i].rank;
      c.detail = "rank " + std::to_string(ranks[i].rank) + " at sample " + std::to_string(i);
    }
  }
  if (c.passed) c.detail = "smallest retained singular value " + std::to_string(smallest);
  return c;
}

CheckLine invariance_check(const FieldSet& fields, const std::vector<Vector>& points, double tol,
                           Execution exec) {
  const auto& d = fields.dims();
  const auto worst = map_indices(points.size(), exec, [&](std::size_t i) {
    double m = 0.0;
    for (std::size_t a = 0; a < fields.size(); ++a)
      m = std::max(m, fields.value(a, points[i]).tail(d.fiber()).cwiseAbs().maxCoeff());
    return m;
  });
  const double value = worst.empty() ? 0.0 : *std::max_element(worst.begin(), worst.end());
  return {"manifold_invariance", fields.chart(), value <= tol, value, tol,
          "max fiber component on the manifold"};
}

CheckLine involutivity_check(const FieldSet& fields, const std::string& subject,
                             const std::vector<Vector>& points, double tol, Execution exec) {
  std::vector<std::size_t> basis(fields.size());
  std::iota(basis.begin(), basis.end(), 0);
  const auto worst = map_indices(points.size(), exec, [&](std::size_t i) {
    double m = 0.0;
    for (std::size_t a = 0; a < fields.size(); ++a)
      for (std::size_t b = a + 1; b < fields.size(); ++b) {
        const auto r = involutivity_residual(fields, a, b, points[i], basis, tol);
        m = std::max(m, r.residual / (1.0 + r.commutator_norm));
      }
    return m;
  });
  const double value = worst.empty() ? 0.0 : *std::max_element(worst.begin(), worst.end());
  return {"involutivity", subject, value < tol, value, tol,
          "max residual / (1 + |commutator|) over " + std::to_string(points.size()) + " samples"};
}

}  // namespace

HypothesisReport check_hypotheses(const FieldSystem& system, const std::vector<Loop>& loops,
                                  const HypothesisConfig& config) {
  const Atlas& atlas = system.atlas();
  const auto& d = atlas.dims();
  std::mt19937_64 rng(config.seed);
  HypothesisReport report;

  for (const auto& chart : atlas.charts()) {
    const auto& fields = system.fields(chart.id);
    const auto base = atlas.sample_domain(chart.id, config.samples, rng);
    const auto on_manifold = manifold_points(atlas, base);
    report.checks.push_back(rank_check(fields, on_manifold, config.execution));
    report.checks.push_back(
        invariance_check(fields, on_manifold, config.vanishing_tol, config.execution));
    const auto tube = tube_points(atlas, base, config.fiber_radius, rng);
    report.checks.push_back(
        involutivity_check(fields, chart.id, tube, config.involutivity_tol, config.execution));
    if (fields.size() == 2 && d.base + d.phase == 3) {
      double smallest = std::numeric_limits<double>::infinity();
      for (const auto& x : on_manifold) smallest = std::min(smallest, cross_product_norm(fields, x));
      report.checks.push_back({"cross_product", chart.id, smallest > config.vanishing_tol, smallest,
                               config.vanishing_tol, "min |X x Y| on the manifold"});
    }
  }

  for (const auto& t : atlas.transitions()) {
    const auto base = atlas.sample_overlap(t.id, config.samples, rng);
    const double err = atlas.round_trip_error(t.id, base);
    report.checks.push_back({"round_trip", t.id, err <= config.round_trip_tol, err,
                             config.round_trip_tol, "max |backward(forward(p)) - p|"});
    const auto tube = tube_points(atlas, base, config.fiber_radius, rng);
    report.checks.push_back(involutivity_check(system.overlap_fields(t.id), t.id, tube,
                                               config.involutivity_tol, config.execution));
  }

  for (const auto& loop : loops) {
    CheckLine c{"loop", loop.label, true, 0.0, 0.0, "closed, inside its charts and liftable"};
    try {
      linearize(system, loop, config.step);
    } catch (const Error& e) {
      c.passed = false;
      c.value = 1.0;
      c.detail = e.what();
    }
    report.checks.push_back(std::move(c));
  }
  return report;
}

}  // namespace invman
