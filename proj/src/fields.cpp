#include "invman/fields.hpp"

#include <cmath>
#include <set>

#include "invman/errors.hpp"

namespace invman {

namespace {

constexpr double kRankTolerance = 1e-8;
constexpr double kLiftTolerance = 1e-8;
constexpr double kAmbiguityTolerance = 1e-9;
constexpr double kVanishingTolerance = 1e-9;

Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }

}  // namespace

// ---------------------------------------------------------------------------

FieldSet::FieldSet(std::shared_ptr<const Atlas> atlas, std::string chart,
                   std::vector<Generator> generators)
    : atlas_(std::move(atlas)), chart_(std::move(chart)), generators_(std::move(generators)) {
  const auto& d = atlas_->dims();
  const auto slots = atlas_->chart_slots(chart_);
  for (const auto& g : generators_) {
    const std::string where = "generator '" + g.label + "' on chart '" + chart_ + "'";
    if (static_cast<int>(g.base.size()) != d.base || static_cast<int>(g.phase.size()) != d.phase ||
        static_cast<int>(g.params.size()) != d.params)
      throw FieldError(where + ": expected " + std::to_string(d.base) + " base, " +
                       std::to_string(d.phase) + " phase and " + std::to_string(d.params) +
                       " parameter components");
    for (const auto& h : g.params)
      if (!h.is_literal_zero())
        throw FieldError(where + ": parameter components must be the literal 0");
    std::vector<Expression> comps;
    try {
      for (const auto* part : {&g.base, &g.phase, &g.params})
        for (const auto& e : *part) comps.push_back(e.resolve(slots));
    } catch (const EvalError& e) {
      throw FieldError(where + ": " + e.what());
    }
    resolved_.push_back(std::move(comps));
  }
}

std::size_t FieldSet::index_of(std::string_view label) const {
  for (std::size_t i = 0; i < generators_.size(); ++i)
    if (generators_[i].label == label) return i;
  throw FieldError("no generator '" + std::string(label) + "' on chart '" + chart_ + "'");
}

Vector FieldSet::value(std::size_t a, const Vector& x) const {
  const auto& consts = atlas_->constant_values();
  std::vector<double> values(x.data(), x.data() + x.size());
  values.insert(values.end(), consts.begin(), consts.end());
  const auto& comps = resolved_[a];
  Vector out(idx(comps.size()));
  for (std::size_t i = 0; i < comps.size(); ++i) out[idx(i)] = eval_slots(comps[i], values);
  return out;
}

Matrix FieldSet::values(const Vector& x) const {
  Matrix out(dims().total(), idx(size()));
  for (std::size_t a = 0; a < size(); ++a) out.col(idx(a)) = value(a, x);
  return out;
}

Vector FieldSet::derivative(std::size_t a, const Vector& x, const Vector& direction) const {
  const auto& consts = atlas_->constant_values();
  std::vector<DualValue> values;
  values.reserve(static_cast<std::size_t>(x.size()) + consts.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) values.emplace_back(x[i], direction[i]);
  for (double c : consts) values.emplace_back(c);
  const auto& comps = resolved_[a];
  Vector out(idx(comps.size()));
  for (std::size_t i = 0; i < comps.size(); ++i)
    out[idx(i)] = eval_slots(comps[i], values).derivative;
  return out;
}

Matrix FieldSet::fiber_jacobian(std::size_t a, const Vector& x) const {
  const auto& d = dims();
  const int nf = d.fiber();
  Matrix out(nf, nf);
  Vector dir = Vector::Zero(d.total());
  for (int j = 0; j < nf; ++j) {
    dir.setZero();
    dir[d.base + j] = 1.0;
    out.col(j) = derivative(a, x, dir).tail(nf);
  }
  return out;
}

// ---------------------------------------------------------------------------

std::vector<Generator> pushforward(const TransitionMap& transition, const Chart& to_chart,
                                   const std::vector<Generator>& generators) {
  const auto& to_vars = to_chart.base_vars;
  const std::size_t k = to_vars.size();
  std::map<std::string, Expression, std::less<>> at_image;
  for (std::size_t j = 0; j < k; ++j) at_image[to_vars[j]] = transition.forward[j];

  // Jacobian of the backward map, evaluated at forward(v).
  std::vector<std::vector<Expression>> jac(k, std::vector<Expression>(k));
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j)
      jac[i][j] = substitute(differentiate(transition.backward[i], to_vars[j]), at_image);

  std::vector<Generator> out;
  for (const auto& g : generators) {
    Generator p;
    p.label = g.label;
    std::vector<Expression> comps;
    for (const auto& e : g.base) comps.push_back(substitute(e, at_image));
    for (std::size_t i = 0; i < k; ++i) {
      Expression sum;
      for (std::size_t j = 0; j < k; ++j) sum = sum + jac[i][j] * comps[j];
      p.base.push_back(sum);
    }
    for (const auto& e : g.phase) p.phase.push_back(substitute(e, at_image));
    for (const auto& e : g.params) p.params.push_back(substitute(e, at_image));
    out.push_back(std::move(p));
  }
  return out;
}

FieldSystem::FieldSystem(Atlas atlas,
                         std::map<std::string, std::vector<Generator>, std::less<>> generators)
    : atlas_(std::make_shared<const Atlas>(std::move(atlas))), generators_(std::move(generators)) {
  for (const auto& [chart, gens] : generators_)
    if (!atlas_->has_chart(chart)) throw FieldError("generators given for unknown chart '" + chart + "'");
  for (const auto& c : atlas_->charts()) {
    const auto it = generators_.find(c.id);
    if (it == generators_.end() || it->second.empty())
      throw FieldError("chart '" + c.id + "' has no generators");
    chart_fields_.emplace(c.id, FieldSet(atlas_, c.id, it->second));
  }
  for (const auto& t : atlas_->transitions()) {
    std::vector<Generator> combined = generators_.find(t.from)->second;
    std::set<std::string> labels;
    for (const auto& g : combined) labels.insert(g.label);
    for (auto& g : pushforward(t, atlas_->chart(t.to), generators_.find(t.to)->second)) {
      while (labels.count(g.label)) g.label += "'";
      labels.insert(g.label);
      combined.push_back(std::move(g));
    }
    overlap_fields_.emplace(t.id, FieldSet(atlas_, t.from, std::move(combined)));
  }
}

const FieldSet& FieldSystem::fields(std::string_view chart) const {
  const auto it = chart_fields_.find(chart);
  if (it == chart_fields_.end()) throw FieldError("unknown chart '" + std::string(chart) + "'");
  return it->second;
}

const FieldSet& FieldSystem::overlap_fields(std::string_view transition) const {
  const auto it = overlap_fields_.find(transition);
  if (it == overlap_fields_.end())
    throw FieldError("unknown transition '" + std::string(transition) + "'");
  return it->second;
}

// ---------------------------------------------------------------------------

RankResult distribution_rank(const FieldSet& fields, const Vector& point) {
  const auto& d = fields.dims();
  // d x (k+s): parameter components are zero by construction.
  const Matrix m = fields.values(point).topRows(d.base + d.phase).transpose();
  Eigen::JacobiSVD<Matrix> svd(m);
  RankResult r;
  r.singular_values = svd.singularValues();
  const double largest = r.singular_values.size() ? r.singular_values[0] : 0.0;
  if (largest == 0.0) return r;
  for (Eigen::Index i = 0; i < r.singular_values.size(); ++i) {
    if (r.singular_values[i] > kRankTolerance * largest) {
      ++r.rank;
      r.smallest_retained = r.singular_values[i];
    }
  }
  return r;
}

RankResult distribution_rank(const FieldSystem& system, std::string_view chart, const Vector& point) {
  if (!system.atlas().in_domain(chart, point.head(system.dims().base)))
    throw FieldError("point outside the domain of chart '" + std::string(chart) + "'");
  return distribution_rank(system.fields(chart), point);
}

double cross_product_norm(const FieldSet& fields, const Vector& point) {
  const auto& d = fields.dims();
  if (fields.size() != 2 || d.base + d.phase != 3)
    throw FieldError("cross product needs exactly two generators on a 3-dimensional phase chart");
  const Eigen::Vector3d x = fields.value(0, point).head(3);
  const Eigen::Vector3d y = fields.value(1, point).head(3);
  return x.cross(y).norm();
}

double cross_product_norm(const FieldSystem& system, std::string_view chart, const Vector& point) {
  return cross_product_norm(system.fields(chart), point);
}

Vector commutator(const FieldSet& fields, std::size_t a, std::size_t b, const Vector& point) {
  const Vector xa = fields.value(a, point);
  const Vector xb = fields.value(b, point);
  return fields.derivative(b, point, xa) - fields.derivative(a, point, xb);
}

InvolutivityResult involutivity_residual(const FieldSet& fields, std::size_t a, std::size_t b,
                                         const Vector& point, std::span<const std::size_t> basis,
                                         double tol) {
  if (a >= fields.size() || b >= fields.size()) throw FieldError("generator index out of range");
  InvolutivityResult r;
  r.commutator = commutator(fields, a, b, point);
  r.commutator_norm = r.commutator.norm();
  Matrix m(fields.dims().total(), idx(basis.size()));
  for (std::size_t j = 0; j < basis.size(); ++j) {
    if (basis[j] >= fields.size()) throw FieldError("basis index out of range");
    m.col(idx(j)) = fields.value(basis[j], point);
  }
  if (basis.empty()) {
    r.coefficients = Vector(0);
    r.residual = r.commutator_norm;
  } else {
    Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    svd.setThreshold(kRankTolerance);
    r.coefficients = svd.solve(r.commutator);
    r.basis_rank = static_cast<int>(svd.rank());
    r.rank_deficient = r.basis_rank < static_cast<int>(basis.size());
    r.residual = (m * r.coefficients - r.commutator).norm();
  }
  r.involutive = r.residual < tol * (1.0 + r.commutator_norm);
  return r;
}

LinearLift linear_connection(const FieldSet& fields, const Vector& phi, const Vector& tangent) {
  const auto& d = fields.dims();
  const auto n = fields.size();
  Vector x = Vector::Zero(d.total());
  x.head(d.base) = phi;
  const Matrix beta = fields.values(x).topRows(d.base);

  Eigen::JacobiSVD<Matrix> svd(beta, Eigen::ComputeFullU | Eigen::ComputeFullV);
  svd.setThreshold(kRankTolerance);
  LinearLift lift;
  lift.alpha = svd.solve(tangent);
  const double miss = (beta * lift.alpha - tangent).norm();
  if (miss > kLiftTolerance * (1.0 + tangent.norm()))
    throw FieldError("loop tangent is not in the span of the generators on chart '" +
                     fields.chart() + "' (miss " + std::to_string(miss) + ")");

  std::vector<Matrix> jac;
  jac.reserve(n);
  for (std::size_t a = 0; a < n; ++a) jac.push_back(fields.fiber_jacobian(a, x));
  lift.L = Matrix::Zero(d.fiber(), d.fiber());
  for (std::size_t a = 0; a < n; ++a) lift.L += lift.alpha[idx(a)] * jac[a];

  // Null directions of beta must not move L, otherwise the lift is ambiguous.
  const auto rank = svd.rank();
  const Matrix& v = svd.matrixV();
  const double scale = std::max(1.0, lift.alpha.norm());
  for (Eigen::Index c = rank; c < v.cols(); ++c) {
    Matrix delta = Matrix::Zero(d.fiber(), d.fiber());
    for (std::size_t a = 0; a < n; ++a) delta += v(idx(a), c) * jac[a];
    if (max_abs(delta) > kAmbiguityTolerance * scale)
      throw FieldError("ambiguous lift on chart '" + fields.chart() +
                       "': rank-deficient generators give different linearizations");
  }
  return lift;
}

Vector nonlinear_connection(const FieldSet& fields, const Vector& phi, const Vector& w,
                            const Vector& tangent) {
  const auto& d = fields.dims();
  Vector x(d.total());
  x << phi, w;
  const Matrix vals = fields.values(x);
  const Matrix beta = vals.topRows(d.base);
  Eigen::JacobiSVD<Matrix> svd(beta, Eigen::ComputeThinU | Eigen::ComputeThinV);
  svd.setThreshold(kRankTolerance);
  const Vector alpha = svd.solve(tangent);
  const double miss = (beta * alpha - tangent).norm();
  if (miss > kLiftTolerance * (1.0 + tangent.norm()))
    throw FieldError("loop tangent is not in the span of the generators on chart '" +
                     fields.chart() + "'");
  return vals.bottomRows(d.fiber()) * alpha;
}

LinearizedConnection linearize(const FieldSystem& system, const Loop& loop, double step) {
  const auto& d = system.dims();
  LinearizedConnection out;
  out.loop = loop.label;
  for (auto& s : discretize_loop(system.atlas(), loop, step)) {
    const LinearLift lift = linear_connection(system.fields(s.chart), s.phi, s.tangent);
    ConnectionSample c;
    c.segment = s.segment;
    c.chart = s.chart;
    c.t = s.t;
    c.phi = std::move(s.phi);
    c.alpha = lift.alpha;
    c.F = lift.L.topLeftCorner(d.phase, d.phase);
    c.G = lift.L.topRightCorner(d.phase, d.params);
    c.H = lift.L.bottomLeftCorner(d.params, d.phase);
    c.K = lift.L.bottomRightCorner(d.params, d.params);
    if (max_abs(c.H) > kVanishingTolerance || max_abs(c.K) > kVanishingTolerance)
      throw FieldError("parameter rows of the linear connection do not vanish on loop '" +
                       loop.label + "'");
    out.samples.push_back(std::move(c));
  }
  return out;
}

}  // namespace invman
