#include "invman/atlas.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "invman/errors.hpp"

namespace invman {

namespace {

std::string format_point(const Vector& v) {
  std::string s = "(";
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(v[i]);
  }
  return s + ")";
}

}  // namespace

// ---------------------------------------------------------------------------
// linalg helpers live here to keep the library small

std::vector<Complex> sorted_eigenvalues(const Matrix& m) {
  std::vector<Complex> out;
  if (m.rows() == 0) return out;
  Eigen::EigenSolver<Matrix> solver(m, /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success)
    throw TransportError("nonsymmetric eigensolver failed to converge");
  const auto ev = solver.eigenvalues();
  for (Eigen::Index i = 0; i < ev.size(); ++i) out.push_back(ev[i]);
  std::sort(out.begin(), out.end(), [](const Complex& a, const Complex& b) {
    const double ma = std::abs(a), mb = std::abs(b);
    if (ma != mb) return ma > mb;
    if (a.real() != b.real()) return a.real() > b.real();
    return a.imag() > b.imag();
  });
  return out;
}

Matrix kernel_basis(const Matrix& m, double rel_tol) {
  const Eigen::Index n = m.cols();
  if (n == 0) return Matrix(0, 0);
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double largest = sv.size() ? sv[0] : 0.0;
  // Singular values beyond min(rows, cols) are implicitly zero.
  Eigen::Index rank = 0;
  if (largest > 0.0)
    for (Eigen::Index i = 0; i < sv.size(); ++i)
      if (sv[i] > rel_tol * largest) ++rank;
  Matrix basis = svd.matrixV().rightCols(n - rank);
  for (Eigen::Index c = 0; c < basis.cols(); ++c) {
    Eigen::Index arg = 0;
    basis.col(c).cwiseAbs().maxCoeff(&arg);
    if (basis(arg, c) < 0) basis.col(c) *= -1.0;
  }
  return basis;
}

double max_abs(const Matrix& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

// ---------------------------------------------------------------------------

Bound make_bound(const Expression& expr, const Constants& constants) {
  Bindings b(constants.begin(), constants.end());
  return {expr, eval(expr, b)};
}

Atlas::Atlas(Dimensions dims, std::vector<std::string> fiber_vars, Constants constants,
             std::vector<Chart> charts, std::vector<TransitionMap> transitions)
    : dims_(dims),
      fiber_vars_(std::move(fiber_vars)),
      constants_(std::move(constants)),
      charts_(std::move(charts)),
      transitions_(std::move(transitions)) {
  if (dims_.base < 1 || dims_.phase < 1 || dims_.params < 0)
    throw AtlasError("dimensions require k >= 1, s >= 1, q >= 0");
  if (static_cast<int>(fiber_vars_.size()) != dims_.fiber())
    throw AtlasError("expected " + std::to_string(dims_.fiber()) + " fiber variables");
  for (const auto& [name, value] : constants_) constant_values_.push_back(value);

  std::set<std::string, std::less<>> ids;
  for (const auto& c : charts_) {
    if (!ids.insert(c.id).second) throw AtlasError("duplicate chart id '" + c.id + "'");
    if (static_cast<int>(c.base_vars.size()) != dims_.base)
      throw AtlasError("chart '" + c.id + "' needs " + std::to_string(dims_.base) +
                       " base variables");
    std::set<std::string> names(c.base_vars.begin(), c.base_vars.end());
    names.insert(fiber_vars_.begin(), fiber_vars_.end());
    if (names.size() != c.base_vars.size() + fiber_vars_.size())
      throw AtlasError("chart '" + c.id + "' has repeated variable names");
    for (const auto& n : names)
      if (constants_.count(n)) throw AtlasError("variable '" + n + "' shadows a constant");
    domains_.push_back(compile_region(c.domain, c.base_vars, "chart '" + c.id + "' domain"));
  }

  std::set<std::string, std::less<>> tids;
  for (const auto& t : transitions_) {
    if (!tids.insert(t.id).second) throw AtlasError("duplicate transition id '" + t.id + "'");
    const auto& from = chart(t.from);
    const auto& to = chart(t.to);
    const auto k = static_cast<std::size_t>(dims_.base);
    if (t.forward.size() != k || t.backward.size() != k)
      throw AtlasError("transition '" + t.id + "' needs " + std::to_string(k) +
                       " forward and backward expressions");
    CompiledTransition ct;
    auto from_slots = from.base_vars;
    auto to_slots = to.base_vars;
    for (const auto& [name, v] : constants_) {
      from_slots.push_back(name);
      to_slots.push_back(name);
    }
    try {
      for (const auto& e : t.forward) ct.forward.push_back(e.resolve(from_slots));
      for (const auto& e : t.backward) ct.backward.push_back(e.resolve(to_slots));
    } catch (const EvalError& e) {
      throw AtlasError("transition '" + t.id + "': " + e.what());
    }
    ct.overlap = compile_region(t.overlap, from.base_vars, "transition '" + t.id + "' overlap");
    compiled_transitions_.push_back(std::move(ct));
  }
}

Atlas::CompiledRegion Atlas::compile_region(const Region& region,
                                            const std::vector<std::string>& vars,
                                            const std::string& where) {
  if (region.box.size() != vars.size())
    throw AtlasError(where + ": box needs one interval per base variable");
  CompiledRegion r;
  for (const auto& [lo, hi] : region.box) {
    if (!(lo.value <= hi.value)) throw AtlasError(where + ": empty interval");
    r.box.emplace_back(lo.value, hi.value);
  }
  auto slots = vars;
  for (const auto& [name, v] : constants_) slots.push_back(name);
  try {
    for (const auto& g : region.constraints) r.constraints.push_back(g.resolve(slots));
  } catch (const EvalError& e) {
    throw AtlasError(where + ": " + e.what());
  }
  return r;
}

std::size_t Atlas::chart_index(std::string_view id) const {
  for (std::size_t i = 0; i < charts_.size(); ++i)
    if (charts_[i].id == id) return i;
  throw AtlasError("unknown chart '" + std::string(id) + "'");
}

std::size_t Atlas::transition_index(std::string_view id) const {
  for (std::size_t i = 0; i < transitions_.size(); ++i)
    if (transitions_[i].id == id) return i;
  throw AtlasError("unknown transition '" + std::string(id) + "'");
}

const Chart& Atlas::chart(std::string_view id) const { return charts_[chart_index(id)]; }

const TransitionMap& Atlas::transition_map(std::string_view id) const {
  return transitions_[transition_index(id)];
}

bool Atlas::has_chart(std::string_view id) const {
  return std::any_of(charts_.begin(), charts_.end(), [&](const Chart& c) { return c.id == id; });
}

std::vector<std::string> Atlas::chart_slots(std::string_view id) const {
  auto slots = chart(id).base_vars;
  slots.insert(slots.end(), fiber_vars_.begin(), fiber_vars_.end());
  for (const auto& [name, v] : constants_) slots.push_back(name);
  return slots;
}

std::vector<std::string> Atlas::path_slots() const {
  std::vector<std::string> slots{"t"};
  for (const auto& [name, v] : constants_) slots.push_back(name);
  return slots;
}

bool Atlas::region_contains(const CompiledRegion& r, const Vector& phi, double tol) const {
  for (std::size_t i = 0; i < r.box.size(); ++i) {
    const double v = phi[static_cast<Eigen::Index>(i)];
    if (v < r.box[i].first - tol || v > r.box[i].second + tol) return false;
  }
  if (r.constraints.empty()) return true;
  std::vector<double> values(phi.data(), phi.data() + phi.size());
  values.insert(values.end(), constant_values_.begin(), constant_values_.end());
  for (const auto& g : r.constraints)
    if (eval_slots(g, values) < -tol) return false;
  return true;
}

bool Atlas::in_domain(std::string_view chart, const Vector& phi, double tol) const {
  return region_contains(domains_[chart_index(chart)], phi, tol);
}

bool Atlas::in_overlap(std::string_view transition, const Vector& phi, double tol) const {
  return region_contains(compiled_transitions_[transition_index(transition)].overlap, phi, tol);
}

Vector Atlas::eval_map(const std::vector<Expression>& exprs, const Vector& point) const {
  std::vector<double> values(point.data(), point.data() + point.size());
  values.insert(values.end(), constant_values_.begin(), constant_values_.end());
  Vector out(static_cast<Eigen::Index>(exprs.size()));
  for (std::size_t i = 0; i < exprs.size(); ++i)
    out[static_cast<Eigen::Index>(i)] = eval_slots(exprs[i], values);
  return out;
}

Vector Atlas::apply(const Junction& junction, const Vector& point) const {
  const auto idx = transition_index(junction.transition);
  const auto& ct = compiled_transitions_[idx];
  if (!junction.inverse) {
    if (!region_contains(ct.overlap, point, kPointTolerance))
      throw AtlasError("point " + format_point(point) + " outside overlap of transition '" +
                       junction.transition + "'");
    return eval_map(ct.forward, point);
  }
  Vector image = eval_map(ct.backward, point);
  if (!region_contains(ct.overlap, image, kPointTolerance))
    throw AtlasError("point " + format_point(point) + " outside overlap of transition '" +
                     junction.transition + "' (inverse)");
  return image;
}

const std::string& Atlas::junction_target(const Junction& junction) const {
  const auto& t = transition_map(junction.transition);
  return junction.inverse ? t.from : t.to;
}

Vector Atlas::transition(std::string_view from, std::string_view to, const Vector& point) const {
  std::optional<Junction> found;
  for (const auto& t : transitions_) {
    if (t.from == t.to) continue;
    std::optional<Junction> j;
    if (t.from == from && t.to == to) j = Junction{t.id, false};
    else if (t.from == to && t.to == from) j = Junction{t.id, true};
    if (!j) continue;
    if (found)
      throw AtlasError("several transitions between '" + std::string(from) + "' and '" +
                       std::string(to) + "'; name one explicitly");
    found = j;
  }
  if (!found)
    throw AtlasError("no transition declared between '" + std::string(from) + "' and '" +
                     std::string(to) + "'");
  return apply(*found, point);
}

std::vector<Vector> Atlas::sample_region(const CompiledRegion& r, std::size_t count,
                                         std::mt19937_64& rng, const std::string& what) const {
  std::vector<Vector> out;
  out.reserve(count);
  const std::size_t max_attempts = 1000 * count + 1000;
  std::size_t attempts = 0;
  while (out.size() < count) {
    if (++attempts > max_attempts) throw AtlasError("could not sample " + what);
    Vector p(static_cast<Eigen::Index>(r.box.size()));
    for (std::size_t i = 0; i < r.box.size(); ++i) {
      std::uniform_real_distribution<double> u(r.box[i].first, r.box[i].second);
      p[static_cast<Eigen::Index>(i)] = u(rng);
    }
    if (region_contains(r, p, 0.0)) out.push_back(std::move(p));
  }
  return out;
}

std::vector<Vector> Atlas::sample_domain(std::string_view chart, std::size_t count,
                                         std::mt19937_64& rng) const {
  return sample_region(domains_[chart_index(chart)], count, rng,
                       "domain of chart '" + std::string(chart) + "'");
}

std::vector<Vector> Atlas::sample_overlap(std::string_view transition, std::size_t count,
                                          std::mt19937_64& rng) const {
  return sample_region(compiled_transitions_[transition_index(transition)].overlap, count, rng,
                       "overlap of transition '" + std::string(transition) + "'");
}

double Atlas::round_trip_error(std::string_view transition,
                               const std::vector<Vector>& samples) const {
  const auto& ct = compiled_transitions_[transition_index(transition)];
  double worst = 0.0;
  for (const auto& p : samples) {
    const Vector back = eval_map(ct.backward, eval_map(ct.forward, p));
    worst = std::max(worst, (back - p).cwiseAbs().maxCoeff());
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Loops

CompiledLoop::CompiledLoop(const Atlas& atlas, Loop loop) : atlas_(&atlas), loop_(std::move(loop)) {
  if (loop_.segments.empty()) throw AtlasError("loop '" + loop_.label + "' has no segments");
  if (!atlas.has_chart(loop_.base_chart))
    throw AtlasError("loop '" + loop_.label + "': unknown base chart '" + loop_.base_chart + "'");
  const auto slots = atlas.path_slots();
  const auto k = static_cast<std::size_t>(atlas.dims().base);
  for (std::size_t i = 0; i < loop_.segments.size(); ++i) {
    const auto& seg = loop_.segments[i];
    const std::string where = "loop '" + loop_.label + "' segment " + std::to_string(i);
    if (!atlas.has_chart(seg.chart)) throw AtlasError(where + ": unknown chart '" + seg.chart + "'");
    if (seg.path.size() != k)
      throw AtlasError(where + ": path needs " + std::to_string(k) + " expressions");
    if (!(seg.t1 > seg.t0)) throw AtlasError(where + ": parameter range must satisfy t0 < t1");
    std::vector<Expression> resolved;
    try {
      for (const auto& e : seg.path) resolved.push_back(e.resolve(slots));
    } catch (const EvalError& e) {
      throw AtlasError(where + ": " + e.what());
    }
    resolved_.push_back(std::move(resolved));
  }
}

void CompiledLoop::evaluate(std::size_t i, double t, Vector& phi, Vector& tangent) const {
  std::vector<DualValue> values;
  values.reserve(1 + atlas_->constant_values().size());
  values.emplace_back(t, 1.0);
  for (double c : atlas_->constant_values()) values.emplace_back(c);
  const auto& exprs = resolved_[i];
  phi.resize(static_cast<Eigen::Index>(exprs.size()));
  tangent.resize(static_cast<Eigen::Index>(exprs.size()));
  for (std::size_t j = 0; j < exprs.size(); ++j) {
    const DualValue d = eval_slots(exprs[j], values);
    phi[static_cast<Eigen::Index>(j)] = d.value;
    tangent[static_cast<Eigen::Index>(j)] = d.derivative;
  }
}

Vector CompiledLoop::position(std::size_t i, double t) const {
  Vector phi, tangent;
  evaluate(i, t, phi, tangent);
  return phi;
}

std::vector<std::size_t> CompiledLoop::steps(double step) const {
  if (!(step > 0.0)) throw AtlasError("integration step must be positive");
  double total = 0.0;
  for (const auto& s : loop_.segments) total += s.t1 - s.t0;
  std::vector<std::size_t> out;
  for (const auto& s : loop_.segments) {
    const double n = std::round((s.t1 - s.t0) / (total * step));
    out.push_back(static_cast<std::size_t>(std::max(1.0, n)));
  }
  return out;
}

void CompiledLoop::check_junctions(bool closed) const {
  const double tol = Atlas::kPointTolerance;
  const auto& segs = loop_.segments;
  const std::string where = "loop '" + loop_.label + "'";
  if (segs.front().chart != loop_.base_chart)
    throw AtlasError(where + ": first segment must start in the base chart");
  const Vector start = position(0, segs.front().t0);
  if (loop_.base_point.size() != start.size() ||
      (start - loop_.base_point).cwiseAbs().maxCoeff() > tol)
    throw AtlasError(where + ": first segment does not start at the base point");

  for (std::size_t i = 0; i < segs.size(); ++i) {
    const bool last = i + 1 == segs.size();
    if (last && !closed) break;
    Vector end = position(i, segs[i].t1);
    std::string chart = segs[i].chart;
    const std::string& next_chart = last ? loop_.base_chart : segs[i + 1].chart;
    if (segs[i].exit) {
      end = atlas_->apply(*segs[i].exit, end);
      chart = atlas_->junction_target(*segs[i].exit);
    } else if (chart != next_chart) {
      end = atlas_->transition(chart, next_chart, end);
      chart = next_chart;
    }
    if (chart != next_chart)
      throw AtlasError(where + ": junction after segment " + std::to_string(i) +
                       " lands in chart '" + chart + "', expected '" + next_chart + "'");
    const Vector target = last ? loop_.base_point : position(i + 1, segs[i + 1].t0);
    const double gap = (end - target).cwiseAbs().maxCoeff();
    if (gap > tol) {
      if (last)
        throw AtlasError(where + ": not closed, end misses the base point by " +
                         std::to_string(gap));
      throw AtlasError(where + ": junction mismatch after segment " + std::to_string(i) +
                       " of " + std::to_string(gap));
    }
  }
}

std::vector<LoopSample> discretize_loop(const Atlas& atlas, const Loop& loop, double step,
                                        bool closed) {
  CompiledLoop compiled(atlas, loop);
  compiled.check_junctions(closed);
  const auto steps = compiled.steps(step);
  std::vector<LoopSample> out;
  for (std::size_t i = 0; i < compiled.size(); ++i) {
    const auto& seg = loop.segments[i];
    const double h = (seg.t1 - seg.t0) / static_cast<double>(steps[i]);
    for (std::size_t j = 0; j < steps[i]; ++j) {
      LoopSample s;
      s.segment = i;
      s.chart = seg.chart;
      s.t = seg.t0 + static_cast<double>(j) * h;
      compiled.evaluate(i, s.t, s.phi, s.tangent);
      if (!atlas.in_domain(seg.chart, s.phi))
        throw AtlasError("loop '" + loop.label + "': sample " + format_point(s.phi) +
                         " escapes the domain of chart '" + seg.chart + "'");
      out.push_back(std::move(s));
    }
  }
  return out;
}

Loop reverse_loop(const Atlas& atlas, const Loop& loop) {
  CompiledLoop compiled(atlas, loop);
  const auto& segs = loop.segments;
  const std::size_t n = segs.size();
  Loop out;
  out.label = loop.label + "^-1";
  out.base_chart = segs.back().chart;
  out.base_point = compiled.position(n - 1, segs.back().t1);
  const Expression t = Expression::variable("t");
  for (std::size_t j = 0; j < n; ++j) {
    const Segment& src = segs[n - 1 - j];
    Segment seg;
    seg.chart = src.chart;
    seg.t0 = src.t0;
    seg.t1 = src.t1;
    const std::map<std::string, Expression, std::less<>> flip{
        {"t", Expression::number(src.t0 + src.t1) - t}};
    for (const auto& e : src.path) seg.path.push_back(substitute(e, flip));
    // The junction entering `src` in the original loop, traversed backwards.
    const Segment& before = segs[(n - 2 - j + n) % n];
    if (before.exit) seg.exit = Junction{before.exit->transition, !before.exit->inverse};
    out.segments.push_back(std::move(seg));
  }
  return out;
}

Loop concatenate(const Loop& first, const Loop& second) {
  if (first.base_chart != second.base_chart || first.base_point.size() != second.base_point.size() ||
      (first.base_point - second.base_point).cwiseAbs().maxCoeff() > Atlas::kPointTolerance)
    throw AtlasError("loops '" + first.label + "' and '" + second.label +
                     "' do not share a base point");
  Loop out = first;
  out.label = second.label + "*" + first.label;
  out.segments.insert(out.segments.end(), second.segments.begin(), second.segments.end());
  return out;
}

Loop loop_power(const Loop& loop, int k) {
  if (k < 1) throw AtlasError("loop power must be >= 1");
  Loop out = loop;
  for (int i = 1; i < k; ++i) out.segments.insert(out.segments.end(), loop.segments.begin(),
                                                  loop.segments.end());
  out.label = loop.label + "^" + std::to_string(k);
  return out;
}

}  // namespace invman
