#include "invman/transport.hpp"

#include <cmath>

#include "invman/errors.hpp"

namespace invman {

namespace {

// Classical RK4 along every segment of a compiled loop. `rhs(fields, phi,
// tangent, state)` returns the state derivative; `after_step` may inspect
// the state.
template <class State, class Rhs, class After>
State integrate(const FieldSystem& system, const CompiledLoop& compiled, double step, State state,
                Rhs&& rhs, After&& after_step, std::size_t* steps_taken) {
  const Atlas& atlas = system.atlas();
  const auto counts = compiled.steps(step);
  std::size_t total = 0;
  Vector phi, tangent;
  for (std::size_t i = 0; i < compiled.size(); ++i) {
    const Segment& seg = compiled.loop().segments[i];
    const FieldSet& fields = system.fields(seg.chart);
    const double h = (seg.t1 - seg.t0) / static_cast<double>(counts[i]);
    auto f = [&](double t, const State& s) {
      compiled.evaluate(i, t, phi, tangent);
      return State(rhs(fields, phi, tangent, s));
    };
    for (std::size_t j = 0; j < counts[i]; ++j) {
      const double t = seg.t0 + static_cast<double>(j) * h;
      compiled.evaluate(i, t, phi, tangent);
      if (!atlas.in_domain(seg.chart, phi))
        throw TransportError("loop '" + compiled.loop().label + "' leaves chart '" + seg.chart +
                             "' at t = " + std::to_string(t));
      const State k1 = f(t, state);
      const State k2 = f(t + 0.5 * h, State(state + 0.5 * h * k1));
      const State k3 = f(t + 0.5 * h, State(state + 0.5 * h * k2));
      const State k4 = f(t + h, State(state + h * k3));
      state += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      after_step(state, i, t + h);
    }
    total += counts[i];
  }
  if (steps_taken) *steps_taken = total;
  return state;
}

}  // namespace

Vector lift_loop(const FieldSystem& system, const Loop& loop, const Vector& w0,
                 const IntegratorConfig& config) {
  const auto& d = system.dims();
  if (w0.size() != d.fiber())
    throw TransportError("fiber point needs " + std::to_string(d.fiber()) + " components");
  if (w0.size() && w0.cwiseAbs().maxCoeff() > config.fiber_box)
    throw TransportError("start point lies outside the fiber box");
  CompiledLoop compiled(system.atlas(), loop);
  compiled.check_junctions(true);
  auto rhs = [&](const FieldSet& fields, const Vector& phi, const Vector& tangent, const Vector& w) {
    Vector dw = nonlinear_connection(fields, phi, w, tangent);
    dw.tail(d.params).setZero();
    return dw;
  };
  auto guard = [&](const Vector& w, std::size_t seg, double t) {
    if (!w.allFinite() || (w.size() && w.cwiseAbs().maxCoeff() > config.fiber_box))
      throw TransportError("lift of loop '" + loop.label + "' escapes the fiber box in segment " +
                           std::to_string(seg) + " at t = " + std::to_string(t));
  };
  return integrate<Vector>(system, compiled, config.step, w0, rhs, guard, nullptr);
}

Matrix transport_matrix(const FieldSystem& system, const Loop& loop, double step, bool closed,
                        std::size_t* steps_taken) {
  const int n = system.dims().fiber();
  CompiledLoop compiled(system.atlas(), loop);
  compiled.check_junctions(closed);
  auto rhs = [](const FieldSet& fields, const Vector& phi, const Vector& tangent, const Matrix& w) {
    return Matrix(linear_connection(fields, phi, tangent).L * w);
  };
  auto guard = [&](const Matrix& w, std::size_t seg, double t) {
    if (!w.allFinite())
      throw TransportError("variational equation diverged on loop '" + loop.label +
                           "' in segment " + std::to_string(seg) + " at t = " + std::to_string(t));
  };
  return integrate<Matrix>(system, compiled, step, Matrix::Identity(n, n), rhs, guard, steps_taken);
}

MonodromyResult make_monodromy_result(std::string label, const Matrix& m, int phase, int params,
                                      double block_tol) {
  const int n = phase + params;
  if (m.rows() != n || m.cols() != n)
    throw TransportError("monodromy matrix must be " + std::to_string(n) + " x " + std::to_string(n));
  MonodromyResult r;
  r.loop = std::move(label);
  r.M = m;
  r.M0 = m.topLeftCorner(phase, phase);
  r.M1 = m.topRightCorner(phase, params);
  r.R = Matrix::Identity(n, n) - m;
  r.R0 = Matrix::Identity(phase, phase) - r.M0;

  const Matrix bottom = m.bottomRows(params);
  Matrix expected = Matrix::Zero(params, n);
  expected.rightCols(params).setIdentity();
  r.block_error = max_abs(bottom - expected);
  if (r.block_error > block_tol)
    throw TransportError("monodromy of '" + r.loop + "' lacks the block form (deviation " +
                         std::to_string(r.block_error) + ")");

  r.multipliers = sorted_eigenvalues(m);
  r.restricted_multipliers = sorted_eigenvalues(r.M0);
  // Eigenvalue error scales with the matrix norm.
  const double unit_tol = block_tol * std::max(1.0, max_abs(m));
  int unit = 0;
  for (const auto& mu : r.multipliers)
    if (std::abs(mu - 1.0) <= unit_tol) ++unit;
  if (unit < params)
    throw TransportError("monodromy of '" + r.loop + "' has fewer than " + std::to_string(params) +
                         " unit multipliers");
  for (const auto& mu : r.restricted_multipliers) {
    if (mu == 0.0) throw TransportError("restricted multiplier 0 has no logarithm");
    r.restricted_exponents.push_back(std::log(mu));
  }
  return r;
}

MonodromyResult monodromy(const FieldSystem& system, const Loop& loop,
                          const IntegratorConfig& config) {
  std::size_t steps = 0;
  const Matrix m = transport_matrix(system, loop, config.step, true, &steps);
  auto r = make_monodromy_result(loop.label, m, system.dims().phase, system.dims().params,
                                 config.block_tol);
  r.step = config.step;
  r.steps = steps;
  return r;
}

MonodromyResult compose_monodromy(const MonodromyResult& a, const MonodromyResult& b,
                                  double block_tol) {
  if (a.M.rows() != b.M.rows() || a.M0.rows() != b.M0.rows())
    throw TransportError("cannot compose monodromies of different dimensions");
  auto r = make_monodromy_result(a.loop + "*" + b.loop, a.M * b.M,
                                 static_cast<int>(a.M0.rows()), static_cast<int>(a.M1.cols()),
                                 block_tol);
  r.step = std::max(a.step, b.step);
  r.steps = a.steps + b.steps;
  return r;
}

MonodromyResult conjugate_monodromy(const MonodromyResult& m, const Matrix& p, double block_tol) {
  if (p.rows() != m.M.rows() || p.cols() != m.M.cols())
    throw TransportError("conjugating matrix has the wrong size");
  Eigen::PartialPivLU<Matrix> lu(p);
  if (std::abs(lu.determinant()) == 0.0) throw TransportError("conjugating matrix is singular");
  auto r = make_monodromy_result(m.loop, p * m.M * lu.inverse(), static_cast<int>(m.M0.rows()),
                                 static_cast<int>(m.M1.cols()), block_tol);
  r.step = m.step;
  r.steps = m.steps;
  return r;
}

}  // namespace invman
