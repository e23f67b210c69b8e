#pragma once

// Conservative finite-volume scheme for the regularized system
//
//   u_t = (D^eps(u,v) u_x - h(u,v) v_x)_x,   v_t = v_xx + g(u,v)   on (0, l)
//
// with zero-flux boundaries. The u-update is forward Euler in conservation
// form; v is advanced by backward-Euler diffusion with explicit reaction
// (default) or fully explicitly.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "vfc/coefficients.hpp"
#include "vfc/diagnostics.hpp"
#include "vfc/error.hpp"
#include "vfc/grid.hpp"

namespace vfc {

enum class FluxScheme { upwind_chemotaxis, central };
enum class VStepping { implicit, explicit_ };

struct SolverConfig {
  double eps = 1e-3;  // 0 runs the degenerate scheme directly
  double dt_max = 1e-2;
  double cfl = 0.9;
  double t_end = 1.0;
  FluxScheme flux_scheme = FluxScheme::upwind_chemotaxis;
  VStepping v_stepping = VStepping::implicit;
  // Fault injection for the verification harness: a spurious outflow through
  // the right boundary, F_{n+1/2} = boundary_leak * u_{n-1}. Zero in production.
  double boundary_leak = 0.0;

  void validate() const {
    require(eps >= 0.0 && std::isfinite(eps), ErrorKind::config, "solver.eps must be >= 0");
    require(dt_max > 0.0, ErrorKind::config, "solver.dt_max must be positive");
    require(cfl > 0.0 && cfl <= 1.0, ErrorKind::config, "solver.cfl must lie in (0,1]");
    require(t_end > 0.0, ErrorKind::config, "solver.t_end must be positive");
  }
};

/// The coefficient set actually integrated: D + eps, or D itself at eps = 0.
inline CoefficientSet solver_coefficients(const CoefficientSet& c, double eps) {
  return eps > 0.0 ? regularize(c, eps) : c;
}

namespace detail {

// min / max of r -> h(r, s) over [a, b], h unimodal in r.
inline double h_min_on(const CoefficientSet& c, double a, double b, double s) {
  return std::min(c.h(a, s), c.h(b, s));
}

inline double h_max_on(const CoefficientSet& c, double a, double b, double s) {
  const double ends = std::max(c.h(a, s), c.h(b, s));
  const double peak = c.h_argmax ? *c.h_argmax : golden_argmax([&](double r) { return c.h(r, s); });
  if (peak > a && peak < b) return std::max(ends, c.h(peak, s));
  return ends;
}

}  // namespace detail

/// Numerical flux F_{i+1/2} approximating -(D u_x - h v_x) at an interface.
///
/// The diffusive part is the Kirchhoff difference -(K(uR, sbar) - K(uL, sbar))/dx
/// with K the antiderivative of D^eps in r and sbar = (vL + vR)/2; freezing the
/// second argument makes this the discrete D^eps u_x directly. The chemotactic
/// part a*h with a = (vR - vL)/dx uses the Godunov flux of r -> a h(r, sbar),
/// which is upwind in the direction of v_x and vanishes whenever the receiving
/// cell is full (h(1,s) = 0) or the sending cell is empty (h(0,s) = 0).
inline double flux_interface(double uL, double uR, double vL, double vR, double dx, const CoefficientSet& c_eps,
                             FluxScheme scheme = FluxScheme::upwind_chemotaxis) {
  const double sbar = 0.5 * (vL + vR);
  const double diffusive = -(detail::hanaD_unchecked(c_eps, uR, sbar) - detail::hanaD_unchecked(c_eps, uL, sbar)) / dx;
  const double a = (vR - vL) / dx;
  if (a == 0.0) return diffusive;
  double hh;
  if (scheme == FluxScheme::central) {
    hh = 0.5 * (c_eps.h(uL, sbar) + c_eps.h(uR, sbar));
  } else if (uL <= uR) {
    hh = a > 0.0 ? detail::h_min_on(c_eps, uL, uR, sbar) : detail::h_max_on(c_eps, uL, uR, sbar);
  } else {
    hh = a > 0.0 ? detail::h_max_on(c_eps, uR, uL, sbar) : detail::h_min_on(c_eps, uR, uL, sbar);
  }
  return diffusive + a * hh;
}

/// Precomputed bounds used by the time-step rule; built once per run.
class StepBounds {
 public:
  StepBounds(const CoefficientSet& c_eps, double s_max) : c_(&c_eps) { build(s_max); }

  // sup_r D^eps(r, s) and sup_r |h_r(r, s)| over s in [s_lo, s_hi]
  double d_max(double s_lo, double s_hi) { return lookup(d_table_, s_lo, s_hi); }
  double h_lip(double s_lo, double s_hi) { return lookup(h_table_, s_lo, s_hi); }
  // max(0, -g_s) over r in [0,1], s in [s_lo, s_hi]
  double decay_rate(double s_lo, double s_hi) { return lookup(g_table_, s_lo, s_hi); }

 private:
  static constexpr int ns = 64;
  static constexpr int nr = 64;

  void build(double s_max) {
    s_max_ = std::max(1.0, s_max);
    d_table_.assign(ns + 1, 0.0);
    h_table_.assign(ns + 1, 0.0);
    g_table_.assign(ns + 1, 0.0);
    const double ds = s_max_ / ns;
    for (int j = 0; j <= ns; ++j) {
      const double s = j * ds;
      double dm = 0.0;
      for (int i = 0; i <= nr; ++i) dm = std::max(dm, c_->D(double(i) / nr, s));
      d_table_[j] = dm;
      h_table_[j] = h_lipschitz(*c_, s, s);
      double gm = 0.0;
      const double step = 1e-6 * std::max(1.0, s);
      for (int i = 0; i <= 8; ++i) {
        const double r = i / 8.0;
        gm = std::max(gm, -(c_->g(r, s + step) - c_->g(r, s)) / step);
      }
      g_table_[j] = gm;
    }
  }

  double lookup(std::vector<double>& table, double s_lo, double s_hi) {
    if (s_hi > s_max_) build(2.0 * s_hi);
    const double ds = s_max_ / ns;
    const int j0 = std::max(0, int(std::floor(std::max(0.0, s_lo) / ds)));
    const int j1 = std::min(ns, int(std::ceil(s_hi / ds)));
    double m = 0.0;
    for (int j = j0; j <= j1; ++j) m = std::max(m, table[j]);
    return m;
  }

  const CoefficientSet* c_;
  double s_max_ = 1.0;
  std::vector<double> d_table_, h_table_, g_table_;
};

namespace detail {

inline double cfl_dt_with(const State& state, const Grid1D& grid, const SolverConfig& cfg, StepBounds& bounds) {
  const double dx = grid.dx();
  const auto [vmin_it, vmax_it] = std::minmax_element(state.v.begin(), state.v.end());
  const double vmin = *vmin_it, vmax = *vmax_it;
  double grad = 0.0;
  for (std::size_t i = 0; i + 1 < state.v.size(); ++i) grad = std::max(grad, std::abs(state.v[i + 1] - state.v[i]));
  grad /= dx;
  const double dmax = bounds.d_max(vmin, vmax);
  const double speed = bounds.h_lip(vmin, vmax) * grad;
  double rate = 2.0 * dmax / (dx * dx) + 2.0 * speed / dx + bounds.decay_rate(vmin, vmax);
  if (cfg.v_stepping == VStepping::explicit_) rate += 2.0 / (dx * dx);
  const double dt = rate > 0.0 ? cfg.cfl / rate : cfg.dt_max;
  return std::min(dt, cfg.dt_max);
}

// Thomas algorithm for (1 + 2k) x_i - k x_{i-1} - k x_{i+1} = b_i with
// reflecting ends (diagonal 1 + k in the first and last rows).
inline void solve_neumann_heat(std::vector<double>& b, double k) {
  const std::size_t n = b.size();
  std::vector<double> cprime(n);
  auto diag = [&](std::size_t i) { return (i == 0 || i + 1 == n) ? 1.0 + k : 1.0 + 2.0 * k; };
  double denom = diag(0);
  cprime[0] = -k / denom;
  b[0] /= denom;
  for (std::size_t i = 1; i < n; ++i) {
    denom = diag(i) + k * cprime[i - 1];
    cprime[i] = -k / denom;
    b[i] = (b[i] + k * b[i - 1]) / denom;
  }
  for (std::size_t i = n - 1; i-- > 0;) b[i] -= cprime[i] * b[i + 1];
}

}  // namespace detail

/// Time step from the monotonicity rule
///   dt = cfl / (2 max D^eps / dx^2 + 2 L_h max|v_x| / dx + max(-g_s)),
/// capped by dt_max. L_h bounds |h_r|; the last term keeps explicit reaction
/// from driving v negative.
inline double cfl_dt(const State& state, const Grid1D& grid, const CoefficientSet& c_eps, const SolverConfig& cfg) {
  const double vmax = *std::max_element(state.v.begin(), state.v.end());
  StepBounds bounds(c_eps, vmax);
  return detail::cfl_dt_with(state, grid, cfg, bounds);
}

/// Single-run integrator. Holds the time-step bounds and scratch buffers.
class Stepper {
 public:
  Stepper(const Grid1D& grid, const CoefficientSet& c_eps, const SolverConfig& cfg, double s_max)
      : grid_(grid), c_(c_eps), cfg_(cfg), bounds_(c_, s_max) {
    flux_.assign(grid.n_cells() + 1, 0.0);
    rhs_.assign(grid.n_cells(), 0.0);
  }

  Stepper(const Stepper&) = delete;
  Stepper& operator=(const Stepper&) = delete;

  double dt_for(const State& s) { return detail::cfl_dt_with(s, grid_, cfg_, bounds_); }

  /// Advances by min(cfl-dt, dt_limit). Throws blowup on non-finite output and
  /// stiffness when the step underflows.
  void advance(State& s, double dt_limit = std::numeric_limits<double>::infinity()) {
    const int n = grid_.n_cells();
    const double dx = grid_.dx();
    require(int(s.u.size()) == n && int(s.v.size()) == n, ErrorKind::input, "state does not match grid");
    double dt = std::min(dt_for(s), dt_limit);
    if (!(dt >= 1e-14)) fail(ErrorKind::stiffness, "time step underflow (dt = " + std::to_string(dt) + ")");
    last_dt_ = dt;

    flux_[0] = 0.0;
    flux_[n] = cfg_.boundary_leak * s.u[n - 1];
    for (int i = 0; i + 1 < n; ++i)
      flux_[i + 1] = flux_interface(s.u[i], s.u[i + 1], s.v[i], s.v[i + 1], dx, c_, cfg_.flux_scheme);

    // v first: the reaction term uses the old u.
    const double k = dt / (dx * dx);
    if (cfg_.v_stepping == VStepping::implicit) {
      for (int i = 0; i < n; ++i) rhs_[i] = s.v[i] + dt * c_.g(s.u[i], s.v[i]);
      detail::solve_neumann_heat(rhs_, k);
    } else {
      for (int i = 0; i < n; ++i) {
        const double left = s.v[i > 0 ? i - 1 : 0];
        const double right = s.v[i + 1 < n ? i + 1 : n - 1];
        rhs_[i] = s.v[i] + k * (left - 2.0 * s.v[i] + right) + dt * c_.g(s.u[i], s.v[i]);
      }
    }
    const double ratio = dt / dx;
    for (int i = 0; i < n; ++i) s.u[i] -= ratio * (flux_[i + 1] - flux_[i]);
    s.v.swap(rhs_);
    s.t += dt;
    for (int i = 0; i < n; ++i)
      if (!std::isfinite(s.u[i]) || !std::isfinite(s.v[i]))
        fail(ErrorKind::blowup, "non-finite value in cell " + std::to_string(i) + " at t = " + std::to_string(s.t));
  }

  double last_dt() const { return last_dt_; }

 private:
  Grid1D grid_;
  CoefficientSet c_;
  SolverConfig cfg_;
  StepBounds bounds_;
  std::vector<double> flux_, rhs_;
  double last_dt_ = 0.0;
};

/// One step of the scheme. `c_eps` is the coefficient set being integrated
/// (see solver_coefficients).
inline State step(const State& state, const Grid1D& grid, const CoefficientSet& c_eps, const SolverConfig& cfg,
                  double dt_limit = std::numeric_limits<double>::infinity()) {
  require(cfg.eps >= 0.0, ErrorKind::input, "eps must be >= 0");
  const double vmax = *std::max_element(state.v.begin(), state.v.end());
  Stepper stepper(grid, c_eps, cfg, vmax);
  State next = state;
  stepper.advance(next, dt_limit);
  return next;
}

struct RunResult {
  std::vector<State> snapshots;  // one per requested sample time
  State final_state;
  RunReport report;
};

/// Integrates from (u0, v0) to cfg.t_end, recording snapshots at sample_times.
/// The run stops (report.completed = false) at the first bound violation
/// beyond tol_bound; nothing is clipped.
inline RunResult run(const std::vector<double>& u0, const std::vector<double>& v0, const Grid1D& grid,
                     const CoefficientSet& c, const SolverConfig& cfg, std::vector<double> sample_times) {
  cfg.validate();
  const auto n = std::size_t(grid.n_cells());
  require(u0.size() == n && v0.size() == n, ErrorKind::input, "initial data does not match the grid");
  for (std::size_t i = 0; i < n; ++i) {
    if (!(u0[i] >= 0.0 && u0[i] <= 1.0)) fail(ErrorKind::input, "u0 must lie in [0,1] (cell " + std::to_string(i) + ")");
    if (!(v0[i] >= 0.0 && std::isfinite(v0[i]))) fail(ErrorKind::input, "v0 must be >= 0 (cell " + std::to_string(i) + ")");
  }
  std::sort(sample_times.begin(), sample_times.end());
  for (double ts : sample_times)
    require(ts >= 0.0 && ts <= cfg.t_end, ErrorKind::input, "sample time outside [0, t_end]");

  const CoefficientSet c_eps = solver_coefficients(c, cfg.eps);
  State state{u0, v0, 0.0};
  double s_max = *std::max_element(v0.begin(), v0.end());
  if (c.gamma_beta) s_max = std::max(s_max, c.gamma_beta->ratio());
  Stepper stepper(grid, c_eps, cfg, s_max);

  RunResult out;
  out.report.snapshots.push_back(snapshot_stats(state, grid));
  const double m0 = out.report.snapshots.front().mass;
  const double mass_scale = m0 != 0.0 ? std::abs(m0) : 1.0;

  auto check_bounds = [&](const State& s) -> bool {
    const SnapshotStats st = snapshot_stats(s, grid);
    bool ok = true;
    if (st.u_min < -tol_bound) out.report.violations.push_back({s.t, "u_min", st.u_min}), ok = false;
    if (st.u_max > 1.0 + tol_bound) out.report.violations.push_back({s.t, "u_max", st.u_max - 1.0}), ok = false;
    if (st.v_min < -tol_bound) out.report.violations.push_back({s.t, "v_min", st.v_min}), ok = false;
    return ok;
  };
  auto record = [&](const State& s) {
    const SnapshotStats st = snapshot_stats(s, grid);
    out.report.snapshots.push_back(st);
    const double drift = std::abs(st.mass - m0) / mass_scale;
    if (drift > 1e-11) out.report.violations.push_back({s.t, "mass", drift});
  };

  std::size_t next_sample = 0;
  while (next_sample < sample_times.size() && sample_times[next_sample] <= 0.0) {
    out.snapshots.push_back(state);
    ++next_sample;
  }
  while (state.t < cfg.t_end) {
    const double target = next_sample < sample_times.size() ? sample_times[next_sample] : cfg.t_end;
    try {
      stepper.advance(state, target - state.t);
    } catch (const Error& e) {
      fail(e.kind(), std::string(e.what()) + " (run failed at t = " + std::to_string(state.t) + ")");
    }
    out.report.dt_stats.add(stepper.last_dt());
    if (target - state.t <= 1e-12 * std::max(1.0, target)) state.t = target;
    if (!check_bounds(state)) {
      out.report.completed = false;
      out.report.abort_reason = "invariant region violated at t = " + std::to_string(state.t);
      record(state);
      out.final_state = state;
      return out;
    }
    while (next_sample < sample_times.size() && sample_times[next_sample] <= state.t) {
      out.snapshots.push_back(state);
      record(state);
      ++next_sample;
    }
  }
  if (out.report.snapshots.size() == 1 || out.report.snapshots.back().t != state.t) record(state);
  out.final_state = state;
  return out;
}

}  // namespace vfc
