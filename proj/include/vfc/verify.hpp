#pragma once

// The verification suite: nine numbered criteria covering conservation, the
// invariant region, the regularization limit, the structural checkers, the
// closed-form example, the flat-hump construction, its stationarity under
// the solver, orbit fidelity and continuous dependence. Thresholds are fixed
// here; VerifyOptions only sizes the problems.

#include <algorithm>
#include <chrono>
#include <limits>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "vfc/coefficients.hpp"
#include "vfc/diagnostics.hpp"
#include "vfc/initial_data.hpp"
#include "vfc/pde.hpp"
#include "vfc/stationary.hpp"
#include "vfc/studies.hpp"

namespace vfc::verify {

namespace limits {
inline constexpr double mass_drift = 1e-11;
inline constexpr double mass_seconds = 30.0;
inline constexpr double bound_u = 1e-10;
inline constexpr double bound_v_low = 1e-10;
inline constexpr double bound_v_high = 1e-8;
inline constexpr double eps_final_ratio = 0.2;
inline constexpr double eps_seconds = 60.0;
inline constexpr double K_conditions = 5.0;
inline constexpr double K_uniqueness = 1.0;
inline constexpr double C0_bound = 32.0;
inline constexpr double C1_value = 2.0;
inline constexpr double closed_form = 1e-10;
inline constexpr double eta0_residual = 1e-12;
inline constexpr double r0_match = 1e-10;
inline constexpr double margin_match = 1e-8;
inline constexpr double j_constancy = 1e-7;
inline constexpr double residual_flux = 1e-6;
inline constexpr double residual_v = 1e-4;
inline constexpr double residual_order = 1.0;
inline constexpr double hump_seconds = 60.0;
inline constexpr double drift = 5e-3;
inline constexpr double drift_ratio_lo = 1.5;
inline constexpr double drift_ratio_hi = 3.0;
inline constexpr double energy_per_length = 1e-8;
inline constexpr double period_rel = 1e-6;
inline constexpr double dependence_spread = 3.0;
}  // namespace limits

struct VerifyOptions {
  std::uint64_t seed = 20240611;
  // conservation and invariant region
  std::vector<int> mass_grids = {256, 1024};
  double mass_t_end = 1.0;
  double domain_length = 10.0;
  double solver_eps = 1e-3;
  int random_runs = 20;
  int random_grid = 256;
  // regularization limit
  int eps_grid = 256;
  double eps_t_end = 1.0;
  std::vector<double> eps_list = {1e-1, 5e-2, 2.5e-2, 1.25e-2};
  // structural checkers
  int condition_grid = 64;
  std::size_t uniqueness_pairs = 10000;
  // flat hump
  int hump_grid = 4096;
  // stationarity under the solver; gamma and beta keep the ratio 3
  int drift_grid = 4096;
  double drift_t = 0.5;
  double drift_gamma = 0.3;
  double drift_beta = 0.1;
  // orbits
  int orbits = 10;
  // continuous dependence
  int dependence_grid = 256;
  double dependence_t = 0.5;
  std::vector<double> deltas = {1e-2, 1e-3, 1e-4};
  // fault injection
  double boundary_leak = 0.0;
  // subset of criteria to run (empty = all)
  std::vector<int> only;
};

struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

namespace detail {

inline std::string fmt(double x) {
  std::ostringstream os;
  os.precision(4);
  os << x;
  return os.str();
}

struct SuiteRun {
  std::string preset;
  std::string data;
  int n = 0;
  RunReport report;
  double gamma_over_beta = 1.0;
  double v0_max = 0.0;
  std::string error;
};

inline std::vector<double> initial_u(const std::string& kind, const Grid1D& g, std::uint64_t seed) {
  if (kind == "bump") return init::bump(g, 0.1, 0.8, 0.5, 0.1);
  if (kind == "step") return init::step(g, 1.0, 0.0, 0.5);
  return init::random_cells(g, 0.0, 1.0, seed);
}

/// Presets A, B, C with bump, step and random data on every grid of the list,
/// followed by `random_runs` extra seeded random-data runs.
inline std::vector<SuiteRun> conservation_suite(const VerifyOptions& opt, bool with_random_extras) {
  std::vector<SuiteRun> runs;
  const GammaBeta gb{1.0, 1.0};
  SolverConfig cfg;
  cfg.eps = opt.solver_eps;
  cfg.t_end = opt.mass_t_end;
  cfg.boundary_leak = opt.boundary_leak;
  auto launch = [&](const std::string& preset_name, const std::string& kind, int n, std::uint64_t seed,
                    std::vector<double> v0) {
    SuiteRun r;
    r.preset = preset_name;
    r.data = kind;
    r.n = n;
    r.gamma_over_beta = gb.ratio();
    try {
      const Grid1D grid(n, opt.domain_length);
      if (v0.empty()) v0 = init::bump(grid, 0.2, 0.6, 0.3, 0.15);
      r.v0_max = *std::max_element(v0.begin(), v0.end());
      const RunResult res = run(initial_u(kind, grid, seed), v0, grid, preset(preset_name, gb), cfg, {});
      r.report = res.report;
    } catch (const Error& e) {
      r.error = e.what();
    }
    runs.push_back(std::move(r));
  };
  std::uint64_t seed = opt.seed;
  for (const char* p : {"example-A", "example-B", "example-C"})
    for (const char* kind : {"bump", "step", "random"})
      for (int n : opt.mass_grids) launch(p, kind, n, seed++, {});
  if (with_random_extras) {
    const char* names[3] = {"example-A", "example-B", "example-C"};
    for (int k = 0; k < opt.random_runs; ++k) {
      const Grid1D grid(opt.random_grid, opt.domain_length);
      auto v0 = init::random_cells(grid, 0.0, gb.ratio(), opt.seed + 1000 + std::uint64_t(k));
      launch(names[k % 3], "random", opt.random_grid, opt.seed + 2000 + std::uint64_t(k), v0);
    }
  }
  return runs;
}

inline double eta0_by_bisection() {
  return roots::bisect([](double e) { return e * std::exp(e) - 1.0; }, 0.0, 1.0);
}

/// Preset C with the closed forms removed, so j1, j2 and their inverses go
/// through quadrature and bisection.
inline CoefficientSet preset_c_by_quadrature(GammaBeta gb) {
  CoefficientSet c = preset("example-C", gb);
  c.j1_closed = nullptr;
  c.j2_closed = nullptr;
  c.j1_inverse_closed = nullptr;
  c.j2_inverse_closed = nullptr;
  return c;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Criteria

inline CriterionResult mass_conservation(const VerifyOptions& opt) {
  CriterionResult out{1, "mass conservation", false, "", 0.0};
  const auto t0 = std::chrono::steady_clock::now();
  const auto runs = detail::conservation_suite(opt, false);
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  double worst = 0.0;
  std::string worst_run, error;
  for (const auto& r : runs) {
    if (!r.error.empty()) {
      error = r.preset + "/" + r.data + "/n=" + std::to_string(r.n) + ": " + r.error;
      continue;
    }
    const double d = r.report.max_relative_mass_drift();
    if (d >= worst) {
      worst = d;
      worst_run = r.preset + "/" + r.data + "/n=" + std::to_string(r.n);
    }
  }
  out.passed = error.empty() && worst <= limits::mass_drift && out.seconds <= limits::mass_seconds;
  out.detail = std::to_string(runs.size()) + " runs, max relative drift " + detail::fmt(worst) + " (" + worst_run +
               ") <= " + detail::fmt(limits::mass_drift) + ", " + detail::fmt(out.seconds) + " s <= " +
               detail::fmt(limits::mass_seconds) + " s";
  if (!error.empty()) out.detail += "; error: " + error;
  return out;
}

inline CriterionResult invariant_region(const VerifyOptions& opt) {
  CriterionResult out{2, "invariant region", false, "", 0.0};
  const auto t0 = std::chrono::steady_clock::now();
  const auto runs = detail::conservation_suite(opt, true);
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  double umin = std::numeric_limits<double>::infinity(), umax = -std::numeric_limits<double>::infinity(), vmin = std::numeric_limits<double>::infinity(), vexcess = -std::numeric_limits<double>::infinity();
  std::string error;
  bool ok = true;
  for (const auto& r : runs) {
    if (!r.error.empty()) {
      error = r.preset + "/" + r.data + ": " + r.error;
      ok = false;
      continue;
    }
    if (!r.report.completed) ok = false;
    umin = std::min(umin, r.report.min_u());
    umax = std::max(umax, r.report.max_u());
    vmin = std::min(vmin, r.report.min_v());
    if (r.v0_max <= r.gamma_over_beta) vexcess = std::max(vexcess, r.report.max_v() - r.gamma_over_beta);
  }
  ok = ok && umin >= -limits::bound_u && umax <= 1.0 + limits::bound_u && vmin >= -limits::bound_v_low &&
       vexcess <= limits::bound_v_high;
  out.passed = ok;
  out.detail = std::to_string(runs.size()) + " runs, min u " + detail::fmt(umin) + ", max u - 1 " +
               detail::fmt(umax - 1.0) + ", min v " + detail::fmt(vmin) + ", max v - gamma/beta " +
               detail::fmt(vexcess) + " (bounds 1e-10, 1e-10, 1e-10, 1e-8)";
  if (!error.empty()) out.detail += "; error: " + error;
  return out;
}

inline StudySetup eps_study_setup(const VerifyOptions& opt) {
  StudySetup s;
  s.c = preset("example-A", GammaBeta{1.0, 1.0});
  s.grid = Grid1D(opt.eps_grid, opt.domain_length);
  s.u0 = init::bump(s.grid, 0.1, 0.8, 0.5, 0.1);
  s.v0 = init::bump(s.grid, 0.2, 0.5, 0.3, 0.2);
  s.cfg.t_end = opt.eps_t_end;
  s.cfg.boundary_leak = opt.boundary_leak;
  return s;
}

inline CriterionResult eps_convergence(const VerifyOptions& opt) {
  CriterionResult out{3, "eps-convergence", false, "", 0.0};
  const auto t0 = std::chrono::steady_clock::now();
  const EpsStudy st = eps_convergence_study(eps_study_setup(opt), opt.eps_list);
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  out.passed = st.passed(limits::eps_final_ratio) && out.seconds <= limits::eps_seconds;
  if (!st.completed) {
    out.detail = "study incomplete: " + st.failure;
    return out;
  }
  std::string diffs;
  for (double d : st.diff_u) diffs += (diffs.empty() ? "" : ", ") + detail::fmt(d);
  out.detail = "L2 differences [" + diffs + "], strictly decreasing " + (st.strictly_decreasing ? "yes" : "no") +
               ", final/first " + detail::fmt(st.final_over_first) + " <= " + detail::fmt(limits::eps_final_ratio) +
               ", log-log slope " + detail::fmt(st.slope) + ", " + detail::fmt(out.seconds) + " s";
  return out;
}

inline CriterionResult structural_checkers(const VerifyOptions& opt) {
  CriterionResult out{4, "structural checkers", false, "", 0.0};
  const auto t0 = std::chrono::steady_clock::now();
  const ConditionReport a = check_conditions(preset("example-A", GammaBeta{1.0, 1.0}), limits::K_conditions,
                                             opt.condition_grid);
  const double m_bound = (limits::K_conditions + 1.0) / 3.0;
  UniquenessOptions uo;
  uo.C1 = limits::C1_value;
  uo.random_pairs = opt.uniqueness_pairs;
  uo.seed = opt.seed;
  const UniquenessReport b = check_uniqueness_conditions(preset("example-B", GammaBeta{1.0, 1.0}),
                                                         limits::K_uniqueness, opt.condition_grid, uo);
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  out.passed = a.all_passed() && a.empirical_M <= m_bound && b.satisfiable && b.C0 <= limits::C0_bound;
  std::string failing;
  for (const auto& c : a.conditions)
    if (!c.passed) failing += " " + c.name;
  out.detail = "preset A conditions " + std::string(a.all_passed() ? "pass" : "fail:" + failing) + ", M " +
               detail::fmt(a.empirical_M) + " <= " + detail::fmt(m_bound) + "; preset B C0 " + detail::fmt(b.C0) +
               " <= 32 at C1 = 2 over " + std::to_string(b.pairs) + " pairs";
  return out;
}

inline CriterionResult closed_forms(const VerifyOptions&) {
  CriterionResult out{5, "closed-form example", false, "", 0.0};
  const auto t0 = std::chrono::steady_clock::now();
  const GammaBeta gb{3.0, 1.0};
  const CoefficientSet c = detail::preset_c_by_quadrature(gb);
  double e1 = 0.0, e2 = 0.0;
  for (int i = 1; i <= 100; ++i) {
    const double r = double(i) / 100.0;
    e1 = std::max(e1, std::abs(eval_j1(c, r) - std::log(2.0 * r)));
    const double s = 3.0 * double(i) / 100.0;
    e2 = std::max(e2, std::abs(eval_j2(c, s) - std::expm1(s)));
  }
  const double eta0 = detail::eta0_by_bisection();
  const double eta_res = std::abs(eta0 * std::exp(eta0) - 1.0);
  double r0_err = std::numeric_limits<double>::infinity();
  try {
    const LambdaInterval li = prop_tekiyou_lambda(c, gb, 1);
    r0_err = std::abs(li.r0 - eta0 / gb.ratio());
  } catch (const Error&) {
  }
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  out.passed = e1 <= limits::closed_form && e2 <= limits::closed_form && eta_res <= limits::eta0_residual &&
               r0_err <= limits::r0_match;
  out.detail = "|j1 - log 2r| " + detail::fmt(e1) + ", |j2 - (e^s - 1)| " + detail::fmt(e2) + " (<= 1e-10); eta0 " +
               std::to_string(eta0) + " residual " + detail::fmt(eta_res) + " (<= 1e-12); |r0 - eta0 beta/gamma| " +
               detail::fmt(r0_err) + " (<= 1e-10)";
  return out;
}

struct HumpCheck {
  bool clauses = false;
  double margin = 0.0, margin_gap = std::numeric_limits<double>::infinity(), j_defect = std::numeric_limits<double>::infinity();
  bool plateau_ok = false;
  double rf = std::numeric_limits<double>::infinity(), rv = std::numeric_limits<double>::infinity(), order_f = 0.0, order_v = 0.0;
};

inline CriterionResult flat_hump(const VerifyOptions& opt) {
  CriterionResult out{6, "flat-hump construction", false, "", 0.0};
  const auto t0 = std::chrono::steady_clock::now();
  HumpCheck h;
  try {
    const GammaBeta gb{3.0, 1.0};
    const CoefficientSet c = preset("example-C", gb);
    const LambdaInterval li = prop_tekiyou_lambda(c, gb);
    const double lambda = li.midpoint();
    h.clauses = analyze_crossings(c, gb, lambda).ok();
    const PhaseParams p = find_crossings(c, gb, lambda);
    const JyoukennResult jy = check_jyoukenn(p);
    h.margin = jy.margin;
    h.margin_gap = std::abs(jy.margin - (potential_G(p, p.rho_m1) - potential_G(p, p.v_lambda)));
    const double v0 = default_v0(p);
    const StationaryProfile fine = construct_flat_hump(p, v0, opt.hump_grid);
    const StationaryProfile coarse = construct_flat_hump(p, v0, opt.hump_grid / 2);
    h.j_defect = j_constancy_defect(p, fine);
    h.plateau_ok = true;
    for (int i = 0; i < fine.grid.n_cells(); ++i) {
      const double x = fine.grid.center(i);
      if (x >= fine.x1 && x <= fine.grid.length() - fine.x1)
        h.plateau_ok = h.plateau_ok && fine.u[std::size_t(i)] == 1.0 && fine.v[std::size_t(i)] >= p.v_lambda;
    }
    h.rf = fine.residual_flux;
    h.rv = fine.residual_v;
    h.order_f = std::log2(coarse.residual_flux / fine.residual_flux);
    h.order_v = std::log2(coarse.residual_v / fine.residual_v);
  } catch (const Error& e) {
    out.detail = std::string("construction failed: ") + e.what();
    return out;
  }
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  out.passed = h.clauses && h.margin > 0.0 && h.margin_gap <= limits::margin_match &&
               h.j_defect <= limits::j_constancy && h.plateau_ok && h.rf <= limits::residual_flux &&
               h.rv <= limits::residual_v && h.order_f >= limits::residual_order &&
               h.order_v >= limits::residual_order && out.seconds <= limits::hump_seconds;
  out.detail = "clauses " + std::string(h.clauses ? "pass" : "fail") + ", margin " + detail::fmt(h.margin) +
               " (gap to G(rho_-1) - G(v_lambda) " + detail::fmt(h.margin_gap) + " <= 1e-8), j defect " +
               detail::fmt(h.j_defect) + " <= 1e-7, plateau " + (h.plateau_ok ? "ok" : "violated") +
               ", residual_flux " + detail::fmt(h.rf) + " <= 1e-6 (order " + detail::fmt(h.order_f) +
               "), residual_v " + detail::fmt(h.rv) + " <= 1e-4 (order " + detail::fmt(h.order_v) + "), " +
               detail::fmt(out.seconds) + " s";
  return out;
}

inline CriterionResult stationarity_drift(const VerifyOptions& opt) {
  CriterionResult out{7, "PDE stationarity", false, "", 0.0};
  const auto t0 = std::chrono::steady_clock::now();
  double fine_drift = std::numeric_limits<double>::infinity(), coarse_drift = std::numeric_limits<double>::infinity(), mass = 0.0;
  bool completed = false;
  try {
    const GammaBeta gb{opt.drift_gamma, opt.drift_beta};
    const CoefficientSet c = preset("example-C", gb);
    const PhaseParams p = find_crossings(c, gb, prop_tekiyou_lambda(c, gb).midpoint());
    const double v0 = default_v0(p);
    SolverConfig cfg;
    cfg.eps = 0.0;
    cfg.boundary_leak = opt.boundary_leak;
    const auto fine = verify_stationary_against_pde(construct_flat_hump(p, v0, opt.drift_grid), c, cfg, opt.drift_t);
    const auto coarse =
        verify_stationary_against_pde(construct_flat_hump(p, v0, opt.drift_grid / 2), c, cfg, opt.drift_t);
    fine_drift = fine.drift;
    coarse_drift = coarse.drift;
    mass = std::max(fine.mass_drift, coarse.mass_drift);
    completed = fine.completed && coarse.completed;
  } catch (const Error& e) {
    out.detail = std::string("run failed: ") + e.what();
    return out;
  }
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const double ratio = coarse_drift / fine_drift;
  out.passed = completed && fine_drift <= limits::drift && ratio >= limits::drift_ratio_lo &&
               ratio <= limits::drift_ratio_hi && mass <= limits::mass_drift;
  out.detail = "sup drift " + detail::fmt(fine_drift) + " at n = " + std::to_string(opt.drift_grid) +
               " (<= 5e-3), halving ratio " + detail::fmt(ratio) + " in [1.5, 3], mass drift " + detail::fmt(mass) +
               ", " + detail::fmt(out.seconds) + " s";
  return out;
}

inline CriterionResult orbit_fidelity(const VerifyOptions& opt) {
  CriterionResult out{8, "orbit fidelity", false, "", 0.0};
  const auto t0 = std::chrono::steady_clock::now();
  double worst_energy = 0.0, worst_period = 0.0;
  try {
    const GammaBeta gb{3.0, 1.0};
    const CoefficientSet c = preset("example-C", gb);
    const PhaseParams p = find_crossings(c, gb, prop_tekiyou_lambda(c, gb).midpoint());
    const double ceiling = energy_ceiling(p);
    std::mt19937_64 rng(opt.seed);
    std::uniform_real_distribution<double> frac(0.05, 0.95);
    for (int k = 0; k < opt.orbits; ++k) {
      const double target = frac(rng) * ceiling;
      const double v0 =
          roots::bisect([&](double v) { return potential_G(p, v) - target; }, p.rho_m1, p.rho_0);
      const PhaseOrbit orbit = integrate_orbit(p, v0, default_orbit_step(p, v0));
      worst_energy = std::max(worst_energy, orbit_energy_deviation(p, orbit) / orbit.period);
      const double oracle = period_quadrature(p, v0);
      worst_period = std::max(worst_period, std::abs(orbit.period - oracle) / oracle);
    }
  } catch (const Error& e) {
    out.detail = std::string("orbit failed: ") + e.what();
    return out;
  }
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  out.passed = worst_energy <= limits::energy_per_length && worst_period <= limits::period_rel;
  out.detail = std::to_string(opt.orbits) + " orbits, energy drift per unit length " + detail::fmt(worst_energy) +
               " <= 1e-8, period relative error " + detail::fmt(worst_period) + " <= 1e-6";
  return out;
}

inline StudySetup dependence_setup(const VerifyOptions& opt) {
  StudySetup s;
  s.c = preset("example-B", GammaBeta{1.0, 1.0});
  s.grid = Grid1D(opt.dependence_grid, opt.domain_length);
  s.u0 = init::bump(s.grid, 0.2, 0.5, 0.5, 0.1);
  s.v0 = init::bump(s.grid, 0.2, 0.5, 0.3, 0.2);
  s.cfg.t_end = opt.dependence_t;
  s.cfg.boundary_leak = opt.boundary_leak;
  return s;
}

inline CriterionResult continuous_dependence(const VerifyOptions& opt) {
  CriterionResult out{9, "continuous dependence", false, "", 0.0};
  const auto t0 = std::chrono::steady_clock::now();
  const DependenceStudy st = continuous_dependence_study(dependence_setup(opt), opt.deltas, opt.seed);
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  out.passed = st.passed(limits::dependence_spread);
  if (!st.completed) {
    out.detail = "study incomplete: " + st.failure;
    return out;
  }
  std::string ratios;
  for (double r : st.ratio) ratios += (ratios.empty() ? "" : ", ") + detail::fmt(r);
  out.detail = "normalized divergences [" + ratios + "], spread " + detail::fmt(st.spread) + " <= 3 (" +
               st.hypotheses_note + ")";
  return out;
}

using Criterion = std::function<CriterionResult(const VerifyOptions&)>;

inline std::vector<Criterion> all_criteria() {
  return {mass_conservation, invariant_region, eps_convergence,      structural_checkers,  closed_forms,
          flat_hump,         stationarity_drift, orbit_fidelity, continuous_dependence};
}

/// Runs the selected criteria in order, reporting each one as it finishes.
inline std::vector<CriterionResult> run_all(const VerifyOptions& opt,
                                            const std::function<void(const CriterionResult&)>& report = nullptr) {
  std::vector<CriterionResult> results;
  const auto criteria = all_criteria();
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = int(i) + 1;
    if (!opt.only.empty() && std::find(opt.only.begin(), opt.only.end(), id) == opt.only.end()) continue;
    CriterionResult r;
    try {
      r = criteria[i](opt);
    } catch (const Error& e) {
      r.id = id;
      r.name = "criterion " + std::to_string(id);
      r.passed = false;
      r.detail = e.what();
    }
    if (report) report(r);
    results.push_back(std::move(r));
  }
  return results;
}

}  // namespace vfc::verify
