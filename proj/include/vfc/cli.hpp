#pragma once

// Subcommand implementations behind the vfc executable. Each command reads a
// KeyValues configuration, writes CSV artifacts under the output directory and
// returns a process exit code:
//   0 pass, 1 scientific failure, 2 configuration error, 3 solver error,
//   4 crossing-condition or structural failure, 5 construction failure.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include "vfc/coefficients.hpp"
#include "vfc/config.hpp"
#include "vfc/csv.hpp"
#include "vfc/diagnostics.hpp"
#include "vfc/initial_data.hpp"
#include "vfc/pde.hpp"
#include "vfc/stationary.hpp"
#include "vfc/studies.hpp"
#include "vfc/verify.hpp"

namespace vfc::cli {

enum ExitCode : int { ok = 0, scientific = 1, config_error = 2, solver_error = 3, condition = 4, construction = 5 };

inline int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::config:
    case ErrorKind::input: return config_error;
    case ErrorKind::divergence:
    case ErrorKind::overflow:
    case ErrorKind::blowup:
    case ErrorKind::stiffness:
    case ErrorKind::bound:
    case ErrorKind::numerical: return solver_error;
    case ErrorKind::range:
    case ErrorKind::structural:
    case ErrorKind::condition_c:
    case ErrorKind::precondition:
    case ErrorKind::inapplicable: return condition;
    case ErrorKind::construction: return construction;
  }
  return scientific;
}

/// Everything a command needs besides the config itself.
struct Context {
  KeyValues cfg;
  std::filesystem::path out_dir = "vfc-out";
  std::uint64_t seed = 20240611;
  std::ostream* out = &std::cout;
  std::ostream* err = &std::cerr;
};

inline const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "seed",
      "coefficients.preset", "coefficients.D", "coefficients.h", "coefficients.g", "coefficients.D1",
      "coefficients.D2", "coefficients.h1", "coefficients.h2", "coefficients.kappa",
      "reaction.gamma", "reaction.beta",
      "grid.n_cells", "grid.length",
      "solver.eps", "solver.cfl", "solver.dt_max", "solver.t_end", "solver.flux_scheme", "solver.v_stepping",
      "initial.u", "initial.u_value", "initial.u_base", "initial.u_amplitude", "initial.u_center", "initial.u_width",
      "initial.u_left", "initial.u_right", "initial.u_split", "initial.u_lo", "initial.u_hi",
      "initial.v", "initial.v_value", "initial.v_base", "initial.v_amplitude", "initial.v_center", "initial.v_width",
      "initial.v_lo", "initial.v_hi", "initial.file",
      "output.dir", "output.sample_times",
      "stationary.lambda", "stationary.v0", "stationary.length", "stationary.grid_n", "stationary.energy_fraction",
      "stationary.max_residual_flux", "stationary.max_residual_v", "stationary.portrait_points",
      "stationary.window_shift",
      "verify.criteria", "verify.mass_grids", "verify.mass_t_end", "verify.domain_length", "verify.solver_eps",
      "verify.random_runs", "verify.random_grid", "verify.eps_grid", "verify.eps_t_end", "verify.eps_list",
      "verify.condition_grid", "verify.uniqueness_pairs", "verify.hump_grid", "verify.drift_grid", "verify.drift_t",
      "verify.drift_gamma", "verify.drift_beta", "verify.orbits", "verify.dependence_grid", "verify.dependence_t",
      "verify.deltas",
      "sweep.study", "sweep.values", "sweep.parameter",
      "debug.inject_mass_leak"};
  return keys;
}

// ---------------------------------------------------------------------------
// Config interpretation

inline GammaBeta gamma_beta_from(const KeyValues& kv) {
  const double g = kv.num("reaction.gamma", 1.0), b = kv.num("reaction.beta", 1.0);
  if (!(g > 0.0)) fail(ErrorKind::config, "reaction.gamma must be positive");
  if (!(b > 0.0)) fail(ErrorKind::config, "reaction.beta must be positive");
  return GammaBeta{g, b};
}

inline CoefficientSet coefficients_from(const KeyValues& kv) {
  const std::string name = kv.str("coefficients.preset", "example-A");
  if (name != "custom") return preset(name, gamma_beta_from(kv));
  CustomSpec spec;
  spec.D = kv.str("coefficients.D", "");
  spec.h = kv.str("coefficients.h", "");
  spec.g = kv.str("coefficients.g", "");
  spec.D1 = kv.str("coefficients.D1", "");
  spec.D2 = kv.str("coefficients.D2", "");
  spec.h1 = kv.str("coefficients.h1", "");
  spec.h2 = kv.str("coefficients.h2", "");
  spec.kappa = kv.num("coefficients.kappa", 0.0);
  CoefficientSet c = custom(spec);
  if (kv.has("reaction.gamma") || kv.has("reaction.beta")) c.gamma_beta = gamma_beta_from(kv);
  return c;
}

inline Grid1D grid_from(const KeyValues& kv) {
  const int n = kv.integer("grid.n_cells", 256);
  const double l = kv.num("grid.length", 10.0);
  if (n < 4) fail(ErrorKind::config, "grid.n_cells must be at least 4");
  if (!(l > 0.0)) fail(ErrorKind::config, "grid.length must be positive");
  return Grid1D(n, l);
}

inline double leak_from(const KeyValues& kv) { return kv.flag("debug.inject_mass_leak", false) ? 1e-2 : 0.0; }

inline SolverConfig solver_from(const KeyValues& kv) {
  SolverConfig s;
  s.eps = kv.num("solver.eps", s.eps);
  s.cfl = kv.num("solver.cfl", s.cfl);
  s.dt_max = kv.num("solver.dt_max", s.dt_max);
  s.t_end = kv.num("solver.t_end", s.t_end);
  const std::string flux = kv.str("solver.flux_scheme", "upwind_chemotaxis");
  if (flux == "upwind_chemotaxis" || flux == "upwind")
    s.flux_scheme = FluxScheme::upwind_chemotaxis;
  else if (flux == "central")
    s.flux_scheme = FluxScheme::central;
  else
    fail(ErrorKind::config, "solver.flux_scheme must be upwind_chemotaxis or central, got '" + flux + "'");
  const std::string vs = kv.str("solver.v_stepping", "implicit");
  if (vs == "implicit")
    s.v_stepping = VStepping::implicit;
  else if (vs == "explicit")
    s.v_stepping = VStepping::explicit_;
  else
    fail(ErrorKind::config, "solver.v_stepping must be implicit or explicit, got '" + vs + "'");
  s.boundary_leak = leak_from(kv);
  s.validate();
  return s;
}

inline State initial_state_from(const KeyValues& kv, const Grid1D& grid, const CoefficientSet& c, std::uint64_t seed) {
  const std::string ukind = kv.str("initial.u", "bump");
  State s;
  if (ukind == "file") {
    const auto path = kv.raw("initial.file");
    if (!path) fail(ErrorKind::config, "initial.file is required when initial.u = file");
    return init::from_csv(*path, grid);
  }
  if (ukind == "constant")
    s.u = init::constant(grid, kv.num("initial.u_value", 0.5));
  else if (ukind == "bump")
    s.u = init::bump(grid, kv.num("initial.u_base", 0.1), kv.num("initial.u_amplitude", 0.8),
                     kv.num("initial.u_center", 0.5), kv.num("initial.u_width", 0.1));
  else if (ukind == "step")
    s.u = init::step(grid, kv.num("initial.u_left", 1.0), kv.num("initial.u_right", 0.0),
                     kv.num("initial.u_split", 0.5));
  else if (ukind == "random")
    s.u = init::random_cells(grid, kv.num("initial.u_lo", 0.0), kv.num("initial.u_hi", 1.0), seed);
  else
    fail(ErrorKind::config, "initial.u must be constant, bump, step, random or file, got '" + ukind + "'");

  const std::string vkind = kv.str("initial.v", "bump");
  if (vkind == "constant")
    s.v = init::constant(grid, kv.num("initial.v_value", 0.5));
  else if (vkind == "equilibrium") {
    // v = (gamma/beta) u, the homogeneous equilibrium partner of constant u
    if (!c.gamma_beta) fail(ErrorKind::config, "initial.v = equilibrium needs reaction.gamma and reaction.beta");
    s.v = s.u;
    for (double& x : s.v) x *= c.gamma_beta->ratio();
  } else if (vkind == "bump")
    s.v = init::bump(grid, kv.num("initial.v_base", 0.2), kv.num("initial.v_amplitude", 0.5),
                     kv.num("initial.v_center", 0.3), kv.num("initial.v_width", 0.2));
  else if (vkind == "random")
    s.v = init::random_cells(grid, kv.num("initial.v_lo", 0.0), kv.num("initial.v_hi", 1.0), seed ^ 0x9e3779b97f4a7c15ULL);
  else
    fail(ErrorKind::config, "initial.v must be constant, bump, random or equilibrium, got '" + vkind + "'");
  for (double x : s.u)
    if (!(x >= 0.0 && x <= 1.0)) fail(ErrorKind::config, "initial.u produces values outside [0,1]");
  for (double x : s.v)
    if (!(x >= 0.0)) fail(ErrorKind::config, "initial.v produces negative values");
  return s;
}

inline StudySetup study_setup_from(const Context& ctx) {
  StudySetup s;
  s.c = coefficients_from(ctx.cfg);
  s.grid = grid_from(ctx.cfg);
  const State st = initial_state_from(ctx.cfg, s.grid, s.c, ctx.seed);
  s.u0 = st.u;
  s.v0 = st.v;
  s.cfg = solver_from(ctx.cfg);
  return s;
}

inline std::string preset_name(const KeyValues& kv) { return kv.str("coefficients.preset", "example-A"); }

// ---------------------------------------------------------------------------
// simulate

inline void write_snapshot(const std::filesystem::path& path, const State& s, const Grid1D& grid, double eps,
                           const std::string& preset) {
  csv::Writer w(path);
  w.meta("t", s.t).meta("eps", eps).meta("preset", preset).meta("n_cells", std::to_string(grid.n_cells()));
  w.header({"x", "u", "v"});
  for (int i = 0; i < grid.n_cells(); ++i) w.row({grid.center(i), s.u[std::size_t(i)], s.v[std::size_t(i)]});
}

inline void write_run_report(const std::filesystem::path& path, const RunReport& r) {
  std::vector<std::pair<std::string, std::string>> rows = {
      {"completed", r.completed ? "true" : "false"},
      {"abort_reason", r.abort_reason.empty() ? "none" : r.abort_reason},
      {"initial_mass", csv::num(r.initial_mass())},
      {"max_relative_mass_drift", csv::num(r.max_relative_mass_drift())},
      {"u_min", csv::num(r.min_u())},
      {"u_max", csv::num(r.max_u())},
      {"v_min", csv::num(r.min_v())},
      {"v_max", csv::num(r.max_v())},
      {"dt_min", csv::num(r.dt_stats.count ? r.dt_stats.min : 0.0)},
      {"dt_max", csv::num(r.dt_stats.max)},
      {"steps", std::to_string(r.dt_stats.count)},
      {"violations", std::to_string(r.violations.size())},
  };
  for (std::size_t k = 0; k < r.snapshots.size(); ++k) {
    const auto& s = r.snapshots[k];
    const std::string p = "snapshot." + std::to_string(k) + ".";
    rows.push_back({p + "t", csv::num(s.t)});
    rows.push_back({p + "mass", csv::num(s.mass)});
    rows.push_back({p + "u_min", csv::num(s.u_min)});
    rows.push_back({p + "u_max", csv::num(s.u_max)});
    rows.push_back({p + "v_min", csv::num(s.v_min)});
    rows.push_back({p + "v_max", csv::num(s.v_max)});
  }
  for (std::size_t k = 0; k < r.violations.size(); ++k) {
    const auto& v = r.violations[k];
    rows.push_back({"violation." + std::to_string(k), v.kind + " at t = " + csv::num(v.t) + ", magnitude " +
                                                          csv::num(v.magnitude)});
  }
  csv::write_key_values(path, rows);
}

struct SimulationOutcome {
  RunResult result;
  Grid1D grid{4, 1.0};
  SolverConfig solver;
};

inline SimulationOutcome simulate_core(const Context& ctx) {
  SimulationOutcome o;
  const CoefficientSet c = coefficients_from(ctx.cfg);
  o.grid = grid_from(ctx.cfg);
  o.solver = solver_from(ctx.cfg);
  const State s0 = initial_state_from(ctx.cfg, o.grid, c, ctx.seed);
  std::vector<double> samples = ctx.cfg.list("output.sample_times", {0.0, o.solver.t_end});
  for (double t : samples)
    if (!(t >= 0.0 && t <= o.solver.t_end))
      fail(ErrorKind::config, "output.sample_times must lie in [0, solver.t_end]");
  o.result = run(s0.u, s0.v, o.grid, c, o.solver, samples);
  return o;
}

inline int cmd_simulate(const Context& ctx) {
  const SimulationOutcome o = simulate_core(ctx);
  const std::string name = preset_name(ctx.cfg);
  for (std::size_t k = 0; k < o.result.snapshots.size(); ++k) {
    char file[32];
    std::snprintf(file, sizeof file, "snapshot_%04zu.csv", k);
    write_snapshot(ctx.out_dir / file, o.result.snapshots[k], o.grid, o.solver.eps, name);
  }
  write_run_report(ctx.out_dir / "run_report.csv", o.result.report);
  const RunReport& r = o.result.report;
  *ctx.out << "simulate: " << o.result.snapshots.size() << " snapshots, " << r.dt_stats.count
           << " steps, mass drift " << csv::num(r.max_relative_mass_drift()) << ", u in [" << csv::num(r.min_u())
           << ", " << csv::num(r.max_u()) << "], v in [" << csv::num(r.min_v()) << ", " << csv::num(r.max_v())
           << "]\n";
  if (!r.passed()) {
    *ctx.err << "simulate: invariant violation";
    if (!r.violations.empty()) *ctx.err << " (" << r.violations.front().kind << ")";
    if (!r.abort_reason.empty()) *ctx.err << ": " << r.abort_reason;
    *ctx.err << "\n";
    return scientific;
  }
  return ok;
}

// ---------------------------------------------------------------------------
// stationary

inline double lambda_from(const KeyValues& kv, const CoefficientSet& c, GammaBeta gb) {
  const std::string spec = kv.str("stationary.lambda", "auto-from-prop58");
  if (spec == "auto-from-prop58") return prop_tekiyou_lambda(c, gb).midpoint();
  if (spec == "auto-from-prop57") {
    const LambdaWindow w = prop_lambda_window(c, gb, kv.num("stationary.window_shift", 1e-2));
    return w.lambda_tilde + 0.5 * w.eps0;
  }
  return kv.num("stationary.lambda", 0.0);
}

inline int cmd_stationary(const Context& ctx) {
  const CoefficientSet c = coefficients_from(ctx.cfg);
  if (!c.gamma_beta) fail(ErrorKind::config, "stationary needs reaction.gamma and reaction.beta");
  const GammaBeta gb = *c.gamma_beta;
  const ConditionReport factors = check_separable_factors(c, gb.ratio(), 256);
  for (const auto& cond : factors.conditions)
    if (!cond.passed) {
      *ctx.err << "stationary: structural condition " << cond.name << " fails (" << cond.detail << ")\n";
      return condition;
    }
  const double lambda = lambda_from(ctx.cfg, c, gb);
  const CrossingAnalysis crossing = analyze_crossings(c, gb, lambda);
  if (!crossing.ok()) {
    *ctx.err << "stationary: crossing condition fails at clause '" << crossing.failed_clause
             << "' for lambda = " << csv::num(lambda) << "\n";
    return condition;
  }
  const PhaseParams p = find_crossings(c, gb, lambda);
  const JyoukennResult jy = check_jyoukenn(p);
  if (!jy.energy_gap_positive) {
    *ctx.err << "stationary: energy inequality fails (margin " << csv::num(jy.margin) << "), no flat hump exists\n";
    return construction;
  }

  double v0;
  const std::string v0_spec = ctx.cfg.str("stationary.v0", "auto");
  if (ctx.cfg.has("stationary.length"))
    v0 = v0_for_length(p, ctx.cfg.num("stationary.length", 0.0));
  else if (v0_spec == "auto")
    v0 = default_v0(p, ctx.cfg.num("stationary.energy_fraction", 0.5));
  else
    v0 = ctx.cfg.num("stationary.v0", 0.0);
  const double e0 = potential_G(p, v0);
  if (!(v0 > p.rho_m1 && v0 < p.rho_0) || !(e0 > potential_G(p, p.v_lambda) && e0 < energy_ceiling(p)))
    fail(ErrorKind::construction, "v0 = " + csv::num(v0) + " does not start a saturating closed orbit");

  const int n = ctx.cfg.integer("stationary.grid_n", 4096);
  if (n < 8) fail(ErrorKind::config, "stationary.grid_n must be at least 8");
  const StationaryProfile prof = construct_flat_hump(p, v0, n);

  {
    csv::Writer w(ctx.out_dir / "profile.csv");
    w.meta("preset", preset_name(ctx.cfg)).meta("lambda", lambda).meta("l", prof.grid.length());
    w.meta("n_cells", std::to_string(n));
    w.header({"x", "u", "v"});
    for (int i = 0; i < n; ++i) w.row({prof.grid.center(i), prof.u[std::size_t(i)], prof.v[std::size_t(i)]});
  }
  csv::write_key_values(ctx.out_dir / "parameters.csv",
                        {{"lambda", csv::num(lambda)},
                         {"v_lambda", csv::num(p.v_lambda)},
                         {"rho_m1", csv::num(p.rho_m1)},
                         {"rho_0", csv::num(p.rho_0)},
                         {"v0", csv::num(v0)},
                         {"v_max", csv::num(prof.v_max)},
                         {"x1", csv::num(prof.x1)},
                         {"l", csv::num(prof.grid.length())},
                         {"n_cells", std::to_string(n)},
                         {"residual_flux", csv::num(prof.residual_flux)},
                         {"residual_v", csv::num(prof.residual_v)},
                         {"nu_margin", csv::num(jy.margin)},
                         {"jyoukenn_holds", jy.holds ? "true" : "false"},
                         {"energy", csv::num(e0)},
                         {"G_rho_m1", csv::num(potential_G(p, p.rho_m1))},
                         {"G_v_lambda", csv::num(potential_G(p, p.v_lambda))},
                         {"G_gamma_over_beta", csv::num(potential_G(p, gb.ratio()))},
                         {"u_prime_l2", csv::num(prof.u_prime_l2)}});
  {
    const PhaseOrbit orbit = integrate_orbit(p, v0, default_orbit_step(p, v0));
    const int points = std::max(2, ctx.cfg.integer("stationary.portrait_points", 2000));
    const std::size_t stride = std::max<std::size_t>(1, orbit.samples.size() / std::size_t(points));
    csv::Writer w(ctx.out_dir / "phase_portrait.csv");
    w.meta("energy", e0).meta("period", orbit.period);
    w.header({"x", "v", "w", "E"});
    for (std::size_t k = 0; k < orbit.samples.size(); k += stride) {
      const auto& s = orbit.samples[k];
      w.row({s.x, s.v, s.w, 0.5 * s.w * s.w + potential_G(p, s.v)});
    }
  }

  const double max_rf = ctx.cfg.num("stationary.max_residual_flux", 1e-6);
  const double max_rv = ctx.cfg.num("stationary.max_residual_v", 1e-4);
  *ctx.out << "stationary: lambda " << csv::num(lambda) << ", l " << csv::num(prof.grid.length()) << ", x1 "
           << csv::num(prof.x1) << ", residual_flux " << csv::num(prof.residual_flux) << ", residual_v "
           << csv::num(prof.residual_v) << ", margin " << csv::num(jy.margin) << "\n";
  if (prof.residual_flux > max_rf || prof.residual_v > max_rv) {
    *ctx.err << "stationary: residuals above thresholds (" << csv::num(max_rf) << ", " << csv::num(max_rv) << ")\n";
    return scientific;
  }
  if (!jy.holds) {
    // the profile exists because the energy gap is positive, but the averaged
    // sufficient inequality is not verified for this lambda
    *ctx.err << "stationary: averaged energy inequality fails (mean " << csv::num(jy.mean_f) << " >= "
             << csv::num(jy.rhs) << ") although the energy gap " << csv::num(jy.margin) << " is positive\n";
    return scientific;
  }
  return ok;
}

// ---------------------------------------------------------------------------
// verify

inline verify::VerifyOptions verify_options_from(const Context& ctx) {
  const KeyValues& kv = ctx.cfg;
  verify::VerifyOptions o;
  o.seed = ctx.seed;
  auto ints = [&](const std::string& key, const std::vector<int>& fallback) {
    std::vector<int> out;
    for (double d : kv.list(key, {})) out.push_back(int(d));
    return out.empty() ? fallback : out;
  };
  o.only = ints("verify.criteria", {});
  o.mass_grids = ints("verify.mass_grids", o.mass_grids);
  o.mass_t_end = kv.num("verify.mass_t_end", o.mass_t_end);
  o.domain_length = kv.num("verify.domain_length", o.domain_length);
  o.solver_eps = kv.num("verify.solver_eps", o.solver_eps);
  o.random_runs = kv.integer("verify.random_runs", o.random_runs);
  o.random_grid = kv.integer("verify.random_grid", o.random_grid);
  o.eps_grid = kv.integer("verify.eps_grid", o.eps_grid);
  o.eps_t_end = kv.num("verify.eps_t_end", o.eps_t_end);
  o.eps_list = kv.list("verify.eps_list", o.eps_list);
  o.condition_grid = kv.integer("verify.condition_grid", o.condition_grid);
  o.uniqueness_pairs = std::size_t(kv.integer("verify.uniqueness_pairs", int(o.uniqueness_pairs)));
  o.hump_grid = kv.integer("verify.hump_grid", o.hump_grid);
  o.drift_grid = kv.integer("verify.drift_grid", o.drift_grid);
  o.drift_t = kv.num("verify.drift_t", o.drift_t);
  o.drift_gamma = kv.num("verify.drift_gamma", o.drift_gamma);
  o.drift_beta = kv.num("verify.drift_beta", o.drift_beta);
  o.orbits = kv.integer("verify.orbits", o.orbits);
  o.dependence_grid = kv.integer("verify.dependence_grid", o.dependence_grid);
  o.dependence_t = kv.num("verify.dependence_t", o.dependence_t);
  o.deltas = kv.list("verify.deltas", o.deltas);
  o.boundary_leak = leak_from(kv);
  for (int id : o.only)
    if (id < 1 || id > 9) fail(ErrorKind::config, "verify.criteria entries must lie in 1..9");
  return o;
}

inline int cmd_verify(const Context& ctx) {
  const verify::VerifyOptions opt = verify_options_from(ctx);
  std::vector<verify::CriterionResult> results = verify::run_all(opt, [&](const verify::CriterionResult& r) {
    *ctx.out << (r.passed ? "PASS" : "FAIL") << "  " << r.id << "  " << r.name << ": " << r.detail << "\n";
    ctx.out->flush();
  });
  csv::Writer w(ctx.out_dir / "verify_summary.csv");
  w.meta("seed", std::to_string(ctx.seed));
  w.header({"criterion", "name", "passed", "seconds", "detail"});
  std::string failed;
  for (const auto& r : results) {
    std::string detail = r.detail;
    for (char& ch : detail)
      if (ch == ',') ch = ';';
    w.text_row({std::to_string(r.id), r.name, r.passed ? "true" : "false", csv::num(r.seconds), detail});
    if (!r.passed) failed += (failed.empty() ? "" : ", ") + r.name;
  }
  if (!failed.empty()) {
    *ctx.err << "verify: failed criteria: " << failed << "\n";
    return scientific;
  }
  return ok;
}

// ---------------------------------------------------------------------------
// sweep

inline int cmd_sweep(const Context& ctx) {
  const std::string study = ctx.cfg.str("sweep.study", "eps");
  const std::vector<double> values = ctx.cfg.list("sweep.values", {});
  if (study == "eps") {
    const std::vector<double> eps = values.empty() ? std::vector<double>{1e-1, 5e-2, 2.5e-2, 1.25e-2} : values;
    const EpsStudy st = eps_convergence_study(study_setup_from(ctx), eps);
    csv::Writer w(ctx.out_dir / "eps_study.csv");
    w.meta("study", "eps").meta("strictly_decreasing", st.strictly_decreasing ? "true" : "false");
    w.meta("final_over_first", st.final_over_first).meta("slope", st.slope);
    if (!st.completed) w.meta("failure", st.failure);
    w.header({"eps", "eps_next", "l2_diff_u", "l2_diff_v"});
    for (std::size_t k = 0; k < st.diff_u.size(); ++k) w.row({eps[k], eps[k + 1], st.diff_u[k], st.diff_v[k]});
    *ctx.out << "sweep eps: strictly decreasing " << (st.strictly_decreasing ? "yes" : "no") << ", final/first "
             << csv::num(st.final_over_first) << "\n";
    if (!st.completed) *ctx.err << "sweep eps: " << st.failure << "\n";
    return st.completed && st.strictly_decreasing ? ok : scientific;
  }
  if (study == "dependence") {
    const std::vector<double> deltas = values.empty() ? std::vector<double>{1e-2, 1e-3, 1e-4} : values;
    const DependenceStudy st = continuous_dependence_study(study_setup_from(ctx), deltas, ctx.seed);
    csv::Writer w(ctx.out_dir / "dependence_study.csv");
    w.meta("study", "dependence").meta("spread", st.spread).meta("hypotheses", st.hypotheses_note);
    if (!st.completed) w.meta("failure", st.failure);
    w.header({"delta", "l2_diff", "ratio"});
    for (std::size_t k = 0; k < st.diff.size(); ++k) w.row({deltas[k], st.diff[k], st.ratio[k]});
    *ctx.out << "sweep dependence: spread " << csv::num(st.spread) << " (" << st.hypotheses_note << ")\n";
    if (!st.completed) *ctx.err << "sweep dependence: " << st.failure << "\n";
    return st.passed(3.0) ? ok : scientific;
  }
  if (study == "parameter") {
    const auto key = ctx.cfg.raw("sweep.parameter");
    if (!key) fail(ErrorKind::config, "sweep.parameter is required for sweep.study = parameter");
    if (!known_keys().count(*key) || key->rfind("sweep.", 0) == 0)
      fail(ErrorKind::config, "sweep.parameter names an unknown key '" + *key + "'");
    if (values.empty()) fail(ErrorKind::config, "sweep.values must list at least one value");
    csv::Writer w(ctx.out_dir / "parameter_sweep.csv");
    w.meta("study", "parameter").meta("parameter", *key);
    w.header({"value", "completed", "max_relative_mass_drift", "u_min", "u_max", "v_min", "v_max", "steps"});
    bool all_ok = true;
    for (double v : values) {
      Context run_ctx = ctx;
      run_ctx.cfg.set(*key, csv::num(v));
      const SimulationOutcome o = simulate_core(run_ctx);
      const RunReport& r = o.result.report;
      all_ok = all_ok && r.passed();
      w.row({v, r.passed() ? 1.0 : 0.0, r.max_relative_mass_drift(), r.min_u(), r.max_u(), r.min_v(), r.max_v(),
             double(r.dt_stats.count)});
    }
    *ctx.out << "sweep parameter " << *key << ": " << values.size() << " runs, "
             << (all_ok ? "all passed" : "violations found") << "\n";
    return all_ok ? ok : scientific;
  }
  fail(ErrorKind::config, "sweep.study must be eps, dependence or parameter, got '" + study + "'");
}

/// Loads the config, applies command-line overrides and dispatches. Errors are
/// reported on ctx.err and mapped to exit codes.
inline int dispatch(const std::string& command, Context ctx, const std::string& config_path,
                    const std::string& out_override, std::optional<std::uint64_t> seed_override) {
  try {
    if (!config_path.empty()) ctx.cfg = KeyValues::load(config_path);
    ctx.cfg.check_known(known_keys());
    ctx.seed = seed_override ? *seed_override : ctx.cfg.u64("seed", 20240611);
    ctx.out_dir = out_override.empty() ? std::filesystem::path(ctx.cfg.str("output.dir", "vfc-out"))
                                       : std::filesystem::path(out_override);
    std::filesystem::create_directories(ctx.out_dir);
    if (command == "simulate") return cmd_simulate(ctx);
    if (command == "stationary") return cmd_stationary(ctx);
    if (command == "verify") return cmd_verify(ctx);
    if (command == "sweep") return cmd_sweep(ctx);
    fail(ErrorKind::config, "unknown command '" + command + "'");
  } catch (const Error& e) {
    *ctx.err << command << ": " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    *ctx.err << command << ": " << e.what() << "\n";
    return config_error;
  }
}

}  // namespace vfc::cli
