#pragma once

// Convergence and continuous-dependence studies built on the solver. Studies
// report structured verdicts and never throw on a scientific failure; only
// malformed input raises an Error.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <future>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "vfc/coefficients.hpp"
#include "vfc/diagnostics.hpp"
#include "vfc/error.hpp"
#include "vfc/grid.hpp"
#include "vfc/pde.hpp"

namespace vfc {

/// Runs fn(0) ... fn(count - 1) on up to hardware_concurrency threads and
/// returns the results in index order.
template <class T>
std::vector<T> parallel_map(std::size_t count, const std::function<T(std::size_t)>& fn) {
  std::vector<T> out(count);
  const std::size_t workers = std::max<std::size_t>(1, std::thread::hardware_concurrency());
  for (std::size_t start = 0; start < count; start += workers) {
    const std::size_t stop = std::min(count, start + workers);
    if (stop - start == 1) {
      out[start] = fn(start);
      continue;
    }
    std::vector<std::future<T>> batch;
    for (std::size_t i = start; i < stop; ++i) batch.push_back(std::async(std::launch::async, fn, i));
    for (std::size_t i = start; i < stop; ++i) out[i] = batch[i - start].get();
  }
  return out;
}

/// Everything a study needs to launch identical runs.
struct StudySetup {
  CoefficientSet c;
  Grid1D grid{64, 1.0};
  std::vector<double> u0, v0;
  SolverConfig cfg;
};

// ---------------------------------------------------------------------------
// Regularization limit

struct EpsStudy {
  std::vector<double> eps;
  std::vector<double> diff_u;  // ||u^{eps_k} - u^{eps_{k+1}}||_{L2} at t_end
  std::vector<double> diff_v;
  bool completed = true;       // every run finished inside the invariant region
  bool strictly_decreasing = false;
  double final_over_first = 0.0;
  double slope = 0.0;          // least-squares slope of log diff_u against log eps_k
  std::string failure;         // empty when completed

  bool passed(double final_ratio_bound) const {
    return completed && strictly_decreasing && final_over_first <= final_ratio_bound;
  }
};

inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = std::min(x.size(), y.size());
  if (n < 2) return 0.0;
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= double(n);
  my /= double(n);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxx > 0.0 ? sxy / sxx : 0.0;
}

/// Runs the solver once per eps on the same grid and data and tabulates the
/// L2 distance between consecutive solutions at cfg.t_end.
inline EpsStudy eps_convergence_study(const StudySetup& setup, const std::vector<double>& eps_list) {
  require(eps_list.size() >= 3, ErrorKind::input, "eps study needs at least 3 values");
  for (std::size_t i = 0; i < eps_list.size(); ++i) {
    require(eps_list[i] > 0.0, ErrorKind::input, "eps values must be positive");
    if (i > 0) require(eps_list[i] < eps_list[i - 1], ErrorKind::input, "eps values must be strictly decreasing");
  }
  setup.cfg.validate();

  struct Outcome {
    State final_state;
    bool ok = false;
    std::string why;
  };
  const auto outcomes = parallel_map<Outcome>(eps_list.size(), [&](std::size_t k) {
    Outcome o;
    SolverConfig cfg = setup.cfg;
    cfg.eps = eps_list[k];
    try {
      const RunResult r = run(setup.u0, setup.v0, setup.grid, setup.c, cfg, {});
      o.final_state = r.final_state;
      o.ok = r.report.passed();
      if (!o.ok) o.why = "run at eps = " + std::to_string(cfg.eps) + " left the invariant region or lost mass";
    } catch (const Error& e) {
      o.why = e.what();
    }
    return o;
  });

  EpsStudy st;
  st.eps = eps_list;
  for (const auto& o : outcomes)
    if (!o.ok) {
      st.completed = false;
      st.failure = o.why;
      return st;
    }
  for (std::size_t k = 0; k + 1 < outcomes.size(); ++k) {
    const auto [du, dv] = lp_distance(outcomes[k].final_state, outcomes[k + 1].final_state, setup.grid, Norm::L2);
    st.diff_u.push_back(du);
    st.diff_v.push_back(dv);
  }
  st.strictly_decreasing = true;
  for (std::size_t k = 1; k < st.diff_u.size(); ++k)
    if (!(st.diff_u[k] < st.diff_u[k - 1])) st.strictly_decreasing = false;
  st.final_over_first = st.diff_u.front() > 0.0 ? st.diff_u.back() / st.diff_u.front() : 0.0;
  std::vector<double> eps_head(eps_list.begin(), eps_list.end() - 1);
  bool positive = std::all_of(st.diff_u.begin(), st.diff_u.end(), [](double d) { return d > 0.0; });
  st.slope = positive ? loglog_slope(eps_head, st.diff_u) : 0.0;
  return st;
}

// ---------------------------------------------------------------------------
// Continuous dependence on initial data

struct DependenceStudy {
  std::vector<double> delta;
  std::vector<double> diff;   // ||u_delta - u||_{L2} at t_end
  std::vector<double> ratio;  // diff / ||u0_delta - u0||_{L2}
  double spread = 0.0;        // max ratio / min ratio
  bool hypotheses_satisfied = false;
  std::string hypotheses_note;
  bool completed = true;
  std::string failure;

  bool passed(double spread_bound) const { return completed && spread <= spread_bound; }
};

/// Zero-mean perturbation direction with unit L2 norm, drawn from `seed`:
/// a few seeded cosine modes, so the perturbed data stay smooth.
inline std::vector<double> perturbation_direction(const Grid1D& grid, std::uint64_t seed, int modes = 4) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, 1.0);
  std::vector<double> dir(std::size_t(grid.n_cells()), 0.0);
  for (int k = 1; k <= modes; ++k) {
    const double a = dist(rng) / k;
    for (int i = 0; i < grid.n_cells(); ++i)
      dir[std::size_t(i)] += a * std::cos(k * std::numbers::pi * grid.center(i) / grid.length());
  }
  double norm2 = 0.0;
  for (double d : dir) norm2 += d * d * grid.dx();
  const double norm = std::sqrt(norm2);
  for (double& d : dir) d /= norm;
  return dir;
}

/// Perturbs u0 by delta * (unit direction) for each delta and tabulates the
/// normalized L2 divergence at cfg.t_end against the unperturbed run.
inline DependenceStudy continuous_dependence_study(const StudySetup& setup, const std::vector<double>& delta_list,
                                                   std::uint64_t seed, double k_bound = 1.0) {
  require(!delta_list.empty(), ErrorKind::input, "dependence study needs at least one delta");
  for (double d : delta_list) require(d >= 0.0, ErrorKind::input, "perturbation amplitudes must be >= 0");
  setup.cfg.validate();

  DependenceStudy st;
  st.delta = delta_list;
  try {
    const UniquenessReport rep = check_uniqueness_conditions(setup.c, k_bound, 32);
    st.hypotheses_satisfied = rep.satisfiable && rep.g_decomposition_ok;
    st.hypotheses_note = st.hypotheses_satisfied ? "uniqueness hypotheses hold on the sampled pairs"
                                                 : "hypotheses not satisfied on the sampled pairs";
  } catch (const Error& e) {
    st.hypotheses_satisfied = false;
    st.hypotheses_note = std::string("hypotheses not satisfied: ") + e.what();
  }

  const std::vector<double> dir = perturbation_direction(setup.grid, seed);
  struct Outcome {
    State final_state;
    double initial_gap = 0.0;
    bool ok = false;
    std::string why;
  };
  auto launch = [&](double delta) {
    Outcome o;
    std::vector<double> u0 = setup.u0;
    for (std::size_t i = 0; i < u0.size(); ++i) u0[i] += delta * dir[i];
    double gap2 = 0.0;
    for (std::size_t i = 0; i < u0.size(); ++i) gap2 += (u0[i] - setup.u0[i]) * (u0[i] - setup.u0[i]) * setup.grid.dx();
    o.initial_gap = std::sqrt(gap2);
    try {
      const RunResult r = run(u0, setup.v0, setup.grid, setup.c, setup.cfg, {});
      o.final_state = r.final_state;
      o.ok = r.report.passed();
      if (!o.ok) o.why = "run with delta = " + std::to_string(delta) + " left the invariant region or lost mass";
    } catch (const Error& e) {
      o.why = e.what();
    }
    return o;
  };
  const auto outcomes = parallel_map<Outcome>(delta_list.size() + 1, [&](std::size_t k) {
    return launch(k == 0 ? 0.0 : delta_list[k - 1]);
  });
  for (const auto& o : outcomes)
    if (!o.ok) {
      st.completed = false;
      st.failure = o.why;
      return st;
    }
  double rmin = std::numeric_limits<double>::infinity(), rmax = 0.0;
  for (std::size_t k = 0; k < delta_list.size(); ++k) {
    const Outcome& o = outcomes[k + 1];
    const double d = lp_distance(o.final_state, outcomes[0].final_state, setup.grid, Norm::L2).first;
    st.diff.push_back(d);
    const double ratio = o.initial_gap > 0.0 ? d / o.initial_gap : 0.0;
    st.ratio.push_back(ratio);
    if (delta_list[k] > 0.0) {
      rmin = std::min(rmin, ratio);
      rmax = std::max(rmax, ratio);
    }
  }
  st.spread = rmax > 0.0 && std::isfinite(rmin) && rmin > 0.0 ? rmax / rmin : (rmax == 0.0 ? 1.0 : std::numeric_limits<double>::infinity());
  return st;
}

}  // namespace vfc
