#pragma once

// Norms, conserved-mass bookkeeping and the per-run diagnostic record.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "vfc/error.hpp"
#include "vfc/grid.hpp"

namespace vfc {

/// Neumaier-compensated sum.
inline double compensated_sum(const std::vector<double>& x) {
  double sum = 0.0, comp = 0.0;
  for (double xi : x) {
    const double t = sum + xi;
    if (std::abs(sum) >= std::abs(xi))
      comp += (sum - t) + xi;
    else
      comp += (xi - t) + sum;
    sum = t;
  }
  return sum + comp;
}

inline double mass(const State& state, const Grid1D& grid) {
  require(int(state.u.size()) == grid.n_cells(), ErrorKind::input, "state size does not match grid");
  return compensated_sum(state.u) * grid.dx();
}

enum class Norm { L1, L2, Linf };

inline double lp_norm(const std::vector<double>& a, const std::vector<double>& b, double dx, Norm p) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = std::abs(a[i] - b[i]);
    switch (p) {
      case Norm::L1: acc += d; break;
      case Norm::L2: acc += d * d; break;
      case Norm::Linf: acc = std::max(acc, d); break;
    }
  }
  if (p == Norm::L1) return acc * dx;
  if (p == Norm::L2) return std::sqrt(acc * dx);
  return acc;
}

/// (||u_a - u_b||_p, ||v_a - v_b||_p) with cell-average quadrature.
inline std::pair<double, double> lp_distance(const State& a, const State& b, const Grid1D& grid, Norm p) {
  const auto n = std::size_t(grid.n_cells());
  require(a.u.size() == n && b.u.size() == n && a.v.size() == n && b.v.size() == n, ErrorKind::input,
          "lp_distance: states do not match the grid");
  return {lp_norm(a.u, b.u, grid.dx(), p), lp_norm(a.v, b.v, grid.dx(), p)};
}

struct Violation {
  double t = 0.0;
  std::string kind;  // "u_min", "u_max", "v_min", "mass", ...
  double magnitude = 0.0;
};

struct SnapshotStats {
  double t = 0.0;
  double mass = 0.0;
  double u_min = 0.0, u_max = 0.0, v_min = 0.0, v_max = 0.0;
};

struct DtStats {
  double min = std::numeric_limits<double>::infinity();
  double max = 0.0;
  long long count = 0;

  void add(double dt) {
    min = std::min(min, dt);
    max = std::max(max, dt);
    ++count;
  }
};

struct RunReport {
  std::vector<SnapshotStats> snapshots;  // mass history and extrema, initial state first
  DtStats dt_stats;
  std::vector<Violation> violations;
  bool completed = true;
  std::string abort_reason;

  double initial_mass() const { return snapshots.empty() ? 0.0 : snapshots.front().mass; }

  /// max over snapshots of |M(t) - M(0)| / |M(0)| (absolute when M(0) = 0)
  double max_relative_mass_drift() const {
    double worst = 0.0;
    const double m0 = initial_mass();
    const double scale = m0 != 0.0 ? std::abs(m0) : 1.0;
    for (const auto& s : snapshots) worst = std::max(worst, std::abs(s.mass - m0) / scale);
    return worst;
  }
  double min_u() const { return reduce([](const SnapshotStats& s) { return s.u_min; }, true); }
  double max_u() const { return reduce([](const SnapshotStats& s) { return s.u_max; }, false); }
  double min_v() const { return reduce([](const SnapshotStats& s) { return s.v_min; }, true); }
  double max_v() const { return reduce([](const SnapshotStats& s) { return s.v_max; }, false); }

  bool passed() const { return completed && violations.empty(); }

 private:
  template <class F>
  double reduce(F f, bool take_min) const {
    double acc = take_min ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
    for (const auto& s : snapshots) acc = take_min ? std::min(acc, f(s)) : std::max(acc, f(s));
    return acc;
  }
};

inline SnapshotStats snapshot_stats(const State& s, const Grid1D& grid) {
  SnapshotStats st;
  st.t = s.t;
  st.mass = mass(s, grid);
  const auto [umin, umax] = std::minmax_element(s.u.begin(), s.u.end());
  const auto [vmin, vmax] = std::minmax_element(s.v.begin(), s.v.end());
  st.u_min = *umin;
  st.u_max = *umax;
  st.v_min = *vmin;
  st.v_max = *vmax;
  return st;
}

}  // namespace vfc
