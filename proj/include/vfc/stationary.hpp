#pragma once

// Flat-hump stationary states on (0, l) for separable coefficients
// D = D1(r) D2(s), h = h1(r) h2(s) and g = gamma r - beta s.
//
// On the unsaturated set the zero-flux relation integrates to
// j1(u) - j2(v) = lambda, i.e. u = f_lambda(v) = j1^{-1}(j2(v) + lambda),
// which saturates (u = 1) at v = v_lambda. Substituting the clamped map into
// -v'' + beta v = gamma u gives the conservative oscillator
//
//   v' = w,   w' = gt(v) := -gamma fbar(v) + beta v,   E = w^2/2 + G(v),
//   G(v) = -int_{rho_0}^{v} gt,
//
// whose closed orbits around (rho_0, 0) yield the humps: the orbit from
// (v0, 0) over one period is v on (0, l), and u = 1 wherever v >= v_lambda.

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "vfc/coefficients.hpp"
#include "vfc/error.hpp"
#include "vfc/grid.hpp"
#include "vfc/pde.hpp"
#include "vfc/quadrature.hpp"
#include "vfc/roots.hpp"

namespace vfc {

class PotentialTable;

struct PhaseParams {
  CoefficientSet c;
  GammaBeta gb;
  double lambda = 0.0;
  double v_lambda = 0.0;
  double rho_m1 = 0.0;
  double rho_0 = 0.0;
  std::shared_ptr<const PotentialTable> potential;  // cached G; immutable
};

// ---------------------------------------------------------------------------
// Profile map

namespace detail {

inline double v_lambda_of(const CoefficientSet& c, double lambda) {
  require(c.j1_at_one.finite, ErrorKind::structural,
          "flat-hump construction needs j1(1) < infinity (D1/h1 integrable near r = 1)");
  const double y = c.j1_at_one.value - lambda;
  if (!(y >= 0.0))
    fail(ErrorKind::condition_c, "clause v_lambda: lambda = " + std::to_string(lambda) +
                                     " >= j1(1) = " + std::to_string(c.j1_at_one.value) + ", v_lambda undefined");
  return invert_j2(c, y);
}

inline double fbar(const CoefficientSet& c, double lambda, double v_lambda, double s) {
  if (s >= v_lambda) return 1.0;
  return invert_j1(c, eval_j2(c, s) + lambda);
}

}  // namespace detail

/// f_lambda(s) = j1^{-1}(j2(s) + lambda), defined for s <= v_lambda.
inline double f_lambda(const PhaseParams& p, double s) {
  if (s > p.v_lambda) fail(ErrorKind::range, "f_lambda needs s <= v_lambda = " + std::to_string(p.v_lambda));
  if (s == p.v_lambda) return 1.0;
  return invert_j1(p.c, eval_j2(p.c, s) + p.lambda);
}

/// f_lambda clamped to 1 for s >= v_lambda.
inline double f_lambda_bar(const PhaseParams& p, double s) {
  return detail::fbar(p.c, p.lambda, p.v_lambda, s);
}

inline double g_tilde(const PhaseParams& p, double v) {
  return -p.gb.gamma * f_lambda_bar(p, v) + p.gb.beta * v;
}

// ---------------------------------------------------------------------------
// Potential G with a cumulative Gauss-Legendre table

class PotentialTable {
 public:
  /// Panels on [0, v_lambda] carry cumulative integrals of gt; beyond
  /// v_lambda the integrand is affine and handled in closed form.
  PotentialTable(const PhaseParams& p, int panels = 512) : p_(p), gl_(10) {
    p_.potential.reset();
    const double vl = p_.v_lambda;
    nodes_.resize(panels + 1);
    cumulative_.assign(panels + 1, 0.0);
    for (int k = 0; k <= panels; ++k) nodes_[k] = vl * double(k) / panels;
    nodes_[panels] = vl;
    for (int k = 0; k < panels; ++k) cumulative_[k + 1] = cumulative_[k] + piece(nodes_[k], nodes_[k + 1]);
    anchor_ = integral_from_zero(p_.rho_0);
  }

  /// G(v) = -int_{rho_0}^{v} gt.
  double G(double v) const { return -(integral_from_zero(v) - anchor_); }

  /// int_a^b gt evaluated directly (no cancellation for nearby a, b).
  double gt_integral(double a, double b) const {
    const double vl = p_.v_lambda;
    if (a > b) return -gt_integral(b, a);
    double total = 0.0;
    if (a < vl) {
      const double hi = std::min(b, vl);
      // whole panels come from the table, the partial end panels from GL
      const std::size_t ka = panel_of(a), kb = panel_of(hi);
      if (ka == kb) {
        total += piece(a, hi);
      } else {
        total += piece(a, nodes_[ka + 1]) + (cumulative_[kb] - cumulative_[ka + 1]) + piece(nodes_[kb], hi);
      }
    }
    if (b > vl) total += affine_part(std::max(a, vl), b);
    return total;
  }

 private:
  double gt(double v) const { return -p_.gb.gamma * f_lambda_bar(p_, v) + p_.gb.beta * v; }

  double piece(double a, double b) const {
    return gl_([this](double s) { return gt(s); }, a, b);
  }

  // int_a^b (beta s - gamma) ds for a, b >= v_lambda
  double affine_part(double a, double b) const {
    return (b - a) * (0.5 * p_.gb.beta * (a + b) - p_.gb.gamma);
  }

  double integral_from_zero(double v) const {
    require(v >= 0.0, ErrorKind::input, "potential evaluated at negative v");
    const double vl = p_.v_lambda;
    if (v >= vl) return cumulative_.back() + affine_part(vl, v);
    const std::size_t k = panel_of(v);
    return cumulative_[k] + piece(nodes_[k], v);
  }

  // index k of the panel [nodes_k, nodes_{k+1}] holding v, clamped to the last panel
  std::size_t panel_of(double v) const {
    const auto it = std::upper_bound(nodes_.begin(), nodes_.end(), v);
    const std::ptrdiff_t k = (it - nodes_.begin()) - 1;
    return std::size_t(std::clamp<std::ptrdiff_t>(k, 0, std::ptrdiff_t(nodes_.size()) - 2));
  }

  PhaseParams p_;
  quad::GaussLegendre gl_;
  std::vector<double> nodes_;
  std::vector<double> cumulative_;
  double anchor_ = 0.0;
};

inline double potential_G(const PhaseParams& p, double v) {
  if (p.potential) return p.potential->G(v);
  return PotentialTable(p).G(v);
}

// ---------------------------------------------------------------------------
// Crossing analysis

struct Crossing {
  double s = 0.0;
  bool rising = false;  // phi goes from negative to positive
};

/// Verdict on each clause of the crossing condition for
/// phi(s) = fbar(s) - (beta/gamma) s on (0, gamma/beta).
struct CrossingAnalysis {
  double lambda = 0.0;
  double v_lambda = std::numeric_limits<double>::quiet_NaN();
  std::vector<Crossing> crossings;
  double rho_m1 = std::numeric_limits<double>::quiet_NaN();
  double rho_0 = std::numeric_limits<double>::quiet_NaN();
  bool ordering = false;      // 0 < rho_-1 < rho_0 < v_lambda < gamma/beta
  bool fixed_points = false;  // |phi(rho_i)| small
  bool above = false;         // phi > 0 on (rho_0, gamma/beta)
  bool below = false;         // phi < 0 on (rho_-1, rho_0)
  double max_root_residual = std::numeric_limits<double>::quiet_NaN();
  std::string failed_clause;  // empty when everything holds

  bool ok() const { return failed_clause.empty(); }
};

struct CrossingOptions {
  int scan_points = 2048;
  double residual_tol = 1e-10;
};

inline CrossingAnalysis analyze_crossings(const CoefficientSet& c, GammaBeta gb, double lambda,
                                          const CrossingOptions& opt = {}) {
  detail::need_separable(c);
  CrossingAnalysis out;
  out.lambda = lambda;
  try {
    out.v_lambda = detail::v_lambda_of(c, lambda);
  } catch (const Error& e) {
    out.failed_clause = e.kind() == ErrorKind::condition_c ? "v_lambda" : "structure";
    return out;
  }
  const double k = gb.ratio();
  const double slope = gb.beta / gb.gamma;
  auto phi = [&](double s) { return detail::fbar(c, lambda, out.v_lambda, s) - slope * s; };

  // scan nodes on [0, gamma/beta), plus v_lambda where fbar has its kink
  std::vector<double> nodes;
  nodes.reserve(opt.scan_points + 2);
  for (int i = 0; i < opt.scan_points; ++i) nodes.push_back(k * double(i) / opt.scan_points);
  if (out.v_lambda < k) nodes.push_back(out.v_lambda);
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  std::vector<double> values(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) values[i] = phi(nodes[i]);

  for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
    const double a = values[i], b = values[i + 1];
    if (a == 0.0 && i > 0) {
      out.crossings.push_back({nodes[i], values[i - 1] < 0.0});
      continue;
    }
    if ((a < 0.0 && b > 0.0) || (a > 0.0 && b < 0.0))
      out.crossings.push_back({roots::bisect(phi, nodes[i], nodes[i + 1]), a < 0.0});
  }

  std::optional<std::size_t> i0;
  for (std::size_t i = out.crossings.size(); i-- > 0;)
    if (out.crossings[i].rising) {
      i0 = i;
      break;
    }
  if (!i0 || *i0 == 0 || out.crossings[*i0 - 1].rising) {
    out.failed_clause = "crossings";
    return out;
  }
  out.rho_0 = out.crossings[*i0].s;
  out.rho_m1 = out.crossings[*i0 - 1].s;

  out.ordering = out.rho_m1 > 0.0 && out.rho_m1 < out.rho_0 && out.rho_0 < out.v_lambda && out.v_lambda < k;
  out.max_root_residual = std::max(std::abs(phi(out.rho_m1)), std::abs(phi(out.rho_0)));
  out.fixed_points = out.max_root_residual <= opt.residual_tol;
  // sign clauses on the scan nodes and the midpoints between them
  out.above = true;
  out.below = true;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const double s = nodes[i];
    const double mids[2] = {s, i + 1 < nodes.size() ? 0.5 * (s + nodes[i + 1]) : 0.5 * (s + k)};
    for (double x : mids) {
      if (x > out.rho_0 && x < k && !(phi(x) > 0.0)) out.above = false;
      if (x > out.rho_m1 && x < out.rho_0 && !(phi(x) < 0.0)) out.below = false;
    }
  }
  if (!out.ordering)
    out.failed_clause = "ordering";
  else if (!out.fixed_points)
    out.failed_clause = "fixed-points";
  else if (!out.above)
    out.failed_clause = "above";
  else if (!out.below)
    out.failed_clause = "below";
  return out;
}

/// Locates rho_-1 < rho_0 and returns the phase parameters; throws a
/// condition_c error naming the first violated clause.
inline PhaseParams find_crossings(const CoefficientSet& c, GammaBeta gb, double lambda,
                                  const CrossingOptions& opt = {}) {
  const CrossingAnalysis a = analyze_crossings(c, gb, lambda, opt);
  if (a.failed_clause == "structure") detail::v_lambda_of(c, lambda);  // rethrows the structural error
  if (!a.ok()) fail(ErrorKind::condition_c, "clause '" + a.failed_clause + "' fails for lambda = " + std::to_string(lambda));
  PhaseParams p;
  p.c = c;
  p.gb = gb;
  p.lambda = lambda;
  p.v_lambda = a.v_lambda;
  p.rho_m1 = a.rho_m1;
  p.rho_0 = a.rho_0;
  p.potential = std::make_shared<const PotentialTable>(p);
  return p;
}

// ---------------------------------------------------------------------------
// Energy inequality

struct JyoukennResult {
  bool holds = false;            // (1/(vl - r)) int_r^vl f < (beta/gamma)(vl - r)/2
  double mean_f = 0.0;           // left-hand side
  double rhs = 0.0;              // right-hand side
  double integral_f = 0.0;       // int_{rho_-1}^{v_lambda} f_lambda
  double margin = 0.0;           // (beta/2)(vl^2 - r^2) - gamma int f  ==  G(rho_-1) - G(v_lambda)
  bool energy_gap_positive = false;
};

inline JyoukennResult check_jyoukenn(const PhaseParams& p) {
  const double a = p.rho_m1, b = p.v_lambda;
  auto f = [&](double s) { return f_lambda_bar(p, s); };
  const quad::Result q = quad::integrate(f, a, b, 1e-12, 1e-12);
  if (!q.converged) fail(ErrorKind::numerical, "quadrature of f_lambda did not converge");
  JyoukennResult r;
  r.integral_f = q.value;
  r.mean_f = q.value / (b - a);
  r.rhs = (p.gb.beta / p.gb.gamma) * (b - a) / 2.0;
  r.holds = r.mean_f < r.rhs;
  r.margin = 0.5 * p.gb.beta * (b * b - a * a) - p.gb.gamma * q.value;
  r.energy_gap_positive = r.margin > 0.0;
  return r;
}

/// Admissible energies for closed orbits: (0, min(G(rho_-1), G(gamma/beta))).
inline double energy_ceiling(const PhaseParams& p) {
  return std::min(potential_G(p, p.rho_m1), potential_G(p, p.gb.ratio()));
}

// ---------------------------------------------------------------------------
// Orbits

struct OrbitSample {
  double x, v, w;
};

struct PhaseOrbit {
  double v0 = 0.0;
  double energy = 0.0;
  double period = 0.0;
  double half_period = 0.0;
  double v_max = 0.0;
  double step = 0.0;
  std::vector<OrbitSample> samples;  // one period, velocity-Verlet nodes
};

namespace detail {

// Cubic Hermite interpolation of w on [x0, x0 + h] using w' = gt(v).
struct HermiteW {
  double w0, w1, d0, d1, h;
  double operator()(double t) const {  // t in [0, 1]
    const double t2 = t * t, t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * w0 + (t3 - 2 * t2 + t) * h * d0 + (-2 * t3 + 3 * t2) * w1 + (t3 - t2) * h * d1;
  }
};

struct HermiteV {
  double v0, v1, d0, d1, h;
  double operator()(double t) const {
    const double t2 = t * t, t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * v0 + (t3 - 2 * t2 + t) * h * d0 + (-2 * t3 + 3 * t2) * v1 + (t3 - t2) * h * d1;
  }
};

}  // namespace detail

/// Velocity-Verlet integration of (v, w) from (v0, 0) over one period.
/// The half period is located where w changes sign from + to -, refined on
/// the cubic Hermite interpolant of w; the period is twice that.
inline PhaseOrbit integrate_orbit(const PhaseParams& p, double v0, double dx, double x_max = 1e4) {
  require(dx > 0.0, ErrorKind::input, "orbit step must be positive");
  require(v0 < p.rho_0 && v0 > p.rho_m1, ErrorKind::precondition, "v0 must lie in (rho_-1, rho_0)");
  const double e0 = potential_G(p, v0);
  const double ceiling = energy_ceiling(p);
  require(e0 > 0.0 && e0 < ceiling, ErrorKind::precondition,
          "G(v0) = " + std::to_string(e0) + " outside the closed-orbit window (0, " + std::to_string(ceiling) + ")");

  PhaseOrbit orbit;
  orbit.v0 = v0;
  orbit.energy = e0;
  orbit.step = dx;
  double x = 0.0, v = v0, w = 0.0, a = g_tilde(p, v);
  orbit.samples.push_back({x, v, w});
  bool past_half = false;
  while (x < x_max) {
    const double w_half = w + 0.5 * dx * a;
    const double v_new = v + dx * w_half;
    const double a_new = g_tilde(p, v_new);
    const double w_new = w_half + 0.5 * dx * a_new;
    const double x_new = x + dx;
    const bool down = w > 0.0 && w_new <= 0.0;
    const bool up = w < 0.0 && w_new >= 0.0;
    if (!past_half && down) {
      const detail::HermiteW hw{w, w_new, a, a_new, dx};
      const double t = roots::bisect(hw, 0.0, 1.0);
      orbit.half_period = x + t * dx;
      orbit.v_max = detail::HermiteV{v, v_new, w, w_new, dx}(t);
      past_half = true;
    } else if (past_half && up) {
      const detail::HermiteW hw{w, w_new, a, a_new, dx};
      const double t = roots::bisect(hw, 0.0, 1.0);
      const double v_end = detail::HermiteV{v, v_new, w, w_new, dx}(t);
      // second-order integrator: allow an O(dx^2) mismatch
      if (std::abs(v_end - v0) > std::max(1e-10, 10.0 * dx * dx) * std::max(1.0, std::abs(v0)))
        fail(ErrorKind::numerical, "orbit did not close: |v(P) - v0| = " + std::to_string(std::abs(v_end - v0)));
      orbit.period = 2.0 * orbit.half_period;
      orbit.samples.push_back({x_new, v_new, w_new});
      return orbit;
    }
    x = x_new;
    v = v_new;
    w = w_new;
    a = a_new;
    orbit.samples.push_back({x, v, w});
  }
  fail(ErrorKind::numerical, "orbit from v0 = " + std::to_string(v0) + " did not return within x_max");
}

/// Largest |E - E0| along the stored samples.
inline double orbit_energy_deviation(const PhaseParams& p, const PhaseOrbit& orbit, std::size_t stride = 1) {
  double worst = 0.0;
  for (std::size_t i = 0; i < orbit.samples.size(); i += std::max<std::size_t>(1, stride)) {
    const auto& s = orbit.samples[i];
    worst = std::max(worst, std::abs(0.5 * s.w * s.w + potential_G(p, s.v) - orbit.energy));
  }
  return worst;
}

/// Right turning point: G(v_max) = G(v0) with v_max in (rho_0, gamma/beta).
inline double turning_point(const PhaseParams& p, double v0) {
  const auto& pot = *p.potential;
  // G(v0) - G(v) = int_{v0}^{v} gt
  auto f = [&](double v) { return pot.gt_integral(v0, v); };
  return roots::bisect(f, p.rho_0, p.gb.ratio());
}

/// Independent period: P(v0) = 2 int_{v0}^{vmax} dv / sqrt(2 (G(v0) - G(v))),
/// with v = v0 + (vmax - v0)(1 - cos theta)/2 removing both inverse-square-root
/// endpoint singularities.
inline double period_quadrature(const PhaseParams& p, double v0) {
  const double vmax = turning_point(p, v0);
  const double half = 0.5 * (vmax - v0);
  const auto& pot = *p.potential;
  auto integrand = [&](double theta) {
    const double v = v0 + half * (1.0 - std::cos(theta));
    // G(v0) - G(v), integrated from the nearer turning point to avoid cancellation
    const double drop = theta <= 0.5 * std::numbers::pi ? pot.gt_integral(v0, v) : -pot.gt_integral(v, vmax);
    if (!(drop > 0.0)) return 0.0;
    return half * std::sin(theta) / std::sqrt(2.0 * drop);
  };
  std::vector<double> breaks;
  if (p.v_lambda > v0 && p.v_lambda < vmax) breaks.push_back(std::acos(1.0 - (p.v_lambda - v0) / half));
  return 2.0 * quad::integrate_split(integrand, 0.0, std::numbers::pi, breaks, 1e-12, 1e-13).value;
}

/// Default v0: G(v0) at the midpoint of the window (G(v_lambda), ceiling).
inline double default_v0(const PhaseParams& p, double fraction = 0.5) {
  const double g_vl = potential_G(p, p.v_lambda);
  const double target = g_vl + fraction * (energy_ceiling(p) - g_vl);
  require(target > g_vl, ErrorKind::construction, "energy window for a flat hump is empty");
  return roots::bisect([&](double v) { return potential_G(p, v) - target; }, p.rho_m1, p.rho_0);
}

inline double default_orbit_step(const PhaseParams& p, double v0) {
  return period_quadrature(p, v0) / 1e5;
}

/// v0 whose period equals `length` (to rel_tol), by bisection on the energy
/// fraction within (G(v_lambda), ceiling). Assumes the period grows with energy.
inline double v0_for_length(const PhaseParams& p, double length, double rel_tol = 1e-9) {
  auto period_at = [&](double frac) { return period_quadrature(p, default_v0(p, frac)); };
  double lo = 1e-6, hi = 1.0 - 1e-6;
  const double p_lo = period_at(lo), p_hi = period_at(hi);
  require(length >= p_lo && length <= p_hi, ErrorKind::construction,
          "requested length " + std::to_string(length) + " outside achievable [" + std::to_string(p_lo) + ", " +
              std::to_string(p_hi) + "]");
  for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double pm = period_at(mid);
    if (std::abs(pm - length) <= rel_tol * length) return default_v0(p, mid);
    (pm < length ? lo : hi) = mid;
  }
  return default_v0(p, 0.5 * (lo + hi));
}

// ---------------------------------------------------------------------------
// Flat-hump profile

struct StationaryProfile {
  Grid1D grid{4, 1.0};
  std::vector<double> u, v, w;
  double x1 = 0.0;
  double lambda = 0.0;
  double v_lambda = 0.0;
  double v0 = 0.0;
  double v_max = 0.0;
  double residual_flux = 0.0;  // sup |D1(u)D2(v)u' - h1(u)h2(v)v'|
  double residual_v = 0.0;     // sup |-v'' + beta v - gamma u|
  int first_saturated = 0;     // first cell with centre in [x1, l - x1]
  double u_prime_l2 = 0.0;     // discrete ||u'||_{L^2}
};

namespace detail {

// Mirror ghost cells: the profile is even about x = 0 and x = l.
inline double reflect(const std::vector<double>& a, int i) {
  const int n = int(a.size());
  if (i < 0) return a[-i - 1];
  if (i >= n) return a[2 * n - i - 1];
  return a[i];
}

}  // namespace detail

/// Builds the flat hump from the orbit through (v0, 0); l is its period.
///
/// Residuals skip the cells whose difference stencil straddles x1 or
/// l - x1, where u' jumps. The flux residual uses fourth-order central
/// differences, the v residual the standard second-order one.
inline StationaryProfile construct_flat_hump(const PhaseParams& p, double v0, int grid_n) {
  require(grid_n >= 8, ErrorKind::input, "grid_n must be at least 8");
  require(p.potential != nullptr, ErrorKind::input, "phase parameters lack a potential table");
  require(v0 > p.rho_m1 && v0 < p.rho_0, ErrorKind::input, "v0 must lie in (rho_-1, rho_0)");
  const double e0 = potential_G(p, v0);
  const double g_vl = potential_G(p, p.v_lambda);
  require(e0 > 0.0 && e0 < energy_ceiling(p), ErrorKind::input, "G(v0) outside the closed-orbit window");
  require(e0 > g_vl, ErrorKind::input, "G(v0) <= G(v_lambda): the orbit never reaches saturation");

  const double coarse = default_orbit_step(p, v0);
  const PhaseOrbit orbit = integrate_orbit(p, v0, coarse);
  const double l = orbit.period;
  if (!(orbit.v_max > p.v_lambda)) fail(ErrorKind::construction, "hump never saturates (v_max <= v_lambda)");

  StationaryProfile prof;
  prof.grid = Grid1D(grid_n, l);
  prof.lambda = p.lambda;
  prof.v_lambda = p.v_lambda;
  prof.v0 = v0;
  prof.v_max = orbit.v_max;
  const double dx = prof.grid.dx();
  const int m = std::max(1, int(std::ceil(dx / (2.0 * coarse))));
  const double h = dx / (2.0 * m);

  // Verlet from x = 0 to l/2 on a step that lands on every cell centre.
  const long long half_steps = (long long)grid_n * m;
  std::vector<double> vs(half_steps + 1), ws(half_steps + 1);
  double v = v0, w = 0.0, a = g_tilde(p, v);
  vs[0] = v;
  ws[0] = w;
  std::optional<double> x1;
  for (long long k = 0; k < half_steps; ++k) {
    const double w_half = w + 0.5 * h * a;
    const double v_new = v + h * w_half;
    const double a_new = g_tilde(p, v_new);
    const double w_new = w_half + 0.5 * h * a_new;
    if (!x1 && v < p.v_lambda && v_new >= p.v_lambda) {
      const detail::HermiteV hv{v, v_new, w, w_new, h};
      const double t = roots::bisect([&](double s) { return hv(s) - p.v_lambda; }, 0.0, 1.0, 1e-11 / h);
      x1 = (double(k) + t) * h;
    }
    v = v_new;
    w = w_new;
    a = a_new;
    vs[k + 1] = v;
    ws[k + 1] = w;
  }
  if (!x1) fail(ErrorKind::construction, "no crossing of v_lambda before l/2");
  prof.x1 = *x1;

  prof.u.resize(grid_n);
  prof.v.resize(grid_n);
  prof.w.resize(grid_n);
  for (int i = 0; i < grid_n; ++i) {
    const int mirror = std::min(i, grid_n - 1 - i);
    const long long node = (2LL * mirror + 1) * m;
    prof.v[i] = vs[node];
    prof.w[i] = i == mirror ? ws[node] : -ws[node];
    const double xc = prof.grid.center(i);
    const bool saturated = xc >= prof.x1 && xc <= l - prof.x1;
    prof.u[i] = saturated ? 1.0 : f_lambda(p, std::min(prof.v[i], p.v_lambda));
  }
  prof.first_saturated = grid_n;
  for (int i = 0; i < grid_n; ++i)
    if (prof.u[i] == 1.0 && prof.grid.center(i) >= prof.x1) {
      prof.first_saturated = i;
      break;
    }

  const auto& sep = *p.c.separable;
  const double right_edge = l - prof.x1;
  auto straddles = [&](int i, int half_width) {
    const double lo = prof.grid.center(i) - half_width * dx;
    const double hi = prof.grid.center(i) + half_width * dx;
    return (lo < prof.x1 && hi > prof.x1) || (lo < right_edge && hi > right_edge);
  };
  double rf = 0.0, rv = 0.0, h1norm = 0.0;
  for (int i = 0; i < grid_n; ++i) {
    auto U = [&](int j) { return detail::reflect(prof.u, j); };
    auto V = [&](int j) { return detail::reflect(prof.v, j); };
    if (!straddles(i, 2)) {
      const double up = (-U(i + 2) + 8 * U(i + 1) - 8 * U(i - 1) + U(i - 2)) / (12 * dx);
      const double vp = (-V(i + 2) + 8 * V(i + 1) - 8 * V(i - 1) + V(i - 2)) / (12 * dx);
      const double ui = prof.u[i], vi = prof.v[i];
      rf = std::max(rf, std::abs(sep.D1(ui) * sep.D2(vi) * up - sep.h1(ui) * sep.h2(vi) * vp));
    }
    if (!straddles(i, 1)) {
      const double vpp = (V(i + 1) - 2 * V(i) + V(i - 1)) / (dx * dx);
      rv = std::max(rv, std::abs(-vpp + p.gb.beta * prof.v[i] - p.gb.gamma * prof.u[i]));
    }
    if (i + 1 < grid_n) {
      const double du = (prof.u[i + 1] - prof.u[i]) / dx;
      h1norm += du * du * dx;
    }
  }
  prof.residual_flux = rf;
  prof.residual_v = rv;
  prof.u_prime_l2 = std::sqrt(h1norm);
  return prof;
}

/// sup over unsaturated cells (u < 1 - 1e-6) of |j1(u) - j2(v) - lambda|.
inline double j_constancy_defect(const PhaseParams& p, const StationaryProfile& prof) {
  double worst = 0.0;
  for (std::size_t i = 0; i < prof.u.size(); ++i) {
    if (prof.u[i] >= 1.0 - 1e-6) continue;
    worst = std::max(worst, std::abs(eval_j1(p.c, prof.u[i]) - eval_j2(p.c, prof.v[i]) - p.lambda));
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Bounds when j1(1) = infinity

/// Two-sided bound j1^{-1}(j1(m) -+ j2(gamma/beta)) on any stationary u with
/// mean m = M/|Omega|.
inline std::pair<double, double> prop_bounds_star(const CoefficientSet& c, GammaBeta gb, double mass_M,
                                                  double domain_length) {
  detail::need_separable(c);
  if (c.j1_at_one.finite) fail(ErrorKind::inapplicable, "bounds need j1(1) = infinity");
  require(domain_length > 0.0, ErrorKind::input, "domain length must be positive");
  const double m = mass_M / domain_length;
  require(m > 0.0 && m < 1.0, ErrorKind::input, "mass must lie in (0, |Omega|)");
  const double centre = eval_j1(c, m);
  const double spread = eval_j2(c, gb.ratio());
  return {invert_j1(c, centre - spread), invert_j1(c, centre + spread)};
}

// ---------------------------------------------------------------------------
// Sufficient conditions for the crossing condition

struct LambdaWindow {
  double lambda_tilde = 0.0;
  double eps0 = 0.0;
  double shift = 1e-2;            // the fixed horizontal shift used for eps0
  double slope_at_vlambda = 0.0;  // one-sided f'_{lambda~} at v_{lambda~}
  std::vector<double> sampled;    // lambdas re-verified by analyze_crossings
  std::vector<bool> passed;
  bool all_passed() const { return std::all_of(passed.begin(), passed.end(), [](bool b) { return b; }); }
};

/// Window (lambda~, lambda~ + eps0) with lambda~ = j1(1) - j2(gamma/beta) and
/// eps0 = inf_s [j2(s + shift) - j2(s)] on a scan of [0, gamma/beta].
inline LambdaWindow prop_lambda_window(const CoefficientSet& c, GammaBeta gb, double shift = 1e-2, int samples = 20) {
  detail::need_separable(c);
  require(c.j1_at_one.finite, ErrorKind::inapplicable, "needs j1(1) < infinity");
  require(shift > 0.0, ErrorKind::input, "shift must be positive");
  const double k = gb.ratio();
  LambdaWindow out;
  out.shift = shift;
  out.lambda_tilde = c.j1_at_one.value - eval_j2(c, k);
  // v_{lambda~} = gamma/beta and f_{lambda~}(gamma/beta) = 1
  const double delta = 1e-7 * std::max(1.0, k);
  const double f_left = invert_j1(c, eval_j2(c, k - delta) + out.lambda_tilde);
  out.slope_at_vlambda = (1.0 - f_left) / delta;
  if (!(out.slope_at_vlambda > k))
    fail(ErrorKind::inapplicable, "slope condition fails: f'(v_lambda-) = " + std::to_string(out.slope_at_vlambda) +
                                      " <= gamma/beta");
  double eps0 = std::numeric_limits<double>::infinity();
  constexpr int scan = 2048;
  for (int i = 0; i <= scan; ++i) {
    const double s = k * double(i) / scan;
    eps0 = std::min(eps0, eval_j2(c, s + shift) - eval_j2(c, s));
  }
  out.eps0 = eps0;
  for (int i = 0; i < samples; ++i) {
    const double lam = out.lambda_tilde + eps0 * (i + 0.5) / samples;
    out.sampled.push_back(lam);
    out.passed.push_back(analyze_crossings(c, gb, lam).ok());
  }
  return out;
}

struct LambdaInterval {
  double r0 = 0.0;
  double lambda_lo = 0.0;
  double lambda_hi = 0.0;
  double slope_j1_at_one = 0.0;  // lim_{r->1} j1'(r)
  double slope_rhs = 0.0;        // (gamma/beta) j2'(gamma/beta)
  std::vector<double> sampled;
  std::vector<bool> passed;
  double midpoint() const { return 0.5 * (lambda_lo + lambda_hi); }
  bool all_passed() const { return std::all_of(passed.begin(), passed.end(), [](bool b) { return b; }); }
};

/// r0 = largest root of j1'(r) = (gamma/beta) j2'((gamma/beta) r) and the
/// lambda-interval (j1(1) - j2(gamma/beta), j1(r0) - j2((gamma/beta) r0)).
inline LambdaInterval prop_tekiyou_lambda(const CoefficientSet& c, GammaBeta gb, int samples = 20) {
  const Separable& sep = detail::need_separable(c);
  require(c.j1_at_one.finite, ErrorKind::inapplicable, "needs j1(1) < infinity");
  const double k = gb.ratio();
  auto j1p = [&](double r) { return sep.D1(r) / sep.h1(r); };
  auto j2p = [&](double s) { return sep.h2(s) / sep.D2(s); };
  auto dpsi = [&](double r) { return k * j2p(k * r) - j1p(r); };

  LambdaInterval out;
  // D1/h1 is 0/0 at r = 1; extrapolate linearly from two interior points.
  const double e1 = 1e-6, e2 = 2e-6;
  out.slope_j1_at_one = 2.0 * j1p(1.0 - e1) - j1p(1.0 - e2);
  out.slope_rhs = k * j2p(k);
  if (!(out.slope_j1_at_one < out.slope_rhs))
    fail(ErrorKind::inapplicable, "slope condition lim j1'(1) < (gamma/beta) j2'(gamma/beta) fails");

  constexpr int scan = 4096;
  std::optional<double> r0;
  double prev_r = 1.0 - e1;
  double prev_val = dpsi(prev_r);
  for (int i = scan - 1; i >= 1; --i) {
    const double r = double(i) / scan;
    const double val = dpsi(r);
    if ((val <= 0.0) != (prev_val <= 0.0)) {
      r0 = roots::bisect(dpsi, r, prev_r);
      break;
    }
    prev_r = r;
    prev_val = val;
  }
  if (!r0) fail(ErrorKind::inapplicable, "no root of j1'(r) = (gamma/beta) j2'((gamma/beta) r) in (0,1)");
  out.r0 = *r0;
  out.lambda_lo = c.j1_at_one.value - eval_j2(c, k);
  out.lambda_hi = eval_j1(c, out.r0) - eval_j2(c, k * out.r0);
  if (!(out.lambda_lo < out.lambda_hi)) fail(ErrorKind::inapplicable, "empty lambda interval");
  for (int i = 0; i < samples; ++i) {
    const double lam = out.lambda_lo + (out.lambda_hi - out.lambda_lo) * (i + 0.5) / samples;
    out.sampled.push_back(lam);
    out.passed.push_back(analyze_crossings(c, gb, lam).ok());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Cross-check against the time-dependent solver

struct StationarityDrift {
  double drift_u = 0.0;
  double drift_v = 0.0;
  double drift = 0.0;  // max of the two sup-norms
  double mass_drift = 0.0;
  bool completed = true;
};

inline StationarityDrift verify_stationary_against_pde(const StationaryProfile& prof, const CoefficientSet& c,
                                                       SolverConfig cfg, double t_check) {
  require(std::isfinite(prof.residual_flux) && std::isfinite(prof.residual_v), ErrorKind::input,
          "profile residuals are not finite");
  require(t_check > 0.0, ErrorKind::input, "t_check must be positive");
  cfg.t_end = t_check;
  const RunResult res = run(prof.u, prof.v, prof.grid, c, cfg, {t_check});
  StationarityDrift d;
  d.completed = res.report.completed;
  const State& s = res.final_state;
  d.drift_u = lp_norm(s.u, prof.u, prof.grid.dx(), Norm::Linf);
  d.drift_v = lp_norm(s.v, prof.v, prof.grid.dx(), Norm::Linf);
  d.drift = std::max(d.drift_u, d.drift_v);
  d.mass_drift = res.report.max_relative_mass_drift();
  return d;
}

}  // namespace vfc
