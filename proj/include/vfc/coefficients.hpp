#pragma once

// Model functions D (diffusion), h (chemotactic sensitivity) and g (reaction),
// their Kirchhoff antiderivative, the separable-case potentials j1, j2 and
// sampled checkers for the structural hypotheses of the volume-filling model.

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "vfc/error.hpp"
#include "vfc/expression.hpp"
#include "vfc/quadrature.hpp"
#include "vfc/roots.hpp"

namespace vfc {

using Field1 = std::function<double(double)>;

/// Linear reaction g(r, s) = gamma*r - beta*s.
struct GammaBeta {
  double gamma = 1.0;
  double beta = 1.0;

  GammaBeta() = default;
  GammaBeta(double gamma_, double beta_) : gamma(gamma_), beta(beta_) {
    require(gamma > 0.0 && beta > 0.0, ErrorKind::input, "gamma and beta must be positive");
  }
  double ratio() const { return gamma / beta; }  // gamma/beta
};

/// Factorization D = D1(r) D2(s), h = h1(r) h2(s).
struct Separable {
  Field1 D1, D2, h1, h2;
};

/// Integrability of an integrand at r -> 1, detected from dyadic increments.
struct EndpointIntegral {
  bool finite = false;
  double value = std::numeric_limits<double>::infinity();
};

struct CoefficientSet {
  std::string name;
  Field2 D, h, g;
  double kappa = 0.0;  // bound on g_s
  std::optional<Separable> separable;
  std::optional<GammaBeta> gamma_beta;  // present when g = gamma r - beta s

  // Optional closed forms; empty std::function means "use quadrature".
  Field2 hanaD_closed;
  Field2 hanaD_s_closed;
  Field1 j1_closed;
  Field1 j2_closed;
  Field1 j1_inverse_closed;
  Field1 j2_inverse_closed;

  double eps = 0.0;                 // regularization already applied to D
  std::optional<double> h_argmax;   // argmax_r h(r, s) when independent of s
  EndpointIntegral j1_at_one;       // j1(1), separable sets only
  bool j1inv_prime_in_L2 = false;   // (j1^{-1})' square integrable near j1(1)
};

namespace detail {

inline void check_domain(double r, double s) {
  if (!(r >= 0.0 && r <= 1.0)) fail(ErrorKind::input, "r = " + std::to_string(r) + " outside [0,1]");
  if (!(s >= 0.0)) fail(ErrorKind::input, "s = " + std::to_string(s) + " is negative");
}

inline double hanaD_unchecked(const CoefficientSet& c, double r, double s) {
  if (c.hanaD_closed) return c.hanaD_closed(r, s);
  if (r == 0.0) return 0.0;
  auto integrand = [&](double x) { return c.D(x, s); };
  return quad::integrate(integrand, 0.0, r, 1e-12).value;
}

/// Dyadic-increment test for integrability of q on (1/2, 1). Increments over
/// [1-2^-k, 1-2^-(k+1)] decay geometrically for an integrable endpoint
/// singularity and stall (or grow) for a divergent one.
inline EndpointIntegral integrate_to_one(const Field1& q) {
  constexpr int levels = 44;
  double sum = 0.0;
  std::vector<double> inc;
  inc.reserve(levels);
  for (int k = 1; k <= levels; ++k) {
    const double a = 1.0 - std::ldexp(1.0, -k);
    const double b = 1.0 - std::ldexp(1.0, -(k + 1));
    const double d = quad::integrate(q, a, b, 1e-15, 1e-13).value;
    inc.push_back(d);
    sum += d;
  }
  bool decaying = true;
  for (int k = levels - 10; k < levels; ++k) {
    const double prev = std::abs(inc[k - 1]);
    const double cur = std::abs(inc[k]);
    if (cur <= 1e-16 * std::max(1.0, std::abs(sum))) continue;
    if (cur > 0.9 * prev) decaying = false;
  }
  if (!decaying || !std::isfinite(sum)) return {false, std::numeric_limits<double>::infinity()};
  const double ratio = inc[levels - 2] != 0.0 ? inc[levels - 1] / inc[levels - 2] : 0.0;
  const double tail = (ratio > 0.0 && ratio < 1.0) ? inc[levels - 1] * ratio / (1.0 - ratio) : 0.0;
  return {true, sum + tail};
}

/// argmax over (0,1) of a unimodal function by golden-section search.
inline double golden_argmax(const Field1& f) {
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  // coarse scan first so that a skewed peak is bracketed
  int best = 1;
  double fbest = -std::numeric_limits<double>::infinity();
  constexpr int n = 256;
  for (int i = 1; i < n; ++i) {
    const double v = f(double(i) / n);
    if (v > fbest) {
      fbest = v;
      best = i;
    }
  }
  double a = double(best - 1) / n, b = double(best + 1) / n;
  double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int it = 0; it < 200 && b - a > 1e-14; ++it) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + phi * (b - a);
      f2 = f(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - phi * (b - a);
      f1 = f(x1);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace detail

/// Derives the separable-case metadata (j1 endpoint behaviour, argmax of h1).
/// Call once after populating D, h, g and the factorization.
inline CoefficientSet finalize(CoefficientSet c) {
  if (c.separable) {
    const Separable sep = *c.separable;
    auto ratio = [sep](double x) { return sep.D1(x) / sep.h1(x); };
    c.j1_at_one = detail::integrate_to_one(ratio);
    if (c.j1_at_one.finite && c.j1_closed) c.j1_at_one.value = c.j1_closed(1.0);
    auto inverse_ratio = [sep](double x) { return sep.h1(x) / sep.D1(x); };
    c.j1inv_prime_in_L2 = detail::integrate_to_one(inverse_ratio).finite;
    c.h_argmax = detail::golden_argmax(sep.h1);
  }
  return c;
}

inline Field2 linear_reaction(GammaBeta gb) {
  return [gb](double r, double s) { return gb.gamma * r - gb.beta * s; };
}

/// Preset coefficient sets.
///   example-A: D = (1-r)^2 (s+1),  h = r(1-r)^2 (s+1)
///   example-B: D = (1-r)^2,        h = r(1-r)^2 (s+1)
///   example-C: D1 = 1-r, D2 = 1,   h1 = r(1-r), h2 = e^s  (j1 = log 2r, j2 = e^s - 1)
///   example-D: D1 = 1-r, D2 = 1,   h1 = r(1-r)^2, h2 = 1  (j1(1) = +inf)
/// All use g = gamma r - beta s.
inline CoefficientSet preset(const std::string& name, GammaBeta gb = {}) {
  CoefficientSet c;
  c.name = name;
  c.gamma_beta = gb;
  c.g = linear_reaction(gb);
  c.kappa = 0.0;
  if (name == "example-A") {
    c.D = [](double r, double s) { return (1 - r) * (1 - r) * (s + 1); };
    c.h = [](double r, double s) { return r * (1 - r) * (1 - r) * (s + 1); };
    c.separable = Separable{[](double r) { return (1 - r) * (1 - r); }, [](double s) { return s + 1; },
                            [](double r) { return r * (1 - r) * (1 - r); }, [](double s) { return s + 1; }};
    c.hanaD_closed = [](double r, double s) {
      const double q = 1 - r;
      return -(s + 1) * (q * q * q - 1) / 3;
    };
    c.hanaD_s_closed = [](double r, double) {
      const double q = 1 - r;
      return -(q * q * q - 1) / 3;
    };
  } else if (name == "example-B") {
    c.D = [](double r, double) { return (1 - r) * (1 - r); };
    c.h = [](double r, double s) { return r * (1 - r) * (1 - r) * (s + 1); };
    c.separable = Separable{[](double r) { return (1 - r) * (1 - r); }, [](double) { return 1.0; },
                            [](double r) { return r * (1 - r) * (1 - r); }, [](double s) { return s + 1; }};
    c.hanaD_closed = [](double r, double) {
      const double q = 1 - r;
      return -(q * q * q - 1) / 3;
    };
    c.hanaD_s_closed = [](double, double) { return 0.0; };
  } else if (name == "example-C") {
    c.D = [](double r, double) { return 1 - r; };
    c.h = [](double r, double s) { return r * (1 - r) * std::exp(s); };
    c.separable = Separable{[](double r) { return 1 - r; }, [](double) { return 1.0; },
                            [](double r) { return r * (1 - r); }, [](double s) { return std::exp(s); }};
    c.hanaD_closed = [](double r, double) { return r - 0.5 * r * r; };
    c.hanaD_s_closed = [](double, double) { return 0.0; };
    c.j1_closed = [](double r) { return std::log(2 * r); };
    c.j2_closed = [](double s) { return std::expm1(s); };
    c.j1_inverse_closed = [](double y) { return 0.5 * std::exp(y); };
    c.j2_inverse_closed = [](double y) { return std::log1p(y); };
  } else if (name == "example-D") {
    c.D = [](double r, double) { return 1 - r; };
    c.h = [](double r, double) { return r * (1 - r) * (1 - r); };
    c.separable = Separable{[](double r) { return 1 - r; }, [](double) { return 1.0; },
                            [](double r) { return r * (1 - r) * (1 - r); }, [](double) { return 1.0; }};
    c.hanaD_closed = [](double r, double) { return r - 0.5 * r * r; };
    c.hanaD_s_closed = [](double, double) { return 0.0; };
    c.j1_closed = [](double r) { return std::log(r / (1 - r)); };
    c.j2_closed = [](double s) { return s; };
    c.j1_inverse_closed = [](double y) { return 1.0 / (1.0 + std::exp(-y)); };
    c.j2_inverse_closed = [](double y) { return y; };
  } else {
    fail(ErrorKind::config, "unknown preset '" + name + "' (expected example-A, example-B, example-C, example-D)");
  }
  return finalize(std::move(c));
}

/// Custom set from expressions in r and s. Separable factors are optional;
/// D1/h1 are expressions in r, D2/h2 expressions in s.
struct CustomSpec {
  std::string D, h, g;
  std::string D1, D2, h1, h2;
  double kappa = 0.0;
};

inline CoefficientSet custom(const CustomSpec& spec) {
  require(!spec.D.empty() && !spec.h.empty() && !spec.g.empty(), ErrorKind::config,
          "custom coefficients need D, h and g expressions");
  CoefficientSet c;
  c.name = "custom";
  c.D = parse_expression(spec.D);
  c.h = parse_expression(spec.h);
  c.g = parse_expression(spec.g);
  c.kappa = spec.kappa;
  const bool any = !spec.D1.empty() || !spec.D2.empty() || !spec.h1.empty() || !spec.h2.empty();
  if (any) {
    require(!spec.D1.empty() && !spec.D2.empty() && !spec.h1.empty() && !spec.h2.empty(), ErrorKind::config,
            "separable factorization needs all of D1, D2, h1, h2");
    Field2 d1 = parse_expression(spec.D1), d2 = parse_expression(spec.D2);
    Field2 e1 = parse_expression(spec.h1), e2 = parse_expression(spec.h2);
    c.separable = Separable{[d1](double r) { return d1(r, 0.0); }, [d2](double s) { return d2(0.0, s); },
                            [e1](double r) { return e1(r, 0.0); }, [e2](double s) { return e2(0.0, s); }};
  }
  return finalize(std::move(c));
}

// ---------------------------------------------------------------------------
// Kirchhoff antiderivative

inline double eval_hanaD(const CoefficientSet& c, double r, double s) {
  detail::check_domain(r, s);
  return detail::hanaD_unchecked(c, r, s);
}

inline double eval_hanaD_s(const CoefficientSet& c, double r, double s) {
  detail::check_domain(r, s);
  if (c.hanaD_s_closed) return c.hanaD_s_closed(r, s);
  const double step = 1e-6 * std::max(1.0, s);
  if (s >= step) {
    return (detail::hanaD_unchecked(c, r, s + step) - detail::hanaD_unchecked(c, r, s - step)) / (2 * step);
  }
  // one-sided second-order stencil at the s = 0 boundary
  const double f0 = detail::hanaD_unchecked(c, r, s);
  const double f1 = detail::hanaD_unchecked(c, r, s + step);
  const double f2 = detail::hanaD_unchecked(c, r, s + 2 * step);
  return (-3 * f0 + 4 * f1 - f2) / (2 * step);
}

/// D -> D + eps. The factorization no longer holds for D and is dropped.
inline CoefficientSet regularize(const CoefficientSet& c, double eps) {
  require(eps > 0.0, ErrorKind::input, "regularization eps must be positive");
  CoefficientSet out = c;
  out.D = [D = c.D, eps](double r, double s) { return D(r, s) + eps; };
  if (c.hanaD_closed) {
    out.hanaD_closed = [H = c.hanaD_closed, eps](double r, double s) { return H(r, s) + eps * r; };
  }
  out.separable.reset();
  out.eps = c.eps + eps;
  return out;
}

// ---------------------------------------------------------------------------
// Structural-condition checkers (sampled; a pass is evidence, not a proof)

struct SamplePoint {
  double r = 0.0;
  double s = 0.0;
};

struct ConditionResult {
  std::string name;
  bool passed = true;
  std::string detail;
  std::optional<SamplePoint> first_violation;
};

struct ConditionReport {
  std::vector<ConditionResult> conditions;
  double empirical_M = 0.0;      // max |D_s-antiderivative| on the grid
  double empirical_kappa = 0.0;  // sup of the g_s difference quotient
  std::string note = "sampled check: a pass is evidence on the sampled grid, not a proof";

  bool all_passed() const {
    for (const auto& c : conditions)
      if (!c.passed) return false;
    return true;
  }
  const ConditionResult* find(const std::string& name) const {
    for (const auto& c : conditions)
      if (c.name == name) return &c;
    return nullptr;
  }
};

struct ConditionOptions {
  double positivity_margin = 1e-3;  // D > 0 is checked on [0, 1 - margin]
  double zero_tol = 1e-12;
  double kappa_tol = 1e-8;
  double separable_tol = 1e-12;
};

inline ConditionReport check_conditions(const CoefficientSet& c, double k_bound, int grid_n,
                                        const ConditionOptions& opt = {}) {
  require(k_bound > 0.0, ErrorKind::input, "k_bound must be positive");
  require(grid_n >= 16, ErrorKind::input, "grid_n must be at least 16");
  ConditionReport rep;
  auto r_at = [&](int i) { return double(i) / (grid_n - 1); };
  auto s_at = [&](int j) { return k_bound * double(j) / (grid_n - 1); };

  ConditionResult condD{"Con:D", true, "D(1,s) = 0 and D > 0 on [0, 1-margin] x [0,K]", {}};
  ConditionResult condH{"Con:h", true, "h(0,s) = h(1,s) = 0 and h > 0 on (0,1) x [0,K]", {}};
  ConditionResult condG{"Con:g", true, "g(r,0) >= 0 and g_s <= kappa", {}};
  ConditionResult condM{"Con:hanaDpas", true, "|D_s antiderivative| bounded on [0,1] x [0,K]", {}};
  auto flag = [](ConditionResult& res, double r, double s) {
    if (res.passed) res.first_violation = SamplePoint{r, s};
    res.passed = false;
  };

  for (int j = 0; j < grid_n; ++j) {
    const double s = s_at(j);
    if (std::abs(c.D(1.0, s)) > opt.zero_tol) flag(condD, 1.0, s);
    if (std::abs(c.h(0.0, s)) > opt.zero_tol) flag(condH, 0.0, s);
    if (std::abs(c.h(1.0, s)) > opt.zero_tol) flag(condH, 1.0, s);
    for (int i = 0; i < grid_n; ++i) {
      const double r = r_at(i);
      if (r <= 1.0 - opt.positivity_margin && !(c.D(r, s) > 0.0)) flag(condD, r, s);
      if (r > 0.0 && r < 1.0 && !(c.h(r, s) > 0.0)) flag(condH, r, s);
      const double ds = eval_hanaD_s(c, r, s);
      if (!std::isfinite(ds)) flag(condM, r, s);
      rep.empirical_M = std::max(rep.empirical_M, std::abs(ds));
    }
  }
  const double delta = k_bound / (grid_n - 1);
  double sup_gs = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < grid_n; ++i) {
    const double r = r_at(i);
    if (c.g(r, 0.0) < -opt.zero_tol) flag(condG, r, 0.0);
    for (int j = 0; j + 1 < grid_n; ++j) {
      const double s = s_at(j);
      const double q = (c.g(r, s + delta) - c.g(r, s)) / delta;
      sup_gs = std::max(sup_gs, q);
      if (q > c.kappa + opt.kappa_tol) flag(condG, r, s);
    }
  }
  rep.empirical_kappa = sup_gs;
  condM.detail += "; empirical M = " + std::to_string(rep.empirical_M);
  rep.conditions = {condD, condH, condG, condM};

  if (c.separable) {
    ConditionResult condS{"separable", true, "D = D1 D2 and h = h1 h2 on the grid", {}};
    for (int i = 0; i < grid_n; ++i)
      for (int j = 0; j < grid_n; ++j) {
        const double r = r_at(i), s = s_at(j);
        const double eD = std::abs(c.D(r, s) - c.separable->D1(r) * c.separable->D2(s));
        const double eh = std::abs(c.h(r, s) - c.separable->h1(r) * c.separable->h2(s));
        if (eD > opt.separable_tol || eh > opt.separable_tol) flag(condS, r, s);
      }
    rep.conditions.push_back(condS);
  }
  return rep;
}

/// Sampled check of the factor conditions used by the stationary theory:
///   Con:Dh1  D1(1) = 0, D1 > 0 on [0,1); h1(0) = h1(1) = 0, h1 > 0 on (0,1)
///   Con:Dh2  D2 > 0 and h2 > 0 on [0, K]
inline ConditionReport check_separable_factors(const CoefficientSet& c, double k_bound, int grid_n,
                                               const ConditionOptions& opt = {}) {
  require(k_bound > 0.0, ErrorKind::input, "k_bound must be positive");
  require(grid_n >= 16, ErrorKind::input, "grid_n must be at least 16");
  ConditionReport rep;
  if (!c.separable) {
    rep.conditions.push_back({"Con:Dh1", false, "no separable factorization", {}});
    rep.conditions.push_back({"Con:Dh2", false, "no separable factorization", {}});
    return rep;
  }
  const Separable& sep = *c.separable;
  ConditionResult c1{"Con:Dh1", true, "D1(1) = 0, D1 > 0 on [0,1); h1(0) = h1(1) = 0, h1 > 0 on (0,1)", {}};
  ConditionResult c2{"Con:Dh2", true, "D2 > 0 and h2 > 0 on [0,K]", {}};
  auto flag = [](ConditionResult& res, double r, double s) {
    if (res.passed) res.first_violation = SamplePoint{r, s};
    res.passed = false;
  };
  if (std::abs(sep.D1(1.0)) > opt.zero_tol) flag(c1, 1.0, 0.0);
  if (std::abs(sep.h1(0.0)) > opt.zero_tol) flag(c1, 0.0, 0.0);
  if (std::abs(sep.h1(1.0)) > opt.zero_tol) flag(c1, 1.0, 0.0);
  for (int i = 0; i < grid_n; ++i) {
    const double r = double(i) / (grid_n - 1);
    if (r < 1.0 && !(sep.D1(r) > 0.0)) flag(c1, r, 0.0);
    if (r > 0.0 && r < 1.0 && !(sep.h1(r) > 0.0)) flag(c1, r, 0.0);
    const double s = k_bound * r;
    if (!(sep.D2(s) > 0.0) || !(sep.h2(s) > 0.0)) flag(c2, 0.0, s);
  }
  rep.conditions = {c1, c2};
  return rep;
}

/// Outcome of the sampled search for constants in the uniqueness hypothesis
///   (h(r1,s1) - h(r2,s2))^2 <= C0 (r1-r2)(D(r1) - D(r2)) + C1 (s1-s2)^2.
struct UniquenessReport {
  double C1 = 2.0;
  double C0 = 0.0;  // smallest C0 valid on every sampled pair for this C1
  bool satisfiable = true;
  SamplePoint worst_a, worst_b;  // pair that forces C0
  std::vector<std::pair<double, double>> frontier;  // (C1, C0_min(C1))
  bool g_affine_in_r = false;
  bool g_decomposition_ok = false;
  double C2 = 0.0;
  std::size_t pairs = 0;
  std::string note = "sampled check: a pass is evidence on the sampled pairs, not a proof";
};

struct UniquenessOptions {
  double C1 = 2.0;
  std::vector<double> C1_candidates = {0.5, 1.0, 2.0, 4.0, 8.0};
  std::size_t random_pairs = 10000;
  std::uint64_t seed = 0x5eed;
};

inline UniquenessReport check_uniqueness_conditions(const CoefficientSet& c, double k_bound, int grid_n,
                                                    const UniquenessOptions& opt = {}) {
  require(k_bound > 0.0, ErrorKind::input, "k_bound must be positive");
  require(grid_n >= 2, ErrorKind::input, "grid_n must be at least 2");
  for (int i = 0; i < grid_n; ++i) {
    const double r = double(i) / (grid_n - 1);
    const double d0 = c.D(r, 0.0);
    for (int j = 1; j < grid_n; ++j) {
      const double s = k_bound * double(j) / (grid_n - 1);
      if (!(std::abs(c.D(r, s) - d0) <= 1e-12 * std::max(1.0, std::abs(d0))))
        fail(ErrorKind::precondition, "D depends on s (at r = " + std::to_string(r) + ", s = " + std::to_string(s) + ")");
    }
  }
  struct Pair {
    SamplePoint a, b;
  };
  std::vector<Pair> pairs;
  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> ur(0.0, 1.0), us(0.0, k_bound);
  pairs.reserve(opt.random_pairs + std::size_t(grid_n) * grid_n);
  for (std::size_t k = 0; k < opt.random_pairs; ++k) {
    const double r1 = ur(rng), s1 = us(rng), r2 = ur(rng), s2 = us(rng);
    pairs.push_back({{r1, s1}, {r2, s2}});
  }
  // neighbouring grid pairs probe the small-separation limit
  for (int i = 0; i + 1 < grid_n; ++i)
    for (int j = 0; j < grid_n; ++j) {
      const double r = double(i) / (grid_n - 1), rn = double(i + 1) / (grid_n - 1);
      const double s = k_bound * double(j) / (grid_n - 1);
      pairs.push_back({{r, s}, {rn, s}});
      if (j + 1 < grid_n) pairs.push_back({{r, s}, {rn, k_bound * double(j + 1) / (grid_n - 1)}});
    }

  auto required_C0 = [&](double C1, const Pair& p, bool& ok) {
    const double dh = c.h(p.a.r, p.a.s) - c.h(p.b.r, p.b.s);
    const double ds = p.a.s - p.b.s;
    const double lhs = dh * dh - C1 * ds * ds;
    const double w = (p.a.r - p.b.r) *
                     (detail::hanaD_unchecked(c, p.a.r, 0.0) - detail::hanaD_unchecked(c, p.b.r, 0.0));
    if (lhs <= 0.0) return 0.0;
    if (w <= 0.0) {
      ok = false;
      return std::numeric_limits<double>::infinity();
    }
    return lhs / w;
  };

  UniquenessReport rep;
  rep.C1 = opt.C1;
  rep.pairs = pairs.size();
  for (const auto& p : pairs) {
    bool ok = true;
    const double need = required_C0(opt.C1, p, ok);
    if (!ok) rep.satisfiable = false;
    if (need > rep.C0) {
      rep.C0 = need;
      rep.worst_a = p.a;
      rep.worst_b = p.b;
    }
  }
  for (double C1 : opt.C1_candidates) {
    double worst = 0.0;
    for (const auto& p : pairs) {
      bool ok = true;
      worst = std::max(worst, required_C0(C1, p, ok));
    }
    rep.frontier.emplace_back(C1, worst);
  }

  // g(r,s) = g1(s) + r g2(s) with g1 = g(0,.), g2 = g(1,.) - g(0,.)
  rep.g_affine_in_r = true;
  for (int i = 0; i < grid_n && rep.g_affine_in_r; ++i)
    for (int j = 0; j < grid_n; ++j) {
      const double r = double(i) / (grid_n - 1), s = k_bound * double(j) / (grid_n - 1);
      const double g0 = c.g(0.0, s), g1 = c.g(1.0, s);
      if (std::abs(c.g(r, s) - (g0 + r * (g1 - g0))) > 1e-10 * std::max(1.0, std::abs(c.g(r, s)))) {
        rep.g_affine_in_r = false;
        break;
      }
    }
  if (rep.g_affine_in_r) {
    auto g1 = [&](double s) { return c.g(0.0, s); };
    auto g2 = [&](double s) { return c.g(1.0, s) - c.g(0.0, s); };
    const double delta = k_bound / (grid_n - 1);
    double c2 = -std::numeric_limits<double>::infinity();
    for (int j = 0; j + 1 < grid_n; ++j) {
      const double s = k_bound * double(j) / (grid_n - 1);
      c2 = std::max({c2, (g1(s + delta) - g1(s)) / delta, (g2(s + delta) - g2(s)) / delta});
    }
    rep.C2 = c2;
    rep.g_decomposition_ok = g1(0.0) >= 0.0 && g2(0.0) >= 0.0;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Separable-case potentials j1(r) = int_{1/2}^r D1/h1, j2(s) = int_0^s h2/D2

namespace detail {
inline const Separable& need_separable(const CoefficientSet& c) {
  if (!c.separable) fail(ErrorKind::structural, "coefficient set '" + c.name + "' has no separable factorization");
  return *c.separable;
}
}  // namespace detail

inline double eval_j1(const CoefficientSet& c, double r) {
  const Separable& sep = detail::need_separable(c);
  if (!(r <= 1.0 && r >= 0.0)) fail(ErrorKind::input, "j1 needs r in (0,1], got " + std::to_string(r));
  if (r == 0.0) fail(ErrorKind::divergence, "j1 diverges at r = 0 (D1/h1 is not integrable near 0)");
  if (r == 1.0) return c.j1_at_one.value;
  if (c.j1_closed) return c.j1_closed(r);
  auto q = [&sep](double x) { return sep.D1(x) / sep.h1(x); };
  // split near the 1/sigma singularity at the origin
  return quad::integrate_split(q, 0.5, r, {1e-3}, 1e-12).value;
}

inline double eval_j2(const CoefficientSet& c, double s) {
  const Separable& sep = detail::need_separable(c);
  if (!(s >= 0.0)) fail(ErrorKind::input, "j2 needs s >= 0, got " + std::to_string(s));
  if (c.j2_closed) return c.j2_closed(s);
  if (s == 0.0) return 0.0;
  auto q = [&sep](double x) { return sep.h2(x) / sep.D2(x); };
  return quad::integrate(q, 0.0, s, 1e-12).value;
}

/// Inverse of j1 on (0,1) by bracketing bisection (run to the last bit).
inline double invert_j1(const CoefficientSet& c, double y) {
  detail::need_separable(c);
  require(std::isfinite(y), ErrorKind::input, "invert_j1 needs a finite argument");
  if (c.j1_at_one.finite && y >= c.j1_at_one.value)
    fail(ErrorKind::range, "y = " + std::to_string(y) + " is not below j1(1) = " + std::to_string(c.j1_at_one.value));
  if (c.j1_inverse_closed) return c.j1_inverse_closed(y);
  auto j1 = [&c](double r) { return eval_j1(c, r); };
  double lo = 0.5, hi = 0.5;
  if (y < 0.0) {
    while (j1(lo) > y) {
      hi = lo;
      lo *= 0.5;
      if (lo < 1e-300) fail(ErrorKind::overflow, "invert_j1: bracket underflow for y = " + std::to_string(y));
    }
  } else {
    double gap = 0.5;
    while (j1(hi) < y) {
      lo = hi;
      if (c.j1_at_one.finite) {
        hi = 1.0;
        break;
      }
      gap *= 0.5;
      hi = 1.0 - gap;
      if (gap < 1e-16) fail(ErrorKind::overflow, "invert_j1: cannot bracket y = " + std::to_string(y));
    }
  }
  if (lo == hi) return lo;
  auto f = [&](double r) { return (r == 1.0 ? c.j1_at_one.value : j1(r)) - y; };
  return roots::bisect(f, lo, hi);
}

inline double invert_j2(const CoefficientSet& c, double y) {
  detail::need_separable(c);
  if (!(y >= 0.0)) fail(ErrorKind::range, "invert_j2 needs y >= 0, got " + std::to_string(y));
  if (y == 0.0) return 0.0;
  if (c.j2_inverse_closed) return c.j2_inverse_closed(y);
  auto j2 = [&c](double s) { return eval_j2(c, s); };
  double lo = 0.0, hi = 1.0;
  while (j2(hi) < y) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e6 || !std::isfinite(j2(hi)))
      fail(ErrorKind::overflow, "invert_j2: no bracket for y = " + std::to_string(y));
  }
  return roots::bisect([&](double s) { return j2(s) - y; }, lo, hi);
}

/// Lipschitz bound of r -> h(r, s) over s in [s_lo, s_hi], sampled.
inline double h_lipschitz(const CoefficientSet& c, double s_lo, double s_hi) {
  constexpr int nr = 128;
  double best = 0.0;
  auto one = [&](double s) {
    double prev = c.h(0.0, s);
    for (int i = 1; i <= nr; ++i) {
      const double cur = c.h(double(i) / nr, s);
      best = std::max(best, std::abs(cur - prev) * nr);
      prev = cur;
    }
  };
  if (c.separable) {
    // |h_r| = |h1'| h2(s)
    double l1 = 0.0, prev = c.separable->h1(0.0);
    for (int i = 1; i <= nr; ++i) {
      const double cur = c.separable->h1(double(i) / nr);
      l1 = std::max(l1, std::abs(cur - prev) * nr);
      prev = cur;
    }
    const double h2max = std::max({std::abs(c.separable->h2(s_lo)), std::abs(c.separable->h2(s_hi)),
                                   std::abs(c.separable->h2(0.5 * (s_lo + s_hi)))});
    return 1.25 * l1 * h2max;  // chord slopes underestimate the peak slope
  }
  one(s_lo);
  one(s_hi);
  one(0.5 * (s_lo + s_hi));
  return 1.25 * best;
}

}  // namespace vfc
