// Phase-plane construction of flat-hump stationary profiles for the
// closed-form preset (j1 = log 2r, j2 = e^s - 1) with gamma = 3, beta = 1.

#include <gtest/gtest.h>

#include <cmath>

#include "vfc/stationary.hpp"

using namespace vfc;

namespace {

const GammaBeta kGB(3.0, 1.0);

const CoefficientSet& preset_c() {
  static const CoefficientSet c = preset("example-C", kGB);
  return c;
}

double midpoint_lambda() { return prop_tekiyou_lambda(preset_c(), kGB).midpoint(); }

const PhaseParams& params() {
  static const PhaseParams p = find_crossings(preset_c(), kGB, midpoint_lambda());
  return p;
}

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected an error";
  return ErrorKind::numerical;
}

}  // namespace

TEST(LambdaInterval, OmegaConstantFixesR0) {
  // r0 solves 1/r = 3 e^{3r}, i.e. 3r = W(1)
  const LambdaInterval iv = prop_tekiyou_lambda(preset_c(), kGB);
  const double omega = 0.56714329040978387;
  EXPECT_NEAR(omega * std::exp(omega), 1.0, 1e-15);
  EXPECT_NEAR(iv.r0, omega / 3.0, 1e-10);
  EXPECT_NEAR(iv.lambda_lo, std::log(2.0) - std::expm1(3.0), 1e-9);
  EXPECT_NEAR(iv.lambda_hi, std::log(2.0 * iv.r0) - std::expm1(omega), 1e-9);
  EXPECT_TRUE(iv.all_passed());
}

TEST(LambdaInterval, WindowAboveThreshold) {
  const LambdaWindow w = prop_lambda_window(preset_c(), kGB);
  EXPECT_NEAR(w.lambda_tilde, std::log(2.0) - std::expm1(3.0), 1e-9);
  EXPECT_GT(w.eps0, 0.0);
  EXPECT_TRUE(w.all_passed());
}

TEST(LambdaInterval, InapplicableWhenPotentialUnbounded) {
  EXPECT_EQ(kind_of([] { prop_tekiyou_lambda(preset("example-D", kGB), kGB); }), ErrorKind::inapplicable);
}

TEST(Crossings, ReferenceValuesAtMidpoint) {
  const PhaseParams& p = params();
  EXPECT_NEAR(p.lambda, -10.06411048774878, 1e-9);
  EXPECT_NEAR(p.rho_0, 2.446988729, 1e-8);
  EXPECT_NEAR(p.v_lambda, 2.464470724, 1e-8);
  EXPECT_NEAR(p.rho_m1, 6.3875e-5, 1e-8);
  EXPECT_LT(p.rho_m1, p.rho_0);
  EXPECT_LT(p.rho_0, p.v_lambda);
  EXPECT_LT(p.v_lambda, kGB.ratio());
}

TEST(Crossings, FixedPointsSolveTheCrossingEquation) {
  const PhaseParams& p = params();
  for (double rho : {p.rho_m1, p.rho_0}) EXPECT_NEAR(f_lambda_bar(p, rho), rho / kGB.ratio(), 1e-10);
  EXPECT_NEAR(g_tilde(p, p.rho_0), 0.0, 1e-10);
  const CrossingAnalysis a = analyze_crossings(preset_c(), kGB, p.lambda);
  EXPECT_TRUE(a.ok());
  EXPECT_LE(a.max_root_residual, 1e-10);
}

TEST(Crossings, SaturationLevelIsClosedForm) {
  // f_lambda(v_lambda) = 1: log 2 - (e^v - 1) = lambda
  const PhaseParams& p = params();
  EXPECT_NEAR(std::log1p(std::log(2.0) - p.lambda), p.v_lambda, 1e-12);
  EXPECT_EQ(f_lambda_bar(p, p.v_lambda + 0.1), 1.0);
}

TEST(Crossings, LambdaTooLargeFailsNamedClause) {
  const CrossingAnalysis a = analyze_crossings(preset_c(), kGB, 5.0);
  EXPECT_FALSE(a.ok());
  EXPECT_EQ(a.failed_clause, "v_lambda");
  EXPECT_EQ(kind_of([] { find_crossings(preset_c(), kGB, 5.0); }), ErrorKind::condition_c);
}

TEST(Energy, MarginIsPotentialGap) {
  const PhaseParams& p = params();
  const JyoukennResult j = check_jyoukenn(p);
  EXPECT_TRUE(j.holds);
  EXPECT_TRUE(j.energy_gap_positive);
  EXPECT_NEAR(j.margin, potential_G(p, p.rho_m1) - potential_G(p, p.v_lambda), 1e-9);
  EXPECT_NEAR(j.margin, 2.7547116, 1e-6);
  EXPECT_NEAR(potential_G(p, p.rho_0), 0.0, 1e-12);
}

TEST(Orbits, PeriodOracleAgreesWithIntegration) {
  const PhaseParams& p = params();
  const double v0 = default_v0(p);
  EXPECT_NEAR(v0, 2.3579981, 1e-6);
  const double T = period_quadrature(p, v0);
  EXPECT_NEAR(T, 2.6049292644, 1e-8);
  const PhaseOrbit orbit = integrate_orbit(p, v0, default_orbit_step(p, v0));
  EXPECT_NEAR(orbit.period / T - 1.0, 0.0, 1e-6);
  EXPECT_NEAR(orbit.v_max, turning_point(p, v0), 1e-8);
  EXPECT_LE(orbit_energy_deviation(p, orbit) / orbit.period, 1e-8);
}

TEST(Orbits, PeriodRisesWithEnergy) {
  const PhaseParams& p = params();
  double prev = 0.0;
  for (double frac : {0.1, 0.3, 0.5, 0.7, 0.9}) {
    const double T = period_quadrature(p, default_v0(p, frac));
    EXPECT_GT(T, prev);
    prev = T;
  }
}

TEST(Orbits, LengthTargetIsHit) {
  const PhaseParams& p = params();
  const double v0 = v0_for_length(p, 2.7);
  EXPECT_NEAR(period_quadrature(p, v0), 2.7, 1e-8);
  EXPECT_EQ(kind_of([&] { v0_for_length(p, 100.0); }), ErrorKind::construction);
}

TEST(Profile, ResidualsConvergeAndProfileIsSymmetric) {
  const PhaseParams& p = params();
  const double v0 = default_v0(p);
  const StationaryProfile coarse = construct_flat_hump(p, v0, 1024);
  const StationaryProfile fine = construct_flat_hump(p, v0, 2048);
  EXPECT_LE(fine.residual_flux, 1e-6);
  EXPECT_LE(fine.residual_v, 1e-4);
  EXPECT_GE(std::log2(coarse.residual_v / fine.residual_v), 1.0);
  EXPECT_NEAR(fine.x1, 0.421091, 1e-5);
  EXPECT_NEAR(fine.grid.length(), period_quadrature(p, v0), 1e-8);
  const std::size_t n = fine.u.size();
  for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(fine.u[i], fine.u[n - 1 - i], 1e-10);
  EXPECT_EQ(fine.u[n / 2], 1.0);
  EXPECT_LE(j_constancy_defect(p, fine), 1e-7);
}

TEST(Profile, RemainsNearlyStationaryUnderSolver) {
  // gamma/beta = 3 with slow kinetics so the check runs in seconds
  const GammaBeta gb(0.3, 0.1);
  const CoefficientSet c = preset("example-C", gb);
  const PhaseParams p = find_crossings(c, gb, prop_tekiyou_lambda(c, gb).midpoint());
  const StationaryProfile prof = construct_flat_hump(p, default_v0(p), 512);
  SolverConfig cfg;
  cfg.eps = 0.0;
  const StationarityDrift d = verify_stationary_against_pde(prof, c, cfg, 0.5);
  EXPECT_TRUE(d.completed);
  EXPECT_LE(d.drift, 0.03);
  EXPECT_LE(d.mass_drift, 1e-11);
}

TEST(Bounds, UnboundedPotentialTwoSidedBound) {
  const CoefficientSet d = preset("example-D", kGB);
  const auto [lo, hi] = prop_bounds_star(d, kGB, 5.0, 10.0);
  EXPECT_LT(lo, 0.5);
  EXPECT_GT(hi, 0.5);
  EXPECT_NEAR(lo, 1.0 / (1.0 + std::exp(3.0)), 1e-12);
  EXPECT_NEAR(hi, 1.0 / (1.0 + std::exp(-3.0)), 1e-12);
  EXPECT_EQ(kind_of([] { prop_bounds_star(preset_c(), kGB, 5.0, 10.0); }), ErrorKind::inapplicable);
}

TEST(Crossings, ThresholdLambdaIsBoundaryCase) {
  const LambdaWindow w = prop_lambda_window(preset_c(), kGB);
  const CrossingAnalysis a = analyze_crossings(preset_c(), kGB, w.lambda_tilde);
  EXPECT_FALSE(a.ok());
  EXPECT_EQ(a.failed_clause, "crossings");
}

TEST(Crossings, OutsideIntervalBreaksCondition) {
  const LambdaInterval iv = prop_tekiyou_lambda(preset_c(), kGB);
  EXPECT_FALSE(analyze_crossings(preset_c(), kGB, iv.lambda_hi + 0.5).ok());
  EXPECT_FALSE(analyze_crossings(preset_c(), kGB, iv.lambda_lo - 0.5).ok());
}

TEST(Energy, ShallowHumpFailsAveragedInequality) {
  // near the top of the admissible range the saturation level is low and the
  // averaged inequality is lost before the energy gap closes
  const PhaseParams shallow = find_crossings(preset_c(), kGB, -2.392);
  const JyoukennResult j = check_jyoukenn(shallow);
  EXPECT_FALSE(j.holds);
  EXPECT_TRUE(j.energy_gap_positive);
  const JyoukennResult k = check_jyoukenn(find_crossings(preset_c(), kGB, -1.892));
  EXPECT_FALSE(k.energy_gap_positive);
  EXPECT_EQ(kind_of([] { default_v0(find_crossings(preset_c(), kGB, -1.892)); }), ErrorKind::construction);
}

TEST(Profile, GradientNormBoundedUnderRefinement) {
  const PhaseParams& p = params();
  const double v0 = default_v0(p);
  const double a = construct_flat_hump(p, v0, 1024).u_prime_l2;
  const double b = construct_flat_hump(p, v0, 4096).u_prime_l2;
  EXPECT_GT(a, 0.0);
  EXPECT_NEAR(b / a, 1.0, 0.05);
}

TEST(Profile, HomogeneousPairDoesNotDrift) {
  const GammaBeta gb(3.0, 1.0);
  StationaryProfile flat;
  flat.grid = Grid1D(64, 2.0);
  flat.u.assign(64, 0.4);
  flat.v.assign(64, 1.2);
  SolverConfig cfg;
  cfg.eps = 0.0;
  const StationarityDrift d = verify_stationary_against_pde(flat, preset("example-C", gb), cfg, 0.5);
  EXPECT_LE(d.drift, 1e-12);
}

TEST(Bounds, NoChemotaxisCollapsesBounds) {
  const CoefficientSet c = custom({"1-r", "0", "3*r-s", "1-r", "1", "r*(1-r)^2", "0", 0.0});
  const auto [lo, hi] = prop_bounds_star(c, kGB, 3.0, 10.0);
  EXPECT_NEAR(lo, 0.3, 1e-12);
  EXPECT_NEAR(hi, 0.3, 1e-12);
}

TEST(Potential, MonotoneOnEitherSideOfTheWell) {
  const PhaseParams& p = params();
  EXPECT_NEAR(g_tilde(p, p.rho_m1), 0.0, 1e-10);
  double prev = potential_G(p, p.rho_m1);
  for (int i = 1; i <= 512; ++i) {
    const double v = p.rho_m1 + (p.rho_0 - p.rho_m1) * i / 512.0;
    const double g = potential_G(p, v);
    EXPECT_LT(g, prev) << v;
    prev = g;
  }
  for (int i = 1; i <= 512; ++i) {
    const double v = p.rho_0 + (kGB.ratio() - p.rho_0) * i / 512.0;
    const double g = potential_G(p, v);
    EXPECT_GT(g, prev) << v;
    prev = g;
  }
}

TEST(Orbits, TurningPointsShareTheEnergy) {
  const PhaseParams& p = params();
  for (double frac : {0.2, 0.5, 0.8}) {
    const double v0 = default_v0(p, frac);
    EXPECT_NEAR(potential_G(p, turning_point(p, v0)), potential_G(p, v0), 1e-8);
  }
}

TEST(Profile, StaysInsidePhysicalBounds) {
  const PhaseParams& p = params();
  const StationaryProfile prof = construct_flat_hump(p, default_v0(p, 0.3), 2048);
  for (std::size_t i = 0; i < prof.u.size(); ++i) {
    EXPECT_GT(prof.u[i], 0.0);
    EXPECT_LE(prof.u[i], 1.0);
    EXPECT_GE(prof.v[i], 0.0);
    EXPECT_LE(prof.v[i], kGB.ratio());
    const double x = prof.grid.center(int(i));
    if (x >= prof.x1 && x <= prof.grid.length() - prof.x1) {
      EXPECT_EQ(prof.u[i], 1.0);
      EXPECT_GE(prof.v[i], p.v_lambda - 1e-12);
    }
  }
}
