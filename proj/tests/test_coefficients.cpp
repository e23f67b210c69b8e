// Coefficient presets, Kirchhoff antiderivative, potentials and the sampled
// structural checkers.

#include <gtest/gtest.h>

#include <cmath>

#include "vfc/coefficients.hpp"

using namespace vfc;

namespace {

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected an error";
  return ErrorKind::numerical;
}

CoefficientSet without_closed_forms(CoefficientSet c) {
  c.hanaD_closed = nullptr;
  c.hanaD_s_closed = nullptr;
  c.j1_closed = nullptr;
  c.j2_closed = nullptr;
  c.j1_inverse_closed = nullptr;
  c.j2_inverse_closed = nullptr;
  return c;
}

}  // namespace

TEST(Presets, UnknownNameIsConfigError) {
  EXPECT_EQ(kind_of([] { preset("example-Z"); }), ErrorKind::config);
}

TEST(Presets, NonPositiveReactionRatesRejected) {
  EXPECT_EQ(kind_of([] { GammaBeta(0.0, 1.0); }), ErrorKind::input);
  EXPECT_EQ(kind_of([] { GammaBeta(1.0, -2.0); }), ErrorKind::input);
}

TEST(Kirchhoff, QuadratureMatchesClosedForm) {
  for (const char* name : {"example-A", "example-B", "example-C"}) {
    const CoefficientSet c = preset(name, GammaBeta(3.0, 1.0));
    const CoefficientSet q = without_closed_forms(c);
    for (double r : {0.0, 0.1, 0.5, 0.9, 0.999, 1.0})
      for (double s : {0.0, 0.7, 2.5}) EXPECT_NEAR(eval_hanaD(q, r, s), eval_hanaD(c, r, s), 1e-12) << name;
  }
}

TEST(Kirchhoff, FiniteDifferenceSensitivityMatchesClosedForm) {
  const CoefficientSet c = preset("example-A");
  const CoefficientSet q = without_closed_forms(c);
  for (double r : {0.05, 0.4, 0.95})
    for (double s : {0.0, 0.3, 3.0}) EXPECT_NEAR(eval_hanaD_s(q, r, s), eval_hanaD_s(c, r, s), 1e-6);
}

TEST(Kirchhoff, OutsideDomainIsInputError) {
  const CoefficientSet c = preset("example-A");
  EXPECT_EQ(kind_of([&] { eval_hanaD(c, 1.2, 0.0); }), ErrorKind::input);
  EXPECT_EQ(kind_of([&] { eval_hanaD(c, 0.5, -1.0); }), ErrorKind::input);
}

TEST(Kirchhoff, RegularizationAddsLinearTerm) {
  const CoefficientSet c = preset("example-B");
  const CoefficientSet e = regularize(c, 0.01);
  EXPECT_FALSE(e.separable.has_value());
  EXPECT_NEAR(e.D(1.0, 0.0), 0.01, 1e-15);
  EXPECT_NEAR(eval_hanaD(e, 0.6, 1.0) - eval_hanaD(c, 0.6, 1.0), 0.006, 1e-14);
  EXPECT_EQ(kind_of([&] { regularize(c, 0.0); }), ErrorKind::input);
}

TEST(Potentials, ClosedFormPresetC) {
  const CoefficientSet c = preset("example-C", GammaBeta(3.0, 1.0));
  const CoefficientSet q = without_closed_forms(c);
  for (double r : {0.01, 0.2, 0.5, 0.75, 0.99}) EXPECT_NEAR(eval_j1(q, r), std::log(2 * r), 1e-10);
  for (double s : {0.0, 0.5, 1.0, 3.0}) EXPECT_NEAR(eval_j2(q, s), std::expm1(s), 1e-10);
  EXPECT_TRUE(c.j1_at_one.finite);
  EXPECT_NEAR(c.j1_at_one.value, std::log(2.0), 1e-8);
}

TEST(Potentials, BisectionInverseMatchesClosedInverse) {
  const CoefficientSet c = preset("example-C", GammaBeta(3.0, 1.0));
  CoefficientSet b = c;
  b.j1_inverse_closed = nullptr;
  b.j2_inverse_closed = nullptr;
  for (double y : {-12.0, -3.0, -0.5, 0.0, 0.5}) EXPECT_NEAR(invert_j1(b, y), invert_j1(c, y), 1e-14);
  for (double y : {0.001, 0.5, 4.0, 30.0}) EXPECT_NEAR(invert_j2(b, y), invert_j2(c, y), 1e-13);
}

TEST(Potentials, InverseRoundTripWithoutClosedForms) {
  const CoefficientSet q = without_closed_forms(preset("example-C", GammaBeta(3.0, 1.0)));
  for (double r : {0.02, 0.3, 0.8}) EXPECT_NEAR(invert_j1(q, eval_j1(q, r)), r, 1e-10);
  for (double s : {0.1, 1.0, 2.0}) EXPECT_NEAR(invert_j2(q, eval_j2(q, s)), s, 1e-10);
}

TEST(Potentials, UnboundedPotentialPresetD) {
  const CoefficientSet c = preset("example-D", GammaBeta(3.0, 1.0));
  EXPECT_FALSE(c.j1_at_one.finite);
  EXPECT_NEAR(invert_j1(c, 20.0), 1.0 / (1.0 + std::exp(-20.0)), 1e-15);
}

TEST(Potentials, RangeAndDomainErrors) {
  const CoefficientSet c = preset("example-C", GammaBeta(3.0, 1.0));
  EXPECT_EQ(kind_of([&] { invert_j1(c, std::log(2.0) + 0.1); }), ErrorKind::range);
  EXPECT_EQ(kind_of([&] { invert_j2(c, -1.0); }), ErrorKind::range);
  EXPECT_EQ(kind_of([&] { eval_j1(c, 0.0); }), ErrorKind::divergence);
  const CoefficientSet n = custom({"1-r", "r*(1-r)*(1+r*s)", "r-s", "", "", "", "", 0.0});
  EXPECT_EQ(kind_of([&] { eval_j1(n, 0.5); }), ErrorKind::structural);
}

TEST(Checkers, PresetAPassesStructuralConditions) {
  const ConditionReport rep = check_conditions(preset("example-A"), 5.0, 64);
  EXPECT_TRUE(rep.all_passed());
  EXPECT_NEAR(rep.empirical_M, 1.0 / 3.0, 1e-9);
  EXPECT_LE(rep.empirical_kappa, 0.0 + 1e-9);
}

TEST(Checkers, ViolationNamesConditionAndPoint) {
  const CoefficientSet bad = custom({"1.5-r", "r*(1-r)", "r-s", "", "", "", "", 0.0});
  const ConditionReport rep = check_conditions(bad, 1.0, 32);
  const ConditionResult* d = rep.find("Con:D");
  ASSERT_NE(d, nullptr);
  EXPECT_FALSE(d->passed);
  ASSERT_TRUE(d->first_violation.has_value());
  EXPECT_EQ(d->first_violation->r, 1.0);
  EXPECT_TRUE(rep.find("Con:h")->passed);
}

TEST(Checkers, ReactionGrowthAboveKappaFails) {
  const CoefficientSet bad = custom({"1-r", "r*(1-r)", "r+s", "", "", "", "", 0.5});
  EXPECT_FALSE(check_conditions(bad, 1.0, 32).find("Con:g")->passed);
}

TEST(Checkers, SeparableFactors) {
  EXPECT_TRUE(check_separable_factors(preset("example-C", GammaBeta(3.0, 1.0)), 3.0, 64).all_passed());
  const CoefficientSet n = custom({"1-r", "r*(1-r)*(1+r*s)", "r-s", "", "", "", "", 0.0});
  const ConditionReport rep = check_separable_factors(n, 3.0, 64);
  EXPECT_FALSE(rep.find("Con:Dh1")->passed);
  EXPECT_FALSE(rep.find("Con:Dh2")->passed);
}

TEST(Checkers, UniquenessConstantsPresetB) {
  const UniquenessReport rep = check_uniqueness_conditions(preset("example-B"), 1.0, 64);
  EXPECT_TRUE(rep.satisfiable);
  EXPECT_TRUE(rep.g_decomposition_ok);
  EXPECT_LE(rep.C0, 32.0);
  EXPECT_GE(rep.pairs, 10000u);
}

TEST(Checkers, UniquenessNeedsDiffusionIndependentOfS) {
  EXPECT_EQ(kind_of([] { check_uniqueness_conditions(preset("example-A"), 1.0, 16); }), ErrorKind::precondition);
}

TEST(Kirchhoff, ReferenceValuesPresetA) {
  const CoefficientSet c = preset("example-A");
  for (double s : {0.0, 1.0, 4.0}) EXPECT_EQ(eval_hanaD(c, 0.0, s), 0.0);
  const CoefficientSet q = without_closed_forms(c);
  EXPECT_NEAR(eval_hanaD(q, 1.0, 0.0), 1.0 / 3.0, 1e-13);
  EXPECT_NEAR(eval_hanaD(c, 0.3, 2.0), -(3.0 / 3.0) * (std::pow(0.7, 3) - 1.0), 1e-15);
  // central-difference oracle of the s-derivative
  const double h = 1e-5;
  const double fd = (eval_hanaD(c, 0.5, 2.0 + h) - eval_hanaD(c, 0.5, 2.0 - h)) / (2 * h);
  EXPECT_NEAR(eval_hanaD_s(c, 0.5, 2.0), fd, 1e-6);
}

TEST(Kirchhoff, SensitivityVanishesWithoutSDependence) {
  const CoefficientSet q = without_closed_forms(preset("example-B"));
  for (double r : {0.1, 0.6, 1.0})
    for (double s : {0.0, 1.0, 3.0}) EXPECT_NEAR(eval_hanaD_s(q, r, s), 0.0, 1e-9);
}

TEST(Kirchhoff, RegularizedMinimumSitsAtFullCells) {
  const CoefficientSet e = regularize(preset("example-A"), 1e-3);
  double lowest = 1e300, where = -1.0;
  for (int i = 0; i <= 200; ++i)
    for (int j = 0; j <= 20; ++j) {
      const double r = i / 200.0, s = 5.0 * j / 20.0;
      if (e.D(r, s) < lowest) lowest = e.D(r, s), where = r;
    }
  EXPECT_NEAR(lowest, 1e-3, 1e-15);
  EXPECT_EQ(where, 1.0);
  const CoefficientSet big = regularize(preset("example-A"), 0.1);
  for (double s : {0.0, 2.0, 9.0}) EXPECT_NEAR(big.D(1.0, s), 0.1, 1e-15);
}

TEST(Checkers, NonDegenerateDiffusionFailsAtFullCells) {
  const CoefficientSet bad = custom({"1", "r*(1-r)", "r-s", "", "", "", "", 0.0});
  const ConditionResult* d = check_conditions(bad, 1.0, 32).find("Con:D");
  EXPECT_FALSE(d->passed);
  EXPECT_EQ(d->first_violation->r, 1.0);
}

TEST(Checkers, PresetBHasNoSensitivity) {
  const ConditionReport rep = check_conditions(preset("example-B"), 3.0, 64);
  EXPECT_TRUE(rep.all_passed());
  EXPECT_EQ(rep.empirical_M, 0.0);
}

TEST(Checkers, FactorWithNonzeroSensitivityAtEmptyCells) {
  const CoefficientSet c = custom({"(1-r)^2*(s+1)", "(0.1+r)*(1-r)^2*(s+1)", "3*r-s", "(1-r)^2", "s+1",
                                   "(0.1+r)*(1-r)^2", "s+1", 0.0});
  const ConditionReport rep = check_separable_factors(c, 3.0, 64);
  EXPECT_FALSE(rep.find("Con:Dh1")->passed);
  EXPECT_EQ(rep.find("Con:Dh1")->first_violation->r, 0.0);
  EXPECT_TRUE(rep.find("Con:Dh2")->passed);
}
