// Regularization-limit and continuous-dependence studies, initial-data
// generators and the worker pool.

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "vfc/initial_data.hpp"
#include "vfc/studies.hpp"

using namespace vfc;

namespace {

StudySetup small_setup(const CoefficientSet& c, int n = 96, double t_end = 0.5) {
  StudySetup s;
  s.c = c;
  s.grid = Grid1D(n, 10.0);
  s.u0 = init::bump(s.grid, 0.1, 0.8);
  s.v0 = init::bump(s.grid, 0.2, 0.5, 0.3, 0.2);
  s.cfg.t_end = t_end;
  return s;
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

TEST(EpsStudy, RejectsMalformedLists) {
  const StudySetup s = small_setup(preset("example-A"));
  EXPECT_EQ(kind_of([&] { eps_convergence_study(s, {0.1, 0.05}); }), ErrorKind::input);
  EXPECT_EQ(kind_of([&] { eps_convergence_study(s, {0.1, -0.05, 0.01}); }), ErrorKind::input);
  EXPECT_EQ(kind_of([&] { eps_convergence_study(s, {0.1, 0.2, 0.05}); }), ErrorKind::input);
}

TEST(EpsStudy, LinearResponseWithoutChemotaxis) {
  // with h = 0 the eps-dependence is a smooth perturbation of the diffusion,
  // so consecutive differences halve with eps; a low bump keeps D well above eps
  const CoefficientSet c = custom({"(1-r)^2", "0", "r-s", "", "", "", "", 0.0});
  StudySetup s = small_setup(c, 128);
  s.u0 = init::bump(s.grid, 0.1, 0.4);
  const EpsStudy st = eps_convergence_study(s, {0.08, 0.04, 0.02, 0.01});
  ASSERT_TRUE(st.completed) << st.failure;
  EXPECT_TRUE(st.strictly_decreasing);
  EXPECT_GE(st.slope, 0.8);
  EXPECT_LE(st.slope, 1.2);
}

TEST(EpsStudy, ChemotaxisDifferencesDecrease) {
  const EpsStudy st = eps_convergence_study(small_setup(preset("example-A")), {0.1, 0.05, 0.025});
  ASSERT_TRUE(st.completed) << st.failure;
  EXPECT_TRUE(st.strictly_decreasing);
  EXPECT_LT(st.final_over_first, 1.0);
}

TEST(EpsStudy, LogLogSlope) {
  EXPECT_NEAR(loglog_slope({1.0, 2.0, 4.0}, {3.0, 12.0, 48.0}), 2.0, 1e-14);
}

TEST(DependenceStudy, RatiosStableForSmallPerturbations) {
  const DependenceStudy st = continuous_dependence_study(small_setup(preset("example-B", GammaBeta(1.0, 1.0))),
                                                         {1e-2, 1e-3, 1e-4}, 42);
  ASSERT_TRUE(st.completed) << st.failure;
  EXPECT_TRUE(st.hypotheses_satisfied) << st.hypotheses_note;
  EXPECT_LE(st.spread, 3.0);
  for (double r : st.ratio) EXPECT_GT(r, 0.0);
}

TEST(DependenceStudy, ReportsUnverifiedHypotheses) {
  const DependenceStudy st = continuous_dependence_study(small_setup(preset("example-A")), {1e-3}, 1);
  EXPECT_FALSE(st.hypotheses_satisfied);
  EXPECT_NE(st.hypotheses_note.find("not satisfied"), std::string::npos);
}

TEST(DependenceStudy, NegativeDeltaRejected) {
  EXPECT_EQ(kind_of([] { continuous_dependence_study(small_setup(preset("example-B")), {-1e-3}, 1); }),
            ErrorKind::input);
}

TEST(InitialData, PerturbationDirectionIsUnitAndMeanFree) {
  const Grid1D g(200, 10.0);
  const auto d = perturbation_direction(g, 3);
  double n2 = 0.0, sum = 0.0;
  for (double x : d) {
    n2 += x * x * g.dx();
    sum += x;
  }
  EXPECT_NEAR(n2, 1.0, 1e-12);
  EXPECT_NEAR(sum * g.dx(), 0.0, 1e-12);
  EXPECT_EQ(d, perturbation_direction(g, 3));
  EXPECT_NE(d, perturbation_direction(g, 4));
}

TEST(InitialData, GeneratorsRespectRanges) {
  const Grid1D g(128, 5.0);
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    for (double x : init::random_cells(g, 0.2, 0.7, seed)) {
      EXPECT_GE(x, 0.2);
      EXPECT_LE(x, 0.7);
    }
    const auto smooth = init::random_smooth(g, 0.0, 1.0, seed);
    EXPECT_NEAR(*std::min_element(smooth.begin(), smooth.end()), 0.0, 1e-12);
    EXPECT_NEAR(*std::max_element(smooth.begin(), smooth.end()), 1.0, 1e-12);
  }
  EXPECT_EQ(init::random_cells(g, 0.0, 1.0, 9), init::random_cells(g, 0.0, 1.0, 9));
  const auto st = init::step(g, 1.0, 0.0);
  EXPECT_EQ(st.front(), 1.0);
  EXPECT_EQ(st.back(), 0.0);
}

TEST(InitialData, CsvRoundTrip) {
  const Grid1D g(8, 1.0);
  const auto path = std::filesystem::temp_directory_path() / "vfc_initial_roundtrip.csv";
  {
    std::ofstream out(path);
    out << "# written by a test\nx,u,v\n";
    for (int i = 0; i < 8; ++i) out << g.center(i) << "," << 0.1 * i << "," << 0.5 << "\n";
  }
  const State s = init::from_csv(path.string(), g);
  EXPECT_NEAR(s.u[7], 0.7, 1e-15);
  EXPECT_EQ(s.v[0], 0.5);
  EXPECT_THROW(init::from_csv((path.string() + ".missing"), g), Error);
  std::filesystem::remove(path);
}

TEST(WorkerPool, PreservesIndexOrder) {
  const auto out = parallel_map<int>(37, [](std::size_t i) { return int(i * i); });
  for (std::size_t i = 0; i < out.size(); ++i) EXPECT_EQ(out[i], int(i * i));
}

TEST(EpsStudy, SingleValueRejected) {
  EXPECT_EQ(kind_of([] { eps_convergence_study(small_setup(preset("example-A")), {0.1}); }), ErrorKind::input);
}

TEST(DependenceStudy, ZeroPerturbationGivesZeroDifference) {
  const DependenceStudy st = continuous_dependence_study(small_setup(preset("example-B")), {0.0}, 3);
  ASSERT_TRUE(st.completed);
  EXPECT_EQ(st.diff.front(), 0.0);
}
