// Configuration parsing and the command-line driver's exit codes and outputs.

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "vfc/cli.hpp"

using namespace vfc;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("vfc_cli_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path write_config(const fs::path& dir, const std::string& text) {
  const fs::path p = dir / "run.cfg";
  std::ofstream(p) << text;
  return p;
}

struct Outcome {
  int code;
  std::string out, err;
};

Outcome dispatch(const std::string& command, const fs::path& dir, const std::string& cfg_text,
                 std::optional<std::uint64_t> seed = std::nullopt) {
  std::ostringstream out, err;
  cli::Context ctx;
  ctx.out = &out;
  ctx.err = &err;
  const int code = cli::dispatch(command, ctx, write_config(dir, cfg_text).string(), (dir / "out").string(), seed);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_binary(const std::string& args) {
  const int status = std::system((std::string(VFC_CLI_PATH) + " " + args + " > /dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

const char* kSmallSim = "[grid]\nn_cells = 64\n[solver]\nt_end = 0.2\n[output]\nsample_times = 0, 0.1, 0.2\n";
const char* kPresetC = "[coefficients]\npreset = example-C\n[reaction]\ngamma = 3\nbeta = 1\n[stationary]\ngrid_n = 1024\n";

}  // namespace

TEST(Config, SectionsCommentsAndTypes) {
  const KeyValues kv = KeyValues::parse("seed = 7  # trailing\n[solver]\neps = 1e-3\n\n[output]\nsample_times = 0, 0.5,1\n");
  EXPECT_EQ(kv.u64("seed", 0), 7u);
  EXPECT_DOUBLE_EQ(kv.num("solver.eps", 0.0), 1e-3);
  EXPECT_EQ(kv.list("output.sample_times", {}), (std::vector<double>{0.0, 0.5, 1.0}));
  EXPECT_EQ(kv.str("missing", "dflt"), "dflt");
}

TEST(Config, ErrorsNameTheKey) {
  const KeyValues kv = KeyValues::parse("grid.n_cells = 12.5\nsolver.eps = abc\ndebug.flag = maybe\n");
  try {
    kv.num("solver.eps", 0.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::config);
    EXPECT_NE(std::string(e.what()).find("solver.eps"), std::string::npos);
  }
  EXPECT_THROW(kv.integer("grid.n_cells", 0), Error);
  EXPECT_THROW(kv.flag("debug.flag", false), Error);
  EXPECT_THROW(KeyValues::parse("no equals sign\n"), Error);
  EXPECT_THROW(KeyValues::parse("[open\n"), Error);
}

TEST(Config, UnknownKeysRejected) {
  EXPECT_THROW(KeyValues::parse("solvr.eps = 1\n").check_known(cli::known_keys()), Error);
  EXPECT_NO_THROW(KeyValues::parse("solver.eps = 1\n").check_known(cli::known_keys()));
}

TEST(Cli, SimulateWritesSnapshotsAndReport) {
  const fs::path dir = scratch("simulate");
  const Outcome o = dispatch("simulate", dir, kSmallSim);
  ASSERT_EQ(o.code, 0) << o.err;
  for (const char* f : {"snapshot_0000.csv", "snapshot_0001.csv", "snapshot_0002.csv", "run_report.csv"})
    EXPECT_TRUE(fs::exists(dir / "out" / f)) << f;
  const std::string snap = slurp(dir / "out" / "snapshot_0001.csv");
  EXPECT_EQ(snap.rfind("# t = 0.1", 0), 0u);
  EXPECT_NE(snap.find("# preset = example-A\n"), std::string::npos);
  EXPECT_NE(snap.find("# n_cells = 64\n"), std::string::npos);
  EXPECT_NE(snap.find("\nx,u,v\n"), std::string::npos);
  EXPECT_EQ(snap.find('\r'), std::string::npos);
  EXPECT_NE(slurp(dir / "out" / "run_report.csv").find("max_relative_mass_drift,"), std::string::npos);
}

TEST(Cli, SimulateIsDeterministicForASeed) {
  const fs::path a = scratch("det_a"), b = scratch("det_b");
  const std::string cfg = std::string(kSmallSim) + "[initial]\nu = random\nv = random\n";
  ASSERT_EQ(dispatch("simulate", a, cfg, 99).code, 0);
  ASSERT_EQ(dispatch("simulate", b, cfg, 99).code, 0);
  EXPECT_EQ(slurp(a / "out" / "snapshot_0002.csv"), slurp(b / "out" / "snapshot_0002.csv"));
  EXPECT_EQ(slurp(a / "out" / "run_report.csv"), slurp(b / "out" / "run_report.csv"));
}

TEST(Cli, ConfigErrorsExitTwoNamingTheField) {
  const fs::path dir = scratch("config_errors");
  Outcome o = dispatch("simulate", dir, "[solver]\neps = -1\n");
  EXPECT_EQ(o.code, 2);
  EXPECT_NE(o.err.find("solver.eps"), std::string::npos);
  o = dispatch("simulate", dir, "[solver]\nepsilon = 1\n");
  EXPECT_EQ(o.code, 2);
  EXPECT_NE(o.err.find("solver.epsilon"), std::string::npos);
  EXPECT_EQ(dispatch("simulate", dir, "[initial]\nu = triangle\n").code, 2);
  EXPECT_EQ(dispatch("simulate", dir, "[coefficients]\npreset = example-Q\n").code, 2);
  EXPECT_EQ(dispatch("verify", dir, "[verify]\ncriteria = 12\n").code, 2);
}

TEST(Cli, InjectedLeakFailsSimulate) {
  const Outcome o = dispatch("simulate", scratch("leak"), std::string(kSmallSim) + "[debug]\ninject_mass_leak = true\n");
  EXPECT_EQ(o.code, 1);
  EXPECT_NE(o.err.find("mass"), std::string::npos);
}

TEST(Cli, StationaryWritesProfileParametersAndPortrait) {
  const fs::path dir = scratch("stationary");
  const Outcome o = dispatch("stationary", dir, kPresetC);
  ASSERT_EQ(o.code, 0) << o.err;
  const std::string params = slurp(dir / "out" / "parameters.csv");
  for (const char* key : {"lambda,", "v_lambda,", "rho_m1,", "rho_0,", "x1,", "\nl,", "residual_flux,", "residual_v,",
                          "nu_margin,"})
    EXPECT_NE(params.find(key), std::string::npos) << key;
  EXPECT_NE(slurp(dir / "out" / "phase_portrait.csv").find("v,w,E"), std::string::npos);
  EXPECT_NE(slurp(dir / "out" / "profile.csv").find("x,u,v"), std::string::npos);
}

TEST(Cli, StationaryCrossingFailureExitsFour) {
  const Outcome o = dispatch("stationary", scratch("crossing"), std::string(kPresetC) + "lambda = 5\n");
  EXPECT_EQ(o.code, 4);
  EXPECT_NE(o.err.find("v_lambda"), std::string::npos);
}

TEST(Cli, StationaryNonSeparableExitsFour) {
  const Outcome o = dispatch("stationary", scratch("nonsep"),
                             "[coefficients]\npreset = custom\nD = 1-r\nh = r*(1-r)*(1+r*s)\ng = 3*r-s\n"
                             "[reaction]\ngamma = 3\nbeta = 1\n");
  EXPECT_EQ(o.code, 4);
  EXPECT_NE(o.err.find("Con:Dh1"), std::string::npos);
}

TEST(Cli, StationaryUnreachableLengthExitsFive) {
  EXPECT_EQ(dispatch("stationary", scratch("length"), std::string(kPresetC) + "length = 100\n").code, 5);
}

TEST(Cli, StationaryAlternativeLambdaChoice) {
  EXPECT_EQ(dispatch("stationary", scratch("prop57"), std::string(kPresetC) + "lambda = auto-from-prop57\n").code, 0);
}

TEST(Cli, VerifySubsetWritesSummary) {
  const fs::path dir = scratch("verify");
  const Outcome o = dispatch("verify", dir, "[verify]\ncriteria = 4, 5\n");
  ASSERT_EQ(o.code, 0) << o.err;
  EXPECT_NE(o.out.find("PASS  4"), std::string::npos);
  EXPECT_NE(o.out.find("PASS  5"), std::string::npos);
  EXPECT_NE(slurp(dir / "out" / "verify_summary.csv").find("criterion,name,passed,seconds,detail"), std::string::npos);
}

TEST(Cli, VerifyDetectsInjectedLeak) {
  const Outcome o = dispatch("verify", scratch("verify_leak"),
                             "[verify]\ncriteria = 1\nmass_grids = 64\n[debug]\ninject_mass_leak = true\n");
  EXPECT_EQ(o.code, 1);
  EXPECT_NE(o.err.find("mass conservation"), std::string::npos);
}

TEST(Cli, SweepStudies) {
  const std::string base = "[grid]\nn_cells = 64\n[solver]\nt_end = 0.3\n";
  fs::path dir = scratch("sweep_eps");
  EXPECT_EQ(dispatch("sweep", dir, base + "[sweep]\nstudy = eps\nvalues = 0.1, 0.05, 0.025\n").code, 0);
  EXPECT_TRUE(fs::exists(dir / "out" / "eps_study.csv"));
  EXPECT_EQ(dispatch("sweep", dir, base + "[sweep]\nstudy = eps\nvalues = 0.1, 0.05\n").code, 2);
  dir = scratch("sweep_dep");
  EXPECT_EQ(dispatch("sweep", dir, base + "[sweep]\nstudy = dependence\n").code, 0);
  EXPECT_TRUE(fs::exists(dir / "out" / "dependence_study.csv"));
  dir = scratch("sweep_param");
  EXPECT_EQ(dispatch("sweep", dir, base + "[sweep]\nstudy = parameter\nparameter = solver.cfl\nvalues = 0.5, 0.9\n").code, 0);
  EXPECT_EQ(slurp(dir / "out" / "parameter_sweep.csv").find("# study = parameter"), 0u);
  EXPECT_EQ(dispatch("sweep", dir, base + "[sweep]\nstudy = parameter\nparameter = bogus\nvalues = 1\n").code, 2);
}

TEST(Cli, BinaryExitCodes) {
  const fs::path dir = scratch("binary");
  const fs::path good = dir / "good.cfg", bad = dir / "bad.cfg";
  std::ofstream(good) << kSmallSim;
  std::ofstream(bad) << "[solver]\neps = -1\n";
  EXPECT_EQ(run_binary("simulate --config " + good.string() + " --out " + (dir / "a").string()), 0);
  EXPECT_EQ(run_binary("simulate --config " + bad.string() + " --out " + (dir / "b").string()), 2);
  EXPECT_EQ(run_binary("frobnicate"), 2);
  EXPECT_EQ(run_binary("simulate --config " + (dir / "absent.cfg").string()), 2);
  EXPECT_EQ(run_binary("--help"), 0);
}

TEST(Cli, HomogeneousEquilibriumGivesFlatSnapshots) {
  const fs::path dir = scratch("equilibrium");
  const Outcome o = dispatch("simulate", dir,
                             "[reaction]\ngamma = 2\nbeta = 1\n[grid]\nn_cells = 32\n[solver]\nt_end = 0.2\n"
                             "[initial]\nu = constant\nu_value = 0.3\nv = equilibrium\n");
  ASSERT_EQ(o.code, 0) << o.err;
  std::ifstream in(dir / "out" / "snapshot_0001.csv");
  std::string line;
  int rows = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line[0] == 'x') continue;
    const auto c1 = line.find(','), c2 = line.find(',', c1 + 1);
    EXPECT_NEAR(std::stod(line.substr(c1 + 1, c2 - c1 - 1)), 0.3, 1e-13);
    EXPECT_NEAR(std::stod(line.substr(c2 + 1)), 0.6, 1e-13);
    ++rows;
  }
  EXPECT_EQ(rows, 32);
}

TEST(Cli, BumpReportShowsConservedMass) {
  const fs::path dir = scratch("bump_mass");
  ASSERT_EQ(dispatch("simulate", dir, "[grid]\nn_cells = 128\n[solver]\nt_end = 0.5\n").code, 0);
  const std::string report = slurp(dir / "out" / "run_report.csv");
  const auto at = report.find("max_relative_mass_drift,") + std::string("max_relative_mass_drift,").size();
  EXPECT_LE(std::stod(report.substr(at, report.find('\n', at) - at)), 1e-11);
}

TEST(Cli, StationaryPlateauStartsInsideLeftHalf) {
  const fs::path dir = scratch("x1");
  ASSERT_EQ(dispatch("stationary", dir, kPresetC).code, 0);
  const KeyValues kv = [&] {
    std::string text = slurp(dir / "out" / "parameters.csv");
    for (char& ch : text)
      if (ch == ',') ch = '=';
    return KeyValues::parse(text);
  }();
  const double x1 = kv.num("x1", -1.0), l = kv.num("l", -1.0);
  EXPECT_GT(x1, 0.0);
  EXPECT_LT(x1, l / 2);
}

TEST(Cli, StationaryLambdaPastIntervalExitsFour) {
  EXPECT_EQ(dispatch("stationary", scratch("past"), std::string(kPresetC) + "lambda = -1.2\n").code, 4);
}

TEST(Cli, StationaryAveragedInequalityGatesSuccess) {
  const fs::path dir = scratch("averaged");
  const Outcome o = dispatch("stationary", dir, std::string(kPresetC) + "lambda = -2.392\n");
  EXPECT_EQ(o.code, 1);
  EXPECT_TRUE(fs::exists(dir / "out" / "profile.csv"));
  EXPECT_EQ(dispatch("stationary", scratch("gap"), std::string(kPresetC) + "lambda = -1.892\n").code, 5);
}

TEST(Cli, StationarySensitivityAtEmptyCellsExitsFour) {
  const Outcome o = dispatch("stationary", scratch("h1zero"),
                             "[coefficients]\npreset = custom\nD = (1-r)^2*(s+1)\nh = (0.1+r)*(1-r)^2*(s+1)\n"
                             "g = 3*r-s\nD1 = (1-r)^2\nD2 = s+1\nh1 = (0.1+r)*(1-r)^2\nh2 = s+1\n"
                             "[reaction]\ngamma = 3\nbeta = 1\n");
  EXPECT_EQ(o.code, 4);
  EXPECT_NE(o.err.find("Con:Dh1"), std::string::npos);
}

TEST(Cli, MissingNestedOutputDirectoryIsCreated) {
  const fs::path dir = scratch("nested");
  std::ostringstream out, err;
  cli::Context ctx;
  ctx.out = &out;
  ctx.err = &err;
  const fs::path target = dir / "a" / "b" / "c";
  EXPECT_EQ(cli::dispatch("verify", ctx, write_config(dir, "[verify]\ncriteria = 4\n").string(), target.string(),
                          std::nullopt),
            0);
  EXPECT_TRUE(fs::exists(target / "verify_summary.csv"));
}

TEST(Cli, ShippedConfigsUseKnownKeys) {
  int seen = 0;
  for (const auto& entry : fs::directory_iterator(VFC_CONFIG_DIR)) {
    if (entry.path().extension() != ".cfg") continue;
    EXPECT_NO_THROW(KeyValues::load(entry.path().string()).check_known(cli::known_keys())) << entry.path();
    ++seen;
  }
  EXPECT_GE(seen, 4);
}
