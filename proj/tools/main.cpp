// vfc command-line driver: simulate, stationary, verify and sweep.

#include <CLI11.hpp>

#include <optional>
#include <string>

#include "vfc/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Volume-filling chemotaxis solver and stationary-profile toolkit"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  std::optional<std::uint64_t> seed;
  for (const char* name : {"simulate", "stationary", "verify", "sweep"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "key = value configuration file");
    sub->add_option("--out", out_dir, "output directory (created if missing)");
    sub->add_option("--seed", seed, "random seed, overrides the config");
  }
  static const char* const descriptions[] = {"run the PDE solver and write snapshots",
                                             "construct a flat-hump stationary profile",
                                             "run the acceptance criteria",
                                             "run an eps, dependence or parameter study"};
  for (std::size_t i = 0; i < app.get_subcommands({}).size(); ++i) app.get_subcommands({})[i]->description(descriptions[i]);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : vfc::cli::config_error;
  }
  const std::string command = app.get_subcommands().front()->get_name();
  return vfc::cli::dispatch(command, vfc::cli::Context{}, config_path, out_dir, seed);
}
