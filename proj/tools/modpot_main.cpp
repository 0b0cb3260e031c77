#include <cstdlib>
#include <exception>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "modpot/config.hpp"
#include "modpot/runner.hpp"

// modpot: potential-theory experiments on rotationally symmetric manifolds.
//
// modpot <command> --config experiment.cfg [--out DIR] [--seed N] [--resolution N]
// Commands: classify capacity green equilibrium transfinite evans suite.

namespace {

struct CommonOpts {
  std::string config_path;
  std::string out_dir;
  long long seed = -1;
  int resolution = 0;
};

int run(const std::string& command, const CommonOpts& opts) {
  std::istringstream fallback("schema = 1");
  modpot::runner::Context ctx{modpot::ExperimentConfig::parse(fallback), "", 0};
  if (command == "suite" && opts.config_path.empty()) {
    // the suite carries its own parameters; a config is optional
  } else {
    ctx.cfg = modpot::ExperimentConfig::load(opts.config_path);
  }
  if (opts.resolution > 0)
    ctx.cfg.override_value("grid.cells", std::to_string(opts.resolution));
  if (opts.seed >= 0) ctx.cfg.override_value("seed", std::to_string(opts.seed));
  ctx.seed = ctx.cfg.seed();

  ctx.out_dir = opts.out_dir;
  if (ctx.out_dir.empty()) {
    const char* env = std::getenv("MODPOT_OUT");
    ctx.out_dir = env ? std::string(env) : std::string("out");
    ctx.out_dir += "/" + command;
  }
  return modpot::runner::run_command(command, ctx);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"potential-theory toolkit for rotationally symmetric manifolds"};
  app.require_subcommand(1);

  CommonOpts opts;
  const std::vector<std::string> commands = {"classify",    "capacity",    "green",
                                             "equilibrium", "transfinite", "evans",
                                             "suite"};
  for (const std::string& name : commands) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", opts.config_path, "experiment config file")
        ->required(name != "suite");
    sub->add_option("--out", opts.out_dir, "output directory (default: $MODPOT_OUT/<cmd>)");
    sub->add_option("--seed", opts.seed, "override the config seed");
    sub->add_option("--resolution", opts.resolution, "override grid.cells");
  }

  CLI11_PARSE(app, argc, argv);
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    return run(command, opts);
  } catch (const modpot::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const modpot::SolveError& e) {
    std::cerr << "solver failure in `" << command << "`: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << command << ": " << e.what() << "\n";
    return 1;
  }
}
