// rou: simulate random Ornstein-Uhlenbeck processes and certify their stability bounds.
#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <thread>

#include "commands.hpp"
#include "config.hpp"
#include "rou/error.hpp"
#include "rou/parallel.hpp"

int main(int argc, char** argv) {
  using namespace rou::cli;

  CLI::App app{"Random Ornstein-Uhlenbeck stability toolkit"};
  app.require_subcommand(1);
  app.fallthrough();

  RunOptions opt;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::size_t threads = std::max(1u, std::thread::hardware_concurrency());

  app.add_option("--config", opt.config_path, "run configuration (JSON)")->required()->envname("ROU_CONFIG");
  app.add_option("--out", out_dir, "output directory (overrides output.dir)")->envname("ROU_OUT");
  app.add_option("--seed", seed, "master seed (overrides simulation.seed)")->envname("ROU_SEED");
  app.add_option("--threads", threads, "worker threads")->check(CLI::Range(1, 1024))->envname("ROU_THREADS");
  app.add_flag("--svg", opt.svg, "also write SVG plots")->envname("ROU_SVG");

  app.add_subcommand("constants", "table of the explicit stability constants");
  app.add_subcommand("simulate", "simulate trajectories and write summary statistics");
  app.add_subcommand("certify", "run the Monte Carlo certificates for one epsilon");
  app.add_subcommand("sweep", "run the certificates for every epsilon of the config");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }
  opt.command = app.get_subcommands().front()->get_name();
  opt.threads = threads;

  try {
    RunConfig cfg = load_config(opt.config_path);
    if (seed) {
      cfg.simulation.seed = *seed;
      cfg.resolved["simulation"]["seed"] = *seed;
    }
    if (out_dir) {
      cfg.output_dir = *out_dir;
      cfg.resolved["output"]["dir"] = *out_dir;
    }
    opt.out_dir = cfg.output_dir;
    rou::set_worker_count(opt.threads);

    if (opt.command == "constants") return cmd_constants(cfg, opt);
    if (opt.command == "simulate") return cmd_simulate(cfg, opt);
    if (opt.command == "certify") return cmd_certify(cfg, opt);
    return cmd_sweep(cfg, opt);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const rou::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}
