// Subcommands of the rou tool. Each returns the process exit code.
#pragma once

#include <cstddef>
#include <string>

#include "config.hpp"

namespace rou::cli {

enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitRuntime = 3, kExitViolated = 4 };

struct RunOptions {
  std::string command;
  std::string config_path;
  std::string out_dir;
  std::size_t threads = 1;
  bool svg = false;
};

int cmd_constants(const RunConfig& cfg, const RunOptions& opt);
int cmd_simulate(const RunConfig& cfg, const RunOptions& opt);
// certify runs a single epsilon; sweep runs every epsilon of the config.
int cmd_certify(const RunConfig& cfg, const RunOptions& opt);
int cmd_sweep(const RunConfig& cfg, const RunOptions& opt);

}  // namespace rou::cli
