/*
  Run configuration for the rou command line tool.

  The file is JSON with the blocks flow, perturbation, diffusion, epsilon,
  simulation, estimation, constants (optional), certification and output.
  Unknown keys anywhere are rejected. After parsing, `resolved` holds the
  whole configuration with every default filled in; it is what the manifest
  echoes and what the config hash is computed from.
*/
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rou/linalg.hpp"
#include "rou/random_coeffs.hpp"
#include "rou/sde.hpp"

namespace rou::cli {

// Schema violation; maps to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct FlowBlock {
  Matrix a_inf;
  Matrix m;
  double a = 0.5;
  double b = 1.0;
};

struct SimulationBlock {
  double dt = 0.01;
  double horizon = 5.0;
  std::size_t num_traj = 1000;
  std::uint64_t seed = 0;
  SimMethod method = SimMethod::EulerMaruyama;
  Vector x0;
  std::size_t record_stride = 10;
  double propagator_tol = 1e-10;
  // Number of trajectories written to paths.bin (0 = none).
  std::size_t dump_paths = 0;
};

struct EstimationBlock {
  double epsilon = 1.0;
  std::size_t samples = 2000;
  double horizon = 10.0;
  double dt = 0.1;
  double h0_horizon = 50.0;
  std::size_t h0_grid = 2001;
};

struct DeclaredConstants {
  std::map<int, double> c_n;
  double d1 = 0.0;
  double d2 = 0.0;
  std::map<int, double> eps_n;
};

struct CertificationBlock {
  std::vector<std::string> certificates;
  std::vector<int> n_list{2};
  double nu = 0.5;
  double s = 0.0;
  std::optional<double> h;
  std::vector<double> t_list{1.0, 2.0, 4.0, 8.0};
  std::vector<double> lemma_t_grid{0.5, 1.0, 2.0};
  std::size_t window_points = 5;
  double window_span = 10.0;
  std::vector<double> fluctuation_eps{0.1, 0.01, 0.001};
  std::vector<double> as_eps{0.2, 0.1, 0.05, 0.025};
  std::size_t samples = 2000;
  double dt = 0.01;
  double tol = 1e-8;
  Vector x1;
  Vector x2;
  Vector x0;
  // Test hook: every finite bound is multiplied by this before the verdict.
  double bound_scale = 1.0;
};

struct RunConfig {
  FlowBlock flow;
  PerturbationModel perturbation;
  DiffusionModel diffusion;
  std::vector<double> epsilons{0.01};
  bool epsilon_is_list = false;
  SimulationBlock simulation;
  EstimationBlock estimation;
  std::optional<DeclaredConstants> constants;
  CertificationBlock certification;
  std::string output_dir = "out";
  nlohmann::ordered_json resolved;
};

const std::vector<std::string>& all_certificates();

// Throws ConfigError on any schema violation.
RunConfig parse_config(const nlohmann::json& doc);
RunConfig load_config(const std::string& path);

// 64-bit FNV-1a.
std::uint64_t fnv1a(const std::string& bytes);

}  // namespace rou::cli
