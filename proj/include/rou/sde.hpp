/*
  Random Ornstein-Uhlenbeck simulation:

      dX_t = A_t^eps X_t dt + (B_t^eps)^{1/2} dW_t.

  The coefficient path of trajectory j comes from the Coefficients stream
  domain, its Wiener increments from Noise and its random initial state from
  InitialState, so the state noise is independent of the coefficients by
  construction. Both integration routes read the same increments.
*/
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "rou/linalg.hpp"
#include "rou/random_coeffs.hpp"
#include "rou/rng.hpp"

namespace rou {

enum class SimMethod { EulerMaruyama, SolutionFormula };

struct OUSimConfig {
  CoefficientProcessSpec spec;
  // Trajectory j starts from x0_list[j % size] plus, if initial_cov is set
  // (dim > 0), a N(0, initial_cov) draw.
  std::vector<Vector> x0_list;
  PsdMatrix initial_cov;
  double dt = 1e-2;
  double horizon = 1.0;
  std::size_t num_traj = 1;
  std::uint64_t seed = 0;
  SimMethod method = SimMethod::EulerMaruyama;
  // States are kept at every `record_stride`-th node and at the last node.
  std::size_t record_stride = 1;
  double propagator_tol = 1e-10;
};

struct TrajectoryOutput {
  std::vector<double> times;
  std::vector<Vector> states;
  std::uint64_t coefficient_stream_id = 0;
  std::uint64_t noise_stream_id = 0;
};

// Throws InvalidArgument for malformed configs and StepTooLarge when
// dt (||A_inf|| + a + 2 eps sigma_entry sqrt(r)) > 0.5.
void validate_config(const OUSimConfig& cfg);

std::vector<double> simulation_grid(const OUSimConfig& cfg);
std::vector<double> recorded_times(std::span<const double> grid, std::size_t stride);

std::uint64_t coefficient_stream(std::size_t trajectory);
std::uint64_t noise_stream(std::size_t trajectory);
std::uint64_t initial_state_stream(std::size_t trajectory);

// Initial state of trajectory j.
Vector initial_state(const OUSimConfig& cfg, std::size_t trajectory);

// The r-vector xi_k of standard normals for step k.
void noise_increment(const RandomStream& noise, std::size_t step, Vector& xi);

// Single-trajectory drivers on a given coefficient path; the path grid is the time grid.
TrajectoryOutput simulate_em_on_path(const PathRealization& path, const Vector& x0, std::uint64_t seed,
                                     std::uint64_t noise_stream_id, std::size_t record_stride = 1);
TrajectoryOutput simulate_formula_on_path(const PathRealization& path, const Vector& x0, std::uint64_t seed,
                                          std::uint64_t noise_stream_id, std::size_t record_stride = 1,
                                          double tol = 1e-10);

// X_{k+1} = X_k + A_k X_k dt + B_k^{1/2} sqrt(dt) xi_k.
std::vector<TrajectoryOutput> simulate_em(const OUSimConfig& cfg);
// X_{k+1} = E_{t_k,t_{k+1}} (X_k + B_k^{1/2} sqrt(dt) xi_k), which unrolls to
// E_{0,t} x0 + sum_k E_{t_k,t} B_k^{1/2} sqrt(dt) xi_k.
std::vector<TrajectoryOutput> simulate_formula(const OUSimConfig& cfg);
std::vector<TrajectoryOutput> simulate(const OUSimConfig& cfg);

// E_{0,t} C0 E_{0,t}^T + int_0^t E_{u,t} B_u E_{u,t}^T du given the realized
// path, by the trapezoidal rule on the path grid. t must be a grid node.
PsdMatrix conditional_covariance(const PathRealization& path, const PsdMatrix& c0, double t, double tol = 1e-10);

// ||X^{x1}_t - X^{x2}_t|| at every grid node for trajectory `trajectory` of
// cfg. Both copies share the coefficient path and the noise, which cancels,
// so the difference is propagated directly and does not depend on B.
std::vector<double> coupled_pair(const OUSimConfig& cfg, const Vector& x1, const Vector& x2,
                                 std::size_t trajectory = 0);

}  // namespace rou
