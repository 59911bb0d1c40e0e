#include "rou/sde.hpp"

#include <cmath>
#include <string>

#include "rou/error.hpp"
#include "rou/parallel.hpp"
#include "rou/propagator.hpp"
#include "rou/rng.hpp"

namespace rou {

namespace {

// Node-wise B^{1/2}; one root when the diffusion is constant.
class DiffusionRoots {
 public:
  explicit DiffusionRoots(const PathRealization& path) {
    const auto& b = path.b_values();
    bool constant = true;
    for (std::size_t k = 1; k < b.size() && constant; ++k) constant = b[k].matrix() == b[0].matrix();
    if (constant) {
      roots_.push_back(principal_sqrt(b[0]).matrix());
    } else {
      roots_.reserve(b.size());
      for (const PsdMatrix& bk : b) roots_.push_back(principal_sqrt(bk).matrix());
    }
  }

  const Matrix& at(std::size_t k) const { return roots_.size() == 1 ? roots_[0] : roots_[k]; }

 private:
  std::vector<Matrix> roots_;
};

bool is_recorded(std::size_t k, std::size_t last, std::size_t stride) { return k % stride == 0 || k == last; }

void check_path(const PathRealization& path, const Vector& x0, std::size_t stride) {
  require(x0.size() == path.dim(), ErrorCode::InvalidArgument, "initial state dimension mismatch");
  require(stride >= 1, ErrorCode::InvalidArgument, "record stride must be >= 1");
  require(path.b_values().size() == path.grid().size(), ErrorCode::InvalidArgument, "path has no diffusion values");
}

}  // namespace

std::uint64_t coefficient_stream(std::size_t trajectory) {
  return derive_stream(StreamDomain::Coefficients, trajectory);
}
std::uint64_t noise_stream(std::size_t trajectory) { return derive_stream(StreamDomain::Noise, trajectory); }
std::uint64_t initial_state_stream(std::size_t trajectory) {
  return derive_stream(StreamDomain::InitialState, trajectory);
}

void validate_config(const OUSimConfig& cfg) {
  cfg.spec.validate();
  const std::size_t r = cfg.spec.dim();
  require(!cfg.x0_list.empty(), ErrorCode::InvalidArgument, "x0_list must not be empty");
  for (const Vector& x : cfg.x0_list) require(x.size() == r, ErrorCode::InvalidArgument, "x0 dimension mismatch");
  require(cfg.initial_cov.dim() == 0 || cfg.initial_cov.dim() == r, ErrorCode::InvalidArgument,
          "initial covariance dimension mismatch");
  require(std::isfinite(cfg.dt) && cfg.dt > 0.0, ErrorCode::InvalidArgument, "dt must be > 0");
  require(std::isfinite(cfg.horizon) && cfg.horizon > 0.0, ErrorCode::InvalidArgument, "horizon must be > 0");
  require(cfg.num_traj >= 1, ErrorCode::InvalidArgument, "num_traj must be >= 1");
  require(cfg.record_stride >= 1, ErrorCode::InvalidArgument, "record_stride must be >= 1");
  require(cfg.propagator_tol > 0.0, ErrorCode::InvalidArgument, "propagator tolerance must be > 0");

  const double a_bound = cfg.spec.flow->norm_bound(0.0, cfg.horizon) +
                         2.0 * cfg.spec.epsilon * cfg.spec.perturbation.entry_std() * std::sqrt(static_cast<double>(r));
  require(cfg.dt * a_bound <= 0.5, ErrorCode::StepTooLarge,
          "dt * ||A|| estimate = " + std::to_string(cfg.dt * a_bound) + " exceeds 0.5");
  simulation_grid(cfg);
}

std::vector<double> simulation_grid(const OUSimConfig& cfg) { return uniform_grid(cfg.horizon, cfg.dt); }

std::vector<double> recorded_times(std::span<const double> grid, std::size_t stride) {
  std::vector<double> out;
  for (std::size_t k = 0; k < grid.size(); ++k)
    if (is_recorded(k, grid.size() - 1, stride)) out.push_back(grid[k]);
  return out;
}

Vector initial_state(const OUSimConfig& cfg, std::size_t trajectory) {
  Vector x = cfg.x0_list[trajectory % cfg.x0_list.size()];
  if (cfg.initial_cov.dim() == 0) return x;
  const Matrix root = principal_sqrt(cfg.initial_cov).matrix();
  const RandomStream rs(cfg.seed, initial_state_stream(trajectory));
  Vector xi(x.size());
  noise_increment(rs, 0, xi);
  const Vector shift = root * xi;
  for (std::size_t i = 0; i < x.size(); ++i) x[i] += shift[i];
  return x;
}

void noise_increment(const RandomStream& noise, std::size_t step, Vector& xi) {
  const std::size_t r = xi.size();
  const std::uint64_t first = static_cast<std::uint64_t>(step) * r;
  for (std::size_t i = 0; i < r; ++i) {
    const std::uint64_t q = first + i;
    xi[i] = noise.normals(q / 2)[q % 2];
  }
}

TrajectoryOutput simulate_em_on_path(const PathRealization& path, const Vector& x0, std::uint64_t seed,
                                     std::uint64_t noise_stream_id, std::size_t record_stride) {
  check_path(path, x0, record_stride);
  const auto& grid = path.grid();
  const std::size_t last = grid.size() - 1;
  const DiffusionRoots roots(path);
  const RandomStream noise(seed, noise_stream_id);

  TrajectoryOutput out;
  out.times = recorded_times(grid, record_stride);
  out.coefficient_stream_id = path.stream_id();
  out.noise_stream_id = noise_stream_id;
  out.states.reserve(out.times.size());
  out.states.push_back(x0);

  const std::size_t r = path.dim();
  Vector x = x0, drift(r), xi(r), kick(r);
  for (std::size_t k = 0; k < last; ++k) {
    const double dt = grid[k + 1] - grid[k];
    const double sq = std::sqrt(dt);
    multiply_into(drift, path.a_values()[k], x);
    noise_increment(noise, k, xi);
    multiply_into(kick, roots.at(k), xi);
    for (std::size_t i = 0; i < r; ++i) x[i] += drift[i] * dt + kick[i] * sq;
    if (is_recorded(k + 1, last, record_stride)) out.states.push_back(x);
  }
  return out;
}

TrajectoryOutput simulate_formula_on_path(const PathRealization& path, const Vector& x0, std::uint64_t seed,
                                          std::uint64_t noise_stream_id, std::size_t record_stride, double tol) {
  check_path(path, x0, record_stride);
  const auto& grid = path.grid();
  const std::size_t last = grid.size() - 1;
  const DiffusionRoots roots(path);
  const RandomStream noise(seed, noise_stream_id);

  TrajectoryOutput out;
  out.times = recorded_times(grid, record_stride);
  out.coefficient_stream_id = path.stream_id();
  out.noise_stream_id = noise_stream_id;
  out.states.reserve(out.times.size());
  out.states.push_back(x0);

  const std::size_t r = path.dim();
  const std::vector<Matrix> steps = step_propagators(path, grid, tol);
  Vector x = x0, xi(r), kick(r);
  for (std::size_t k = 0; k < last; ++k) {
    const double sq = std::sqrt(grid[k + 1] - grid[k]);
    noise_increment(noise, k, xi);
    multiply_into(kick, roots.at(k), xi);
    for (std::size_t i = 0; i < r; ++i) x[i] += kick[i] * sq;
    multiply_into(kick, steps[k], x);
    x.swap(kick);
    if (is_recorded(k + 1, last, record_stride)) out.states.push_back(x);
  }
  return out;
}

namespace {

std::vector<TrajectoryOutput> run(const OUSimConfig& cfg, SimMethod method) {
  validate_config(cfg);
  const std::vector<double> grid = simulation_grid(cfg);
  std::vector<TrajectoryOutput> out(cfg.num_traj);
  parallel_for(cfg.num_traj, [&](std::size_t j) {
    const PathRealization path = sample_coefficient_path(cfg.spec, grid, cfg.seed, coefficient_stream(j));
    const Vector x0 = initial_state(cfg, j);
    out[j] = method == SimMethod::EulerMaruyama
                 ? simulate_em_on_path(path, x0, cfg.seed, noise_stream(j), cfg.record_stride)
                 : simulate_formula_on_path(path, x0, cfg.seed, noise_stream(j), cfg.record_stride, cfg.propagator_tol);
  });
  return out;
}

}  // namespace

std::vector<TrajectoryOutput> simulate_em(const OUSimConfig& cfg) { return run(cfg, SimMethod::EulerMaruyama); }
std::vector<TrajectoryOutput> simulate_formula(const OUSimConfig& cfg) { return run(cfg, SimMethod::SolutionFormula); }
std::vector<TrajectoryOutput> simulate(const OUSimConfig& cfg) { return run(cfg, cfg.method); }

PsdMatrix conditional_covariance(const PathRealization& path, const PsdMatrix& c0, double t, double tol) {
  require(c0.dim() == path.dim(), ErrorCode::InvalidArgument, "C0 dimension mismatch");
  require(path.b_values().size() == path.grid().size(), ErrorCode::InvalidArgument, "path has no diffusion values");
  const std::size_t end = path.node_index(t);
  const auto& grid = path.grid();
  const std::vector<Matrix> steps = step_propagators(path, std::span(grid).first(end + 1), tol);
  Matrix c = c0.matrix();
  Matrix tmp(path.dim());
  for (std::size_t k = 0; k < end; ++k) {
    const double half = 0.5 * (grid[k + 1] - grid[k]);
    axpy(c, half, path.b_values()[k].matrix());
    const Matrix& e = steps[k];
    multiply_into(tmp, e, c);
    multiply_into(c, tmp, e.transpose());
    axpy(c, half, path.b_values()[k + 1].matrix());
  }
  return PsdMatrix::trusted(sym_part(c));
}

std::vector<double> coupled_pair(const OUSimConfig& cfg, const Vector& x1, const Vector& x2, std::size_t trajectory) {
  validate_config(cfg);
  const std::size_t r = cfg.spec.dim();
  require(x1.size() == r && x2.size() == r, ErrorCode::InvalidArgument, "coupled_pair state dimension mismatch");
  const std::vector<double> grid = simulation_grid(cfg);
  const PathRealization path = sample_coefficient_path(cfg.spec, grid, cfg.seed, coefficient_stream(trajectory));

  Vector d(r), next(r);
  for (std::size_t i = 0; i < r; ++i) d[i] = x1[i] - x2[i];
  std::vector<double> out;
  out.reserve(grid.size());
  out.push_back(norm2(d));
  std::vector<Matrix> steps;
  if (cfg.method == SimMethod::SolutionFormula) steps = step_propagators(path, grid, cfg.propagator_tol);
  for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
    if (cfg.method == SimMethod::EulerMaruyama) {
      const double dt = grid[k + 1] - grid[k];
      multiply_into(next, path.a_values()[k], d);
      for (std::size_t i = 0; i < r; ++i) d[i] += next[i] * dt;
    } else {
      multiply_into(next, steps[k], d);
      d.swap(next);
    }
    out.push_back(norm2(d));
  }
  return out;
}

}  // namespace rou
