#include "rou/random_coeffs.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rou/error.hpp"
#include "rou/parallel.hpp"
#include "rou/rng.hpp"
#include "rou/stats.hpp"

namespace rou {

PerturbationModel PerturbationModel::entrywise_ou(double theta, double sigma) {
  require(std::isfinite(theta) && theta > 0.0, ErrorCode::InvalidArgument, "OU theta must be > 0");
  require(std::isfinite(sigma) && sigma >= 0.0, ErrorCode::InvalidArgument, "OU sigma must be >= 0");
  return {PerturbationKind::EntrywiseOu, theta, sigma};
}

PerturbationModel PerturbationModel::piecewise_jump(double rate, double sigma) {
  require(std::isfinite(rate) && rate > 0.0, ErrorCode::InvalidArgument, "jump rate must be > 0");
  require(std::isfinite(sigma) && sigma >= 0.0, ErrorCode::InvalidArgument, "jump sigma must be >= 0");
  return {PerturbationKind::PiecewiseConstantJump, rate, sigma};
}

PerturbationModel PerturbationModel::frozen_gaussian(double sigma) {
  require(std::isfinite(sigma) && sigma >= 0.0, ErrorCode::InvalidArgument, "frozen sigma must be >= 0");
  return {PerturbationKind::FrozenGaussian, 1.0, sigma};
}

double PerturbationModel::entry_std() const {
  if (kind == PerturbationKind::EntrywiseOu) return sigma / std::sqrt(2.0 * rate);
  return sigma;
}

std::string to_string(PerturbationKind kind) {
  switch (kind) {
    case PerturbationKind::EntrywiseOu: return "entrywise-ou";
    case PerturbationKind::PiecewiseConstantJump: return "piecewise-constant-jump";
    case PerturbationKind::FrozenGaussian: return "frozen-gaussian";
  }
  return "unknown";
}

DiffusionModel DiffusionModel::constant(PsdMatrix b0) {
  DiffusionModel d;
  d.kind = DiffusionKind::ConstantPsd;
  d.b0 = std::move(b0);
  return d;
}

DiffusionModel DiffusionModel::drift_coupled(double beta, double gamma) {
  require(std::isfinite(beta) && beta >= 0.0, ErrorCode::InvalidArgument, "beta must be >= 0");
  require(std::isfinite(gamma) && gamma >= 0.0, ErrorCode::InvalidArgument, "gamma must be >= 0");
  DiffusionModel d;
  d.kind = DiffusionKind::DriftCoupled;
  d.beta = beta;
  d.gamma = gamma;
  return d;
}

PsdMatrix DiffusionModel::evaluate(const Matrix& drift) const {
  if (kind == DiffusionKind::ConstantPsd) return b0;
  const Matrix s = sym_part(drift);
  // s * s is bitwise symmetric for symmetric s, and PSD.
  Matrix out = s * s;
  out *= gamma;
  for (std::size_t i = 0; i < out.dim(); ++i) out(i, i) += 1.0;
  out *= beta;
  return PsdMatrix::trusted(std::move(out));
}

void CoefficientProcessSpec::validate() const {
  require(flow != nullptr, ErrorCode::InvalidArgument, "coefficient spec needs a flow");
  require(std::isfinite(epsilon) && epsilon >= 0.0 && epsilon <= 1.0, ErrorCode::InvalidArgument,
          "epsilon must lie in [0, 1]");
  require(perturbation.sigma >= 0.0 && perturbation.rate > 0.0, ErrorCode::InvalidArgument,
          "perturbation needs sigma >= 0 and rate > 0");
  if (diffusion.kind == DiffusionKind::ConstantPsd) {
    require(diffusion.b0.dim() == flow->dim(), ErrorCode::InvalidArgument, "B dimension does not match the flow");
  } else {
    require(diffusion.beta >= 0.0 && diffusion.gamma >= 0.0, ErrorCode::InvalidArgument,
            "drift-coupled diffusion needs beta, gamma >= 0");
  }
}

CoefficientProcessSpec CoefficientProcessSpec::with_epsilon(double eps) const {
  CoefficientProcessSpec out = *this;
  out.epsilon = eps;
  out.validate();
  return out;
}

PathRealization::PathRealization(std::vector<double> grid, std::vector<Matrix> a_values,
                                 std::vector<PsdMatrix> b_values, Interpolation interpolation, std::uint64_t seed,
                                 std::uint64_t stream_id)
    : grid_(std::move(grid)),
      a_values_(std::move(a_values)),
      b_values_(std::move(b_values)),
      interpolation_(interpolation),
      seed_(seed),
      stream_id_(stream_id) {
  validate_grid(grid_);
  require(a_values_.size() == grid_.size(), ErrorCode::InvalidArgument, "A values must align with the grid");
  require(b_values_.empty() || b_values_.size() == grid_.size(), ErrorCode::InvalidArgument,
          "B values must align with the grid");
  node_norms_.reserve(a_values_.size());
  for (const Matrix& a : a_values_) {
    require(a.dim() == a_values_.front().dim(), ErrorCode::InvalidArgument, "A values must share one dimension");
    node_norms_.push_back(spectral_norm(a));
  }
}

std::size_t PathRealization::segment_of(double piece_start) const {
  const double tol = 1e-12 * (1.0 + std::abs(piece_start));
  auto it = std::upper_bound(grid_.begin(), grid_.end(), piece_start + tol);
  std::ptrdiff_t k = (it - grid_.begin()) - 1;
  k = std::clamp<std::ptrdiff_t>(k, 0, static_cast<std::ptrdiff_t>(grid_.size()) - 2);
  return static_cast<std::size_t>(k);
}

std::vector<double> PathRealization::pieces(double s, double t) const {
  std::vector<double> out{s};
  auto first = std::upper_bound(grid_.begin(), grid_.end(), s);
  auto last = std::lower_bound(grid_.begin(), grid_.end(), t);
  if (first < last) out.insert(out.end(), first, last);
  out.push_back(t);
  return out;
}

void PathRealization::eval(double u, double piece_start, Matrix& out) const {
  if (u < grid_.front() - 1e-12 * (1.0 + std::abs(grid_.front())) ||
      u > grid_.back() + 1e-12 * (1.0 + std::abs(grid_.back())))
    throw Error(ErrorCode::GridExceeded, "time " + std::to_string(u) + " outside the realized grid");
  const std::size_t k = segment_of(piece_start);
  out = a_values_[k];
  if (interpolation_ == Interpolation::LeftConstant) return;
  const double w = (u - grid_[k]) / (grid_[k + 1] - grid_[k]);
  out *= 1.0 - w;
  axpy(out, w, a_values_[k + 1]);
}

double PathRealization::norm_bound(double s, double t) const {
  // Segments k with grid[k] <= t and grid[k + 1] >= s.
  const auto k_lo = static_cast<std::size_t>(std::lower_bound(grid_.begin() + 1, grid_.end(), s) - grid_.begin()) - 1;
  const auto k_end = static_cast<std::size_t>(std::upper_bound(grid_.begin(), grid_.end(), t) - grid_.begin());
  const std::size_t k_hi = std::min(k_end, grid_.size() - 1);
  double m = 0.0;
  for (std::size_t k = k_lo; k < k_hi; ++k) m = std::max({m, node_norms_[k], node_norms_[k + 1]});
  return m;
}

std::size_t PathRealization::node_index(double t) const {
  require(t <= grid_.back() * (1.0 + 1e-9) + 1e-12, ErrorCode::GridExceeded, "time beyond the realized grid");
  auto it = std::lower_bound(grid_.begin(), grid_.end(), t - 1e-9 * (1.0 + std::abs(t)));
  require(it != grid_.end() && std::abs(*it - t) <= 1e-9 * (1.0 + std::abs(t)), ErrorCode::InvalidArgument,
          "time " + std::to_string(t) + " is not a grid node");
  return static_cast<std::size_t>(it - grid_.begin());
}

PerturbedFlow::PerturbedFlow(std::shared_ptr<const H0Source> base, Matrix offset)
    : base_(std::move(base)), offset_(std::move(offset)) {
  require(base_ != nullptr && offset_.dim() == base_->dim(), ErrorCode::InvalidArgument,
          "offset must match the base flow");
  offset_norm_ = spectral_norm(offset_);
}

void PerturbedFlow::eval(double u, double piece_start, Matrix& out) const {
  base_->eval(u, piece_start, out);
  axpy(out, 1.0, offset_);
}

std::vector<double> uniform_grid(double horizon, double dt) {
  require(std::isfinite(horizon) && horizon > 0.0 && std::isfinite(dt) && dt > 0.0, ErrorCode::InvalidArgument,
          "grid needs horizon > 0 and dt > 0");
  const double steps = std::round(horizon / dt);
  require(steps >= 1.0 && std::abs(steps * dt - horizon) <= 1e-9 * horizon, ErrorCode::InvalidArgument,
          "horizon is not a multiple of dt");
  const auto k_max = static_cast<std::size_t>(steps);
  std::vector<double> grid(k_max + 1);
  for (std::size_t k = 0; k < k_max; ++k) grid[k] = static_cast<double>(k) * dt;
  grid[k_max] = horizon;
  return grid;
}

void validate_grid(std::span<const double> grid) {
  require(grid.size() >= 2, ErrorCode::InvalidArgument, "grid needs at least 2 nodes");
  require(std::isfinite(grid.front()) && grid.front() >= 0.0, ErrorCode::InvalidArgument, "grid must start at t >= 0");
  for (std::size_t k = 1; k < grid.size(); ++k)
    require(std::isfinite(grid[k]) && grid[k] > grid[k - 1], ErrorCode::InvalidArgument,
            "grid must be strictly increasing");
}

std::vector<Matrix> sample_perturbation(const PerturbationModel& model, std::size_t dim, std::span<const double> grid,
                                        std::uint64_t seed, std::uint64_t stream_id) {
  validate_grid(grid);
  const std::size_t nodes = grid.size();
  std::vector<Matrix> out(nodes, Matrix(dim));
  if (model.sigma == 0.0) return out;

  for (std::size_t e = 0; e < dim * dim; ++e) {
    const RandomStream rs(seed, stream_id, e);
    const std::size_t i = e / dim;
    const std::size_t j = e % dim;
    switch (model.kind) {
      case PerturbationKind::FrozenGaussian: {
        const double v = model.sigma * rs.normal(0);
        for (std::size_t k = 0; k < nodes; ++k) out[k](i, j) = v;
        break;
      }
      case PerturbationKind::EntrywiseOu: {
        const double sd = model.entry_std();
        double x = sd * rs.normal(0);
        out[0](i, j) = x;
        for (std::size_t k = 1; k < nodes; ++k) {
          const double phi = std::exp(-model.rate * (grid[k] - grid[k - 1]));
          x = phi * x + sd * std::sqrt(-std::expm1(-2.0 * model.rate * (grid[k] - grid[k - 1]))) * rs.normal(k);
          out[k](i, j) = x;
        }
        break;
      }
      case PerturbationKind::PiecewiseConstantJump: {
        // Jump j >= 1: waiting time from block 2j, new level from block 2j+1.
        // The path does not depend on the grid.
        double value = model.sigma * rs.normal(1);
        std::uint64_t jump = 1;
        double next = grid.front() - std::log(rs.uniform(2 * jump)) / model.rate;
        for (std::size_t k = 0; k < nodes; ++k) {
          while (next <= grid[k]) {
            value = model.sigma * rs.normal(2 * jump + 1);
            ++jump;
            next -= std::log(rs.uniform(2 * jump)) / model.rate;
          }
          out[k](i, j) = value;
        }
        break;
      }
    }
  }
  return out;
}

PathRealization realize_path(const CoefficientProcessSpec& spec, std::span<const double> grid,
                             std::span<const Matrix> perturbation, double epsilon, std::uint64_t seed,
                             std::uint64_t stream_id) {
  require(perturbation.size() == grid.size(), ErrorCode::InvalidArgument, "perturbation must align with the grid");
  require(grid.back() <= spec.flow->horizon() * (1.0 + 1e-12), ErrorCode::GridExceeded,
          "grid extends beyond the flow");
  std::vector<Matrix> a;
  std::vector<PsdMatrix> b;
  a.reserve(grid.size());
  b.reserve(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    Matrix ak = spec.flow->at(grid[k]);
    if (epsilon != 0.0) axpy(ak, epsilon, perturbation[k]);
    b.push_back(spec.diffusion.evaluate(ak));
    a.push_back(std::move(ak));
  }
  const Interpolation interp = spec.perturbation.kind == PerturbationKind::PiecewiseConstantJump
                                   ? Interpolation::LeftConstant
                                   : Interpolation::Linear;
  return PathRealization(std::vector<double>(grid.begin(), grid.end()), std::move(a), std::move(b), interp, seed,
                         stream_id);
}

PathRealization sample_coefficient_path(const CoefficientProcessSpec& spec, std::span<const double> grid,
                                        std::uint64_t seed, std::uint64_t stream_id) {
  spec.validate();
  const std::vector<Matrix> da = sample_perturbation(spec.perturbation, spec.dim(), grid, seed, stream_id);
  return realize_path(spec, grid, da, spec.epsilon, seed, stream_id);
}

namespace {

std::size_t index_of(const std::vector<int>& n_list, int n) {
  auto it = std::find(n_list.begin(), n_list.end(), n);
  require(it != n_list.end(), ErrorCode::InvalidArgument, "moment order " + std::to_string(n) + " not estimated");
  return static_cast<std::size_t>(it - n_list.begin());
}

void check_n_list(std::span<const int> n_list) {
  require(!n_list.empty(), ErrorCode::InvalidArgument, "n_list must not be empty");
  for (std::size_t i = 0; i < n_list.size(); ++i) {
    require(n_list[i] >= 1, ErrorCode::InvalidArgument, "moment orders must be >= 1");
    if (i > 0) require(n_list[i] > n_list[i - 1], ErrorCode::InvalidArgument, "n_list must be increasing");
  }
}

// sup over grid nodes of the n-th moment root of column k of a samples x nodes table.
MeanEstimate sup_moment_root(const std::vector<double>& table, std::size_t samples, std::size_t nodes, int n) {
  MeanEstimate best;
  std::vector<double> column(samples);
  for (std::size_t k = 0; k < nodes; ++k) {
    for (std::size_t j = 0; j < samples; ++j) column[j] = table[j * nodes + k];
    const MeanEstimate m = moment_root(column, n);
    if (k == 0 || m.mean > best.mean) best = m;
  }
  return best;
}

}  // namespace

bool HypothesisEstimates::has(int n) const { return std::find(n_list.begin(), n_list.end(), n) != n_list.end(); }
double HypothesisEstimates::c(int n) const { return c_n_hat.at(index_of(n_list, n)); }
double HypothesisEstimates::rho(int n) const { return rho_n_hat.at(index_of(n_list, n)); }
double HypothesisEstimates::eps_valid(int n) const { return eps_n.at(index_of(n_list, n)); }

H2Fit fit_h2_line(std::span<const int> n_list, std::span<const double> raw, double epsilon) {
  require(n_list.size() == raw.size(), ErrorCode::InvalidArgument, "fit inputs must align");
  require(n_list.size() >= 2, ErrorCode::FitDegenerate, "H2 fit needs at least two moment orders");
  const std::size_t m = raw.size();
  double mean_y = 0.0;
  for (double y : raw) mean_y += y;
  mean_y /= static_cast<double>(m);
  if (epsilon == 0.0) return {std::max(0.0, mean_y), 0.0};

  std::vector<double> x(m);
  for (std::size_t i = 0; i < m; ++i) x[i] = epsilon * std::sqrt(static_cast<double>(n_list[i]));
  auto rss = [&](double d1, double d2) {
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i) s += (raw[i] - d1 - d2 * x[i]) * (raw[i] - d1 - d2 * x[i]);
    return s;
  };
  const LinearFit ls = ols_fit(x, raw);
  if (ls.intercept >= 0.0 && ls.slope >= 0.0) return {ls.intercept, ls.slope};
  // Active-set candidates on the two faces of the nonnegative quadrant.
  H2Fit only_d1{std::max(0.0, mean_y), 0.0};
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    sxy += x[i] * raw[i];
    sxx += x[i] * x[i];
  }
  H2Fit only_d2{0.0, std::max(0.0, sxy / sxx)};
  return rss(only_d1.d1, only_d1.d2) <= rss(only_d2.d1, only_d2.d2) ? only_d1 : only_d2;
}

HypothesisEstimates estimate_hypotheses(const CoefficientProcessSpec& spec, std::span<const int> n_list,
                                        std::size_t samples, std::span<const double> grid, std::uint64_t seed) {
  spec.validate();
  check_n_list(n_list);
  validate_grid(grid);
  require(samples >= 2, ErrorCode::InvalidArgument, "estimation needs at least 2 samples");
  const std::size_t nodes = grid.size();
  const std::size_t dim = spec.dim();

  std::vector<Matrix> base(nodes);
  for (std::size_t k = 0; k < nodes; ++k) base[k] = spec.flow->at(grid[k]);

  std::vector<double> da_norm(samples * nodes);
  std::vector<double> a_norm(samples * nodes);
  std::vector<double> b_trace(samples * nodes);
  parallel_for(samples, [&](std::size_t j) {
    const std::uint64_t stream = derive_stream(StreamDomain::Coefficients, j);
    const std::vector<Matrix> da = sample_perturbation(spec.perturbation, dim, grid, seed, stream);
    Matrix ak(dim);
    for (std::size_t k = 0; k < nodes; ++k) {
      ak = base[k];
      if (spec.epsilon != 0.0) axpy(ak, spec.epsilon, da[k]);
      da_norm[j * nodes + k] = spectral_norm(da[k]);
      a_norm[j * nodes + k] = spectral_norm(ak);
      b_trace[j * nodes + k] = std::max(0.0, spec.diffusion.evaluate(ak).trace());
    }
  });

  HypothesisEstimates out;
  out.n_list.assign(n_list.begin(), n_list.end());
  out.sample_count = samples;
  out.grid_horizon = grid.back();
  out.epsilon = spec.epsilon;
  out.eps_n.assign(n_list.size(), 1.0);
  std::vector<double> c_raw;
  for (int n : n_list) {
    const MeanEstimate c = sup_moment_root(da_norm, samples, nodes, n);
    c_raw.push_back(c.mean);
    out.c_n_stderr.push_back(c.std_error);
    out.h2_raw.push_back(sup_moment_root(a_norm, samples, nodes, n).mean);
    out.rho_n_hat.push_back(sup_moment_root(b_trace, samples, nodes, n).mean);
  }
  out.c_n_hat = isotonic_nondecreasing(c_raw);
  if (n_list.size() >= 2) {
    const H2Fit fit = fit_h2_line(n_list, out.h2_raw, spec.epsilon);
    out.d1_hat = fit.d1;
    out.d2_hat = fit.d2;
  } else {
    // A single order cannot separate the two constants; attribute it all to d1.
    out.d1_hat = out.h2_raw.front();
    out.d2_hat = 0.0;
  }
  return out;
}

HypothesisEstimates estimate_h1_constants(const CoefficientProcessSpec& spec, std::span<const int> n_list,
                                          std::size_t samples, std::span<const double> grid, std::uint64_t seed) {
  require(samples >= 100, ErrorCode::InvalidArgument, "constant estimation needs >= 100 samples");
  require(spec.epsilon > 0.0, ErrorCode::InvalidArgument, "H1 estimation needs epsilon > 0");
  return estimate_hypotheses(spec, n_list, samples, grid, seed);
}

HypothesisEstimates estimate_h2_constants(const CoefficientProcessSpec& spec, std::span<const int> n_list,
                                          std::size_t samples, std::span<const double> grid, std::uint64_t seed) {
  require(n_list.size() >= 2, ErrorCode::FitDegenerate, "H2 fit needs at least two moment orders");
  require(samples >= 100, ErrorCode::InvalidArgument, "constant estimation needs >= 100 samples");
  return estimate_hypotheses(spec, n_list, samples, grid, seed);
}

std::vector<double> estimate_rho_n(const CoefficientProcessSpec& spec, std::span<const int> n_list,
                                   std::size_t samples, std::span<const double> grid, std::uint64_t seed) {
  require(samples >= 100, ErrorCode::InvalidArgument, "constant estimation needs >= 100 samples");
  return estimate_hypotheses(spec, n_list, samples, grid, seed).rho_n_hat;
}

}  // namespace rou
