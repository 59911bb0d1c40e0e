/*
  Random coefficient processes (A_t^eps, B_t^eps).

  A_t^eps = A_t + eps * dA_t where A is a deterministic (H0) flow and dA is a
  zero-mean matrix process with iid entries drawn from one of three built-in
  laws. B_t^eps is either a constant PSD matrix or a polynomial of A_t^eps.
  Realizations are pure functions of (spec, grid, seed, stream id).
*/
#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "rou/flows.hpp"
#include "rou/linalg.hpp"

namespace rou {

enum class PerturbationKind { EntrywiseOu, PiecewiseConstantJump, FrozenGaussian };

struct PerturbationModel {
  PerturbationKind kind = PerturbationKind::FrozenGaussian;
  double rate = 1.0;   // theta (mean reversion) or lambda (jump rate); unused for frozen
  double sigma = 1.0;  // OU volatility, or stationary entry std for jump / frozen

  static PerturbationModel entrywise_ou(double theta, double sigma);
  static PerturbationModel piecewise_jump(double rate, double sigma);
  static PerturbationModel frozen_gaussian(double sigma);

  // Stationary standard deviation of each entry of dA.
  double entry_std() const;
};

std::string to_string(PerturbationKind kind);

enum class DiffusionKind { ConstantPsd, DriftCoupled };

struct DiffusionModel {
  DiffusionKind kind = DiffusionKind::ConstantPsd;
  PsdMatrix b0;        // constant-psd
  double beta = 0.0;   // drift-coupled: B = beta (I + gamma sym(A)^2)
  double gamma = 0.0;

  static DiffusionModel constant(PsdMatrix b0);
  static DiffusionModel drift_coupled(double beta, double gamma);

  PsdMatrix evaluate(const Matrix& drift) const;
};

struct CoefficientProcessSpec {
  std::shared_ptr<const H0Source> flow;
  PerturbationModel perturbation;
  DiffusionModel diffusion;
  double epsilon = 0.0;

  std::size_t dim() const { return flow->dim(); }
  // Throws InvalidArgument on dimension mismatch or eps outside [0, 1].
  void validate() const;
  CoefficientProcessSpec with_epsilon(double eps) const;
};

enum class Interpolation { Linear, LeftConstant };

// A realized coefficient path on a time grid. As a DriftSource it is linearly
// interpolated between nodes (continuous kinds) or held at the left node
// value (jump kind; the right end of a segment is its left limit).
class PathRealization final : public DriftSource {
 public:
  PathRealization() = default;
  PathRealization(std::vector<double> grid, std::vector<Matrix> a_values, std::vector<PsdMatrix> b_values,
                  Interpolation interpolation, std::uint64_t seed, std::uint64_t stream_id);

  std::size_t dim() const override { return a_values_.front().dim(); }
  std::vector<double> pieces(double s, double t) const override;
  void eval(double u, double piece_start, Matrix& out) const override;
  double norm_bound(double s, double t) const override;
  double horizon() const override { return grid_.back(); }

  const std::vector<double>& grid() const { return grid_; }
  const std::vector<Matrix>& a_values() const { return a_values_; }
  const std::vector<PsdMatrix>& b_values() const { return b_values_; }
  Interpolation interpolation() const { return interpolation_; }
  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  // Index of the node equal to t (within 1e-9 relative), or GridExceeded/InvalidArgument.
  std::size_t node_index(double t) const;

 private:
  std::size_t segment_of(double piece_start) const;

  std::vector<double> grid_;
  std::vector<Matrix> a_values_;
  std::vector<PsdMatrix> b_values_;
  std::vector<double> node_norms_;
  Interpolation interpolation_ = Interpolation::Linear;
  std::uint64_t seed_ = 0;
  std::uint64_t stream_id_ = 0;
};

// A_t + offset for a constant offset matrix: the exact coefficient path of the
// frozen-gaussian kind, with no grid interpolation.
class PerturbedFlow final : public DriftSource {
 public:
  PerturbedFlow(std::shared_ptr<const H0Source> base, Matrix offset);

  std::size_t dim() const override { return base_->dim(); }
  std::vector<double> pieces(double s, double t) const override { return base_->pieces(s, t); }
  void eval(double u, double piece_start, Matrix& out) const override;
  double norm_bound(double s, double t) const override { return base_->norm_bound(s, t) + offset_norm_; }
  double horizon() const override { return base_->horizon(); }

  const Matrix& offset() const { return offset_; }

 private:
  std::shared_ptr<const H0Source> base_;
  Matrix offset_;
  double offset_norm_;
};

// t_0 = 0, t_k = k dt, last node exactly `horizon`. Throws if horizon is not a
// multiple of dt within 1e-12 relative.
std::vector<double> uniform_grid(double horizon, double dt);
void validate_grid(std::span<const double> grid);

// dA at the grid nodes for one (seed, stream_id).
std::vector<Matrix> sample_perturbation(const PerturbationModel& model, std::size_t dim, std::span<const double> grid,
                                        std::uint64_t seed, std::uint64_t stream_id);

// A^eps_k = A(t_k) + eps dA_k, B_k from the diffusion model. Reuses `perturbation`
// so several eps values can be coupled on the same randomness.
PathRealization realize_path(const CoefficientProcessSpec& spec, std::span<const double> grid,
                             std::span<const Matrix> perturbation, double epsilon, std::uint64_t seed,
                             std::uint64_t stream_id);

PathRealization sample_coefficient_path(const CoefficientProcessSpec& spec, std::span<const double> grid,
                                        std::uint64_t seed, std::uint64_t stream_id);

struct HypothesisEstimates {
  std::vector<int> n_list;
  std::vector<double> c_n_hat;      // sup_t E(||dA_t||^n)^{1/n}, isotonic in n
  std::vector<double> c_n_stderr;
  std::vector<double> h2_raw;       // sup_t E(||A^eps_t||^n)^{1/n}
  double d1_hat = 0.0;
  double d2_hat = 0.0;
  std::vector<double> rho_n_hat;    // sup_t E[tr(B_t)^n]^{1/n}
  std::vector<double> eps_n;        // declared validity thresholds (default 1)
  std::size_t sample_count = 0;
  double grid_horizon = 0.0;
  double epsilon = 0.0;

  // Lookups by moment order; throw InvalidArgument if n is not tabulated.
  double c(int n) const;
  double rho(int n) const;
  double eps_valid(int n) const;
  bool has(int n) const;
};

HypothesisEstimates estimate_h1_constants(const CoefficientProcessSpec& spec, std::span<const int> n_list,
                                          std::size_t samples, std::span<const double> grid, std::uint64_t seed);
// FitDegenerate if n_list has fewer than 2 entries.
HypothesisEstimates estimate_h2_constants(const CoefficientProcessSpec& spec, std::span<const int> n_list,
                                          std::size_t samples, std::span<const double> grid, std::uint64_t seed);
std::vector<double> estimate_rho_n(const CoefficientProcessSpec& spec, std::span<const int> n_list,
                                   std::size_t samples, std::span<const double> grid, std::uint64_t seed);

// All of the above from a single batch of sampled paths.
HypothesisEstimates estimate_hypotheses(const CoefficientProcessSpec& spec, std::span<const int> n_list,
                                        std::size_t samples, std::span<const double> grid, std::uint64_t seed);

// Nonnegative least squares fit of y ~ d1 + eps d2 sqrt(n).
struct H2Fit {
  double d1 = 0.0;
  double d2 = 0.0;
};
H2Fit fit_h2_line(std::span<const int> n_list, std::span<const double> raw, double epsilon);

}  // namespace rou
