/*
  Explicit stability constants and Monte Carlo certificates for the random
  propagator E_{s,t}(A^eps) and the random OU process.

  Every certificate returns BoundReport rows. The verdict rule is one-sided
  with three standard errors: for an upper bound a row is certified when
  estimate + 3 SE <= bound, violated when estimate - 3 SE > bound, and
  inconclusive otherwise. Frequencies use a 3-SE Wilson interval instead.
*/
#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "rou/flows.hpp"
#include "rou/random_coeffs.hpp"
#include "rou/sde.hpp"

namespace rou {

// (4e + sqrt(2e)), the factor in d = (4e + sqrt(2e)) (d1 v d2).
double lemma_factor();

// eps_n(nu) = eps_n ^ nu^{1/n} c0 / (4 c_n).
double compute_eps_n_nu(double eps_n, double nu, int n, double c0, double c_n);

// T_n = (4 / c0) log(1 + (c_2n / c0) 2^{2 + n/2}).
double compute_Tn(int n, double c0, double c_2n);

struct TnEps {
  double value = 0.0;
  // 1 or 2: which of the two terms is the minimum; 0 when eps = 0 (value = +inf).
  int binding = 0;
  double first = 0.0;
  double second = 0.0;
};

// T_n^eps = log(1/eps^2) / (2 d + c0) ^ (1/eps^2) / (2 d2 n), d2 = 0 read as +inf.
// EpsilonOne for eps = 1, InvalidArgument outside [0, 1].
TnEps compute_Tn_eps(int n, double epsilon, double c0, double d1, double d2);

// Largest eps with T_n < T_n^eps (relative accuracy 1e-6); 0 if none in (1e-300, 1).
double eps_2n_threshold(int n, double c0, double c_2n, double d1, double d2);

struct TheoremWindow {
  int n = 1;
  double c0 = 0.0;
  double a = 0.0;
  double b = 0.0;
  HypothesisEstimates constants;
  double d1 = 0.0;
  double d2 = 0.0;
  double epsilon = 0.0;
  double nu = 0.5;
  double T_n = 0.0;
  TnEps T_n_eps;
  double eps_n_nu = 0.0;
  double eps_2n_threshold = 0.0;
  double d_const = 0.0;
  double cbar_n = 0.0;

  double mu() const { return -c0; }
  bool nonempty() const { return T_n < T_n_eps.value; }
};

// Needs c_n and c_2n in `constants`.
TheoremWindow make_window(int n, const H0Certificate& h0, const HypothesisEstimates& constants, double epsilon,
                          double nu);

// `points` equally spaced times in [lo, hi] (both ends included).
std::vector<double> window_grid(double lo, double hi, std::size_t points);

enum class Verdict { Certified, Violated, Inconclusive };
enum class BoundMode { Upper, Lower, Flat };

std::string to_string(Verdict v);

struct BoundReport {
  std::string quantity;
  int n = 0;
  double epsilon = 0.0;
  double t = 0.0;
  double bound = 0.0;
  double estimate = 0.0;
  double std_error = 0.0;
  std::size_t samples = 0;
  Verdict verdict = Verdict::Inconclusive;
  double margin = 0.0;
  // Interval the verdict was read from, and the bound direction.
  double lo = 0.0;
  double hi = 0.0;
  BoundMode mode = BoundMode::Upper;
};

// Verdict from an interval [lo, hi] around the estimate. Flat: certified when
// the interval contains `bound`, violated when it lies above it.
Verdict verdict_for(double lo, double hi, double bound, BoundMode mode);

// Row with the 3-SE interval.
BoundReport make_report(std::string quantity, int n, double epsilon, double t, double bound, double estimate,
                        double std_error, std::size_t samples, BoundMode mode);

// Re-reads the row with `bound` replaced by scale * bound (infinite bounds are kept).
void rescale_bound(BoundReport& r, double scale);

// Sets the interval of r and re-derives its verdict.
void set_interval(BoundReport& r, double lo, double hi);

struct CertifyOptions {
  std::size_t samples = 10000;
  std::uint64_t seed = 0;
  // Coefficient grid step for the non-frozen kinds.
  double dt = 0.01;
  double tol = 1e-8;
};

// Coefficient path j of spec on [0, horizon]. Frozen kinds use the exact
// A_t + eps dA; the others a realization on a dt grid covering the horizon.
std::shared_ptr<const DriftSource> coefficient_source(const CoefficientProcessSpec& spec, std::size_t j, double horizon,
                                                const CertifyOptions& opt);

// log ||E_{s,t_k}|| for every sample j (row j, column k).
std::vector<std::vector<double>> pathwise_log_norms(const CoefficientProcessSpec& spec, double s,
                                                    std::span<const double> times, const CertifyOptions& opt);

// Number of samples with max_k (1/t_k) log ||E_{s,t_k}|| < level.
std::size_t event_count(const CoefficientProcessSpec& spec, double s, std::span<const double> t_list, double level,
                        const CertifyOptions& opt);

// log ||E_{s,s+t}(A)|| against (1 - nu) mu t. Gate: t >= (2/nu) a / (b c0),
// eps <= eps_2 ^ nu c0 / (2 c_2); GateUnsatisfied otherwise.
BoundReport certify_averaged_flow(const TheoremWindow& w, const DriftSource& flow, double s, double t,
                                  double tol = 1e-10);

// E log ||E_{s,s+t}(A^eps)|| against (1 - nu) mu t, same gate.
BoundReport certify_mean_log(const TheoremWindow& w, const CoefficientProcessSpec& spec, double s, double t,
                             const CertifyOptions& opt);

// P(max_k (1/t_k) log ||E_{s,t_k}|| < mu/2) >= 1 - nu. Gate: eps <= eps_n(nu).
BoundReport certify_event_probability(const TheoremWindow& w, const CoefficientProcessSpec& spec, double s,
                                      std::span<const double> t_list, const CertifyOptions& opt);

// (1/t) log E ||E_{s,s+t}||^n <= (n/4) mu for t in [T_n, T_n^eps]. EmptyWindow
// when the window is empty; InvalidArgument for t outside it.
std::vector<BoundReport> certify_moment_window(const TheoremWindow& w, const CoefficientProcessSpec& spec, double s,
                                               std::span<const double> t_grid, const CertifyOptions& opt);

struct LemmaBound {
  double log_rhs = 0.0;
  double log_crude = 0.0;
  bool crude_valid = false;
  double rhs() const;
  double crude() const;
};

// (1/2) e^{2 d1 n t} + (e/2) sqrt(e/pi) ((1 + sqrt(2e) d2 n t eps) e^{(2 sqrt(e) d2 n t eps)^2} - 1)
// and the crude form 2 e^{d n t}, valid when d2 n t eps^2 <= 1; both in logs.
LemmaBound crude_moment_bound(int n, double t, double epsilon, double d1, double d2);

// log E ||E_{s,s+t}||^n against log of the lemma bound with the (d1, d2) of
// `constants`; t must be >= 0.1.
std::vector<BoundReport> certify_lemma(const HypothesisEstimates& constants, const CoefficientProcessSpec& spec,
                                       double s, int n, std::span<const double> t_grid, const CertifyOptions& opt);

// eps^{-1} E(||E_{s,t}(A^eps) - E_{s,t}(A)||^n)^{1/n} against c_n + 4 e^{a/b} c_2n / c0
// for each eps (coupled on one perturbation per sample), plus a stability row:
// the largest pairwise |D_i - D_j| / sqrt(se_i^2 + se_j^2), bound 3.
// EmptyWindow unless T_2n <= s <= t <= T_2n^eps for every eps.
std::vector<BoundReport> certify_fluctuation(const TheoremWindow& w, const CoefficientProcessSpec& spec, double s,
                                             double t, std::span<const double> eps_list, const CertifyOptions& opt);

// E(||X^{x1}_t - X^{x2}_t||^n)^{1/n} <= e^{mu t/4} ||x1 - x2|| from coupled pairs.
// Times are snapped to simulation nodes inside [T_n, T_n^eps].
std::vector<BoundReport> certify_contraction(const TheoremWindow& w, const OUSimConfig& cfg, const Vector& x1,
                                             const Vector& x2, std::span<const double> t_grid);

// Empirical kappa_n = max_t (E(||X^x_t||^n)^{1/n} - e^{mu t/4} ||x||) (bound +inf,
// certified when finite) and a trend row: slope of E(||X^0_t||^n)^{1/n} over the
// window (Flat against 0). Window [T_n v T_2n, T_2n^eps], eps <= eps_{2,n} ^ eps_{2n}.
std::vector<BoundReport> certify_moment_boundedness(const TheoremWindow& w, const OUSimConfig& cfg, const Vector& x0,
                                                    std::span<const double> t_grid);

// Per eps: failure frequency of the event of certify_event_probability against
// (cbar_n eps)^n (Wilson interval); then the binomial power-law slope of the
// failure frequency in eps against n - 0.5 (profile-likelihood interval).
std::vector<BoundReport> certify_as_lyapunov(const TheoremWindow& w, const CoefficientProcessSpec& spec, double s,
                                             std::span<const double> t_list, std::span<const double> eps_list,
                                             const CertifyOptions& opt);

}  // namespace rou
