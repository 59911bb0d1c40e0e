#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace rou {

// Fixed-order pairwise summation: the result depends only on the input order,
// never on how the inputs were produced.
double pairwise_sum(std::span<const double> x);

struct MeanEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t samples = 0;
};

MeanEstimate mean_estimate(std::span<const double> x);

// Estimate of log E[exp(Y)] from samples y_j = Y_j, overflow-safe
// (log-sum-exp), with a delta-method standard error.
MeanEstimate log_mean_exp(std::span<const double> y);

// Estimate of E[Z^n]^{1/n} from z_j >= 0 via the log domain.
MeanEstimate moment_root(std::span<const double> z, int n);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

// Wilson score interval with z standard errors (z = 3 for the 3-SE rule).
Interval wilson_interval(std::size_t successes, std::size_t trials, double z = 3.0);

struct LinearFit {
  double intercept = 0.0;
  double slope = 0.0;
  double slope_std_error = 0.0;
};

LinearFit ols_fit(std::span<const double> x, std::span<const double> y);

double normal_cdf(double x);
double normal_sf(double x);

// Least-squares non-decreasing fit (pool adjacent violators).
std::vector<double> isotonic_nondecreasing(std::span<const double> y);

// Power-law fit p(x) = exp(alpha + slope * log x) to binomial counts with a
// log link, plus a profile-likelihood interval for the slope at z standard
// errors (likelihood-ratio deviance z^2). Zero counts are handled exactly,
// so complete separation yields slope_hi = +inf rather than a failure.
struct PowerLawFit {
  double slope = 0.0;
  double slope_lo = 0.0;
  double slope_hi = 0.0;
  double intercept = 0.0;
};

PowerLawFit binomial_power_law(std::span<const double> x, std::span<const std::size_t> successes,
                               std::span<const std::size_t> trials, double z = 3.0);

}  // namespace rou
