#include "rou/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rou/error.hpp"

namespace rou {

double pairwise_sum(std::span<const double> x) {
  if (x.size() <= 8) {
    double s = 0.0;
    for (double v : x) s += v;
    return s;
  }
  const std::size_t half = x.size() / 2;
  return pairwise_sum(x.first(half)) + pairwise_sum(x.subspan(half));
}

MeanEstimate mean_estimate(std::span<const double> x) {
  MeanEstimate out;
  out.samples = x.size();
  if (x.empty()) return out;
  const double n = static_cast<double>(x.size());
  out.mean = pairwise_sum(x) / n;
  if (x.size() > 1) {
    std::vector<double> sq(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) sq[i] = (x[i] - out.mean) * (x[i] - out.mean);
    out.std_error = std::sqrt(pairwise_sum(sq) / (n - 1.0) / n);
  }
  return out;
}

MeanEstimate log_mean_exp(std::span<const double> y) {
  MeanEstimate out;
  out.samples = y.size();
  if (y.empty()) return out;
  const double m = *std::max_element(y.begin(), y.end());
  if (m == -std::numeric_limits<double>::infinity()) {
    out.mean = m;
    return out;
  }
  std::vector<double> w(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) w[i] = std::exp(y[i] - m);
  const MeanEstimate wm = mean_estimate(w);
  out.mean = m + std::log(wm.mean);
  out.std_error = wm.std_error / wm.mean;
  return out;
}

MeanEstimate moment_root(std::span<const double> z, int n) {
  require(n >= 1, ErrorCode::InvalidArgument, "moment order must be >= 1");
  MeanEstimate out;
  out.samples = z.size();
  if (z.empty()) return out;
  double m = 0.0;
  for (double v : z) {
    require(v >= 0.0, ErrorCode::InvalidArgument, "moment_root needs nonnegative samples");
    m = std::max(m, v);
  }
  if (m == 0.0 || !std::isfinite(m)) {
    out.mean = m;
    return out;
  }
  // Scaling by the max keeps w in [0, 1]; equal samples give m back exactly.
  std::vector<double> w(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) w[i] = std::pow(z[i] / m, n);
  const MeanEstimate mw = mean_estimate(w);
  out.mean = m * std::pow(mw.mean, 1.0 / n);
  out.std_error = mw.mean > 0.0 ? out.mean * mw.std_error / (mw.mean * n) : 0.0;
  return out;
}

Interval wilson_interval(std::size_t successes, std::size_t trials, double z) {
  if (trials == 0) return {0.0, 1.0};
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (p + z2 / (2.0 * n)) / denom;
  const double half = z / denom * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

LinearFit ols_fit(std::span<const double> x, std::span<const double> y) {
  require(x.size() == y.size() && x.size() >= 2, ErrorCode::InvalidArgument, "ols_fit needs >= 2 points");
  const double n = static_cast<double>(x.size());
  const double mx = pairwise_sum(x) / n;
  const double my = pairwise_sum(y) / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  require(sxx > 0.0, ErrorCode::InvalidArgument, "ols_fit: x values are all equal");
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  if (x.size() > 2) {
    double rss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double r = y[i] - fit.intercept - fit.slope * x[i];
      rss += r * r;
    }
    fit.slope_std_error = std::sqrt(rss / (n - 2.0) / sxx);
  }
  return fit;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }
double normal_sf(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

std::vector<double> isotonic_nondecreasing(std::span<const double> y) {
  struct Block {
    double sum;
    std::size_t count;
  };
  std::vector<Block> blocks;
  for (double v : y) {
    blocks.push_back({v, 1});
    while (blocks.size() > 1) {
      const Block& b = blocks.back();
      const Block& a = blocks[blocks.size() - 2];
      if (a.sum / a.count <= b.sum / b.count) break;
      Block merged{a.sum + b.sum, a.count + b.count};
      blocks.pop_back();
      blocks.back() = merged;
    }
  }
  std::vector<double> out;
  out.reserve(y.size());
  for (const Block& b : blocks) out.insert(out.end(), b.count, b.sum / b.count);
  return out;
}

namespace {

// Profile log-likelihood of the log-link binomial model at fixed slope, in u = log x.
// With c_i = max_j(k x_j) - k x_i >= 0 and p_i = exp(-(delta + c_i)), the
// intercept is alpha = max_j(k x_j) - delta and delta > 0 keeps p_i < 1.
class PowerLawLikelihood {
 public:
  PowerLawLikelihood(std::span<const double> x, std::span<const std::size_t> y, std::span<const std::size_t> n)
      : x_(x), y_(y), n_(n) {
    for (std::size_t i = 0; i < y.size(); ++i) total_ += static_cast<double>(y[i]);
  }

  double total_successes() const { return total_; }

  // Returns the profile log-likelihood and the maximizing intercept.
  std::pair<double, double> profile(double k) const {
    double top = -std::numeric_limits<double>::infinity();
    for (double xi : x_) top = std::max(top, k * xi);
    auto score = [&](double delta) {
      double g = 0.0;
      for (std::size_t i = 0; i < x_.size(); ++i) {
        const double fails = static_cast<double>(n_[i] - y_[i]);
        if (fails > 0.0) g += fails / std::expm1(delta + top - k * x_[i]);
      }
      return g;
    };
    // score(delta) decreases from +inf to 0; solve score = total in log delta.
    double lo = -60.0, hi = 60.0;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (score(std::exp(mid)) > total_) lo = mid;
      else hi = mid;
    }
    const double delta = std::exp(0.5 * (lo + hi));
    return {loglik(k, top, delta), top - delta};
  }

 private:
  double loglik(double k, double top, double delta) const {
    double l = 0.0;
    for (std::size_t i = 0; i < x_.size(); ++i) {
      const double neglogp = delta + top - k * x_[i];
      const double yi = static_cast<double>(y_[i]);
      const double fails = static_cast<double>(n_[i] - y_[i]);
      if (yi > 0.0) l -= yi * neglogp;
      if (fails > 0.0) l += fails * std::log(-std::expm1(-neglogp));
    }
    return l;
  }

  std::span<const double> x_;
  std::span<const std::size_t> y_;
  std::span<const std::size_t> n_;
  double total_ = 0.0;
};

}  // namespace

PowerLawFit binomial_power_law(std::span<const double> x, std::span<const std::size_t> successes,
                               std::span<const std::size_t> trials, double z) {
  require(x.size() == successes.size() && x.size() == trials.size() && x.size() >= 2,
          ErrorCode::InvalidArgument, "binomial_power_law needs >= 2 aligned points");
  for (std::size_t i = 0; i < x.size(); ++i)
    require(successes[i] <= trials[i] && trials[i] > 0, ErrorCode::InvalidArgument, "invalid binomial counts");

  std::vector<double> log_x(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    require(x[i] > 0.0, ErrorCode::InvalidArgument, "power-law abscissae must be positive");
    log_x[i] = std::log(x[i]);
  }
  constexpr double inf = std::numeric_limits<double>::infinity();
  const PowerLawLikelihood lik(log_x, successes, trials);
  PowerLawFit fit;
  if (lik.total_successes() == 0.0) {
    fit.slope = std::numeric_limits<double>::quiet_NaN();
    fit.slope_lo = -inf;
    fit.slope_hi = inf;
    return fit;
  }

  // The profile is concave in the slope; golden-section search on a wide
  // bracket. A maximizer on the bracket edge means separation.
  constexpr double kMin = -200.0, kMax = 200.0;
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = kMin, b = kMax;
  double c = b - phi * (b - a), d = a + phi * (b - a);
  double fc = lik.profile(c).first, fd = lik.profile(d).first;
  for (int it = 0; it < 200; ++it) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - phi * (b - a);
      fc = lik.profile(c).first;
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + phi * (b - a);
      fd = lik.profile(d).first;
    }
  }
  const double k_hat = 0.5 * (a + b);
  const auto [l_hat, alpha_hat] = lik.profile(k_hat);
  const double cut = l_hat - 0.5 * z * z;

  auto bound = [&](double inside, double outside) {
    if (lik.profile(outside).first >= cut) return outside;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (inside + outside);
      if (lik.profile(mid).first >= cut) inside = mid;
      else outside = mid;
    }
    return 0.5 * (inside + outside);
  };

  fit.intercept = alpha_hat;
  fit.slope = k_hat >= kMax - 1e-6 ? inf : (k_hat <= kMin + 1e-6 ? -inf : k_hat);
  const double lo = bound(k_hat, kMin);
  const double hi = bound(k_hat, kMax);
  fit.slope_lo = lo <= kMin ? -inf : lo;
  fit.slope_hi = hi >= kMax ? inf : hi;
  return fit;
}

}  // namespace rou
