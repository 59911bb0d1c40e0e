#include "rou/stability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "rou/error.hpp"
#include "rou/parallel.hpp"
#include "rou/propagator.hpp"
#include "rou/stats.hpp"

namespace rou {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kZ = 3.0;

bool leq(double a, double b) { return a <= b + 1e-12 * (1.0 + std::abs(b)); }

// T_n^eps with eps given by its logarithm, so tiny thresholds never underflow.
TnEps tn_eps_from_log(int n, double log_eps, double c0, double d1, double d2) {
  TnEps out;
  out.first = -2.0 * log_eps / (2.0 * lemma_factor() * std::max(d1, d2) + c0);
  out.second = d2 > 0.0 ? std::exp(-2.0 * log_eps) / (2.0 * d2 * n) : kInf;
  out.binding = out.first <= out.second ? 1 : 2;
  out.value = std::min(out.first, out.second);
  return out;
}

std::vector<double> covering_grid(double horizon, double dt) {
  const double k = std::max(1.0, std::ceil(horizon / dt - 1e-9));
  return uniform_grid(k * dt, dt);
}

void check_spec_epsilon(const TheoremWindow& w, const CoefficientProcessSpec& spec) {
  require(spec.epsilon == w.epsilon, ErrorCode::InvalidArgument, "spec epsilon differs from the window epsilon");
}

void check_times(std::span<const double> times) {
  require(!times.empty(), ErrorCode::InvalidArgument, "time list must not be empty");
  for (std::size_t k = 0; k < times.size(); ++k) {
    require(std::isfinite(times[k]) && times[k] > 0.0, ErrorCode::InvalidArgument, "times must be finite and > 0");
    if (k > 0) require(times[k] > times[k - 1], ErrorCode::InvalidArgument, "times must be increasing");
  }
}

void check_theorem_gate(const TheoremWindow& w, double t) {
  require(w.nu > 0.0 && w.nu <= 1.0, ErrorCode::InvalidArgument, "nu must be in (0, 1]");
  const double t_gate = 2.0 / w.nu * w.a / (w.b * w.c0);
  require(leq(t_gate, t), ErrorCode::GateUnsatisfied,
          "t = " + std::to_string(t) + " is below the time gate " + std::to_string(t_gate));
  const double c2 = w.constants.c(2);
  const double eps_gate = std::min(w.constants.eps_valid(2), c2 > 0.0 ? w.nu * w.c0 / (2.0 * c2) : kInf);
  require(w.epsilon <= eps_gate, ErrorCode::GateUnsatisfied,
          "eps = " + std::to_string(w.epsilon) + " exceeds the gate " + std::to_string(eps_gate));
}

// The 2r x 2r flow [[A, 0], [P - A, P]]: its propagator is
// [[E(A), 0], [E(P) - E(A), E(P)]], so the difference comes out without cancellation.
class DifferenceFlow final : public DriftSource {
 public:
  DifferenceFlow(const DriftSource& base, const DriftSource& perturbed)
      : base_(base), perturbed_(perturbed), a_(base.dim()), p_(base.dim()) {}

  std::size_t dim() const override { return 2 * base_.dim(); }

  std::vector<double> pieces(double s, double t) const override {
    std::vector<double> out = base_.pieces(s, t);
    const std::vector<double> more = perturbed_.pieces(s, t);
    out.insert(out.end(), more.begin(), more.end());
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  void eval(double u, double piece_start, Matrix& out) const override {
    base_.eval(u, piece_start, a_);
    perturbed_.eval(u, piece_start, p_);
    const std::size_t r = base_.dim();
    out = Matrix(2 * r);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < r; ++j) {
        out(i, j) = a_(i, j);
        out(r + i, j) = p_(i, j) - a_(i, j);
        out(r + i, r + j) = p_(i, j);
      }
  }

  double norm_bound(double s, double t) const override {
    const double nb = base_.norm_bound(s, t);
    const double np = perturbed_.norm_bound(s, t);
    return std::max(nb, np) + nb + np;
  }

  double horizon() const override { return std::min(base_.horizon(), perturbed_.horizon()); }

 private:
  const DriftSource& base_;
  const DriftSource& perturbed_;
  // Scratch; a DifferenceFlow is used by one thread at a time.
  mutable Matrix a_;
  mutable Matrix p_;
};

double lower_left_norm(const Matrix& block) {
  const std::size_t r = block.dim() / 2;
  Matrix d(r);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < r; ++j) d(i, j) = block(r + i, j);
  return spectral_norm(d);
}

// Simulation node indices for the requested times, kept inside [lo, hi].
std::vector<std::size_t> snap_to_nodes(std::span<const double> t_grid, double lo, double hi, double dt) {
  check_times(t_grid);
  const double k_lo = std::ceil(lo / dt - 1e-9);
  const double k_hi = std::isfinite(hi) ? std::floor(hi / dt + 1e-9) : std::round(t_grid.back() / dt);
  require(k_lo <= k_hi, ErrorCode::EmptyWindow,
          "no simulation node inside [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  std::vector<std::size_t> out;
  for (double t : t_grid) out.push_back(static_cast<std::size_t>(std::clamp(std::round(t / dt), k_lo, k_hi)));
  return out;
}

OUSimConfig certification_config(const OUSimConfig& cfg, std::size_t last_node) {
  OUSimConfig out = cfg;
  out.horizon = static_cast<double>(std::max<std::size_t>(last_node, 1)) * cfg.dt;
  out.initial_cov = PsdMatrix();
  out.record_stride = 1;
  return out;
}

}  // namespace

double lemma_factor() { return 4.0 * std::numbers::e + std::sqrt(2.0 * std::numbers::e); }

double compute_eps_n_nu(double eps_n, double nu, int n, double c0, double c_n) {
  require(eps_n > 0.0 && nu > 0.0 && nu <= 1.0 && n >= 1 && c0 > 0.0 && c_n >= 0.0, ErrorCode::InvalidArgument,
          "eps_n(nu) needs eps_n > 0, nu in (0, 1], n >= 1, c0 > 0, c_n >= 0");
  if (c_n == 0.0) return eps_n;
  return std::min(eps_n, std::pow(nu, 1.0 / n) * c0 / (4.0 * c_n));
}

double compute_Tn(int n, double c0, double c_2n) {
  require(n >= 1 && c0 > 0.0 && c_2n >= 0.0, ErrorCode::InvalidArgument, "T_n needs n >= 1, c0 > 0, c_2n >= 0");
  return 4.0 / c0 * std::log1p(c_2n / c0 * std::exp2(2.0 + 0.5 * n));
}

TnEps compute_Tn_eps(int n, double epsilon, double c0, double d1, double d2) {
  require(n >= 1 && c0 > 0.0 && d1 >= 0.0 && d2 >= 0.0, ErrorCode::InvalidArgument,
          "T_n^eps needs n >= 1, c0 > 0, d1, d2 >= 0");
  require(epsilon >= 0.0 && epsilon <= 1.0, ErrorCode::InvalidArgument, "eps must be in [0, 1]");
  require(epsilon < 1.0, ErrorCode::EpsilonOne, "T_n^eps vanishes at eps = 1");
  if (epsilon == 0.0) return TnEps{kInf, 0, kInf, kInf};
  return tn_eps_from_log(n, std::log(epsilon), c0, d1, d2);
}

double eps_2n_threshold(int n, double c0, double c_2n, double d1, double d2) {
  const double tn = compute_Tn(n, c0, c_2n);
  require(d1 >= 0.0 && d2 >= 0.0, ErrorCode::InvalidArgument, "d1, d2 must be >= 0");
  if (tn == 0.0) return 1.0;
  auto open = [&](double log_eps) { return tn < tn_eps_from_log(n, log_eps, c0, d1, d2).value; };
  double lo = std::log(1e-300), hi = 0.0;
  if (!open(lo)) return 0.0;
  while (hi - lo > 1e-7) {
    const double mid = 0.5 * (lo + hi);
    if (open(mid)) lo = mid;
    else hi = mid;
  }
  return std::exp(lo);
}

TheoremWindow make_window(int n, const H0Certificate& h0, const HypothesisEstimates& constants, double epsilon,
                          double nu) {
  require(n >= 1, ErrorCode::InvalidArgument, "n must be >= 1");
  require(h0.c0 > 0.0 && h0.b > 0.0 && h0.a >= 0.0, ErrorCode::InvalidArgument, "invalid H0 certificate");
  TheoremWindow w;
  w.n = n;
  w.c0 = h0.c0;
  w.a = h0.a;
  w.b = h0.b;
  w.constants = constants;
  w.d1 = constants.d1_hat;
  w.d2 = constants.d2_hat;
  w.epsilon = epsilon;
  w.nu = nu;
  w.T_n = compute_Tn(n, w.c0, constants.c(2 * n));
  w.T_n_eps = compute_Tn_eps(n, epsilon, w.c0, w.d1, w.d2);
  w.eps_n_nu = compute_eps_n_nu(constants.eps_valid(n), nu, n, w.c0, constants.c(n));
  w.eps_2n_threshold = eps_2n_threshold(n, w.c0, constants.c(2 * n), w.d1, w.d2);
  w.d_const = lemma_factor() * std::max(w.d1, w.d2);
  w.cbar_n = 4.0 * constants.c(n) / w.c0;
  return w;
}

std::vector<double> window_grid(double lo, double hi, std::size_t points) {
  require(points >= 1 && std::isfinite(lo) && std::isfinite(hi) && lo <= hi, ErrorCode::InvalidArgument,
          "window grid needs finite lo <= hi and points >= 1");
  if (points == 1) return {lo};
  std::vector<double> out(points);
  for (std::size_t i = 0; i < points; ++i)
    out[i] = i + 1 == points ? hi : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
  return out;
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::Certified: return "certified";
    case Verdict::Violated: return "violated";
    case Verdict::Inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

Verdict verdict_for(double lo, double hi, double bound, BoundMode mode) {
  if (std::isnan(lo) || std::isnan(hi) || std::isnan(bound)) return Verdict::Inconclusive;
  switch (mode) {
    case BoundMode::Upper:
      if (hi <= bound) return Verdict::Certified;
      return lo > bound ? Verdict::Violated : Verdict::Inconclusive;
    case BoundMode::Lower:
      if (lo >= bound) return Verdict::Certified;
      return hi < bound ? Verdict::Violated : Verdict::Inconclusive;
    case BoundMode::Flat:
      if (lo <= bound && bound <= hi) return Verdict::Certified;
      return lo > bound ? Verdict::Violated : Verdict::Inconclusive;
  }
  return Verdict::Inconclusive;
}

BoundReport make_report(std::string quantity, int n, double epsilon, double t, double bound, double estimate,
                        double std_error, std::size_t samples, BoundMode mode) {
  BoundReport r{std::move(quantity), n, epsilon, t, bound, estimate, std_error, samples, Verdict::Inconclusive, 0.0};
  r.mode = mode;
  set_interval(r, estimate - kZ * std_error, estimate + kZ * std_error);
  switch (mode) {
    case BoundMode::Upper: r.margin = bound - estimate; break;
    case BoundMode::Lower: r.margin = estimate - bound; break;
    case BoundMode::Flat: r.margin = kZ * std_error - std::abs(estimate - bound); break;
  }
  return r;
}

void set_interval(BoundReport& r, double lo, double hi) {
  r.lo = lo;
  r.hi = hi;
  r.verdict = verdict_for(lo, hi, r.bound, r.mode);
}

void rescale_bound(BoundReport& r, double scale) {
  if (!std::isfinite(r.bound)) return;
  const double old = r.bound;
  r.bound = scale * old;
  switch (r.mode) {
    case BoundMode::Upper: r.margin += r.bound - old; break;
    case BoundMode::Lower: r.margin -= r.bound - old; break;
    case BoundMode::Flat: r.margin = kZ * r.std_error - std::abs(r.estimate - r.bound); break;
  }
  r.verdict = verdict_for(r.lo, r.hi, r.bound, r.mode);
}

std::shared_ptr<const DriftSource> coefficient_source(const CoefficientProcessSpec& spec, std::size_t j, double horizon,
                                                      const CertifyOptions& opt) {
  spec.validate();
  if (spec.epsilon == 0.0) return spec.flow;
  const std::uint64_t stream = coefficient_stream(j);
  if (spec.perturbation.kind == PerturbationKind::FrozenGaussian) {
    const double grid[] = {0.0, 1.0};
    Matrix offset = sample_perturbation(spec.perturbation, spec.dim(), grid, opt.seed, stream)[0];
    offset *= spec.epsilon;
    return std::make_shared<PerturbedFlow>(spec.flow, std::move(offset));
  }
  return std::make_shared<PathRealization>(
      sample_coefficient_path(spec, covering_grid(horizon, opt.dt), opt.seed, stream));
}

std::vector<std::vector<double>> pathwise_log_norms(const CoefficientProcessSpec& spec, double s,
                                                    std::span<const double> times, const CertifyOptions& opt) {
  require(opt.samples >= 1, ErrorCode::InvalidArgument, "samples must be >= 1");
  require(!times.empty(), ErrorCode::InvalidArgument, "time list must not be empty");
  std::vector<std::vector<double>> out(opt.samples);
  parallel_for(opt.samples, [&](std::size_t j) {
    const auto source = coefficient_source(spec, j, times.back(), opt);
    const auto ps = propagate_checkpoints(*source, s, times, opt.tol);
    out[j].resize(ps.size());
    for (std::size_t k = 0; k < ps.size(); ++k) out[j][k] = log_norm_of(ps[k]);
  });
  return out;
}

std::size_t event_count(const CoefficientProcessSpec& spec, double s, std::span<const double> t_list, double level,
                        const CertifyOptions& opt) {
  check_times(t_list);
  const auto ln = pathwise_log_norms(spec, s, t_list, opt);
  std::size_t count = 0;
  for (const auto& row : ln) {
    double worst = -kInf;
    for (std::size_t k = 0; k < row.size(); ++k) worst = std::max(worst, row[k] / t_list[k]);
    if (worst < level) ++count;
  }
  return count;
}

BoundReport certify_averaged_flow(const TheoremWindow& w, const DriftSource& flow, double s, double t, double tol) {
  check_theorem_gate(w, t);
  const double estimate = log_norm_of(propagate(flow, s, s + t, tol));
  return make_report("averaged_flow_log_norm", 1, w.epsilon, t, (1.0 - w.nu) * w.mu() * t, estimate, 0.0, 1,
                     BoundMode::Upper);
}

BoundReport certify_mean_log(const TheoremWindow& w, const CoefficientProcessSpec& spec, double s, double t,
                             const CertifyOptions& opt) {
  check_spec_epsilon(w, spec);
  check_theorem_gate(w, t);
  const double times[] = {s + t};
  const auto ln = pathwise_log_norms(spec, s, times, opt);
  std::vector<double> y(ln.size());
  for (std::size_t j = 0; j < ln.size(); ++j) y[j] = ln[j][0];
  const MeanEstimate m = mean_estimate(y);
  return make_report("mean_log_norm", 1, w.epsilon, t, (1.0 - w.nu) * w.mu() * t, m.mean, m.std_error, m.samples,
                     BoundMode::Upper);
}

BoundReport certify_event_probability(const TheoremWindow& w, const CoefficientProcessSpec& spec, double s,
                                      std::span<const double> t_list, const CertifyOptions& opt) {
  check_spec_epsilon(w, spec);
  require(w.epsilon <= w.eps_n_nu, ErrorCode::GateUnsatisfied,
          "eps = " + std::to_string(w.epsilon) + " exceeds eps_n(nu) = " + std::to_string(w.eps_n_nu));
  const std::size_t hits = event_count(spec, s, t_list, 0.5 * w.mu(), opt);
  const double p = static_cast<double>(hits) / static_cast<double>(opt.samples);
  BoundReport r = make_report("event_probability", w.n, w.epsilon, t_list.back(), 1.0 - w.nu, p,
                              std::sqrt(p * (1.0 - p) / static_cast<double>(opt.samples)), opt.samples,
                              BoundMode::Lower);
  const Interval ci = wilson_interval(hits, opt.samples, kZ);
  set_interval(r, ci.lo, ci.hi);
  return r;
}

std::vector<BoundReport> certify_moment_window(const TheoremWindow& w, const CoefficientProcessSpec& spec, double s,
                                               std::span<const double> t_grid, const CertifyOptions& opt) {
  check_spec_epsilon(w, spec);
  require(w.nonempty(), ErrorCode::EmptyWindow,
          "[T_n, T_n^eps] = [" + std::to_string(w.T_n) + ", " + std::to_string(w.T_n_eps.value) + "] is empty");
  check_times(t_grid);
  std::vector<double> times(t_grid.size());
  for (std::size_t k = 0; k < t_grid.size(); ++k) {
    require(leq(w.T_n, t_grid[k]) && leq(t_grid[k], w.T_n_eps.value), ErrorCode::InvalidArgument,
            "t = " + std::to_string(t_grid[k]) + " is outside [T_n, T_n^eps]");
    times[k] = s + t_grid[k];
  }
  const auto ln = pathwise_log_norms(spec, s, times, opt);
  std::vector<BoundReport> out;
  std::vector<double> y(ln.size());
  for (std::size_t k = 0; k < times.size(); ++k) {
    for (std::size_t j = 0; j < ln.size(); ++j) y[j] = w.n * ln[j][k];
    const MeanEstimate m = log_mean_exp(y);
    const double t = t_grid[k];
    out.push_back(make_report("moment_lyapunov_rate", w.n, w.epsilon, t, 0.25 * w.n * w.mu(), m.mean / t,
                              m.std_error / t, m.samples, BoundMode::Upper));
  }
  return out;
}

double LemmaBound::rhs() const { return std::exp(log_rhs); }
double LemmaBound::crude() const { return std::exp(log_crude); }

LemmaBound crude_moment_bound(int n, double t, double epsilon, double d1, double d2) {
  require(n >= 1 && t >= 0.0 && epsilon >= 0.0 && d1 >= 0.0 && d2 >= 0.0, ErrorCode::InvalidArgument,
          "lemma bound needs n >= 1 and nonnegative t, eps, d1, d2");
  const double e = std::numbers::e;
  const double first = std::log(0.5) + 2.0 * d1 * n * t;
  const double y = std::sqrt(2.0 * e) * d2 * n * t * epsilon;
  const double x = 2.0 * std::sqrt(e) * d2 * n * t * epsilon;
  const double x2 = x * x;
  // log((1 + y) e^{x^2} - 1) without overflow or cancellation.
  double log_group;
  if (x2 < 1.0) {
    const double v = y * std::exp(x2) + std::expm1(x2);
    log_group = v > 0.0 ? std::log(v) : -kInf;
  } else {
    log_group = x2 + std::log1p(y) + std::log1p(-std::exp(-x2) / (1.0 + y));
  }
  const double second = std::log(0.5 * e * std::sqrt(e / std::numbers::pi)) + log_group;
  LemmaBound out;
  const double hi = std::max(first, second);
  out.log_rhs = second == -kInf ? first : hi + std::log1p(std::exp(std::min(first, second) - hi));
  out.log_crude = std::log(2.0) + lemma_factor() * std::max(d1, d2) * n * t;
  out.crude_valid = d2 * n * t * epsilon * epsilon <= 1.0;
  return out;
}

std::vector<BoundReport> certify_lemma(const HypothesisEstimates& constants, const CoefficientProcessSpec& spec,
                                       double s, int n, std::span<const double> t_grid, const CertifyOptions& opt) {
  require(n >= 1, ErrorCode::InvalidArgument, "n must be >= 1");
  check_times(t_grid);
  require(t_grid.front() >= 0.1, ErrorCode::InvalidArgument, "lemma certification starts at t >= 0.1");
  std::vector<double> times(t_grid.size());
  for (std::size_t k = 0; k < t_grid.size(); ++k) times[k] = s + t_grid[k];
  const auto ln = pathwise_log_norms(spec, s, times, opt);
  std::vector<BoundReport> out;
  std::vector<double> y(ln.size());
  for (std::size_t k = 0; k < times.size(); ++k) {
    for (std::size_t j = 0; j < ln.size(); ++j) y[j] = n * ln[j][k];
    const MeanEstimate m = log_mean_exp(y);
    const LemmaBound lb = crude_moment_bound(n, t_grid[k], spec.epsilon, constants.d1_hat, constants.d2_hat);
    out.push_back(make_report("lemma_log_moment", n, spec.epsilon, t_grid[k], lb.log_rhs, m.mean, m.std_error,
                              m.samples, BoundMode::Upper));
  }
  return out;
}

std::vector<BoundReport> certify_fluctuation(const TheoremWindow& w, const CoefficientProcessSpec& spec, double s,
                                             double t, std::span<const double> eps_list, const CertifyOptions& opt) {
  spec.validate();
  require(!eps_list.empty(), ErrorCode::InvalidArgument, "eps list must not be empty");
  require(opt.samples >= 2, ErrorCode::InvalidArgument, "samples must be >= 2");
  require(0.0 <= s && s <= t, ErrorCode::InvalidArgument, "fluctuation needs 0 <= s <= t");
  const int n = w.n;
  const double t_2n = compute_Tn(2 * n, w.c0, w.constants.c(4 * n));
  for (double eps : eps_list) {
    require(eps >= 0.0 && eps < 1.0, ErrorCode::InvalidArgument, "eps must be in [0, 1)");
    const double hi = compute_Tn_eps(2 * n, eps, w.c0, w.d1, w.d2).value;
    require(leq(t_2n, s) && leq(t, hi), ErrorCode::EmptyWindow,
            "[s, t] = [" + std::to_string(s) + ", " + std::to_string(t) + "] is not inside [T_2n, T_2n^eps] = [" +
                std::to_string(t_2n) + ", " + std::to_string(hi) + "]");
  }

  const std::size_t m = eps_list.size();
  std::vector<std::vector<double>> z(m, std::vector<double>(opt.samples, 0.0));
  const bool frozen = spec.perturbation.kind == PerturbationKind::FrozenGaussian;
  parallel_for(opt.samples, [&](std::size_t j) {
    const std::uint64_t stream = coefficient_stream(j);
    std::vector<double> grid;
    std::vector<Matrix> pert;
    std::shared_ptr<const DriftSource> base;
    if (frozen) {
      const double g[] = {0.0, 1.0};
      pert = sample_perturbation(spec.perturbation, spec.dim(), g, opt.seed, stream);
      base = spec.flow;
    } else {
      grid = covering_grid(t, opt.dt);
      pert = sample_perturbation(spec.perturbation, spec.dim(), grid, opt.seed, stream);
      base = std::make_shared<PathRealization>(realize_path(spec, grid, pert, 0.0, opt.seed, stream));
    }
    for (std::size_t e = 0; e < m; ++e) {
      if (eps_list[e] == 0.0) continue;
      std::shared_ptr<const DriftSource> perturbed;
      if (frozen) {
        Matrix offset = pert[0];
        offset *= eps_list[e];
        perturbed = std::make_shared<PerturbedFlow>(spec.flow, std::move(offset));
      } else {
        perturbed = std::make_shared<PathRealization>(realize_path(spec, grid, pert, eps_list[e], opt.seed, stream));
      }
      const DifferenceFlow diff(*base, *perturbed);
      z[e][j] = lower_left_norm(propagate(diff, s, t, opt.tol).value());
    }
  });

  const double bound = w.constants.c(n) + 4.0 * std::exp(w.a / w.b) * w.constants.c(2 * n) / w.c0;
  std::vector<BoundReport> out;
  std::vector<double> est(m, 0.0), se(m, 0.0);
  for (std::size_t e = 0; e < m; ++e) {
    if (eps_list[e] > 0.0) {
      const MeanEstimate r = moment_root(z[e], n);
      est[e] = r.mean / eps_list[e];
      se[e] = r.std_error / eps_list[e];
    }
    out.push_back(make_report("fluctuation", n, eps_list[e], t, bound, est[e], se[e], opt.samples, BoundMode::Upper));
  }
  double worst = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t k = i + 1; k < m; ++k) {
      if (eps_list[i] == 0.0 || eps_list[k] == 0.0) continue;
      const double spread = std::hypot(se[i], se[k]);
      const double gap = std::abs(est[i] - est[k]);
      worst = std::max(worst, spread > 0.0 ? gap / spread : (gap > 0.0 ? kInf : 0.0));
      ++pairs;
    }
  if (pairs > 0) out.push_back(make_report("fluctuation_stability", n, 0.0, t, kZ, worst, 0.0, opt.samples,
                                           BoundMode::Upper));
  return out;
}

std::vector<BoundReport> certify_contraction(const TheoremWindow& w, const OUSimConfig& cfg, const Vector& x1,
                                             const Vector& x2, std::span<const double> t_grid) {
  check_spec_epsilon(w, cfg.spec);
  require(w.nonempty() && w.epsilon <= w.eps_2n_threshold, ErrorCode::EmptyWindow,
          "[T_n, T_n^eps] = [" + std::to_string(w.T_n) + ", " + std::to_string(w.T_n_eps.value) + "] is empty");
  const auto nodes = snap_to_nodes(t_grid, w.T_n, w.T_n_eps.value, cfg.dt);
  const OUSimConfig run = certification_config(cfg, *std::max_element(nodes.begin(), nodes.end()));
  validate_config(run);

  std::vector<std::vector<double>> dist(nodes.size(), std::vector<double>(run.num_traj));
  parallel_for(run.num_traj, [&](std::size_t j) {
    const auto norms = coupled_pair(run, x1, x2, j);
    for (std::size_t k = 0; k < nodes.size(); ++k) dist[k][j] = norms[nodes[k]];
  });

  double gap = 0.0;
  for (std::size_t i = 0; i < x1.size(); ++i) gap += (x1[i] - x2[i]) * (x1[i] - x2[i]);
  gap = std::sqrt(gap);
  std::vector<BoundReport> out;
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    const double t = static_cast<double>(nodes[k]) * cfg.dt;
    const MeanEstimate m = moment_root(dist[k], w.n);
    out.push_back(make_report("contraction", w.n, w.epsilon, t, std::exp(0.25 * w.mu() * t) * gap, m.mean,
                              m.std_error, m.samples, BoundMode::Upper));
  }
  return out;
}

std::vector<BoundReport> certify_moment_boundedness(const TheoremWindow& w, const OUSimConfig& cfg, const Vector& x0,
                                                    std::span<const double> t_grid) {
  check_spec_epsilon(w, cfg.spec);
  const int n = w.n;
  const double t_2n = compute_Tn(2 * n, w.c0, w.constants.c(4 * n));
  const double lo = std::max(w.T_n, t_2n);
  const double hi = compute_Tn_eps(2 * n, w.epsilon, w.c0, w.d1, w.d2).value;
  const double eps_gate = std::min(w.eps_2n_threshold, w.constants.eps_valid(2 * n));
  require(lo < hi && w.epsilon <= eps_gate, ErrorCode::EmptyWindow,
          "[T_n v T_2n, T_2n^eps] = [" + std::to_string(lo) + ", " + std::to_string(hi) +
              "] is empty or eps exceeds " + std::to_string(eps_gate));
  const auto nodes = snap_to_nodes(t_grid, lo, hi, cfg.dt);
  OUSimConfig run = certification_config(cfg, *std::max_element(nodes.begin(), nodes.end()));
  run.x0_list = {x0};
  validate_config(run);

  const std::vector<double> grid = simulation_grid(run);
  const Vector zero(x0.size(), 0.0);
  std::vector<std::vector<double>> full(nodes.size(), std::vector<double>(run.num_traj));
  std::vector<std::vector<double>> noise_part = full;
  parallel_for(run.num_traj, [&](std::size_t j) {
    const PathRealization path = sample_coefficient_path(run.spec, grid, run.seed, coefficient_stream(j));
    auto sim = [&](const Vector& start) {
      return run.method == SimMethod::EulerMaruyama
                 ? simulate_em_on_path(path, start, run.seed, noise_stream(j), 1)
                 : simulate_formula_on_path(path, start, run.seed, noise_stream(j), 1, run.propagator_tol);
    };
    const TrajectoryOutput a = sim(x0);
    const TrajectoryOutput b = sim(zero);
    for (std::size_t k = 0; k < nodes.size(); ++k) {
      full[k][j] = norm2(a.states[nodes[k]]);
      noise_part[k][j] = norm2(b.states[nodes[k]]);
    }
  });

  const double x_norm = norm2(x0);
  double kappa = 0.0, kappa_se = 0.0, kappa_t = static_cast<double>(nodes.front()) * cfg.dt;
  std::vector<double> ts, ms, ses;
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    const double t = static_cast<double>(nodes[k]) * cfg.dt;
    const MeanEstimate m = moment_root(full[k], n);
    const double excess = m.mean - std::exp(0.25 * w.mu() * t) * x_norm;
    if (excess > kappa) {
      kappa = excess;
      kappa_se = m.std_error;
      kappa_t = t;
    }
    const MeanEstimate m0 = moment_root(noise_part[k], n);
    ts.push_back(t);
    ms.push_back(m0.mean);
    ses.push_back(m0.std_error);
  }

  std::vector<BoundReport> out;
  BoundReport k_row = make_report("kappa_hat", n, w.epsilon, kappa_t, kInf, kappa, kappa_se, run.num_traj,
                                  BoundMode::Upper);
  if (!std::isfinite(kappa)) k_row.verdict = Verdict::Violated;
  out.push_back(k_row);

  // Slope of the noise-driven moment over the window; its SE propagates the per-point SEs.
  double t_bar = 0.0;
  for (double t : ts) t_bar += t;
  t_bar /= static_cast<double>(ts.size());
  double sxx = 0.0;
  for (double t : ts) sxx += (t - t_bar) * (t - t_bar);
  require(sxx > 0.0, ErrorCode::InvalidArgument, "trend needs two distinct window times");
  double slope = 0.0, var = 0.0;
  for (std::size_t k = 0; k < ts.size(); ++k) {
    const double wk = (ts[k] - t_bar) / sxx;
    slope += wk * ms[k];
    var += wk * wk * ses[k] * ses[k];
  }
  out.push_back(make_report("kappa_trend", n, w.epsilon, ts.back(), 0.0, slope, std::sqrt(var), run.num_traj,
                            BoundMode::Flat));
  return out;
}

std::vector<BoundReport> certify_as_lyapunov(const TheoremWindow& w, const CoefficientProcessSpec& spec, double s,
                                             std::span<const double> t_list, std::span<const double> eps_list,
                                             const CertifyOptions& opt) {
  require(!eps_list.empty(), ErrorCode::InvalidArgument, "eps list must not be empty");
  const int n = w.n;
  std::vector<BoundReport> out;
  std::vector<double> xs;
  std::vector<std::size_t> fails, trials;
  for (double eps : eps_list) {
    const std::size_t hits = event_count(spec.with_epsilon(eps), s, t_list, 0.5 * w.mu(), opt);
    const std::size_t failures = opt.samples - hits;
    const double f = static_cast<double>(failures) / static_cast<double>(opt.samples);
    const double bound = std::pow(w.cbar_n * eps, n);
    BoundReport r = make_report("as_failure_frequency", n, eps, t_list.back(), bound, f,
                                std::sqrt(f * (1.0 - f) / static_cast<double>(opt.samples)), opt.samples,
                                BoundMode::Upper);
    const Interval ci = wilson_interval(failures, opt.samples, kZ);
    set_interval(r, ci.lo, ci.hi);
    out.push_back(r);
    if (eps > 0.0) {
      xs.push_back(eps);
      fails.push_back(failures);
      trials.push_back(opt.samples);
    }
  }
  if (xs.size() >= 2) {
    const PowerLawFit fit = binomial_power_law(xs, fails, trials, kZ);
    BoundReport r = make_report("as_failure_slope", n, 0.0, t_list.back(), n - 0.5, fit.slope,
                                std::isfinite(fit.slope) ? (fit.slope - fit.slope_lo) / kZ : kInf,
                                opt.samples * xs.size(), BoundMode::Lower);
    set_interval(r, fit.slope_lo, fit.slope_hi);
    r.margin = fit.slope_lo - r.bound;
    out.push_back(r);
  }
  return out;
}

}  // namespace rou
