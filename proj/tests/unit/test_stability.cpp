#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <numbers>
#include <vector>

#include "rou/error.hpp"
#include "rou/parallel.hpp"
#include "rou/stability.hpp"
#include "rou/stats.hpp"

using namespace rou;

namespace {

std::shared_ptr<H0Flow> scalar_flow(double a_inf = -1.0) {
  return std::make_shared<H0Flow>(Matrix::from_rows({{a_inf}}), Matrix::from_rows({{1.0}}), 0.0, 1.0);
}

CoefficientProcessSpec scalar_spec(double eps, double sigma = 1.0) {
  CoefficientProcessSpec spec;
  spec.flow = scalar_flow();
  spec.perturbation = PerturbationModel::frozen_gaussian(sigma);
  spec.diffusion = DiffusionModel::constant(PsdMatrix(Matrix::from_rows({{2.0}})));
  spec.epsilon = eps;
  return spec;
}

// Hand-set constants for an order list; eps_n defaults to 1.
HypothesisEstimates constants(std::vector<int> n_list, std::vector<double> c, double d1, double d2) {
  HypothesisEstimates h;
  h.n_list = std::move(n_list);
  h.c_n_hat = std::move(c);
  h.eps_n.assign(h.n_list.size(), 1.0);
  h.d1_hat = d1;
  h.d2_hat = d2;
  return h;
}

// Exact constants of the scalar frozen model with sigma = 1: c_n = E|xi|^n^{1/n}.
HypothesisEstimates scalar_constants() {
  std::vector<int> ns{1, 2, 4, 8};
  std::vector<double> c;
  for (int n : ns)
    c.push_back(std::pow(std::exp2(0.5 * n) * std::tgamma(0.5 * (n + 1)) / std::sqrt(std::numbers::pi), 1.0 / n));
  return constants(ns, c, 1.0, 0.5);
}

H0Certificate cert(double c0, double a = 0.0, double b = 1.0) { return H0Certificate{a, b, c0, 10.0, 100}; }

CertifyOptions options(std::size_t samples, std::uint64_t seed = 5) {
  CertifyOptions opt;
  opt.samples = samples;
  opt.seed = seed;
  return opt;
}

}  // namespace

TEST(Constants, EpsNNu) {
  EXPECT_DOUBLE_EQ(compute_eps_n_nu(1.0, 1.0, 1, 1.0, 1.0), 0.25);
  EXPECT_NEAR(compute_eps_n_nu(0.5, 0.01, 2, 1.0, 2.0), 0.0125, 1e-15);
  double prev = 1.0;
  for (double c : {1.0, 10.0, 1e3, 1e9}) {
    const double v = compute_eps_n_nu(1.0, 0.5, 2, 1.0, c);
    EXPECT_LT(v, prev);
    prev = v;
  }
  EXPECT_LT(prev, 1e-9);
}

TEST(Constants, Tn) {
  EXPECT_EQ(compute_Tn(3, 1.0, 0.0), 0.0);
  EXPECT_NEAR(compute_Tn(2, 1.0, 1.0), 4.0 * std::log(9.0), 1e-13);
  EXPECT_NEAR(compute_Tn(1, 2.0, 1.0), 2.0 * std::log(1.0 + 2.0 * std::sqrt(2.0)), 1e-13);
  EXPECT_LT(compute_Tn(2, 1.0, 0.5), compute_Tn(2, 1.0, 0.6));
}

TEST(Constants, TnEps) {
  const TnEps v = compute_Tn_eps(2, 1e-3, 1.0, 0.1, 0.1);
  const double factor = 4.0 * std::numbers::e + std::sqrt(2.0 * std::numbers::e);
  EXPECT_NEAR(v.first, std::log(1e6) / (2.0 * factor * 0.1 + 1.0), 1e-12);
  EXPECT_NEAR(v.value, 3.794, 1e-3);
  EXPECT_NEAR(v.second, 2.5e6, 1e-6);
  EXPECT_EQ(v.binding, 1);
  EXPECT_EQ(compute_Tn_eps(2, 0.0, 1.0, 0.1, 0.1).value, std::numeric_limits<double>::infinity());
  try {
    compute_Tn_eps(2, 1.0, 1.0, 0.1, 0.1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EpsilonOne);
  }
  double prev = std::numeric_limits<double>::infinity();
  for (double eps : {1e-8, 1e-4, 1e-2, 0.1, 0.5, 0.9}) {
    const double v2 = compute_Tn_eps(2, eps, 1.0, 0.2, 0.3).value;
    EXPECT_LT(v2, prev);
    prev = v2;
  }
  // Second term binds for large d2 and decreases in n.
  const TnEps big = compute_Tn_eps(100, 0.9, 1.0, 1.0, 1.0);
  EXPECT_EQ(big.binding, 2);
  EXPECT_GT(big.value, compute_Tn_eps(200, 0.9, 1.0, 1.0, 1.0).value);
  EXPECT_EQ(compute_Tn_eps(2, 0.5, 1.0, 0.1, 0.0).second, std::numeric_limits<double>::infinity());
}

TEST(Constants, ThresholdBisection) {
  for (double c2n : {0.01, 0.1, 1.0}) {
    const double thr = eps_2n_threshold(2, 1.0, c2n, 0.1, 0.1);
    ASSERT_GT(thr, 0.0);
    const double tn = compute_Tn(2, 1.0, c2n);
    EXPECT_LT(tn, compute_Tn_eps(2, thr / 2.0, 1.0, 0.1, 0.1).value);
    EXPECT_LT(tn, compute_Tn_eps(2, thr, 1.0, 0.1, 0.1).value);
    EXPECT_GE(tn, compute_Tn_eps(2, thr * (1.0 + 1e-5), 1.0, 0.1, 0.1).value);
  }
  EXPECT_EQ(eps_2n_threshold(2, 1.0, 0.0, 0.1, 0.1), 1.0);
  EXPECT_EQ(eps_2n_threshold(2, 1e-3, 1e6, 1e3, 1e3), 0.0);
}

TEST(Constants, WindowInvariants) {
  const auto h = constants({1, 2, 4}, {0.1, 0.2, 0.3}, 0.5, 0.1);
  const TheoremWindow w = make_window(2, cert(1.0, 0.5, 1.0), h, 1e-6, 0.5);
  EXPECT_GT(w.T_n, 0.0);
  EXPECT_DOUBLE_EQ(w.T_n, compute_Tn(2, 1.0, 0.3));
  EXPECT_DOUBLE_EQ(w.cbar_n, 0.8);
  EXPECT_NEAR(w.d_const, 0.5 * lemma_factor(), 1e-14);
  for (double eps : {w.eps_2n_threshold * 0.9, w.eps_2n_threshold * 1.1}) {
    const TheoremWindow v = make_window(2, cert(1.0, 0.5, 1.0), h, eps, 0.5);
    EXPECT_EQ(v.nonempty(), eps < w.eps_2n_threshold);
  }
  EXPECT_THROW(make_window(4, cert(1.0), h, 0.1, 0.5), std::exception);
}

TEST(Reports, VerdictRule) {
  EXPECT_EQ(make_report("q", 1, 0, 1, 1.0, 0.5, 0.1, 10, BoundMode::Upper).verdict, Verdict::Certified);
  EXPECT_EQ(make_report("q", 1, 0, 1, 1.0, 0.8, 0.1, 10, BoundMode::Upper).verdict, Verdict::Inconclusive);
  EXPECT_EQ(make_report("q", 1, 0, 1, 1.0, 1.5, 0.1, 10, BoundMode::Upper).verdict, Verdict::Violated);
  EXPECT_EQ(make_report("q", 1, 0, 1, 1.0, 1.5, 0.1, 10, BoundMode::Lower).verdict, Verdict::Certified);
  EXPECT_EQ(make_report("q", 1, 0, 1, 1.0, 0.5, 0.1, 10, BoundMode::Lower).verdict, Verdict::Violated);
  EXPECT_EQ(make_report("q", 1, 0, 1, 0.0, 0.2, 0.1, 10, BoundMode::Flat).verdict, Verdict::Certified);
  EXPECT_EQ(make_report("q", 1, 0, 1, 0.0, 0.5, 0.1, 10, BoundMode::Flat).verdict, Verdict::Violated);
  EXPECT_EQ(make_report("q", 1, 0, 1, 0.0, -0.5, 0.1, 10, BoundMode::Flat).verdict, Verdict::Inconclusive);
  EXPECT_DOUBLE_EQ(make_report("q", 1, 0, 1, 1.0, 0.25, 0.0, 1, BoundMode::Upper).margin, 0.75);
  EXPECT_EQ(to_string(Verdict::Violated), "violated");
}

TEST(CrudeMomentBound, Examples) {
  const LemmaBound zero_eps = crude_moment_bound(2, 1.5, 0.0, 0.7, 0.3);
  EXPECT_NEAR(zero_eps.log_rhs, std::log(0.5) + 2.0 * 0.7 * 2 * 1.5, 1e-14);
  EXPECT_NEAR(crude_moment_bound(3, 0.0, 0.2, 1.0, 1.0).rhs(), 0.5, 1e-15);

  const double e = std::numbers::e;
  const double expected = 0.5 * e * e + e / 2.0 * std::sqrt(e / std::numbers::pi) *
                                            ((1.0 + std::sqrt(2.0 * e) * 0.1) * std::exp(std::pow(2.0 * std::sqrt(e) * 0.1, 2)) - 1.0);
  const LemmaBound b = crude_moment_bound(1, 1.0, 0.1, 1.0, 1.0);
  EXPECT_NEAR(b.rhs(), expected, 1e-13 * expected);
  EXPECT_NEAR(b.rhs(), 4.168384518717978, 1e-12);
  EXPECT_NEAR(b.crude(), 2.0 * std::exp(lemma_factor()), 1e-8);
  EXPECT_TRUE(b.crude_valid);
  EXPECT_FALSE(crude_moment_bound(4, 10.0, 0.5, 1.0, 1.0).crude_valid);
  // No overflow in the log domain.
  EXPECT_TRUE(std::isfinite(crude_moment_bound(16, 1000.0, 0.5, 3.0, 2.0).log_rhs));
}

TEST(AveragedFlow, Examples) {
  const auto h = constants({1, 2, 4}, {0.5, 0.6, 0.7}, 1.0, 0.1);
  // a = 0: margin nu c0 t for A = -c0 I.
  const auto flow = std::make_shared<H0Flow>(Matrix::identity(2) * -2.0, Matrix::identity(2), 0.0, 1.0);
  const TheoremWindow w0 = make_window(1, cert(2.0), h, 0.01, 0.3);
  const BoundReport r = certify_averaged_flow(w0, *flow, 0.0, 1.7);
  EXPECT_EQ(r.verdict, Verdict::Certified);
  EXPECT_NEAR(r.margin, 0.3 * 2.0 * 1.7, 1e-9);

  // Canonical family at the time gate.
  const double h2 = 1.0 / std::sqrt(2.0);
  const H0Flow canonical(Matrix::identity(2) * -1.0, Matrix::from_rows({{h2, h2}, {h2, -h2}}), 0.5, 1.0);
  const H0Certificate c = certify_h0(canonical, 20.0, 200);
  for (double nu : {0.2, 0.5, 0.9}) {
    const TheoremWindow w = make_window(1, c, h, 1e-4, nu);
    const double t_gate = 2.0 / nu * 0.5 / (1.0 * c.c0);
    const BoundReport g = certify_averaged_flow(w, canonical, 0.0, t_gate);
    EXPECT_EQ(g.verdict, Verdict::Certified) << nu;
    EXPECT_GE(g.margin, 0.0);
    try {
      certify_averaged_flow(w, canonical, 0.0, 0.9 * t_gate);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::GateUnsatisfied);
    }
  }
  // nu -> 1 with tiny eps: the bound approaches 0 from below.
  const TheoremWindow w1 = make_window(1, c, h, 1e-9, 0.999);
  const BoundReport near_one = certify_averaged_flow(w1, canonical, 0.0, 1.5);
  EXPECT_EQ(near_one.verdict, Verdict::Certified);
  EXPECT_LT(near_one.bound, 0.0);
  EXPECT_GT(near_one.bound, -0.01);
  // The eps gate.
  const TheoremWindow wide = make_window(1, c, h, 0.5, 0.5);
  EXPECT_THROW(certify_averaged_flow(wide, canonical, 0.0, 5.0), Error);
}

TEST(MeanLog, ScalarIsExactlyLinear) {
  const auto h = scalar_constants();
  const TheoremWindow w = make_window(1, cert(1.0), h, 0.1, 0.5);
  const BoundReport r = certify_mean_log(w, scalar_spec(0.1), 0.0, 2.0, options(4000));
  EXPECT_LT(std::abs(r.estimate + 2.0), 3.0 * r.std_error);
  EXPECT_EQ(r.verdict, Verdict::Certified);

  const TheoremWindow w0 = make_window(1, cert(1.0), h, 0.0, 0.5);
  const BoundReport d = certify_mean_log(w0, scalar_spec(0.0), 0.0, 2.0, options(50));
  EXPECT_EQ(d.std_error, 0.0);
  EXPECT_NEAR(d.estimate, certify_averaged_flow(w0, *scalar_flow(), 0.0, 2.0).estimate, 1e-8);
}

TEST(EventProbability, ScalarGaussianCdf) {
  const double t_list[] = {1.0, 2.0, 4.0};
  for (double eps : {0.3, 0.5}) {
    const std::size_t hits = event_count(scalar_spec(eps), 0.0, t_list, -0.5, options(4000));
    const Interval ci = wilson_interval(hits, 4000, 3.0);
    const double p = normal_cdf(1.0 / (2.0 * eps));
    EXPECT_LE(ci.lo, p);
    EXPECT_GE(ci.hi, p);
  }
  const auto h = scalar_constants();
  const TheoremWindow w = make_window(1, cert(1.0), h, 0.3, 0.99);
  const BoundReport r = certify_event_probability(w, scalar_spec(0.3), 0.0, t_list, options(4000));
  EXPECT_EQ(r.verdict, Verdict::Certified);
  const TheoremWindow bad = make_window(1, cert(1.0), h, 0.3, 0.2);
  EXPECT_THROW(certify_event_probability(bad, scalar_spec(0.3), 0.0, t_list, options(10)), Error);
  // eps = 0: frequency 1.
  const TheoremWindow w0 = make_window(1, cert(1.0), h, 0.0, 0.5);
  EXPECT_EQ(certify_event_probability(w0, scalar_spec(0.0), 0.0, t_list, options(20)).estimate, 1.0);
}

TEST(MomentWindow, ScalarMomentGeneratingFunction) {
  // Window set by hand so the closed form can be compared on t in {1, 2, 4}.
  TheoremWindow w = make_window(2, cert(1.0), scalar_constants(), 0.1, 0.5);
  w.T_n = 0.5;
  w.T_n_eps.value = 10.0;
  const double ts[] = {1.0, 2.0, 4.0};
  const auto rows = certify_moment_window(w, scalar_spec(0.1), 0.0, ts, options(4000));
  ASSERT_EQ(rows.size(), 3u);
  for (const auto& r : rows) {
    const double exact = 2.0 * -1.0 + 4.0 * 0.01 * r.t / 2.0;
    EXPECT_LT(std::abs(r.estimate - exact), 3.0 * r.std_error) << r.t;
    EXPECT_EQ(r.verdict, Verdict::Certified);
  }
  const double outside[] = {12.0};
  EXPECT_THROW(certify_moment_window(w, scalar_spec(0.1), 0.0, outside, options(10)), Error);
  const TheoremWindow closed = make_window(2, cert(1.0), scalar_constants(), 0.1, 0.5);
  try {
    certify_moment_window(closed, scalar_spec(0.1), 0.0, ts, options(10));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyWindow);
  }
}

TEST(MomentWindow, ConstantFlowExactRate) {
  auto spec = scalar_spec(0.0);
  spec.flow = std::make_shared<H0Flow>(Matrix::identity(2) * -1.5, Matrix::identity(2), 0.0, 1.0);
  spec.diffusion = DiffusionModel::constant(PsdMatrix(Matrix::identity(2)));
  const TheoremWindow w = make_window(2, cert(1.5), constants({2, 4}, {0.0, 0.0}, 1.5, 0.0), 0.0, 0.5);
  const double ts[] = {0.5, 3.0};
  for (const auto& r : certify_moment_window(w, spec, 0.0, ts, options(3))) {
    EXPECT_NEAR(r.estimate, -3.0, 1e-8);
    EXPECT_NEAR(r.margin, 0.75 * 2 * 1.5, 1e-8);
    EXPECT_EQ(r.verdict, Verdict::Certified);
  }
}

TEST(Lemma, ScalarClosedFormBelowBound) {
  const auto h = constants({1, 2}, {1.0, 1.0}, 1.0, 1.0);
  for (int n : {1, 2, 4})
    for (double t : {0.5, 1.0, 3.0})
      for (double eps : {0.05, 0.2}) {
        const double log_exact = -n * t + n * n * eps * eps * t * t / 2.0;
        EXPECT_LE(log_exact, crude_moment_bound(n, t, eps, 1.0, 1.0).log_rhs);
      }
  // Near t = 0 the bound (about 1/2) sits below ||E||^n (about 1).
  EXPECT_GT(-0.1, crude_moment_bound(1, 0.1, 0.05, 1.0, 1.0).log_rhs);
  const double ts[] = {0.5, 1.0, 2.0};
  const auto rows = certify_lemma(h, scalar_spec(0.2), 0.0, 2, ts, options(4000));
  for (const auto& r : rows) {
    const double log_exact = -2.0 * r.t + 4.0 * 0.04 * r.t * r.t / 2.0;
    EXPECT_LT(std::abs(r.estimate - log_exact), 3.0 * r.std_error);
    EXPECT_EQ(r.verdict, Verdict::Certified);
  }
  const double early[] = {0.05};
  EXPECT_THROW(certify_lemma(h, scalar_spec(0.2), 0.0, 2, early, options(10)), Error);
}

// eps^{-1} E|e^{(-1 + eps xi) t} - e^{-t}|^n, from E|e^{c xi} - 1| = e^{c^2/2}(2 Phi(c) - 1)
// and E(e^{c xi} - 1)^2 = e^{2c^2} - 2 e^{c^2/2} + 1.
TEST(Fluctuation, ScalarClosedForm) {
  // c_4n = 0 opens the window from s = 0; the other constants are the exact ones.
  auto h = scalar_constants();
  h.c_n_hat[2] = h.c_n_hat[3] = 0.0;
  h.n_list = {1, 2, 3, 4};
  h.d1_hat = h.d2_hat = 0.01;
  TheoremWindow w = make_window(1, cert(1.0), h, 0.0, 0.5);
  const double t = 1.0;
  const double eps_list[] = {0.1, 0.01, 0.001};
  const auto rows = certify_fluctuation(w, scalar_spec(0.0), 0.0, t, eps_list, options(4000));
  ASSERT_EQ(rows.size(), 4u);
  for (std::size_t i = 0; i < 3; ++i) {
    const double c = eps_list[i] * t;
    const double exact = std::exp(-t) * std::exp(c * c / 2.0) * (2.0 * normal_cdf(c) - 1.0) / eps_list[i];
    EXPECT_LT(std::abs(rows[i].estimate - exact), 3.0 * rows[i].std_error) << eps_list[i];
    EXPECT_EQ(rows[i].verdict, Verdict::Certified);
  }
  EXPECT_EQ(rows[3].quantity, "fluctuation_stability");
  EXPECT_EQ(rows[3].verdict, Verdict::Certified);

  h.n_list = {1, 2, 4, 8};
  TheoremWindow w2 = make_window(2, cert(1.0), h, 0.0, 0.5);
  const double one[] = {0.05};
  const auto r2 = certify_fluctuation(w2, scalar_spec(0.0), 0.0, t, one, options(4000));
  const double c = 0.05 * t;
  const double exact2 = std::exp(-t) * std::sqrt(std::exp(2 * c * c) - 2 * std::exp(c * c / 2) + 1) / 0.05;
  EXPECT_LT(std::abs(r2[0].estimate - exact2), 3.0 * r2[0].std_error);

  const double zero[] = {0.0};
  EXPECT_EQ(certify_fluctuation(w, scalar_spec(0.0), 0.0, t, zero, options(5))[0].estimate, 0.0);
  const double late[] = {0.1};
  EXPECT_THROW(certify_fluctuation(w, scalar_spec(0.0), 0.0, 50.0, late, options(5)), Error);
}

TEST(Contraction, Examples) {
  OUSimConfig cfg;
  cfg.spec = scalar_spec(0.0);
  cfg.spec.flow = std::make_shared<H0Flow>(Matrix::identity(2) * -0.8, Matrix::identity(2), 0.0, 1.0);
  cfg.spec.diffusion = DiffusionModel::constant(PsdMatrix(Matrix::identity(2)));
  cfg.x0_list = {Vector(2, 0.0)};
  cfg.dt = 0.01;
  cfg.num_traj = 20;
  cfg.method = SimMethod::SolutionFormula;
  const TheoremWindow w = make_window(2, cert(0.8), constants({2, 4}, {0.0, 0.0}, 0.8, 0.0), 0.0, 0.5);
  const double ts[] = {0.5, 2.0, 4.0};
  const Vector x1{1.0, 2.0}, x2{-1.0, 0.5};
  const auto rows = certify_contraction(w, cfg, x1, x2, ts);
  const double gap = std::hypot(2.0, 1.5);
  for (const auto& r : rows) {
    EXPECT_NEAR(r.estimate, std::exp(-0.8 * r.t) * gap, 1e-7);
    EXPECT_EQ(r.verdict, Verdict::Certified);
  }
  for (const auto& r : certify_contraction(w, cfg, x1, x1, ts)) {
    EXPECT_EQ(r.estimate, 0.0);
    EXPECT_EQ(r.verdict, Verdict::Certified);
  }
}

TEST(MomentBoundedness, NoiselessAndScalarStationary) {
  OUSimConfig cfg;
  cfg.spec = scalar_spec(0.0);
  cfg.spec.diffusion = DiffusionModel::constant(PsdMatrix(Matrix::from_rows({{0.0}})));
  cfg.x0_list = {Vector{1.0}};
  cfg.dt = 0.01;
  cfg.num_traj = 10;
  const TheoremWindow w = make_window(2, cert(1.0), constants({2, 4, 8}, {0.0, 0.0, 0.0}, 1.0, 0.0), 0.0, 0.5);
  const double ts[] = {3.0, 4.0, 5.0, 6.0};
  const auto quiet = certify_moment_boundedness(w, cfg, Vector{1.0}, ts);
  ASSERT_EQ(quiet.size(), 2u);
  EXPECT_EQ(quiet[0].estimate, 0.0);
  EXPECT_EQ(quiet[0].verdict, Verdict::Certified);
  EXPECT_EQ(quiet[1].estimate, 0.0);
  EXPECT_EQ(quiet[1].verdict, Verdict::Certified);

  cfg.spec.diffusion = DiffusionModel::constant(PsdMatrix(Matrix::from_rows({{2.0}})));
  cfg.num_traj = 4000;
  const auto noisy = certify_moment_boundedness(w, cfg, Vector{1.0}, ts);
  EXPECT_EQ(noisy[0].verdict, Verdict::Certified);
  EXPECT_GT(noisy[0].estimate, 0.5);
  EXPECT_LT(noisy[0].estimate, 1.0 + 3.0 * noisy[0].std_error);
  EXPECT_EQ(noisy[1].verdict, Verdict::Certified);
}

TEST(AsLyapunov, ScalarFailureTail) {
  const auto h = scalar_constants();
  const TheoremWindow w = make_window(2, cert(1.0), h, 0.0, 0.5);
  const double t_list[] = {1.0, 2.0};
  const double eps_list[] = {0.0, 0.4, 0.3, 0.2};
  const auto rows = certify_as_lyapunov(w, scalar_spec(0.0), 0.0, t_list, eps_list, options(4000));
  ASSERT_EQ(rows.size(), 5u);
  EXPECT_EQ(rows[0].estimate, 0.0);
  for (std::size_t i = 1; i < 4; ++i) {
    const std::size_t fails = static_cast<std::size_t>(std::llround(rows[i].estimate * 4000));
    const Interval ci = wilson_interval(fails, 4000, 3.0);
    const double p = normal_sf(1.0 / (2.0 * eps_list[i]));
    EXPECT_LE(ci.lo, p);
    EXPECT_GE(ci.hi, p);
  }
  EXPECT_EQ(rows[4].quantity, "as_failure_slope");
  EXPECT_EQ(rows[4].verdict, Verdict::Certified);
}

TEST(Certificates, DeterministicAcrossWorkers) {
  const auto h = scalar_constants();
  const TheoremWindow w = make_window(1, cert(1.0), h, 0.1, 0.5);
  auto spec = scalar_spec(0.1);
  spec.perturbation = PerturbationModel::entrywise_ou(1.0, 1.0);
  set_worker_count(1);
  const BoundReport a = certify_mean_log(w, spec, 0.0, 2.0, options(64));
  set_worker_count(3);
  const BoundReport b = certify_mean_log(w, spec, 0.0, 2.0, options(64));
  set_worker_count(1);
  EXPECT_EQ(a.estimate, b.estimate);
  EXPECT_EQ(a.std_error, b.std_error);
  EXPECT_EQ(a.verdict, b.verdict);
}
