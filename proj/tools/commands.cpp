#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <set>

#include "output.hpp"
#include "rou/error.hpp"
#include "rou/flows.hpp"
#include "rou/linalg.hpp"
#include "rou/parallel.hpp"
#include "rou/propagator.hpp"
#include "rou/stability.hpp"
#include "rou/stats.hpp"

#ifndef ROU_VERSION
#define ROU_VERSION "0.0.0"
#endif

namespace rou::cli {

namespace {

using Clock = std::chrono::steady_clock;
using nlohmann::ordered_json;

struct Model {
  std::shared_ptr<const H0Flow> flow;
  CoefficientProcessSpec spec;
  H0Certificate h0;
  HypothesisEstimates constants;
  double h = 0.0;
};

// Moment orders whose constants some certificate may ask for.
std::vector<int> needed_orders(const std::vector<int>& n_list) {
  std::set<int> s{1, 2};
  for (int n : n_list) {
    s.insert(n);
    s.insert(2 * n);
    s.insert(4 * n);
  }
  return {s.begin(), s.end()};
}

HypothesisEstimates declared_constants(const DeclaredConstants& d, const std::vector<int>& needed) {
  for (int n : needed)
    if (!d.c_n.count(n))
      throw ConfigError("constants.c_n: missing entry for n = " + std::to_string(n) + " (needed: n, 2n, 4n, 1, 2)");
  HypothesisEstimates h;
  for (const auto& [n, c] : d.c_n) {
    h.n_list.push_back(n);
    h.c_n_hat.push_back(c);
    h.c_n_stderr.push_back(0.0);
    h.eps_n.push_back(d.eps_n.at(n));
  }
  h.d1_hat = d.d1;
  h.d2_hat = d.d2;
  return h;
}

Model build_model(const RunConfig& cfg) {
  Model m;
  m.flow = std::make_shared<H0Flow>(cfg.flow.a_inf, cfg.flow.m, cfg.flow.a, cfg.flow.b);
  m.spec.flow = m.flow;
  m.spec.perturbation = cfg.perturbation;
  m.spec.diffusion = cfg.diffusion;
  m.spec.validate();
  m.h0 = certify_h0(*m.flow, cfg.estimation.h0_horizon, cfg.estimation.h0_grid);
  const auto needed = needed_orders(cfg.certification.n_list);
  if (cfg.constants) {
    m.constants = declared_constants(*cfg.constants, needed);
  } else {
    const auto grid = uniform_grid(cfg.estimation.horizon, cfg.estimation.dt);
    m.constants = estimate_hypotheses(m.spec.with_epsilon(cfg.estimation.epsilon), needed, cfg.estimation.samples,
                                      grid, cfg.simulation.seed);
  }
  m.h = cfg.certification.h ? *cfg.certification.h : 4.0 * m.h0.a / (m.h0.b * m.h0.c0);
  return m;
}

ordered_json derived_json(const Model& m) {
  ordered_json o = ordered_json::object();
  o["c0"] = m.h0.c0;
  o["a"] = m.h0.a;
  o["b"] = m.h0.b;
  o["h0_checked_horizon"] = m.h0.checked_horizon;
  o["h"] = m.h;
  o["constants_source"] = m.constants.sample_count > 0 ? "estimated" : "declared";
  ordered_json c = ordered_json::object();
  for (std::size_t i = 0; i < m.constants.n_list.size(); ++i) {
    ordered_json e = ordered_json::object();
    e["c_n"] = m.constants.c_n_hat[i];
    e["c_n_stderr"] = m.constants.c_n_stderr[i];
    e["eps_n"] = m.constants.eps_n[i];
    c[std::to_string(m.constants.n_list[i])] = e;
  }
  o["c"] = c;
  o["d1"] = m.constants.d1_hat;
  o["d2"] = m.constants.d2_hat;
  return o;
}

std::string out_path(const RunOptions& opt, const std::string& name) {
  return (std::filesystem::path(opt.out_dir) / name).string();
}

void prepare_out_dir(const RunOptions& opt) {
  std::error_code ec;
  std::filesystem::create_directories(opt.out_dir, ec);
  require(!ec && std::filesystem::is_directory(opt.out_dir), ErrorCode::Io,
          "cannot create output directory '" + opt.out_dir + "'");
}

void write_manifest(const RunConfig& cfg, const RunOptions& opt, const ordered_json& derived,
                    const std::vector<std::string>& outputs, Clock::time_point start, int exit_code) {
  const std::string canonical = cfg.resolved.dump();
  char hash[24];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(fnv1a(canonical)));
  ordered_json m = ordered_json::object();
  m["tool"] = "rou";
  m["version"] = ROU_VERSION;
  m["command"] = opt.command;
  m["config_path"] = opt.config_path;
  m["config_hash_fnv1a64"] = hash;
  m["seed"] = cfg.simulation.seed;
  m["threads"] = opt.threads;
  m["wall_time_s"] = std::chrono::duration<double>(Clock::now() - start).count();
  m["exit_code"] = exit_code;
  m["outputs"] = outputs;
  m["derived"] = derived;
  m["config"] = cfg.resolved;
  write_file(out_path(opt, "manifest.json"), m.dump(2) + "\n");
}

// ---- constants ----

CsvTable constants_table() {
  return CsvTable({"epsilon", "n", "c_n", "c_2n", "T_n", "T_n_eps", "T_n_eps_binding", "eps_n_nu", "eps_2n_threshold",
                   "cbar_n", "d", "d1", "d2", "c0", "window_nonempty"});
}

// ---- simulate ----

double quantile(std::vector<double> v, double p) {
  std::erase_if(v, [](double x) { return !std::isfinite(x); });
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const double pos = p * static_cast<double>(v.size() - 1);
  const std::size_t i = static_cast<std::size_t>(pos);
  if (i + 1 >= v.size()) return v.back();
  return v[i] + (pos - static_cast<double>(i)) * (v[i + 1] - v[i]);
}

void simulate_one(const Model& model, const RunConfig& cfg, const RunOptions& opt, double eps, CsvTable& table,
                  std::string& dump, std::vector<std::string>& outputs, const std::string& svg_name) {
  const SimulationBlock& sb = cfg.simulation;
  OUSimConfig sc;
  sc.spec = model.spec.with_epsilon(eps);
  sc.x0_list = {sb.x0};
  sc.dt = sb.dt;
  sc.horizon = sb.horizon;
  sc.num_traj = sb.num_traj;
  sc.seed = sb.seed;
  sc.method = sb.method;
  sc.record_stride = sb.record_stride;
  sc.propagator_tol = sb.propagator_tol;
  validate_config(sc);
  const auto trajs = simulate(sc);
  const auto grid = simulation_grid(sc);
  const std::vector<double>& times = trajs.front().times;
  const std::size_t m = trajs.size(), K = times.size(), r = sb.x0.size();

  // (1/t) log ||E_{0,t}|| per trajectory on the recorded times.
  std::vector<double> positive(times.begin() + 1, times.end());
  std::vector<std::vector<double>> lyap(m, std::vector<double>(K, std::nan("")));
  parallel_for(m, [&](std::size_t j) {
    const PathRealization path = sample_coefficient_path(sc.spec, grid, sc.seed, coefficient_stream(j));
    const auto props = propagate_checkpoints(path, 0.0, positive, sb.propagator_tol);
    for (std::size_t k = 0; k < props.size(); ++k) lyap[j][k + 1] = log_norm_of(props[k]) / positive[k];
  });

  std::vector<double> norms(m), col(m), q(m);
  Vector mean(r);
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t j = 0; j < m; ++j) norms[j] = norm2(trajs[j].states[k]);
    const MeanEstimate nm = mean_estimate(norms);
    // Shifted by trajectory 0, so identical trajectories give exactly zero.
    const Vector& ref = trajs[0].states[k];
    for (std::size_t i = 0; i < r; ++i) {
      for (std::size_t j = 0; j < m; ++j) col[j] = trajs[j].states[k][i] - ref[i];
      mean[i] = pairwise_sum(col) / static_cast<double>(m);
    }
    double trace = 0.0, trace_se = 0.0;
    if (m >= 2) {
      for (std::size_t j = 0; j < m; ++j) {
        double d2 = 0.0;
        for (std::size_t i = 0; i < r; ++i) {
          const double d = trajs[j].states[k][i] - ref[i] - mean[i];
          d2 += d * d;
        }
        q[j] = d2;
      }
      const MeanEstimate qm = mean_estimate(q);
      const double scale = static_cast<double>(m) / static_cast<double>(m - 1);
      trace = scale * qm.mean;
      trace_se = scale * qm.std_error;
    }
    for (std::size_t j = 0; j < m; ++j) col[j] = lyap[j][k];
    table.add({eps, times[k], nm.mean, nm.std_error, trace, trace_se, quantile(col, 0.1), quantile(col, 0.5),
               quantile(col, 0.9)});
  }

  for (std::size_t j = 0; j < sb.dump_paths; ++j) {
    const PathRealization path = sample_coefficient_path(sc.spec, grid, sc.seed, coefficient_stream(j));
    append_path_record(dump, path, trajs[j]);
  }

  if (opt.svg) {
    std::vector<Series> series;
    const std::size_t shown = std::min<std::size_t>(m, 20);
    for (std::size_t j = 0; j < shown; ++j) {
      Series s;
      s.x = times;
      s.y = lyap[j];
      s.opacity = 0.5;
      series.push_back(std::move(s));
    }
    const double half_mu = 0.5 * log_norm(cfg.flow.a_inf);
    series.push_back(Series{{times.front(), times.back()}, {half_mu, half_mu}, "#d62728", true, 1.0});
    char title[96];
    std::snprintf(title, sizeof title, "(1/t) log ||E_0,t||, eps = %g (dashed: mu(A_inf)/2)", eps);
    write_file(out_path(opt, svg_name), svg_plot(title, "t", "(1/t) log ||E_0,t||", series));
    outputs.push_back(svg_name);
  }
}

// ---- certify ----

const std::vector<std::pair<std::string, std::string>>& quantity_of() {
  static const std::vector<std::pair<std::string, std::string>> q{
      {"averaged_flow", "averaged_flow_log_norm"}, {"mean_log", "mean_log_norm"},
      {"event_probability", "event_probability"},  {"moment_window", "moment_lyapunov_rate"},
      {"lemma", "lemma_log_moment"},               {"fluctuation", "fluctuation"},
      {"contraction", "contraction"},              {"moment_boundedness", "kappa_hat"},
      {"as_lyapunov", "as_failure_frequency"}};
  return q;
}

std::string quantity_name(const std::string& certificate) {
  for (const auto& [c, q] : quantity_of())
    if (c == certificate) return q;
  return certificate;
}

struct Row {
  BoundReport report;
  std::string status;  // verdict, or the gate error code
};

CsvTable certify_table() {
  return CsvTable({"quantity", "n", "epsilon", "t", "bound", "estimate", "stderr", "samples", "verdict", "margin"});
}

void add_rows(CsvTable& table, const std::vector<Row>& rows) {
  for (const auto& row : rows) {
    const BoundReport& r = row.report;
    table.add({r.quantity, static_cast<std::int64_t>(r.n), r.epsilon, r.t, r.bound, r.estimate, r.std_error,
               static_cast<std::int64_t>(r.samples), row.status, r.margin});
  }
}

// Finite window grid inside [lo, hi]; hi is capped at lo + span.
std::vector<double> capped_grid(double lo, double hi, double span, std::size_t points) {
  if (!(lo < hi)) return {std::max(lo, 1e-3)};
  return window_grid(lo, std::min(hi, lo + span), points);
}

std::vector<Row> certify_epsilon(const Model& model, const RunConfig& cfg, double eps) {
  const CertificationBlock& cb = cfg.certification;
  const CoefficientProcessSpec spec = model.spec.with_epsilon(eps);
  CertifyOptions opt;
  opt.samples = cb.samples;
  opt.seed = cfg.simulation.seed;
  opt.dt = cb.dt;
  opt.tol = cb.tol;

  OUSimConfig sim;
  sim.spec = spec;
  sim.x0_list = {cb.x0};
  sim.dt = cfg.simulation.dt;
  sim.num_traj = cb.samples;
  sim.seed = cfg.simulation.seed;
  sim.method = cfg.simulation.method;
  sim.propagator_tol = cfg.simulation.propagator_tol;

  const std::set<std::string> wanted(cb.certificates.begin(), cb.certificates.end());
  const double t_eval = model.h > 0.0 ? model.h : 1.0;
  std::vector<Row> rows;

  auto run = [&](const std::string& certificate, int n, auto&& body) {
    if (!wanted.count(certificate)) return;
    try {
      std::vector<BoundReport> reports = body();
      for (auto& r : reports) {
        if (cb.bound_scale != 1.0) rescale_bound(r, cb.bound_scale);
        rows.push_back({r, to_string(r.verdict)});
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::GateUnsatisfied && e.code() != ErrorCode::EmptyWindow) throw;
      std::cerr << "note: " << certificate << " n=" << n << " eps=" << format_double(eps) << ": " << e.what() << "\n";
      BoundReport r;
      r.quantity = quantity_name(certificate);
      r.n = n;
      r.epsilon = eps;
      r.t = r.bound = r.estimate = r.std_error = r.margin = std::nan("");
      rows.push_back({r, std::string(to_string(e.code()))});
    }
  };

  const int n0 = cb.n_list.front();
  const TheoremWindow w0 = make_window(n0, model.h0, model.constants, eps, cb.nu);
  run("averaged_flow", 1, [&] {
    return std::vector<BoundReport>{certify_averaged_flow(w0, *model.flow, cb.s, t_eval, cfg.simulation.propagator_tol)};
  });
  run("mean_log", 1, [&] { return std::vector<BoundReport>{certify_mean_log(w0, spec, cb.s, t_eval, opt)}; });

  for (int n : cb.n_list) {
    const TheoremWindow w = make_window(n, model.h0, model.constants, eps, cb.nu);
    const double c0 = w.c0, d1 = w.d1, d2 = w.d2;
    run("event_probability", n,
        [&] { return std::vector<BoundReport>{certify_event_probability(w, spec, cb.s, cb.t_list, opt)}; });
    run("moment_window", n, [&] {
      const double hi = std::isfinite(w.T_n_eps.value) ? w.T_n_eps.value : w.T_n + cb.window_span;
      const double lo = w.T_n > 0.0 ? w.T_n : std::min(0.1, hi);
      return certify_moment_window(w, spec, cb.s, capped_grid(lo, hi, cb.window_span, cb.window_points), opt);
    });
    run("lemma", n, [&] { return certify_lemma(model.constants, spec, cb.s, n, cb.lemma_t_grid, opt); });
    run("fluctuation", n, [&] {
      const double t_2n = compute_Tn(2 * n, c0, model.constants.c(4 * n));
      double hi = std::numeric_limits<double>::infinity();
      for (double e : cb.fluctuation_eps) hi = std::min(hi, compute_Tn_eps(2 * n, e, c0, d1, d2).value);
      const double t = std::max(t_2n, std::min(hi, t_2n + cb.window_span));
      return certify_fluctuation(w, spec, t_2n, t, cb.fluctuation_eps, opt);
    });
    run("contraction", n, [&] {
      const double hi = std::isfinite(w.T_n_eps.value) ? w.T_n_eps.value : w.T_n + cb.window_span;
      return certify_contraction(w, sim, cb.x1, cb.x2, capped_grid(w.T_n, hi, cb.window_span, cb.window_points));
    });
    run("moment_boundedness", n, [&] {
      const double lo = std::max(w.T_n, compute_Tn(2 * n, c0, model.constants.c(4 * n)));
      const double t_eps = compute_Tn_eps(2 * n, eps, c0, d1, d2).value;
      const double hi = std::isfinite(t_eps) ? t_eps : lo + cb.window_span;
      return certify_moment_boundedness(w, sim, cb.x0, capped_grid(lo, hi, cb.window_span, cb.window_points));
    });
    run("as_lyapunov", n, [&] { return certify_as_lyapunov(w, spec, cb.s, cb.t_list, cb.as_eps, opt); });
  }
  return rows;
}

int certify_over(const RunConfig& cfg, const RunOptions& opt, const std::vector<double>& eps_list,
                 const std::string& csv_name) {
  const auto start = Clock::now();
  prepare_out_dir(opt);
  const Model model = build_model(cfg);
  CsvTable table = certify_table();
  bool violated = false;
  for (double eps : eps_list) {
    const auto rows = certify_epsilon(model, cfg, eps);
    for (const auto& r : rows) violated = violated || r.status == to_string(Verdict::Violated);
    add_rows(table, rows);
  }
  table.write(out_path(opt, csv_name));
  const int code = violated ? kExitViolated : kExitOk;
  write_manifest(cfg, opt, derived_json(model), {csv_name}, start, code);
  return code;
}

}  // namespace

int cmd_constants(const RunConfig& cfg, const RunOptions& opt) {
  const auto start = Clock::now();
  prepare_out_dir(opt);
  const Model model = build_model(cfg);
  CsvTable table = constants_table();
  for (double eps : cfg.epsilons) {
    for (int n : cfg.certification.n_list) {
      const TheoremWindow w = make_window(n, model.h0, model.constants, eps, cfg.certification.nu);
      table.add({eps, static_cast<std::int64_t>(n), model.constants.c(n), model.constants.c(2 * n), w.T_n,
                 w.T_n_eps.value, static_cast<std::int64_t>(w.T_n_eps.binding), w.eps_n_nu, w.eps_2n_threshold,
                 w.cbar_n, w.d_const, w.d1, w.d2, w.c0, static_cast<std::int64_t>(w.nonempty() ? 1 : 0)});
    }
  }
  table.write(out_path(opt, "constants.csv"));
  write_manifest(cfg, opt, derived_json(model), {"constants.csv"}, start, kExitOk);
  return kExitOk;
}

int cmd_simulate(const RunConfig& cfg, const RunOptions& opt) {
  const auto start = Clock::now();
  prepare_out_dir(opt);
  Model model;
  model.flow = std::make_shared<H0Flow>(cfg.flow.a_inf, cfg.flow.m, cfg.flow.a, cfg.flow.b);
  model.spec.flow = model.flow;
  model.spec.perturbation = cfg.perturbation;
  model.spec.diffusion = cfg.diffusion;
  model.spec.validate();

  CsvTable table({"epsilon", "t", "mean_state_norm", "mean_state_norm_stderr", "cov_trace", "cov_trace_stderr",
                  "lyap_q10", "lyap_q50", "lyap_q90"});
  std::string dump;
  std::vector<std::string> outputs{"simulate.csv"};
  for (std::size_t i = 0; i < cfg.epsilons.size(); ++i) {
    const std::string svg = cfg.epsilons.size() == 1 ? "simulate.svg" : "simulate_" + std::to_string(i) + ".svg";
    simulate_one(model, cfg, opt, cfg.epsilons[i], table, dump, outputs, svg);
  }
  table.write(out_path(opt, "simulate.csv"));
  if (cfg.simulation.dump_paths > 0) {
    write_file(out_path(opt, "paths.bin"), dump);
    outputs.push_back("paths.bin");
  }
  ordered_json derived = ordered_json::object();
  derived["mu_A_inf"] = log_norm(cfg.flow.a_inf);
  write_manifest(cfg, opt, derived, outputs, start, kExitOk);
  return kExitOk;
}

int cmd_certify(const RunConfig& cfg, const RunOptions& opt) {
  if (cfg.epsilon_is_list && cfg.epsilons.size() > 1)
    throw ConfigError("epsilon: certify takes a single value; use the sweep command for a list");
  return certify_over(cfg, opt, cfg.epsilons, "certify.csv");
}

int cmd_sweep(const RunConfig& cfg, const RunOptions& opt) { return certify_over(cfg, opt, cfg.epsilons, "sweep.csv"); }

}  // namespace rou::cli
