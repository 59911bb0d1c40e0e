#include "config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "rou/error.hpp"

namespace rou::cli {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) { throw ConfigError(where + ": " + what); }

// Reads the fields of one JSON object, records the resolved values and
// rejects keys that were never asked for.
class Block {
 public:
  Block(const json* j, std::string path) : j_(j), path_(std::move(path)) {
    if (j_ && !j_->is_object()) fail(path_, "must be an object");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_ && j_->contains(key) && !(*j_)[key].is_null();
  }
  const json& raw(const std::string& key) const { return (*j_)[key]; }
  std::string where(const std::string& key) const { return path_ + "." + key; }

  double number(const std::string& key, double def) {
    double v = def;
    if (has(key)) {
      const json& x = raw(key);
      if (!x.is_number()) fail(where(key), "must be a number");
      v = x.get<double>();
      if (!std::isfinite(v)) fail(where(key), "must be finite");
    }
    out[key] = v;
    return v;
  }

  std::uint64_t count(const std::string& key, std::uint64_t def) {
    std::uint64_t v = def;
    if (has(key)) {
      const json& x = raw(key);
      if (!x.is_number_unsigned() && !(x.is_number_integer() && x.get<std::int64_t>() >= 0))
        fail(where(key), "must be a non-negative integer");
      v = x.get<std::uint64_t>();
    }
    out[key] = v;
    return v;
  }

  std::string text(const std::string& key, const std::string& def, const std::vector<std::string>& allowed) {
    std::string v = def;
    if (has(key)) {
      if (!raw(key).is_string()) fail(where(key), "must be a string");
      v = raw(key).get<std::string>();
    }
    if (!allowed.empty() && std::find(allowed.begin(), allowed.end(), v) == allowed.end()) {
      std::string list;
      for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
      fail(where(key), "'" + v + "' is not one of " + list);
    }
    out[key] = v;
    return v;
  }

  std::vector<double> numbers(const std::string& key, const std::vector<double>& def) {
    std::vector<double> v = def;
    if (has(key)) v = number_list(raw(key), where(key));
    out[key] = v;
    return v;
  }

  std::optional<Matrix> matrix(const std::string& key) {
    if (!has(key)) return std::nullopt;
    const json& x = raw(key);
    if (!x.is_array() || x.empty()) fail(where(key), "must be a non-empty array of rows");
    std::vector<std::vector<double>> rows;
    for (const auto& row : x) rows.push_back(number_list(row, where(key)));
    for (const auto& row : rows)
      if (row.size() != rows.size()) fail(where(key), "must be a square matrix");
    return Matrix::from_rows(rows);
  }

  void finish() const {
    if (!j_) return;
    for (const auto& [k, v] : j_->items())
      if (!seen_.count(k)) fail(path_, "unknown key '" + k + "'");
  }

  static std::vector<double> number_list(const json& x, const std::string& where) {
    if (!x.is_array()) fail(where, "must be an array of numbers");
    std::vector<double> v;
    for (const auto& e : x) {
      if (!e.is_number()) fail(where, "must be an array of numbers");
      v.push_back(e.get<double>());
      if (!std::isfinite(v.back())) fail(where, "entries must be finite");
    }
    return v;
  }

  ordered_json out = ordered_json::object();

 private:
  const json* j_;
  std::string path_;
  std::set<std::string> seen_;
};

const json* child(const json& doc, const std::string& key) {
  if (!doc.contains(key) || doc[key].is_null()) return nullptr;
  return &doc[key];
}

ordered_json matrix_json(const Matrix& m) {
  ordered_json rows = ordered_json::array();
  for (std::size_t i = 0; i < m.dim(); ++i) {
    ordered_json row = ordered_json::array();
    for (std::size_t j = 0; j < m.dim(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

void check(bool cond, const std::string& where, const std::string& what) {
  if (!cond) fail(where, what);
}

Vector state_vector(Block& blk, const std::string& key, const Vector& def) {
  const std::size_t dim = def.size();
  Vector v = blk.numbers(key, def);
  check(v.size() == dim, blk.where(key), "must have " + std::to_string(dim) + " entries");
  return v;
}

std::map<int, double> indexed(const json& x, const std::string& where) {
  check(x.is_object(), where, "must be an object keyed by n");
  std::map<int, double> out;
  for (const auto& [k, v] : x.items()) {
    int n = 0;
    std::istringstream is(k);
    is >> n;
    check(is && is.eof() && n >= 1, where, "key '" + k + "' is not a positive integer");
    check(v.is_number() && v.get<double>() >= 0.0, where + "." + k, "must be a number >= 0");
    out[n] = v.get<double>();
  }
  return out;
}

ordered_json indexed_json(const std::map<int, double>& m) {
  ordered_json o = ordered_json::object();
  for (const auto& [k, v] : m) o[std::to_string(k)] = v;
  return o;
}

FlowBlock parse_flow(const json& doc, ordered_json& resolved) {
  Block blk(child(doc, "flow"), "flow");
  FlowBlock f;
  const auto a_inf = blk.matrix("A_inf");
  f.a_inf = a_inf ? *a_inf : Matrix::from_rows({{-1.0, 0.0}, {0.0, -1.0}});
  const std::size_t r = f.a_inf.dim();
  check(r <= 64, "flow.A_inf", "dimension must be <= 64");
  const auto m = blk.matrix("M");
  if (m) {
    f.m = *m;
    check(f.m.dim() == r, "flow.M", "must have the dimension of A_inf");
  } else if (r == 2) {
    const double h = 1.0 / std::sqrt(2.0);
    f.m = Matrix::from_rows({{h, h}, {h, -h}});
  } else {
    f.m = Matrix::identity(r);
  }
  f.a = blk.number("a", 0.5);
  f.b = blk.number("b", 1.0);
  check(f.a >= 0.0, "flow.a", "must be >= 0");
  check(f.b > 0.0, "flow.b", "must be > 0");
  blk.finish();
  ordered_json o = ordered_json::object();
  o["A_inf"] = matrix_json(f.a_inf);
  o["M"] = matrix_json(f.m);
  o["a"] = f.a;
  o["b"] = f.b;
  resolved["flow"] = o;
  return f;
}

PerturbationModel parse_perturbation(const json& doc, ordered_json& resolved) {
  Block blk(child(doc, "perturbation"), "perturbation");
  const std::string kind = blk.text("kind", "frozen_gaussian", {"frozen_gaussian", "entrywise_ou", "piecewise_jump"});
  const double sigma = blk.number("sigma", 0.27);
  const double rate = blk.number("rate", 1.0);
  check(sigma >= 0.0, "perturbation.sigma", "must be >= 0");
  check(rate > 0.0, "perturbation.rate", "must be > 0");
  blk.finish();
  resolved["perturbation"] = blk.out;
  if (kind == "entrywise_ou") return PerturbationModel::entrywise_ou(rate, sigma);
  if (kind == "piecewise_jump") return PerturbationModel::piecewise_jump(rate, sigma);
  return PerturbationModel::frozen_gaussian(sigma);
}

DiffusionModel parse_diffusion(const json& doc, std::size_t r, ordered_json& resolved) {
  Block blk(child(doc, "diffusion"), "diffusion");
  const std::string kind = blk.text("kind", "constant", {"constant", "drift_coupled"});
  DiffusionModel d;
  if (kind == "constant") {
    const auto b0 = blk.matrix("B0");
    const Matrix m = b0 ? *b0 : Matrix::identity(r);
    check(m.dim() == r, "diffusion.B0", "must have the dimension of A_inf");
    try {
      d = DiffusionModel::constant(PsdMatrix(m));
    } catch (const Error& e) {
      fail("diffusion.B0", e.what());
    }
    blk.out["B0"] = matrix_json(m);
  } else {
    const double beta = blk.number("beta", 1.0);
    const double gamma = blk.number("gamma", 0.0);
    check(beta >= 0.0, "diffusion.beta", "must be >= 0");
    check(gamma >= 0.0, "diffusion.gamma", "must be >= 0");
    d = DiffusionModel::drift_coupled(beta, gamma);
  }
  blk.finish();
  resolved["diffusion"] = blk.out;
  return d;
}

void parse_epsilon(const json& doc, RunConfig& cfg) {
  if (doc.contains("epsilon") && !doc["epsilon"].is_null()) {
    const json& x = doc["epsilon"];
    if (x.is_array()) {
      cfg.epsilons = Block::number_list(x, "epsilon");
      cfg.epsilon_is_list = true;
      check(!cfg.epsilons.empty(), "epsilon", "list must not be empty");
    } else {
      check(x.is_number(), "epsilon", "must be a number or an array of numbers");
      cfg.epsilons = {x.get<double>()};
    }
  }
  for (double e : cfg.epsilons) check(e >= 0.0 && e <= 1.0, "epsilon", "values must be in [0, 1]");
  if (cfg.epsilon_is_list)
    cfg.resolved["epsilon"] = cfg.epsilons;
  else
    cfg.resolved["epsilon"] = cfg.epsilons.front();
}

SimulationBlock parse_simulation(const json& doc, std::size_t r, ordered_json& resolved) {
  Block blk(child(doc, "simulation"), "simulation");
  SimulationBlock s;
  s.dt = blk.number("dt", s.dt);
  s.horizon = blk.number("horizon", s.horizon);
  s.num_traj = blk.count("num_traj", s.num_traj);
  s.seed = blk.count("seed", s.seed);
  const std::string method = blk.text("method", "euler_maruyama", {"euler_maruyama", "solution_formula"});
  s.method = method == "euler_maruyama" ? SimMethod::EulerMaruyama : SimMethod::SolutionFormula;
  s.x0 = state_vector(blk, "x0", Vector(r, 1.0));
  s.record_stride = blk.count("record_stride", s.record_stride);
  s.propagator_tol = blk.number("propagator_tol", s.propagator_tol);
  s.dump_paths = blk.count("dump_paths", s.dump_paths);
  check(s.dt > 0.0, "simulation.dt", "must be > 0");
  check(s.horizon >= s.dt, "simulation.horizon", "must be >= dt");
  check(s.num_traj >= 1, "simulation.num_traj", "must be >= 1");
  check(s.record_stride >= 1, "simulation.record_stride", "must be >= 1");
  check(s.propagator_tol > 0.0, "simulation.propagator_tol", "must be > 0");
  check(s.dump_paths <= s.num_traj, "simulation.dump_paths", "must be <= num_traj");
  blk.finish();
  resolved["simulation"] = blk.out;
  return s;
}

EstimationBlock parse_estimation(const json& doc, ordered_json& resolved) {
  Block blk(child(doc, "estimation"), "estimation");
  EstimationBlock e;
  e.epsilon = blk.number("epsilon", e.epsilon);
  e.samples = blk.count("samples", e.samples);
  e.horizon = blk.number("horizon", e.horizon);
  e.dt = blk.number("dt", e.dt);
  e.h0_horizon = blk.number("h0_horizon", e.h0_horizon);
  e.h0_grid = blk.count("h0_grid", e.h0_grid);
  check(e.epsilon > 0.0 && e.epsilon <= 1.0, "estimation.epsilon", "must be in (0, 1]");
  check(e.samples >= 2, "estimation.samples", "must be >= 2");
  check(e.horizon > 0.0, "estimation.horizon", "must be > 0");
  check(e.dt > 0.0 && e.dt <= e.horizon, "estimation.dt", "must be in (0, horizon]");
  check(e.h0_horizon > 0.0, "estimation.h0_horizon", "must be > 0");
  check(e.h0_grid >= 2, "estimation.h0_grid", "must be >= 2");
  blk.finish();
  resolved["estimation"] = blk.out;
  return e;
}

std::optional<DeclaredConstants> parse_constants(const json& doc, ordered_json& resolved) {
  const json* j = child(doc, "constants");
  if (!j) {
    resolved["constants"] = nullptr;
    return std::nullopt;
  }
  Block blk(j, "constants");
  DeclaredConstants c;
  check(blk.has("c_n"), "constants", "c_n is required");
  c.c_n = indexed(blk.raw("c_n"), "constants.c_n");
  if (blk.has("eps_n")) c.eps_n = indexed(blk.raw("eps_n"), "constants.eps_n");
  for (const auto& [n, v] : c.eps_n) check(c.c_n.count(n) && v > 0.0 && v <= 1.0, "constants.eps_n",
                                           "needs a matching c_n entry and a value in (0, 1]");
  for (const auto& [n, v] : c.c_n)
    if (!c.eps_n.count(n)) c.eps_n[n] = 1.0;
  c.d1 = blk.number("d1", 0.0);
  c.d2 = blk.number("d2", 0.0);
  check(c.d1 >= 0.0, "constants.d1", "must be >= 0");
  check(c.d2 >= 0.0, "constants.d2", "must be >= 0");
  blk.finish();
  ordered_json o = ordered_json::object();
  o["c_n"] = indexed_json(c.c_n);
  o["d1"] = c.d1;
  o["d2"] = c.d2;
  o["eps_n"] = indexed_json(c.eps_n);
  resolved["constants"] = o;
  return c;
}

CertificationBlock parse_certification(const json& doc, std::size_t r, ordered_json& resolved) {
  Block blk(child(doc, "certification"), "certification");
  CertificationBlock c;
  c.certificates = all_certificates();
  if (blk.has("certificates")) {
    const json& x = blk.raw("certificates");
    check(x.is_array(), "certification.certificates", "must be an array of names");
    c.certificates.clear();
    for (const auto& e : x) {
      check(e.is_string(), "certification.certificates", "must be an array of names");
      const std::string name = e.get<std::string>();
      const auto& all = all_certificates();
      check(std::find(all.begin(), all.end(), name) != all.end(), "certification.certificates",
            "unknown certificate '" + name + "'");
      c.certificates.push_back(name);
    }
  }
  blk.out["certificates"] = c.certificates;
  std::vector<double> n_raw(c.n_list.begin(), c.n_list.end());
  n_raw = blk.numbers("n_list", n_raw);
  check(!n_raw.empty(), "certification.n_list", "must not be empty");
  c.n_list.clear();
  for (double n : n_raw) {
    check(n >= 1.0 && n <= 64.0 && n == std::floor(n), "certification.n_list", "entries must be integers in [1, 64]");
    c.n_list.push_back(static_cast<int>(n));
  }
  blk.out["n_list"] = c.n_list;
  c.nu = blk.number("nu", c.nu);
  c.s = blk.number("s", c.s);
  if (blk.has("h")) {
    check(blk.raw("h").is_number() && blk.raw("h").get<double>() > 0.0, "certification.h", "must be a number > 0");
    c.h = blk.raw("h").get<double>();
    blk.out["h"] = *c.h;
  } else {
    blk.out["h"] = nullptr;
  }
  c.t_list = blk.numbers("t_list", c.t_list);
  c.lemma_t_grid = blk.numbers("lemma_t_grid", c.lemma_t_grid);
  c.window_points = blk.count("window_points", c.window_points);
  c.window_span = blk.number("window_span", c.window_span);
  c.fluctuation_eps = blk.numbers("fluctuation_eps", c.fluctuation_eps);
  c.as_eps = blk.numbers("as_eps", c.as_eps);
  c.samples = blk.count("samples", c.samples);
  c.dt = blk.number("dt", c.dt);
  c.tol = blk.number("tol", c.tol);
  Vector unit(r, 0.0);
  unit[0] = 1.0;
  c.x1 = state_vector(blk, "x1", unit);
  c.x2 = state_vector(blk, "x2", Vector(r, 0.0));
  c.x0 = state_vector(blk, "x0", Vector(r, 1.0));
  c.bound_scale = blk.number("bound_scale", c.bound_scale);

  check(c.nu > 0.0 && c.nu <= 1.0, "certification.nu", "must be in (0, 1]");
  check(c.s >= 0.0, "certification.s", "must be >= 0");
  check(c.window_points >= 1, "certification.window_points", "must be >= 1");
  check(c.window_span > 0.0, "certification.window_span", "must be > 0");
  check(c.samples >= 2, "certification.samples", "must be >= 2");
  check(c.dt > 0.0, "certification.dt", "must be > 0");
  check(c.tol > 0.0, "certification.tol", "must be > 0");
  check(c.bound_scale >= 0.0, "certification.bound_scale", "must be >= 0");
  auto increasing = [](const std::vector<double>& v, const std::string& where) {
    check(!v.empty(), where, "must not be empty");
    for (std::size_t k = 0; k < v.size(); ++k) {
      check(v[k] > 0.0, where, "entries must be > 0");
      if (k > 0) check(v[k] > v[k - 1], where, "entries must be increasing");
    }
  };
  increasing(c.t_list, "certification.t_list");
  increasing(c.lemma_t_grid, "certification.lemma_t_grid");
  for (double e : c.fluctuation_eps) check(e > 0.0 && e < 1.0, "certification.fluctuation_eps", "values must be in (0, 1)");
  for (double e : c.as_eps) check(e > 0.0 && e < 1.0, "certification.as_eps", "values must be in (0, 1)");
  check(!c.fluctuation_eps.empty(), "certification.fluctuation_eps", "must not be empty");
  check(!c.as_eps.empty(), "certification.as_eps", "must not be empty");
  blk.finish();
  resolved["certification"] = blk.out;
  return c;
}

}  // namespace

const std::vector<std::string>& all_certificates() {
  static const std::vector<std::string> names{"averaged_flow", "mean_log",     "event_probability",
                                              "moment_window", "lemma",        "fluctuation",
                                              "contraction",   "moment_boundedness", "as_lyapunov"};
  return names;
}

RunConfig parse_config(const json& doc) {
  if (!doc.is_object()) throw ConfigError("config: top level must be an object");
  static const std::set<std::string> blocks{"flow",          "perturbation", "diffusion", "epsilon", "simulation",
                                            "estimation",    "constants",    "certification", "output"};
  for (const auto& [k, v] : doc.items())
    if (!blocks.count(k)) throw ConfigError("config: unknown key '" + k + "'");

  RunConfig cfg;
  cfg.resolved = ordered_json::object();
  try {
    cfg.flow = parse_flow(doc, cfg.resolved);
    const std::size_t r = cfg.flow.a_inf.dim();
    cfg.perturbation = parse_perturbation(doc, cfg.resolved);
    cfg.diffusion = parse_diffusion(doc, r, cfg.resolved);
    parse_epsilon(doc, cfg);
    cfg.simulation = parse_simulation(doc, r, cfg.resolved);
    cfg.estimation = parse_estimation(doc, cfg.resolved);
    cfg.constants = parse_constants(doc, cfg.resolved);
    cfg.certification = parse_certification(doc, r, cfg.resolved);
    Block out(child(doc, "output"), "output");
    cfg.output_dir = out.text("dir", cfg.output_dir, {});
    out.finish();
    cfg.resolved["output"] = out.out;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const Error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
  }
  return parse_config(doc);
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace rou::cli
