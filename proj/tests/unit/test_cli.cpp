#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "commands.hpp"
#include "config.hpp"
#include "output.hpp"
#include "rou/error.hpp"
#include "rou/stability.hpp"

using namespace rou;
using namespace rou::cli;
using nlohmann::json;

namespace {

struct Csv {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t col(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    ADD_FAILURE() << "no column " << name;
    return 0;
  }
  double num(std::size_t row, const std::string& name) const { return std::stod(rows[row][col(name)]); }
};

// Our tables never quote, so a plain split is enough here.
Csv read_csv(const std::string& path) {
  std::ifstream in(path);
  EXPECT_TRUE(in.good()) << path;
  Csv csv;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (first)
      csv.header = cells;
    else
      csv.rows.push_back(cells);
    first = false;
  }
  return csv;
}

RunOptions options(const std::string& name, const std::string& command) {
  RunOptions opt;
  opt.command = command;
  opt.out_dir = (std::filesystem::path(::testing::TempDir()) / ("rou_cli_" + name)).string();
  std::filesystem::remove_all(opt.out_dir);
  return opt;
}

json declared(double c, double d1, double d2) {
  json cn = json::object();
  for (int n : {1, 2, 4, 8}) cn[std::to_string(n)] = c;
  return json{{"c_n", cn}, {"d1", d1}, {"d2", d2}};
}

}  // namespace

TEST(Config, UnknownKeysRejectedAtEveryLevel) {
  EXPECT_THROW(parse_config(json::parse(R"({"simulations": {}})")), ConfigError);
  EXPECT_THROW(parse_config(json::parse(R"({"simulation": {"dtt": 0.1}})")), ConfigError);
  EXPECT_THROW(parse_config(json::parse(R"({"flow": {"A": [[-1]]}})")), ConfigError);
  EXPECT_THROW(parse_config(json::parse(R"({"certification": {"bound_scal": 0}})")), ConfigError);
  EXPECT_THROW(parse_config(json::parse(R"({"constants": {"c_n": {"1": 1}, "d3": 0}})")), ConfigError);
}

TEST(Config, DefaultsAreEchoed) {
  const RunConfig cfg = parse_config(json::object());
  const auto& r = cfg.resolved;
  for (const char* block : {"flow", "perturbation", "diffusion", "epsilon", "simulation", "estimation", "constants",
                            "certification", "output"})
    EXPECT_TRUE(r.contains(block)) << block;
  for (const char* key : {"dt", "horizon", "num_traj", "seed", "method", "x0", "record_stride", "propagator_tol",
                          "dump_paths"})
    EXPECT_TRUE(r["simulation"].contains(key)) << key;
  for (const char* key : {"certificates", "n_list", "nu", "s", "h", "t_list", "lemma_t_grid", "window_points",
                          "window_span", "fluctuation_eps", "as_eps", "samples", "dt", "tol", "x1", "x2", "x0",
                          "bound_scale"})
    EXPECT_TRUE(r["certification"].contains(key)) << key;
  EXPECT_EQ(r["simulation"]["dt"].get<double>(), 0.01);
  EXPECT_EQ(r["flow"]["A_inf"][0][0].get<double>(), -1.0);
  EXPECT_TRUE(r["certification"]["h"].is_null());
  EXPECT_EQ(cfg.certification.certificates, all_certificates());
  EXPECT_EQ(cfg.epsilons, std::vector<double>{0.01});
}

TEST(Config, RejectsInvalidValues) {
  for (const char* text : {R"({"epsilon": 1.5})",
                           R"({"epsilon": []})",
                           R"({"flow": {"A_inf": [[-1, 0]]}})",
                           R"({"flow": {"b": 0}})",
                           R"({"diffusion": {"B0": [[1, 0], [0, -1]]}})",
                           R"({"simulation": {"x0": [1, 2, 3]}})",
                           R"({"simulation": {"num_traj": -3}})",
                           R"({"simulation": {"method": "milstein"}})",
                           R"({"certification": {"n_list": [0]}})",
                           R"({"certification": {"certificates": ["everything"]}})",
                           R"({"certification": {"t_list": [2, 1]}})",
                           R"({"constants": {"d1": 1}})",
                           R"([1, 2])"})
    EXPECT_THROW(parse_config(json::parse(text)), ConfigError) << text;
}

TEST(Config, EpsilonListAndDeclaredConstants) {
  const RunConfig cfg = parse_config(json::parse(R"({"epsilon": [0.1, 0.01],
      "constants": {"c_n": {"1": 0.5, "2": 0.6}, "d1": 0.2, "eps_n": {"2": 0.5}}})"));
  EXPECT_TRUE(cfg.epsilon_is_list);
  EXPECT_EQ(cfg.epsilons.size(), 2u);
  ASSERT_TRUE(cfg.constants.has_value());
  EXPECT_EQ(cfg.constants->c_n.at(2), 0.6);
  EXPECT_EQ(cfg.constants->eps_n.at(1), 1.0);
  EXPECT_EQ(cfg.constants->eps_n.at(2), 0.5);
  EXPECT_EQ(cfg.resolved["constants"]["d2"].get<double>(), 0.0);
}

TEST(Output, CsvFormatting) {
  EXPECT_EQ(format_double(0.1), "0.10000000000000001");
  EXPECT_EQ(format_double(-2.0), "-2");
  EXPECT_EQ(format_double(INFINITY), "inf");
  EXPECT_EQ(format_double(-INFINITY), "-inf");
  EXPECT_EQ(format_double(NAN), "nan");
  CsvTable t({"name", "value", "count"});
  t.add({std::string("a,b"), 1.5, std::int64_t{3}});
  t.add({std::string("say \"hi\""), 1e-300, std::int64_t{-1}});
  EXPECT_EQ(t.str(), "name,value,count\n\"a,b\",1.5,3\n\"say \"\"hi\"\"\",1e-300,-1\n");
  EXPECT_THROW(t.add({1.0}), rou::Error);
}

TEST(Output, Fnv1aReferenceValues) {
  EXPECT_EQ(fnv1a(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(fnv1a("foobar"), 0x85944171f73967e8ULL);
}

TEST(Output, SvgHasOnePolylinePerSeries) {
  const std::string svg = svg_plot("t", "x", "y", {Series{{0, 1, 2}, {1, NAN, 3}}, Series{{0, 2}, {0, 0}}});
  std::size_t count = 0;
  for (std::size_t p = svg.find("<polyline"); p != std::string::npos; p = svg.find("<polyline", p + 1)) ++count;
  EXPECT_EQ(count, 2u);
  EXPECT_EQ(svg.find("nan"), std::string::npos);
}

TEST(Report, RescaleBoundRereadsTheInterval) {
  BoundReport up = make_report("q", 1, 0.0, 1.0, 2.0, 1.0, 0.1, 100, BoundMode::Upper);
  EXPECT_EQ(up.verdict, Verdict::Certified);
  rescale_bound(up, 0.0);
  EXPECT_EQ(up.bound, 0.0);
  EXPECT_EQ(up.verdict, Verdict::Violated);
  EXPECT_DOUBLE_EQ(up.margin, -1.0);
  BoundReport inf = make_report("k", 1, 0.0, 1.0, INFINITY, 1.0, 0.1, 100, BoundMode::Upper);
  rescale_bound(inf, 0.0);
  EXPECT_TRUE(std::isinf(inf.bound));
  EXPECT_EQ(inf.verdict, Verdict::Certified);
}

TEST(Commands, ConstantsEpsilonSweepIsIncreasing) {
  json doc{{"epsilon", {0.1, 0.01, 0.001}}, {"constants", declared(0.5, 0.3, 0.2)}};
  const RunConfig cfg = parse_config(doc);
  const RunOptions opt = options("sweep", "constants");
  ASSERT_EQ(cmd_constants(cfg, opt), kExitOk);
  const Csv csv = read_csv(opt.out_dir + "/constants.csv");
  ASSERT_EQ(csv.rows.size(), 3u);
  EXPECT_LT(csv.num(0, "T_n_eps"), csv.num(1, "T_n_eps"));
  EXPECT_LT(csv.num(1, "T_n_eps"), csv.num(2, "T_n_eps"));
  EXPECT_TRUE(std::filesystem::exists(opt.out_dir + "/manifest.json"));
}

TEST(Commands, ConstantsZeroC2nGivesZeroTn) {
  json doc{{"epsilon", {0.1, 0.01}}, {"constants", declared(0.0, 0.3, 0.2)},
           {"certification", {{"n_list", {1, 2}}}}};
  const RunOptions opt = options("zero", "constants");
  ASSERT_EQ(cmd_constants(parse_config(doc), opt), kExitOk);
  const Csv csv = read_csv(opt.out_dir + "/constants.csv");
  ASSERT_EQ(csv.rows.size(), 4u);
  for (std::size_t i = 0; i < csv.rows.size(); ++i) EXPECT_EQ(csv.num(i, "T_n"), 0.0);
}

TEST(Commands, ConstantsMatchTheStabilityFunctions) {
  json cn{{"1", 0.4}, {"2", 0.5}, {"4", 0.7}, {"8", 0.9}};
  json doc{{"epsilon", 0.01}, {"constants", {{"c_n", cn}, {"d1", 0.3}, {"d2", 0.1}}}};
  const RunOptions opt = options("match", "constants");
  ASSERT_EQ(cmd_constants(parse_config(doc), opt), kExitOk);
  const Csv csv = read_csv(opt.out_dir + "/constants.csv");
  ASSERT_EQ(csv.rows.size(), 1u);
  // Canonical flow: A_inf = -I, so c0 = 1.
  EXPECT_EQ(csv.rows[0][csv.col("c0")], format_double(1.0));
  EXPECT_EQ(csv.rows[0][csv.col("T_n")], format_double(compute_Tn(2, 1.0, 0.7)));
  EXPECT_EQ(csv.rows[0][csv.col("T_n_eps")], format_double(compute_Tn_eps(2, 0.01, 1.0, 0.3, 0.1).value));
  EXPECT_EQ(csv.rows[0][csv.col("eps_2n_threshold")], format_double(eps_2n_threshold(2, 1.0, 0.7, 0.3, 0.1)));
  EXPECT_EQ(csv.rows[0][csv.col("eps_n_nu")], format_double(compute_eps_n_nu(1.0, 0.5, 2, 1.0, 0.5)));
  EXPECT_EQ(csv.rows[0][csv.col("d")], format_double(lemma_factor() * 0.3));
  EXPECT_EQ(csv.rows[0][csv.col("cbar_n")], format_double(4.0 * 0.5));
}

TEST(Commands, ConstantsMissingOrderIsAConfigError) {
  json doc{{"constants", {{"c_n", {{"1", 0.4}, {"2", 0.5}}}}}};
  EXPECT_THROW(cmd_constants(parse_config(doc), options("missing", "constants")), ConfigError);
}

TEST(Commands, SimulateWithoutNoiseHasZeroCovariance) {
  json doc = json::parse(R"({"epsilon": 0.0, "diffusion": {"B0": [[0, 0], [0, 0]]},
      "simulation": {"horizon": 2.0, "num_traj": 50, "record_stride": 20}})");
  const RunOptions opt = options("nonoise", "simulate");
  ASSERT_EQ(cmd_simulate(parse_config(doc), opt), kExitOk);
  const Csv csv = read_csv(opt.out_dir + "/simulate.csv");
  ASSERT_EQ(csv.rows.size(), 11u);
  for (std::size_t i = 0; i < csv.rows.size(); ++i) EXPECT_EQ(csv.num(i, "cov_trace"), 0.0);
}

TEST(Commands, SimulateScalarStationaryVariance) {
  // dX = -X dt + sqrt(2) dW: stationary variance 1; after t = 6 the transient is e^{-12}.
  json doc = json::parse(R"({"flow": {"A_inf": [[-1]], "a": 0}, "diffusion": {"B0": [[2]]}, "epsilon": 0.0,
      "simulation": {"dt": 0.005, "horizon": 6.0, "num_traj": 4000, "record_stride": 200, "seed": 3}})");
  RunOptions opt = options("scalar", "simulate");
  opt.svg = true;
  ASSERT_EQ(cmd_simulate(parse_config(doc), opt), kExitOk);
  const Csv csv = read_csv(opt.out_dir + "/simulate.csv");
  const std::size_t last = csv.rows.size() - 1;
  EXPECT_EQ(csv.num(last, "t"), 6.0);
  // Euler-Maruyama bias of the stationary variance is O(dt).
  EXPECT_NEAR(csv.num(last, "cov_trace"), 1.0, 3.0 * csv.num(last, "cov_trace_stderr") + 0.005);
  EXPECT_NEAR(csv.num(last, "lyap_q50"), -1.0, 1e-9);
  EXPECT_TRUE(std::filesystem::exists(opt.out_dir + "/simulate.svg"));
}

TEST(Commands, SimulatePathDumpLayout) {
  json doc = json::parse(R"({"epsilon": 0.1, "perturbation": {"kind": "piecewise_jump"},
      "simulation": {"horizon": 0.5, "dt": 0.05, "num_traj": 4, "record_stride": 5, "dump_paths": 2}})");
  const RunOptions opt = options("dump", "simulate");
  ASSERT_EQ(cmd_simulate(parse_config(doc), opt), kExitOk);
  const std::size_t r = 2, K = 10, M = 3;
  const std::size_t record = 8 * (2 + (K + 1) + 2 * (K + 1) * r * r + 1 + M + M * r);
  EXPECT_EQ(std::filesystem::file_size(opt.out_dir + "/paths.bin"), 2 * record);
}

TEST(Commands, SimulateStepTooLargeIsARuntimeError) {
  json doc = json::parse(R"({"simulation": {"dt": 1.0, "horizon": 2.0, "num_traj": 2}})");
  try {
    cmd_simulate(parse_config(doc), options("step", "simulate"));
    FAIL() << "expected StepTooLarge";
  } catch (const rou::Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::StepTooLarge);
  }
}

TEST(Commands, CertifyEmptyWindowIsARowNotAFailure) {
  const double thr = eps_2n_threshold(2, 1.0, 0.1, 0.01, 0.01);
  ASSERT_GT(thr, 0.0);
  ASSERT_LT(2.0 * thr, 1.0);
  json doc{{"epsilon", 2.0 * thr},
           {"constants", declared(0.1, 0.01, 0.01)},
           {"certification", {{"certificates", {"moment_window", "contraction"}}, {"samples", 50}}}};
  const RunOptions opt = options("empty", "certify");
  EXPECT_EQ(cmd_certify(parse_config(doc), opt), kExitOk);
  const Csv csv = read_csv(opt.out_dir + "/certify.csv");
  ASSERT_EQ(csv.rows.size(), 2u);
  for (const auto& row : csv.rows) EXPECT_EQ(row[csv.col("verdict")], "EmptyWindow");
}

TEST(Commands, CertifyTimeGateIsARow) {
  json doc{{"epsilon", 0.0},
           {"constants", declared(0.1, 0.01, 0.01)},
           {"certification", {{"certificates", {"averaged_flow"}}, {"h", 0.5}}}};
  const RunOptions opt = options("gate", "certify");
  EXPECT_EQ(cmd_certify(parse_config(doc), opt), kExitOk);
  const Csv csv = read_csv(opt.out_dir + "/certify.csv");
  ASSERT_EQ(csv.rows.size(), 1u);
  EXPECT_EQ(csv.rows[0][csv.col("verdict")], "GateUnsatisfied");
}

TEST(Commands, CertifyZeroedBoundExitsFour) {
  json doc{{"epsilon", 0.0},
           {"constants", declared(0.1, 0.01, 0.01)},
           {"certification", {{"certificates", {"averaged_flow", "contraction"}}, {"samples", 50}}}};
  EXPECT_EQ(cmd_certify(parse_config(doc), options("scale1", "certify")), kExitOk);
  doc["certification"]["bound_scale"] = 0.0;
  const RunOptions opt = options("scale0", "certify");
  EXPECT_EQ(cmd_certify(parse_config(doc), opt), kExitViolated);
  const Csv csv = read_csv(opt.out_dir + "/certify.csv");
  bool any = false;
  for (const auto& row : csv.rows) any = any || row[csv.col("verdict")] == "violated";
  EXPECT_TRUE(any);
}

TEST(Commands, CertifyRejectsEpsilonListButSweepRunsIt) {
  json doc{{"epsilon", {0.0, 0.001}},
           {"constants", declared(0.1, 0.01, 0.01)},
           {"certification", {{"certificates", {"averaged_flow"}}}}};
  const RunConfig cfg = parse_config(doc);
  EXPECT_THROW(cmd_certify(cfg, options("list", "certify")), ConfigError);
  const RunOptions opt = options("sweep_cert", "sweep");
  EXPECT_EQ(cmd_sweep(cfg, opt), kExitOk);
  const Csv csv = read_csv(opt.out_dir + "/sweep.csv");
  ASSERT_EQ(csv.rows.size(), 2u);
  EXPECT_EQ(csv.num(1, "epsilon"), 0.001);
}
