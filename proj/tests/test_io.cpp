#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "linmix/io.hpp"

using linmix::json;
using linmix::Matrix;
using linmix::Vector;

namespace {

linmix::ProcessSpec benchmark_spec() {
  linmix::ProcessSpec spec;
  spec.kind = linmix::ProcessKind::MarkovDictionary;
  spec.transition = Matrix(2, 2);
  spec.transition << 0.7, 0.3, 0.3, 0.7;
  spec.dictionary = {Vector::Unit(2, 0), Vector::Unit(2, 1)};
  spec.bound_B = 1.0;
  return spec;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.push_back("");
  return fields;
}

}  // namespace

TEST_CASE("doubles survive the CSV text round trip bit-exactly") {
  const double values[] = {0.1, 1.0 / 3.0, 2.2250738585072014e-308, 1e300,
                           -7.615773105863908, 531165.094816926};
  for (double v : values) {
    const std::string text = linmix::format_double(v);
    REQUIRE(std::strtod(text.c_str(), nullptr) == v);
  }
}

TEST_CASE("process spec round-trips through json") {
  const linmix::ProcessSpec spec = benchmark_spec();
  const json j = linmix::to_json(spec);
  REQUIRE(j["kind"] == "markov");
  // Transition is emitted flat, row-major.
  REQUIRE(j["transition"].size() == 4);
  REQUIRE(j["transition"][1].get<double>() == 0.3);

  const linmix::ProcessSpec back = linmix::process_spec_from_json(j);
  REQUIRE(back.kind == spec.kind);
  REQUIRE(back.transition == spec.transition);
  REQUIRE(back.dictionary.size() == spec.dictionary.size());
  for (std::size_t i = 0; i < spec.dictionary.size(); ++i)
    REQUIRE(back.dictionary[i] == spec.dictionary[i]);
  REQUIRE(back.bound_B == spec.bound_B);
}

TEST_CASE("process spec accepts nested transition rows") {
  json j;
  j["kind"] = "markov";
  j["transition"] = {{0.7, 0.3}, {0.3, 0.7}};
  j["dictionary"] = {{1.0, 0.0}, {0.0, 1.0}};
  j["bound_B"] = 1.0;
  const linmix::ProcessSpec spec = linmix::process_spec_from_json(j);
  REQUIRE(spec.transition(0, 1) == 0.3);
  REQUIRE(spec.transition(1, 0) == 0.3);
}

TEST_CASE("process spec parsing propagates validation") {
  json j = linmix::to_json(benchmark_spec());
  j["transition"] = {0.7, 0.4, 0.3, 0.7};  // row sum 1.1
  REQUIRE_THROWS_AS(linmix::process_spec_from_json(j), std::invalid_argument);
  j = linmix::to_json(benchmark_spec());
  j["kind"] = "gaussian";
  REQUIRE_THROWS_AS(linmix::process_spec_from_json(j), std::invalid_argument);
  j = linmix::to_json(benchmark_spec());
  j["transition"] = {0.7, 0.3, 0.3};  // wrong length
  REQUIRE_THROWS_AS(linmix::process_spec_from_json(j), std::invalid_argument);
}

TEST_CASE("policy config round-trips with and without optional fields") {
  linmix::PolicyConfig cfg;
  cfg.lambda = 2.5;
  cfg.a = 0.5;
  cfg.gamma = 0.9;
  cfg.B = 1.25;
  json j = linmix::to_json(cfg);
  REQUIRE(!j.contains("delta"));
  REQUIRE(!j.contains("x0"));
  linmix::PolicyConfig back = linmix::policy_config_from_json(j);
  REQUIRE(back.lambda == cfg.lambda);
  REQUIRE(back.a == cfg.a);
  REQUIRE(back.gamma == cfg.gamma);
  REQUIRE(back.B == cfg.B);
  REQUIRE(!back.delta);
  REQUIRE(!back.x0);

  cfg.delta = 0.01;
  cfg.x0 = Vector::Unit(3, 1);
  back = linmix::policy_config_from_json(linmix::to_json(cfg));
  REQUIRE(back.delta);
  REQUIRE(*back.delta == 0.01);
  REQUIRE(back.x0);
  REQUIRE(*back.x0 == *cfg.x0);
}

TEST_CASE("policy config defaults and null handling") {
  json j;
  j["a"] = 1.0;
  j["gamma"] = 1.0;
  j["B"] = 1.0;
  j["delta"] = nullptr;
  const linmix::PolicyConfig cfg = linmix::policy_config_from_json(j);
  REQUIRE(cfg.lambda == 1.0);  // default when absent
  REQUIRE(!cfg.delta);         // null means "use the 1/n default"
}

TEST_CASE("policy names map to kinds") {
  REQUIRE(linmix::policy_kind_from_string("linmix_finite") == linmix::PolicyKind::LinMixFinite);
  REQUIRE(linmix::policy_kind_from_string("linmix_infinite") == linmix::PolicyKind::LinMixInfinite);
  REQUIRE(linmix::policy_kind_from_string("fixed_oracle") == linmix::PolicyKind::FixedOracle);
  REQUIRE(linmix::policy_kind_from_string("everystep_ucb") == linmix::PolicyKind::EveryStepUcb);
  REQUIRE_THROWS_WITH(linmix::policy_kind_from_string("bogus"),
                      Catch::Matchers::ContainsSubstring("bogus"));
  for (const char* name : {"linmix_finite", "linmix_infinite", "fixed_oracle", "everystep_ucb"})
    REQUIRE(linmix::policy_name(linmix::policy_kind_from_string(name)) == name);
}

TEST_CASE("experiment config parsing and seed fallback") {
  json j;
  j["process"] = linmix::to_json(benchmark_spec());
  j["process"]["seed"] = 999;
  j["policy"] = "linmix_finite";
  j["policy_cfg"] = {{"a", 0.5}, {"gamma", 0.9}, {"B", 1.0}};
  j["horizons"] = {100, 200};
  j["replications"] = 4;

  linmix::ExperimentConfig cfg = linmix::experiment_config_from_json(j);
  REQUIRE(cfg.base_seed == 999);  // falls back to the process seed
  REQUIRE(cfg.horizons == std::vector<std::int64_t>{100, 200});
  REQUIRE(cfg.replications == 4);
  REQUIRE(cfg.output_path.empty());
  REQUIRE(cfg.threads == 0);

  j["base_seed"] = 17;
  j["output_path"] = "out/test";
  j["threads"] = 2;
  cfg = linmix::experiment_config_from_json(j);
  REQUIRE(cfg.base_seed == 17);  // explicit wins
  REQUIRE(cfg.output_path == "out/test");
  REQUIRE(cfg.threads == 2);

  j.erase("base_seed");
  j["process"].erase("seed");
  cfg = linmix::experiment_config_from_json(j);
  REQUIRE(cfg.base_seed == 0);
}

TEST_CASE("ellipsoid round-trips through json") {
  linmix::ConfidenceEllipsoid ell;
  ell.center = Vector(2);
  ell.center << 0.4, 0.1;
  ell.weight = Matrix(2, 2);
  ell.weight << 4.0, 0.5, 0.5, 16.0;
  ell.radius = 2.25;
  const json j = linmix::to_json(ell);
  REQUIRE(j["weight"].is_array());
  REQUIRE(j["weight"][0].is_array());  // nested rows on output
  const linmix::ConfidenceEllipsoid back = linmix::ellipsoid_from_json(j);
  REQUIRE(back.center == ell.center);
  REQUIRE(back.weight == ell.weight);
  REQUIRE(back.radius == ell.radius);

  // Flat weight accepted on input.
  json flat = j;
  flat["weight"] = {4.0, 0.5, 0.5, 16.0};
  REQUIRE(linmix::ellipsoid_from_json(flat).weight == ell.weight);
}

TEST_CASE("csv writers emit parseable, bit-faithful tables") {
  linmix::ExperimentConfig cfg;
  cfg.process = benchmark_spec();
  cfg.policy = linmix::PolicyKind::LinMixFinite;
  cfg.policy_cfg.a = 0.5;
  cfg.policy_cfg.gamma = std::log(2.5);
  cfg.horizons = {150};
  cfg.replications = 3;
  cfg.base_seed = 42;
  cfg.threads = 1;
  const linmix::RunResult result = linmix::run_experiment(cfg);

  const std::string rep_path = "io_test_replications.csv";
  linmix::write_replications_csv(rep_path, result);
  std::vector<std::string> lines = read_lines(rep_path);
  REQUIRE(lines.size() == 4);
  REQUIRE(lines[0] == "policy,n,replication,regret,coverage_fail,seed");
  for (int r = 0; r < 3; ++r) {
    const std::vector<std::string> f = split_csv(lines[static_cast<std::size_t>(r + 1)]);
    REQUIRE(f.size() == 6);
    REQUIRE(f[0] == "linmix_finite");
    REQUIRE(f[1] == "150");
    REQUIRE(f[2] == std::to_string(r));
    REQUIRE(std::strtod(f[3].c_str(), nullptr) == result.rows[static_cast<std::size_t>(r)].regret);
    REQUIRE(f[5] == std::to_string(42 + r));
  }

  const std::string curve_path = "io_test_curve.csv";
  linmix::write_curve_csv(curve_path, result);
  lines = read_lines(curve_path);
  REQUIRE(lines.size() == 2);
  REQUIRE(lines[0] == "policy,n,replications,mean_regret,se_regret,coverage_fail_rate,envelope");
  const std::vector<std::string> f = split_csv(lines[1]);
  REQUIRE(f.size() == 7);
  REQUIRE(std::strtod(f[3].c_str(), nullptr) == result.per_horizon[0].mean_regret);
  REQUIRE(std::strtod(f[6].c_str(), nullptr) == result.per_horizon[0].envelope);
}

TEST_CASE("curve csv leaves the envelope blank when not applicable") {
  linmix::ExperimentConfig cfg;
  cfg.process = benchmark_spec();
  cfg.policy = linmix::PolicyKind::FixedOracle;
  cfg.horizons = {60};
  cfg.replications = 2;
  cfg.base_seed = 7;
  cfg.threads = 1;
  const linmix::RunResult result = linmix::run_experiment(cfg);
  const std::string path = "io_test_curve_oracle.csv";
  linmix::write_curve_csv(path, result);
  const std::vector<std::string> lines = read_lines(path);
  REQUIRE(lines.size() == 2);
  REQUIRE(lines[1].back() == ',');  // trailing empty envelope field
  const std::vector<std::string> f = split_csv(lines[1]);
  REQUIRE(f.size() == 7);
  REQUIRE(f[6].empty());
}

TEST_CASE("summary json mirrors the aggregate stats") {
  linmix::ExperimentConfig cfg;
  cfg.process = benchmark_spec();
  cfg.policy = linmix::PolicyKind::LinMixInfinite;
  cfg.policy_cfg.a = 0.5;
  cfg.policy_cfg.gamma = std::log(2.5);
  cfg.horizons = {120};
  cfg.replications = 2;
  cfg.base_seed = 5;
  cfg.threads = 1;
  const linmix::RunResult result = linmix::run_experiment(cfg);
  const json j = linmix::summary_to_json(result);
  REQUIRE(j["policy"] == "linmix_infinite");
  REQUIRE(j["horizons"].size() == 1);
  const json& h = j["horizons"][0];
  REQUIRE(h["n"] == 120);
  REQUIRE(h["replications"] == 2);
  REQUIRE(h["mean_regret"].get<double>() == result.per_horizon[0].mean_regret);
  REQUIRE(h.contains("envelope_summed_rounds"));
  REQUIRE(h.contains("within_summed_envelope"));
  REQUIRE(!h.contains("envelope"));  // single-horizon bound needs the finite policy

  const std::string path = "io_test_summary.json";
  linmix::write_summary_json(path, result);
  std::ifstream in(path);
  const json back = json::parse(in);
  REQUIRE(back == j);
}

TEST_CASE("run log records every step and block") {
  linmix::Process env(benchmark_spec(), 31);
  linmix::PolicyConfig pcfg;
  pcfg.a = 0.5;
  pcfg.gamma = std::log(2.5);
  const linmix::Trajectory traj = linmix::run_finite(env, 90, pcfg);
  const std::string path = "io_test_runlog.json";
  linmix::write_run_log(path, traj);
  std::ifstream in(path);
  const json j = json::parse(in);
  REQUIRE(j["block_length"].get<std::int64_t>() == traj.block_length);
  REQUIRE(j["steps"].size() == 90);
  REQUIRE(j["schedule"].size() == traj.schedule.size());
  REQUIRE(j["ellipsoids"].size() == traj.ellipsoids.size());
  const json& s0 = j["steps"][0];
  REQUIRE(s0["t"] == 1);
  REQUIRE(s0["action"].size() == 2);
  REQUIRE(s0["payoff"].get<double>() == traj.payoffs[0]);
  const json& b0 = j["ellipsoids"][0];
  REQUIRE(b0["weight"].size() == 2);
  REQUIRE(b0["weight"][0].size() == 2);
  REQUIRE(b0.contains("covers_true_mean"));
  REQUIRE(b0["sample_count"] == 1);
}
