#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "linmix/estimator.hpp"
#include "linmix/harness.hpp"
#include "linmix/policy.hpp"
#include "linmix/process.hpp"

namespace linmix {

using json = nlohmann::json;

// Shortest exact decimal form: doubles round-trip through %.17g.
inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return std::string(buf);
}

namespace io_detail {

inline std::vector<double> to_flat(const Matrix& m) {
  std::vector<double> flat;
  flat.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) flat.push_back(m(i, j));
  return flat;
}

// Accepts either a nested array of rows or a flat row-major array whose
// length must match rows * cols.
inline Matrix parse_matrix(const json& node, int rows, int cols, const std::string& what) {
  if (!node.is_array()) throw std::invalid_argument(what + ": expected an array");
  Matrix m(rows, cols);
  if (!node.empty() && node.front().is_array()) {
    if (static_cast<int>(node.size()) != rows)
      throw std::invalid_argument(what + ": expected " + std::to_string(rows) + " rows");
    for (int i = 0; i < rows; ++i) {
      const json& row = node[static_cast<std::size_t>(i)];
      if (static_cast<int>(row.size()) != cols)
        throw std::invalid_argument(what + ": row " + std::to_string(i) + " has wrong length");
      for (int j = 0; j < cols; ++j) m(i, j) = row[static_cast<std::size_t>(j)].get<double>();
    }
  } else {
    if (static_cast<int>(node.size()) != rows * cols)
      throw std::invalid_argument(what + ": expected " + std::to_string(rows * cols) + " entries");
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j)
        m(i, j) = node[static_cast<std::size_t>(i * cols + j)].get<double>();
  }
  return m;
}

inline Vector parse_vector(const json& node, const std::string& what) {
  if (!node.is_array()) throw std::invalid_argument(what + ": expected an array");
  Vector v(static_cast<Eigen::Index>(node.size()));
  for (std::size_t i = 0; i < node.size(); ++i)
    v[static_cast<Eigen::Index>(i)] = node[i].get<double>();
  return v;
}

inline json vector_to_json(const Vector& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

}  // namespace io_detail

inline json to_json(const ProcessSpec& spec) {
  json j;
  j["kind"] = spec.kind == ProcessKind::MarkovDictionary ? "markov" : "iid";
  j["transition"] = io_detail::to_flat(spec.transition);
  json dict = json::array();
  for (const Vector& v : spec.dictionary) dict.push_back(io_detail::vector_to_json(v));
  j["dictionary"] = dict;
  j["bound_B"] = spec.bound_B;
  return j;
}

inline ProcessSpec process_spec_from_json(const json& j) {
  ProcessSpec spec;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "markov")
    spec.kind = ProcessKind::MarkovDictionary;
  else if (kind == "iid")
    spec.kind = ProcessKind::IidDictionary;
  else
    throw std::invalid_argument("process spec: kind must be \"markov\" or \"iid\"");

  const json& dict = j.at("dictionary");
  if (!dict.is_array() || dict.empty())
    throw std::invalid_argument("process spec: dictionary must be a nonempty array of vectors");
  for (const json& entry : dict)
    spec.dictionary.push_back(io_detail::parse_vector(entry, "process spec dictionary entry"));
  const int S = spec.states();
  spec.transition = io_detail::parse_matrix(j.at("transition"), S, S, "process spec transition");
  spec.bound_B = j.at("bound_B").get<double>();
  spec.validate();
  return spec;
}

inline json to_json(const PolicyConfig& cfg) {
  json j;
  j["lambda"] = cfg.lambda;
  j["a"] = cfg.a;
  j["gamma"] = cfg.gamma;
  j["B"] = cfg.B;
  if (cfg.delta) j["delta"] = *cfg.delta;
  if (cfg.x0) j["x0"] = io_detail::vector_to_json(*cfg.x0);
  return j;
}

inline PolicyConfig policy_config_from_json(const json& j) {
  PolicyConfig cfg;
  cfg.lambda = j.value("lambda", 1.0);
  cfg.a = j.at("a").get<double>();
  cfg.gamma = j.at("gamma").get<double>();
  cfg.B = j.at("B").get<double>();
  if (j.contains("delta") && !j["delta"].is_null()) cfg.delta = j["delta"].get<double>();
  if (j.contains("x0") && !j["x0"].is_null())
    cfg.x0 = io_detail::parse_vector(j["x0"], "policy config x0");
  return cfg;
}

inline PolicyKind policy_kind_from_string(const std::string& name) {
  if (name == "linmix_finite") return PolicyKind::LinMixFinite;
  if (name == "linmix_infinite") return PolicyKind::LinMixInfinite;
  if (name == "fixed_oracle") return PolicyKind::FixedOracle;
  if (name == "everystep_ucb") return PolicyKind::EveryStepUcb;
  throw std::invalid_argument("unknown policy \"" + name +
                              "\" (expected linmix_finite, linmix_infinite, fixed_oracle, or "
                              "everystep_ucb)");
}

inline ExperimentConfig experiment_config_from_json(const json& j) {
  ExperimentConfig cfg;
  cfg.process = process_spec_from_json(j.at("process"));
  cfg.policy = policy_kind_from_string(j.at("policy").get<std::string>());
  cfg.policy_cfg = policy_config_from_json(j.at("policy_cfg"));
  for (const json& h : j.at("horizons")) cfg.horizons.push_back(h.get<std::int64_t>());
  cfg.replications = j.at("replications").get<int>();
  // base_seed falls back to a seed carried inside the process block, then 0.
  if (j.contains("base_seed"))
    cfg.base_seed = j["base_seed"].get<std::uint64_t>();
  else
    cfg.base_seed = j.at("process").value("seed", std::uint64_t{0});
  cfg.output_path = j.value("output_path", std::string{});
  cfg.threads = j.value("threads", 0);
  return cfg;
}

inline json to_json(const ConfidenceEllipsoid& ell) {
  json j;
  j["center"] = io_detail::vector_to_json(ell.center);
  json rows = json::array();
  for (Eigen::Index i = 0; i < ell.weight.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < ell.weight.cols(); ++k) row.push_back(ell.weight(i, k));
    rows.push_back(row);
  }
  j["weight"] = rows;
  j["radius"] = ell.radius;
  return j;
}

inline ConfidenceEllipsoid ellipsoid_from_json(const json& j) {
  ConfidenceEllipsoid ell;
  ell.center = io_detail::parse_vector(j.at("center"), "ellipsoid center");
  const int d = static_cast<int>(ell.center.size());
  ell.weight = io_detail::parse_matrix(j.at("weight"), d, d, "ellipsoid weight");
  ell.radius = j.at("radius").get<double>();
  return ell;
}

// Per-replication rows: one line per (horizon, replication), in order.
inline void write_replications_csv(const std::string& path, const RunResult& result) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "policy,n,replication,regret,coverage_fail,seed\n";
  for (const ReplicationResult& row : result.rows) {
    out << result.policy << ',' << row.n << ',' << row.replication << ','
        << format_double(row.regret) << ',' << (row.coverage_fail ? 1 : 0) << ',' << row.seed
        << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

// Aggregate curve: one line per horizon.
inline void write_curve_csv(const std::string& path, const RunResult& result) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "policy,n,replications,mean_regret,se_regret,coverage_fail_rate,envelope\n";
  for (const HorizonStats& st : result.per_horizon) {
    out << result.policy << ',' << st.n << ',' << st.replications << ','
        << format_double(st.mean_regret) << ',' << format_double(st.se_regret) << ','
        << format_double(st.coverage_fail_rate) << ',';
    if (std::isfinite(st.envelope)) out << format_double(st.envelope);
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline json summary_to_json(const RunResult& result) {
  json j;
  j["policy"] = result.policy;
  json horizons = json::array();
  for (const HorizonStats& st : result.per_horizon) {
    json h;
    h["n"] = st.n;
    h["replications"] = st.replications;
    h["mean_regret"] = st.mean_regret;
    h["se_regret"] = st.se_regret;
    h["coverage_fail_rate"] = st.coverage_fail_rate;
    if (std::isfinite(st.envelope)) h["envelope"] = st.envelope;
    if (std::isfinite(st.envelope_summed_rounds)) {
      h["envelope_summed_rounds"] = st.envelope_summed_rounds;
      h["envelope_theorem"] = st.envelope_theorem;
      h["within_summed_envelope"] = st.mean_regret <= st.envelope_summed_rounds;
    }
    h["wall_seconds"] = st.wall_seconds;
    horizons.push_back(h);
  }
  j["horizons"] = horizons;
  return j;
}

inline void write_summary_json(const std::string& path, const RunResult& result) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << summary_to_json(result).dump(2) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path);
}

// Full run log: one record per step plus per-block ellipsoid summaries.
inline void write_run_log(const std::string& path, const Trajectory& traj) {
  json j;
  j["block_length"] = traj.block_length;
  json schedule = json::array();
  for (const RoundRecord& r : traj.schedule) {
    schedule.push_back({{"round", r.round},
                        {"horizon", r.horizon},
                        {"block_length", r.block_length},
                        {"delta", r.delta},
                        {"radius", r.radius},
                        {"start_t", r.start_t},
                        {"steps", r.steps}});
  }
  j["schedule"] = schedule;
  json steps = json::array();
  for (const StepRecord& s : traj.steps) {
    steps.push_back({{"t", s.t},
                     {"round", s.round},
                     {"m", s.m},
                     {"ell", s.ell},
                     {"action", io_detail::vector_to_json(traj.actions.col(s.t - 1))},
                     {"payoff", traj.payoffs[s.t - 1]}});
  }
  j["steps"] = steps;
  json blocks = json::array();
  for (const BlockRecord& blk : traj.ellipsoids) {
    json b;
    b["round"] = blk.round;
    b["m"] = blk.m;
    b["center"] = io_detail::vector_to_json(blk.center);
    json rows = json::array();
    for (Eigen::Index i = 0; i < blk.weight.rows(); ++i) {
      json row = json::array();
      for (Eigen::Index k = 0; k < blk.weight.cols(); ++k) row.push_back(blk.weight(i, k));
      rows.push_back(row);
    }
    b["weight"] = rows;
    b["radius"] = blk.radius;
    b["sample_count"] = blk.sample_count;
    b["newest_sample_t"] = blk.newest_sample_t;
    b["covers_true_mean"] = blk.covers_true_mean;
    blocks.push_back(b);
  }
  j["ellipsoids"] = blocks;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << j.dump() << '\n';
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace linmix
