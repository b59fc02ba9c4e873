// Command-line front end: experiment runner, mixing-profile report,
// greedy-vs-stationary check, one-shot ellipsoid solve, and horizon sweeps.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "linmix/linmix.hpp"

namespace {

linmix::json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  linmix::json j;
  in >> j;
  return j;
}

linmix::ProcessSpec load_process_spec(const std::string& path) {
  const linmix::json j = load_json(path);
  return linmix::process_spec_from_json(j.contains("process") ? j.at("process") : j);
}

void ensure_parent_dir(const std::string& path) {
  const std::filesystem::path parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
}

void write_outputs(const linmix::RunResult& result, const std::string& prefix, bool curve) {
  ensure_parent_dir(prefix);
  linmix::write_replications_csv(prefix + ".csv", result);
  linmix::write_summary_json(prefix + ".json", result);
  if (curve) linmix::write_curve_csv(prefix + "_curve.csv", result);
  std::cout << "wrote " << prefix << ".csv, " << prefix << ".json"
            << (curve ? ", " + prefix + "_curve.csv" : "") << "\n";
}

void print_summary(const linmix::RunResult& result) {
  for (const linmix::HorizonStats& st : result.per_horizon) {
    std::cout << result.policy << " n=" << st.n << " reps=" << st.replications
              << " mean_regret=" << linmix::format_double(st.mean_regret)
              << " se=" << linmix::format_double(st.se_regret)
              << " coverage_fail_rate=" << linmix::format_double(st.coverage_fail_rate);
    if (std::isfinite(st.envelope))
      std::cout << " envelope=" << linmix::format_double(st.envelope);
    if (std::isfinite(st.envelope_summed_rounds))
      std::cout << " envelope_summed_rounds=" << linmix::format_double(st.envelope_summed_rounds)
                << " envelope_theorem=" << linmix::format_double(st.envelope_theorem);
    std::cout << "\n";
  }
}

int run_command(const std::string& config_path, const std::string& output_override, int threads,
                const std::string& trajectory_out, bool curve) {
  linmix::ExperimentConfig cfg = linmix::experiment_config_from_json(load_json(config_path));
  if (!output_override.empty()) cfg.output_path = output_override;
  if (threads > 0) cfg.threads = threads;
  if (cfg.output_path.empty())
    throw std::runtime_error("no output path (set output_path in the config or pass --output)");

  const linmix::RunResult result = linmix::run_experiment(cfg);
  print_summary(result);
  write_outputs(result, cfg.output_path, curve);

  if (!trajectory_out.empty()) {
    linmix::Process env(cfg.process, cfg.base_seed);
    linmix::Trajectory traj;
    const std::int64_t n = cfg.horizons.front();
    switch (cfg.policy) {
      case linmix::PolicyKind::LinMixFinite: traj = linmix::run_finite(env, n, cfg.policy_cfg); break;
      case linmix::PolicyKind::LinMixInfinite:
        traj = linmix::run_infinite(env, n, cfg.policy_cfg);
        break;
      case linmix::PolicyKind::FixedOracle:
        traj = linmix::run_fixed_oracle(env, n, linmix::theta_star(cfg.process));
        break;
      case linmix::PolicyKind::EveryStepUcb:
        traj = linmix::run_everystep_ucb(env, n, cfg.policy_cfg);
        break;
    }
    ensure_parent_dir(trajectory_out);
    linmix::write_run_log(trajectory_out, traj);
    std::cout << "wrote " << trajectory_out << "\n";
  }
  return 0;
}

int mixing_command(const std::string& config_path, int max_lag, const std::string& output) {
  const linmix::ProcessSpec spec = load_process_spec(config_path);
  const linmix::Vector pi = linmix::stationary_distribution(spec.transition);
  const linmix::MixingProfile profile = linmix::fit_envelope_from_chain(spec.transition, pi, max_lag);
  std::cout << "a=" << linmix::format_double(profile.a)
            << " gamma=" << linmix::format_double(profile.gamma) << "\n";
  for (std::size_t i = 0; i < profile.phi.size(); ++i) {
    const double m = static_cast<double>(i + 1);
    std::cout << "phi_" << (i + 1) << "=" << linmix::format_double(profile.phi[i])
              << " envelope=" << linmix::format_double(profile.a * std::exp(-profile.gamma * m))
              << "\n";
  }
  if (!output.empty()) {
    ensure_parent_dir(output);
    std::ofstream out(output, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + output);
    out << "m,phi,envelope\n";
    for (std::size_t i = 0; i < profile.phi.size(); ++i) {
      const double m = static_cast<double>(i + 1);
      out << (i + 1) << ',' << linmix::format_double(profile.phi[i]) << ','
          << linmix::format_double(profile.a * std::exp(-profile.gamma * m)) << '\n';
    }
    std::cout << "wrote " << output << "\n";
  }
  return 0;
}

int prop1_command(const std::string& config_path, std::int64_t n, const std::string& output) {
  const linmix::ProcessSpec spec = load_process_spec(config_path);
  const linmix::Prop1Report report = linmix::prop1_check(spec, n);
  linmix::json j;
  j["n"] = n;
  j["greedy_value"] = report.greedy_value;
  j["tilde_nu"] = report.tilde_nu;
  j["gap"] = report.gap;
  j["phi1"] = report.phi1;
  j["bound"] = report.bound;
  j["holds"] = report.holds;
  std::cout << j.dump(2) << "\n";
  if (!output.empty()) {
    ensure_parent_dir(output);
    std::ofstream out(output, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + output);
    out << j.dump(2) << '\n';
    std::cout << "wrote " << output << "\n";
  }
  return 0;
}

int solve_ellipsoid_command(const std::string& input_path, const std::string& output) {
  const linmix::ConfidenceEllipsoid ell = linmix::ellipsoid_from_json(load_json(input_path));
  const linmix::OptimisticSolution sol = linmix::solve_optimistic(ell);
  linmix::json j;
  j["theta_plus"] = linmix::json::array();
  for (Eigen::Index i = 0; i < sol.theta_plus.size(); ++i) j["theta_plus"].push_back(sol.theta_plus[i]);
  j["x_plus"] = linmix::json::array();
  for (Eigen::Index i = 0; i < sol.x_plus.size(); ++i) j["x_plus"].push_back(sol.x_plus[i]);
  j["value"] = sol.value;
  j["boundary_gap"] = ell.quadratic_form(sol.theta_plus) - ell.radius;
  std::cout << j.dump(2) << "\n";
  if (!output.empty()) {
    ensure_parent_dir(output);
    std::ofstream out(output, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + output);
    out << j.dump(2) << '\n';
    std::cout << "wrote " << output << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"restless linear bandits with mixing parameter sequences"};
  app.require_subcommand(1);

  std::string config_path, output, trajectory_out, input_path;
  int threads = 0;
  int max_lag = 20;
  std::int64_t n = 1000;

  CLI::App* run = app.add_subcommand("run", "run an experiment config and write CSV + JSON");
  run->add_option("--config", config_path, "experiment config (JSON)")->required();
  run->add_option("--output", output, "output prefix (overrides config output_path)");
  run->add_option("--threads", threads, "worker threads (0 = hardware)");
  run->add_option("--trajectory-out", trajectory_out, "also dump one run log (seed = base_seed)");

  CLI::App* mixing = app.add_subcommand("mixing", "mixing coefficients and fitted envelope");
  mixing->add_option("--config", config_path, "process spec (JSON)")->required();
  mixing->add_option("--max-lag", max_lag, "largest lag to report")->check(CLI::PositiveNumber);
  mixing->add_option("--output", output, "CSV output path");

  CLI::App* prop1 = app.add_subcommand("prop1", "greedy vs stationary value with mixing bound");
  prop1->add_option("--config", config_path, "process spec (JSON)")->required();
  prop1->add_option("--n", n, "horizon")->check(CLI::PositiveNumber);
  prop1->add_option("--output", output, "JSON output path");

  CLI::App* solve = app.add_subcommand("solve-ellipsoid", "maximize the norm over one ellipsoid");
  solve->add_option("--input", input_path, "ellipsoid (JSON: center, weight, radius)")->required();
  solve->add_option("--output", output, "JSON output path");

  CLI::App* sweep = app.add_subcommand("sweep", "run a config and write the per-horizon curve");
  sweep->add_option("--config", config_path, "experiment config (JSON)")->required();
  sweep->add_option("--output", output, "output prefix (overrides config output_path)");
  sweep->add_option("--threads", threads, "worker threads (0 = hardware)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return run_command(config_path, output, threads, trajectory_out, false);
    if (mixing->parsed()) return mixing_command(config_path, max_lag, output);
    if (prop1->parsed()) return prop1_command(config_path, n, output);
    if (solve->parsed()) return solve_ellipsoid_command(input_path, output);
    if (sweep->parsed()) return run_command(config_path, output, threads, "", true);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
