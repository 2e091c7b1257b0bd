#pragma once

#include <cstdint>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "mgeq/envs.hpp"
#include "mgeq/game.hpp"
#include "mgeq/prefi.hpp"

namespace mgeq {

enum class Algorithm { kPrefi, kPrefiAgile, kPrebo, kNashCa };

// One flat experiment description. Paper-formula parameters are filled from
// (epsilon, delta, env dims) and can be overridden field by field; the
// polylog-hidden budgets take explicit multipliers.
struct ExperimentConfig {
  nlohmann::json environment;  // family spec or {"file": path}
  Algorithm algorithm = Algorithm::kPrefi;
  EquilibriumMode mode = EquilibriumMode::kCce;
  double epsilon = 0.1;
  double delta = 0.1;
  nlohmann::json multipliers;  // t, n, mc, solver_n, bonus
  nlohmann::json overrides;    // lambda, beta, radius, t_trig, k_max, ...
  std::vector<std::uint64_t> seeds;
  std::string output_dir = "out";
  bool exact_eval = true;
  bool per_episode_eval = false;
  int threads = 1;

  static ExperimentConfig from_json(const nlohmann::json& doc);
  nlohmann::json to_json() const;
  std::string hash() const;
};

// A fully constructed environment: the game, features, and when the source is
// a congestion game, the structure needed for potential diagnostics.
struct BuiltEnv {
  LinearGameEnv env;
  std::optional<CongestionGame> congestion;
  double radius_override = 0.0;  // congestion preset: W = F
  bool potential_preset = false;  // congestion or cooperative
};

BuiltEnv build_environment(const nlohmann::json& spec);

struct CellResult {
  std::uint64_t seed = 0;
  long long episodes = 0;
  long long trajectories = 0;
  std::optional<double> certified_bound;
  std::optional<double> exact_cce_gap;
  std::optional<double> exact_ce_gap;
  std::optional<double> exact_nash_gap;
  long long wall_ms = 0;
  std::vector<std::string> metric_lines;  // newline-delimited JSON records
  nlohmann::json policy_doc;
};

// Executes one (config, seed) cell. Everything in the result except wall_ms is
// a deterministic function of (config, seed).
CellResult run_cell(const ExperimentConfig& config, const BuiltEnv& built, std::uint64_t seed);

struct RunSummary {
  std::vector<CellResult> cells;  // in config seed order
};

// Runs all seeds on a pool of `config.threads` workers and writes per-cell
// metric streams, policies, and summary.csv under config.output_dir.
RunSummary run_experiment(const ExperimentConfig& config);

// Gap report used by the eval subcommand.
nlohmann::json evaluate_policy_report(const TabularMarkovGame& game,
                                      const MixtureMarkovPolicy& policy);

struct OracleCheckResult {
  std::string suite;
  bool passed = false;
  std::vector<std::string> lines;  // one human-readable check per line
};

// suite in {hedge, swap, bandit, bandit-swap, regression}.
OracleCheckResult run_oracle_suite(const std::string& suite, int num_seeds,
                                   std::uint64_t base_seed);

TabularMarkovGame matching_pennies();
// Shared-reward random game; a Markov potential game by construction.
TabularMarkovGame random_cooperative_game(std::uint64_t seed, int num_states,
                                          std::vector<int> action_counts, int horizon,
                                          RewardNoise noise = RewardNoise::kBernoulli);

std::string csv_summary_header();
std::string csv_summary_row(const CellResult& cell);

}  // namespace mgeq
