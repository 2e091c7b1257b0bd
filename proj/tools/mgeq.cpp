#include <CLI11.hpp>
#include <cstdlib>
#include <iostream>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "mgeq/harness.hpp"
#include "mgeq/serialize.hpp"

namespace {

int thread_count_fallback(int flag_value) {
  if (flag_value > 0) return flag_value;
  if (const char* env = std::getenv("MG_EQUILIB_THREADS")) {
    int parsed = std::atoi(env);
    if (parsed > 0) return parsed;
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Markov game equilibrium learning experiments"};
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "Execute all (seed x algorithm) cells of a config");
  std::string run_config;
  std::string run_out;
  std::vector<std::uint64_t> run_seeds;
  int run_threads = 0;
  bool run_exact = false;
  bool run_no_exact = false;
  run->add_option("--config", run_config, "Experiment config (JSON)")->required();
  run->add_option("--out", run_out, "Output directory override");
  run->add_option("--seed", run_seeds, "Seed list override");
  run->add_option("--threads", run_threads, "Worker threads (MG_EQUILIB_THREADS fallback)");
  run->add_flag("--exact-eval", run_exact, "Force exact gap evaluation on");
  run->add_flag("--no-exact-eval", run_no_exact, "Force exact gap evaluation off");

  // eval
  auto* eval = app.add_subcommand("eval", "Exact gap report for a policy on a game");
  std::string eval_game, eval_policy;
  eval->add_option("game", eval_game, "Game document (JSON)")->required();
  eval->add_option("policy", eval_policy, "Policy document (JSON)")->required();

  // oracle-check
  auto* oracle = app.add_subcommand("oracle-check", "Run a no-regret / regression oracle suite");
  std::string suite;
  int oracle_seeds = 50;
  std::uint64_t oracle_base_seed = 7;
  oracle->add_option("suite", suite, "hedge | swap | bandit | bandit-swap | regression")
      ->required();
  oracle->add_option("--seeds", oracle_seeds, "Number of seeds for statistical suites");
  oracle->add_option("--base-seed", oracle_base_seed, "Base seed");

  // gen-env
  auto* gen = app.add_subcommand("gen-env", "Generate an environment document");
  std::string gen_family = "random";
  std::string gen_out_file;
  std::uint64_t gen_seed = 1;
  int gen_states = 3, gen_horizon = 2, gen_players = 2, gen_facilities = 2;
  std::vector<int> gen_actions = {2, 2};
  gen->add_option("--family", gen_family, "random | zero_sum | cooperative | congestion");
  gen->add_option("--out", gen_out_file, "Output path")->required();
  gen->add_option("--seed", gen_seed, "Generator seed");
  gen->add_option("--states", gen_states, "State count");
  gen->add_option("--horizon", gen_horizon, "Horizon");
  gen->add_option("--actions", gen_actions, "Per-player action counts");
  gen->add_option("--players", gen_players, "Players (congestion)");
  gen->add_option("--facilities", gen_facilities, "Facilities (congestion)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      mgeq::ExperimentConfig config =
          mgeq::ExperimentConfig::from_json(mgeq::read_json_file(run_config));
      if (!run_out.empty()) config.output_dir = run_out;
      if (!run_seeds.empty()) config.seeds = run_seeds;
      if (run_exact) config.exact_eval = true;
      if (run_no_exact) config.exact_eval = false;
      config.threads = thread_count_fallback(run_threads > 0 ? run_threads : config.threads);
      mgeq::RunSummary summary = mgeq::run_experiment(config);
      std::cout << mgeq::csv_summary_header() << "\n";
      for (const auto& cell : summary.cells) {
        std::cout << mgeq::csv_summary_row(cell) << "\n";
      }
      return 0;
    }
    if (*eval) {
      mgeq::TabularMarkovGame game = mgeq::game_from_json(mgeq::read_json_file(eval_game));
      mgeq::MixtureMarkovPolicy policy =
          mgeq::policy_from_json(mgeq::read_json_file(eval_policy));
      std::cout << mgeq::evaluate_policy_report(game, policy).dump(2) << "\n";
      return 0;
    }
    if (*oracle) {
      mgeq::OracleCheckResult result =
          mgeq::run_oracle_suite(suite, oracle_seeds, oracle_base_seed);
      for (const auto& line : result.lines) std::cout << line << "\n";
      std::cout << (result.passed ? "SUITE PASS" : "SUITE FAIL") << " (" << result.suite << ")\n";
      return result.passed ? 0 : 1;
    }
    if (*gen) {
      mgeq::EnvDocument doc;
      if (gen_family == "congestion") {
        doc.type = "congestion";
        doc.congestion =
            mgeq::random_congestion_game(gen_seed, gen_players, gen_facilities);
      } else if (gen_family == "random") {
        doc.type = "tabular";
        doc.game = mgeq::random_game(gen_seed, gen_states, gen_actions, gen_horizon);
      } else if (gen_family == "zero_sum") {
        doc.type = "tabular";
        doc.game = mgeq::random_zero_sum_game(gen_seed, gen_states, gen_actions.at(0),
                                              gen_actions.at(1), gen_horizon);
      } else if (gen_family == "cooperative") {
        doc.type = "tabular";
        doc.game = mgeq::random_cooperative_game(gen_seed, gen_states, gen_actions, gen_horizon);
      } else {
        std::cerr << "unknown family: " << gen_family << "\n";
        return 2;
      }
      mgeq::write_json_file(gen_out_file, mgeq::env_to_json(doc));
      std::cout << "wrote " << gen_out_file << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
