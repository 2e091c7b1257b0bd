#include "mgeq/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "mgeq/nash_ca.hpp"
#include "mgeq/prebo.hpp"
#include "mgeq/regression.hpp"
#include "mgeq/regret.hpp"
#include "mgeq/serialize.hpp"
#include "mgeq/value.hpp"

namespace mgeq {

using nlohmann::json;

TabularMarkovGame matching_pennies() {
  TabularMarkovGame g = TabularMarkovGame::zeros(1, 1, {2, 2});
  std::vector<int> a(2);
  for (a[0] = 0; a[0] < 2; ++a[0]) {
    for (a[1] = 0; a[1] < 2; ++a[1]) {
      long long joint = g.actions.index(a);
      double match = a[0] == a[1] ? 1.0 : 0.0;
      g.reward_mut(0, 0, 0, joint) = match;
      g.reward_mut(0, 1, 0, joint) = 1.0 - match;
      g.transition_mut(0, 0, joint, 0) = 1.0;
    }
  }
  g.validate();
  return g;
}

TabularMarkovGame random_cooperative_game(std::uint64_t seed, int num_states,
                                          std::vector<int> action_counts, int horizon,
                                          RewardNoise noise) {
  TabularMarkovGame g = random_game(seed, num_states, action_counts, horizon, noise);
  for (int h = 0; h < horizon; ++h) {
    for (int s = 0; s < num_states; ++s) {
      for (long long a = 0; a < g.num_joint_actions(); ++a) {
        double shared = g.reward(h, 0, s, a);
        for (int i = 1; i < g.num_players(); ++i) g.reward_mut(h, i, s, a) = shared;
      }
    }
  }
  return g;
}

namespace {

Algorithm algorithm_from_name(const std::string& name) {
  if (name == "prefi") return Algorithm::kPrefi;
  if (name == "prefi-agile") return Algorithm::kPrefiAgile;
  if (name == "prebo") return Algorithm::kPrebo;
  if (name == "nash-ca") return Algorithm::kNashCa;
  throw std::invalid_argument("unknown algorithm: " + name);
}

std::string algorithm_name(Algorithm algo) {
  switch (algo) {
    case Algorithm::kPrefi: return "prefi";
    case Algorithm::kPrefiAgile: return "prefi-agile";
    case Algorithm::kPrebo: return "prebo";
    case Algorithm::kNashCa: return "nash-ca";
  }
  return "?";
}

EquilibriumMode mode_from_name(const std::string& name) {
  if (name == "cce") return EquilibriumMode::kCce;
  if (name == "ce") return EquilibriumMode::kCe;
  throw std::invalid_argument("unknown mode: " + name);
}

double get_mult(const json& multipliers, const std::string& key, double fallback) {
  if (multipliers.is_object() && multipliers.contains(key)) {
    return multipliers.at(key).get<double>();
  }
  return fallback;
}

template <typename T>
void apply_override(const json& overrides, const std::string& key, T* field) {
  if (overrides.is_object() && overrides.contains(key)) {
    *field = overrides.at(key).get<T>();
  }
}

std::string format_double(double v) {
  std::ostringstream out;
  out.precision(12);
  out << v;
  return out.str();
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const json& doc) {
  ExperimentConfig c;
  c.environment = doc.at("environment");
  c.algorithm = algorithm_from_name(doc.at("algorithm").get<std::string>());
  if (doc.contains("mode")) c.mode = mode_from_name(doc.at("mode").get<std::string>());
  c.epsilon = doc.at("epsilon").get<double>();
  c.delta = doc.at("delta").get<double>();
  if (doc.contains("multipliers")) c.multipliers = doc.at("multipliers");
  if (doc.contains("overrides")) c.overrides = doc.at("overrides");
  c.seeds = doc.at("seeds").get<std::vector<std::uint64_t>>();
  if (c.seeds.empty()) throw std::invalid_argument("config: seed list must not be empty");
  if (doc.contains("output_dir")) c.output_dir = doc.at("output_dir").get<std::string>();
  if (doc.contains("exact_eval")) c.exact_eval = doc.at("exact_eval").get<bool>();
  if (doc.contains("per_episode_eval"))
    c.per_episode_eval = doc.at("per_episode_eval").get<bool>();
  if (doc.contains("threads")) c.threads = doc.at("threads").get<int>();
  return c;
}

json ExperimentConfig::to_json() const {
  json doc;
  doc["environment"] = environment;
  doc["algorithm"] = algorithm_name(algorithm);
  doc["mode"] = mode == EquilibriumMode::kCce ? "cce" : "ce";
  doc["epsilon"] = epsilon;
  doc["delta"] = delta;
  if (!multipliers.is_null()) doc["multipliers"] = multipliers;
  if (!overrides.is_null()) doc["overrides"] = overrides;
  doc["seeds"] = seeds;
  doc["output_dir"] = output_dir;
  doc["exact_eval"] = exact_eval;
  doc["per_episode_eval"] = per_episode_eval;
  doc["threads"] = threads;
  return doc;
}

std::string ExperimentConfig::hash() const {
  // FNV-1a over the canonical dump; stable across platforms. Output location
  // and worker count do not affect results and stay out of the hash.
  json semantic = to_json();
  semantic.erase("output_dir");
  semantic.erase("threads");
  std::string dump = semantic.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : dump) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream out;
  out << std::hex << h;
  return out.str();
}

BuiltEnv build_environment(const json& spec) {
  BuiltEnv built;
  if (spec.contains("file")) {
    EnvDocument doc = env_from_json(read_json_file(spec.at("file").get<std::string>()));
    if (doc.type == "tabular") {
      built.env.game = doc.game;
      built.env.features = tabular_features(doc.game);
    } else if (doc.type == "congestion") {
      CongestionConversion conv = congestion_to_markov_game(doc.congestion);
      built.env.game = conv.game;
      built.env.features = conv.features;
      built.congestion = doc.congestion;
      built.radius_override = conv.radius;
      built.potential_preset = true;
    } else if (doc.type == "abstraction") {
      AbstractionEnv abs = abstraction_env(doc.game, doc.abstraction);
      built.env.game = abs.game;
      built.env.features = abs.features;
    }
    return built;
  }
  std::string family = spec.at("family").get<std::string>();
  if (family == "matching_pennies") {
    built.env.game = matching_pennies();
    built.env.features = tabular_features(built.env.game);
  } else if (family == "random") {
    built.env.game = random_game(spec.at("seed").get<std::uint64_t>(),
                                 spec.at("states").get<int>(),
                                 spec.at("action_counts").get<std::vector<int>>(),
                                 spec.at("horizon").get<int>());
    built.env.features = tabular_features(built.env.game);
  } else if (family == "zero_sum") {
    built.env.game = random_zero_sum_game(
        spec.at("seed").get<std::uint64_t>(), spec.at("states").get<int>(),
        spec.at("action_counts").at(0).get<int>(), spec.at("action_counts").at(1).get<int>(),
        spec.at("horizon").get<int>());
    built.env.features = tabular_features(built.env.game);
  } else if (family == "cooperative") {
    built.env.game = random_cooperative_game(spec.at("seed").get<std::uint64_t>(),
                                             spec.at("states").get<int>(),
                                             spec.at("action_counts").get<std::vector<int>>(),
                                             spec.at("horizon").get<int>());
    built.env.features = tabular_features(built.env.game);
    built.potential_preset = true;
  } else if (family == "congestion") {
    CongestionGame cg = random_congestion_game(
        spec.at("seed").get<std::uint64_t>(), spec.at("players").get<int>(),
        spec.at("facilities").get<int>(),
        spec.value("singleton_actions", true));
    CongestionConversion conv = congestion_to_markov_game(cg);
    built.env.game = conv.game;
    built.env.features = conv.features;
    built.congestion = std::move(cg);
    built.radius_override = conv.radius;
    built.potential_preset = true;
  } else if (family == "abstraction_random") {
    TabularMarkovGame base = random_game(spec.at("seed").get<std::uint64_t>(),
                                         spec.at("states").get<int>(),
                                         spec.at("action_counts").get<std::vector<int>>(),
                                         spec.at("horizon").get<int>());
    AbstractionEnv abs = abstraction_env(base, spec.at("psi").get<std::vector<int>>());
    built.env.game = abs.game;
    built.env.features = abs.features;
  } else {
    throw std::invalid_argument("unknown environment family: " + family);
  }
  return built;
}

namespace {

PrefiParams resolve_prefi_params(const ExperimentConfig& config, const BuiltEnv& built,
                                 CoverMode cover) {
  EnvDims dims = EnvDims::of(built.env);
  PrefiParams p = default_prefi_params(config.epsilon, config.delta, dims, config.mode, cover,
                                       get_mult(config.multipliers, "t", 1.0),
                                       get_mult(config.multipliers, "n", 1.0));
  if (built.radius_override > 0.0) p.radius = built.radius_override;
  const json& o = config.overrides;
  apply_override(o, "lambda", &p.lambda);
  apply_override(o, "radius", &p.radius);
  apply_override(o, "beta", &p.beta);
  apply_override(o, "t_trig", &p.t_trig);
  apply_override(o, "k_max", &p.k_max);
  apply_override(o, "inner_rounds", &p.inner_rounds);
  apply_override(o, "data_budget", &p.data_budget);
  apply_override(o, "full_regret_const", &p.full_regret_const);
  apply_override(o, "swap_regret_const", &p.swap_regret_const);
  apply_override(o, "parallel_collect", &p.parallel_collect);
  return p;
}

PreboParams resolve_prebo_params(const ExperimentConfig& config, const BuiltEnv& built) {
  EnvDims dims = EnvDims::of(built.env);
  PreboParams p = default_prebo_params(config.epsilon, config.delta, dims, config.mode,
                                       get_mult(config.multipliers, "n", 1.0),
                                       get_mult(config.multipliers, "bonus", 1.0));
  const json& o = config.overrides;
  apply_override(o, "t_trig", &p.t_trig);
  apply_override(o, "k_max", &p.k_max);
  apply_override(o, "n_max", &p.n_max);
  apply_override(o, "bonus_numerator", &p.bonus.numerator);
  apply_override(o, "bandit_regret_const", &p.bandit_regret_const);
  apply_override(o, "bandit_swap_const", &p.bandit_swap_const);
  apply_override(o, "regret_scale", &p.regret_scale);
  return p;
}

NashCaParams resolve_nash_ca_params(const ExperimentConfig& config, const BuiltEnv& built) {
  EnvDims dims = EnvDims::of(built.env);
  NashCaParams p = default_nash_ca_params(config.epsilon, config.delta, dims,
                                          get_mult(config.multipliers, "mc", 1.0),
                                          get_mult(config.multipliers, "solver_n", 1.0));
  if (built.radius_override > 0.0) p.solver.radius = built.radius_override;
  const json& o = config.overrides;
  apply_override(o, "outer_episodes", &p.outer_episodes);
  apply_override(o, "eval_episodes", &p.eval_episodes);
  apply_override(o, "solver_lambda", &p.solver.lambda);
  apply_override(o, "solver_radius", &p.solver.radius);
  apply_override(o, "solver_beta", &p.solver.beta);
  apply_override(o, "solver_t_trig", &p.solver.t_trig);
  apply_override(o, "solver_k_max", &p.solver.k_max);
  apply_override(o, "solver_data_budget", &p.solver.data_budget);
  return p;
}

json gap_to_json(const GapReport& report) {
  json doc;
  doc["per_player"] = report.per_player;
  doc["max"] = report.max_gap;
  return doc;
}

void attach_exact_gaps(const TabularMarkovGame& game, const MixtureMarkovPolicy& policy,
                       bool include_nash, CellResult* cell, json* final_row) {
  GapReport cce = cce_gap(game, policy);
  GapReport ce = ce_gap(game, policy);
  cell->exact_cce_gap = cce.max_gap;
  cell->exact_ce_gap = ce.max_gap;
  (*final_row)["exact_cce_gap"] = gap_to_json(cce);
  (*final_row)["exact_ce_gap"] = gap_to_json(ce);
  if (include_nash) {
    GapReport nash = nash_gap(game, policy);
    cell->exact_nash_gap = nash.max_gap;
    (*final_row)["exact_nash_gap"] = gap_to_json(nash);
  }
}

}  // namespace

CellResult run_cell(const ExperimentConfig& config, const BuiltEnv& built, std::uint64_t seed) {
  CellResult cell;
  cell.seed = seed;
  auto start = std::chrono::steady_clock::now();
  const TabularMarkovGame& game = built.env.game;

  auto push_line = [&cell](const json& row) { cell.metric_lines.push_back(row.dump()); };

  json final_row;
  final_row["record"] = "final";
  final_row["config_hash"] = config.hash();
  final_row["seed"] = seed;

  switch (config.algorithm) {
    case Algorithm::kPrefi:
    case Algorithm::kPrefiAgile: {
      CoverMode cover =
          config.algorithm == Algorithm::kPrefi ? CoverMode::kLazy : CoverMode::kAgile;
      PrefiParams params = resolve_prefi_params(config, built, cover);
      PrefiResult result = run_prefi(built.env, params, seed, [&](const PrefiEpisode& ep) {
        json row;
        row["record"] = "episode";
        row["k"] = ep.episode;
        row["n_k"] = ep.repeats;
        row["n_tot"] = ep.total_repeats;
        row["v_upper"] = ep.v_upper;
        if (!ep.v_lower.empty()) row["v_lower"] = ep.v_lower;
        if (ep.bound) row["bound"] = *ep.bound;
        row["trajectories"] = ep.trajectories;
        push_line(row);
      });
      cell.episodes = static_cast<long long>(result.episodes.size());
      cell.trajectories = result.trajectories;
      cell.certified_bound = result.certified_bound;
      final_row["output_episode"] = result.output_episode;
      final_row["budget_reached"] = result.budget_reached;
      if (result.certified_bound) final_row["certified_bound"] = *result.certified_bound;
      final_row["trajectories"] = result.trajectories;
      if (config.exact_eval) {
        attach_exact_gaps(game, result.policy, false, &cell, &final_row);
      }
      cell.policy_doc = policy_to_json(result.policy);
      break;
    }
    case Algorithm::kPrebo: {
      PreboParams params = resolve_prebo_params(config, built);
      PreboResult result = run_prebo(game, params, seed, [&](const PreboEpisode& ep) {
        json row;
        row["record"] = "episode";
        row["k"] = ep.episode;
        row["n_k"] = ep.repeats;
        row["n_tot"] = ep.total_repeats;
        row["v_upper"] = ep.v_upper;
        row["v_lower"] = ep.v_lower;
        row["bound"] = ep.bound;
        row["trajectories"] = ep.trajectories;
        push_line(row);
      });
      cell.episodes = static_cast<long long>(result.episodes.size());
      cell.trajectories = result.trajectories;
      cell.certified_bound = result.certified_bound;
      final_row["certified"] = result.certified;
      final_row["output_episode"] = result.output_episode;
      final_row["certified_bound"] = result.certified_bound;
      final_row["trajectories"] = result.trajectories;
      if (config.exact_eval) {
        attach_exact_gaps(game, result.policy, false, &cell, &final_row);
      }
      cell.policy_doc = policy_to_json(result.policy);
      break;
    }
    case Algorithm::kNashCa: {
      if (!built.potential_preset)
        throw std::invalid_argument("nash-ca requires a potential-game preset environment");
      NashCaParams params = resolve_nash_ca_params(config, built);
      PotentialFn potential;
      if (built.congestion) {
        const CongestionGame& cg = *built.congestion;
        potential = [&cg](const DeterministicProductPolicy& pi) {
          return rosenthal_potential(cg, pi.action[0][0]);
        };
      }
      NashCaResult result = run_nash_ca(built.env, params, seed, potential);
      for (const auto& ep : result.episodes) {
        json row;
        row["record"] = "episode";
        row["k"] = ep.episode;
        row["improvements"] = ep.improvements;
        row["switched_player"] = ep.switched_player;
        if (ep.has_potential) row["potential"] = ep.potential;
        push_line(row);
      }
      cell.episodes = static_cast<long long>(result.episodes.size());
      cell.trajectories = result.trajectories;
      final_row["certified"] = result.certified;
      final_row["trajectories"] = result.trajectories;
      MixtureMarkovPolicy mixture = result.policy.to_mixture(game.actions.counts());
      if (config.exact_eval) {
        attach_exact_gaps(game, mixture, true, &cell, &final_row);
      }
      cell.policy_doc = policy_to_json(mixture);
      break;
    }
  }

  push_line(final_row);
  auto stop = std::chrono::steady_clock::now();
  cell.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(stop - start).count();
  return cell;
}

RunSummary run_experiment(const ExperimentConfig& config) {
  BuiltEnv built = build_environment(config.environment);
  if (config.algorithm == Algorithm::kNashCa && !built.potential_preset)
    throw std::invalid_argument("nash-ca requires a potential-game preset environment");

  RunSummary summary;
  summary.cells.resize(config.seeds.size());
  std::atomic<std::size_t> next{0};
  int workers = std::max(1, config.threads);
  auto work = [&]() {
    while (true) {
      std::size_t idx = next.fetch_add(1);
      if (idx >= config.seeds.size()) break;
      summary.cells[idx] = run_cell(config, built, config.seeds[idx]);
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }

  namespace fs = std::filesystem;
  fs::create_directories(config.output_dir);
  std::string algo = algorithm_name(config.algorithm);
  for (const auto& cell : summary.cells) {
    std::string base = config.output_dir + "/" + algo + "_seed" + std::to_string(cell.seed);
    std::ofstream stream(base + ".jsonl", std::ios::binary);
    for (const auto& line : cell.metric_lines) stream << line << "\n";
    write_json_file(base + ".policy.json", cell.policy_doc);
  }
  std::ofstream csv(config.output_dir + "/summary.csv", std::ios::binary);
  csv << csv_summary_header() << "\n";
  for (const auto& cell : summary.cells) csv << csv_summary_row(cell) << "\n";
  return summary;
}

std::string csv_summary_header() {
  return "seed,episodes,trajectories,certified_bound,exact_cce_gap,exact_ce_gap,wall_ms";
}

std::string csv_summary_row(const CellResult& cell) {
  std::ostringstream out;
  out << cell.seed << "," << cell.episodes << "," << cell.trajectories << ",";
  if (cell.certified_bound) out << format_double(*cell.certified_bound);
  out << ",";
  if (cell.exact_cce_gap) out << format_double(*cell.exact_cce_gap);
  out << ",";
  if (cell.exact_ce_gap) out << format_double(*cell.exact_ce_gap);
  out << "," << cell.wall_ms;
  return out.str();
}

json evaluate_policy_report(const TabularMarkovGame& game, const MixtureMarkovPolicy& policy) {
  if (policy.num_states() != game.num_states || policy.horizon() != game.horizon ||
      policy.action_counts() != game.actions.counts())
    throw std::invalid_argument("eval: policy and game shapes do not match");
  json doc;
  ValueTable v = evaluate_value(game, policy);
  const int s1 = game.initial_state;
  std::vector<double> values, br_values, mod_values;
  for (int i = 0; i < game.num_players(); ++i) {
    values.push_back(v.at(0, s1, i));
    br_values.push_back(best_response_value(game, policy, i).value.at(0, s1, 0));
    mod_values.push_back(best_modification_value(game, policy, i).value.at(0, s1, 0));
  }
  doc["policy_value"] = values;
  doc["best_response_value"] = br_values;
  doc["best_modification_value"] = mod_values;
  doc["cce_gap"] = gap_to_json(cce_gap(game, policy));
  doc["ce_gap"] = gap_to_json(ce_gap(game, policy));
  bool product = true;
  for (int h = 0; h < policy.horizon() && product; ++h) {
    for (int s = 0; s < policy.num_states(); ++s) {
      if (policy.at(h, s).size() != 1) {
        product = false;
        break;
      }
    }
  }
  if (product) doc["nash_gap"] = gap_to_json(nash_gap(game, policy));
  return doc;
}

namespace {

struct SuiteStats {
  int passes = 0;
  int total = 0;
};

void check_line(OracleCheckResult* out, bool ok, const std::string& what) {
  out->lines.push_back(std::string(ok ? "[pass] " : "[FAIL] ") + what);
  if (!ok) out->passed = false;
}

}  // namespace

OracleCheckResult run_oracle_suite(const std::string& suite, int num_seeds,
                                   std::uint64_t base_seed) {
  OracleCheckResult out;
  out.suite = suite;
  out.passed = true;
  const long long T = 10'000;

  if (suite == "hedge") {
    for (int B : {2, 4, 8}) {
      // Alternating single-spike losses: the classic adversarial pattern.
      RegretLearner learner(B, RegretMode::kFullExternal, T);
      std::vector<std::vector<double>> dists, losses;
      for (long long t = 0; t < T; ++t) {
        std::vector<double> loss(B, 0.0);
        loss[t % B] = 1.0;
        dists.push_back(learner.distribution());
        losses.push_back(loss);
        learner.full_update(loss);
      }
      double reg = external_regret(dists, losses);
      double bound = 2.0 * std::sqrt(static_cast<double>(T) * std::log(B));
      std::ostringstream line;
      line << "hedge B=" << B << " regret=" << reg << " bound=" << bound;
      check_line(&out, reg <= bound, line.str());
    }
    return out;
  }

  if (suite == "swap" || suite == "bandit" || suite == "bandit-swap") {
    for (int B : {2, 4, 8}) {
      SuiteStats stats;
      double worst_ratio = 0.0;
      for (int sd = 0; sd < num_seeds; ++sd) {
        Rng rng(derive_seed(base_seed, 77, B, sd));
        RegretMode mode = suite == "swap"         ? RegretMode::kFullSwap
                          : suite == "bandit"     ? RegretMode::kBanditExternal
                                                  : RegretMode::kBanditSwap;
        RegretLearner learner(B, mode, T, derive_seed(base_seed, 78, B, sd));
        std::vector<std::vector<double>> dists, losses;
        // Mix of stochastic rounds and adversarial spike rounds.
        std::vector<double> arm_mean(B);
        for (double& mu : arm_mean) mu = rng.next_double();
        for (long long t = 0; t < T; ++t) {
          std::vector<double> loss(B);
          if (t % 3 == 2) {
            std::fill(loss.begin(), loss.end(), 0.0);
            loss[t % B] = 1.0;
          } else {
            for (int b = 0; b < B; ++b) loss[b] = rng.bernoulli(arm_mean[b]) ? 1.0 : 0.0;
          }
          dists.push_back(learner.distribution());
          losses.push_back(loss);
          if (mode == RegretMode::kFullSwap) {
            learner.full_update(loss);
          } else {
            int arm = rng.categorical(learner.distribution());
            learner.bandit_update(arm, loss[arm]);
          }
        }
        double reg, bound;
        double logBT = std::log(static_cast<double>(B) * T);
        if (suite == "swap") {
          reg = swap_regret(dists, losses);
          bound = 3.0 * std::sqrt(static_cast<double>(B) * T * std::log(B));
        } else if (suite == "bandit") {
          reg = external_regret(dists, losses);
          bound = 2.0 * std::sqrt(static_cast<double>(B) * T) * logBT;
        } else {
          reg = swap_regret(dists, losses);
          bound = 3.0 * B * std::sqrt(static_cast<double>(T)) * logBT;
        }
        ++stats.total;
        if (reg <= bound) ++stats.passes;
        worst_ratio = std::max(worst_ratio, reg / bound);
      }
      double rate = static_cast<double>(stats.passes) / stats.total;
      std::ostringstream line;
      line << suite << " B=" << B << " pass_rate=" << rate << " worst_ratio=" << worst_ratio;
      check_line(&out, rate >= 0.95, line.str());
    }
    return out;
  }

  if (suite == "regression") {
    Rng rng(derive_seed(base_seed, 79));
    int beaten_probe = 0, beaten_projection = 0, instances = 0;
    for (int inst = 0; inst < 100; ++inst) {
      int d = 1 + static_cast<int>(rng.next_u64() % 8);
      int n = 1 + static_cast<int>(rng.next_u64() % 50);
      double W = 0.25 + 2.0 * rng.next_double();
      LeastSquaresAccumulator acc(d);
      std::vector<double> phi(d);
      for (int j = 0; j < n; ++j) {
        double norm_sq = 0.0;
        for (double& x : phi) {
          x = 2.0 * rng.next_double() - 1.0;
          norm_sq += x * x;
        }
        double norm = std::sqrt(norm_sq);
        if (norm > 1.0) {
          for (double& x : phi) x /= norm;
        }
        acc.add(phi, 2.0 * rng.next_double() - 0.5);
      }
      RegressionFit fit = fit_constrained_ls(acc, W);
      double fit_obj = acc.objective(fit.theta);
      bool probes_ok = true;
      for (int probe = 0; probe < 10'000; ++probe) {
        Eigen::VectorXd candidate(d);
        double norm_sq = 0.0;
        for (int j = 0; j < d; ++j) {
          candidate[j] = 2.0 * rng.next_double() - 1.0;
          norm_sq += candidate[j] * candidate[j];
        }
        candidate *= W * std::pow(rng.next_double(), 1.0 / d) / std::sqrt(norm_sq);
        if (acc.objective(candidate) < fit_obj - 1e-9) {
          probes_ok = false;
          break;
        }
      }
      // Projected unconstrained solution as a second baseline.
      Eigen::MatrixXd G = acc.gram() + 1e-10 * Eigen::MatrixXd::Identity(d, d);
      Eigen::VectorXd unconstrained = G.ldlt().solve(acc.moment());
      if (unconstrained.norm() > W) unconstrained *= W / unconstrained.norm();
      bool projection_ok = fit_obj <= acc.objective(unconstrained) + 1e-9;
      ++instances;
      if (probes_ok) ++beaten_probe;
      if (projection_ok) ++beaten_projection;
    }
    check_line(&out, beaten_probe == instances,
               "constrained LS beats 10^4 random probes on " + std::to_string(beaten_probe) +
                   "/" + std::to_string(instances) + " instances");
    check_line(&out, beaten_projection == instances,
               "constrained LS beats projected unconstrained solution on " +
                   std::to_string(beaten_projection) + "/" + std::to_string(instances) +
                   " instances");

    // Closed forms.
    {
      int d = 3;
      LeastSquaresAccumulator acc(d);
      acc.add(std::vector<double>{1.0, 0.0, 0.0}, 1.0);
      RegressionFit wide = fit_constrained_ls(acc, 10.0);
      RegressionFit tight = fit_constrained_ls(acc, 0.5);
      LeastSquaresAccumulator scalar(1);
      scalar.add(std::vector<double>{1.0}, 0.0);
      scalar.add(std::vector<double>{1.0}, 1.0);
      RegressionFit mean = fit_constrained_ls(scalar, 10.0);
      bool ok = std::abs(wide.theta[0] - 1.0) < 1e-8 && std::abs(wide.theta[1]) < 1e-12 &&
                std::abs(tight.theta[0] - 0.5) < 1e-8 && std::abs(mean.theta[0] - 0.5) < 1e-8;
      check_line(&out, ok, "closed-form fits match");
    }

    // Bonus monotonicity over random streams.
    {
      bool monotone = true;
      for (int stream = 0; stream < 1000 && monotone; ++stream) {
        int d = 1 + static_cast<int>(rng.next_u64() % 6);
        CovarianceAccumulator cov(d, 0.5 + rng.next_double());
        std::vector<double> probe(d), sample(d);
        double norm_sq = 0.0;
        for (double& x : probe) {
          x = 2.0 * rng.next_double() - 1.0;
          norm_sq += x * x;
        }
        for (double& x : probe) x /= std::max(1.0, std::sqrt(norm_sq));
        double last = cov.bonus(probe);
        for (int step = 0; step < 40; ++step) {
          norm_sq = 0.0;
          for (double& x : sample) {
            x = 2.0 * rng.next_double() - 1.0;
            norm_sq += x * x;
          }
          for (double& x : sample) x /= std::max(1.0, std::sqrt(norm_sq));
          cov.add(sample);
          double now = cov.bonus(probe);
          if (now > last + 1e-10) {
            monotone = false;
            break;
          }
          last = now;
        }
      }
      check_line(&out, monotone, "bonus nonincreasing along 10^3 random streams");
    }
    return out;
  }

  throw std::invalid_argument("unknown oracle suite: " + suite);
}

}  // namespace mgeq
