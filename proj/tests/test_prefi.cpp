#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "mgeq/envs.hpp"
#include "mgeq/harness.hpp"
#include "mgeq/prefi.hpp"
#include "mgeq/value.hpp"

using namespace mgeq;

namespace {

// Two-state MDP with a dominant action everywhere; optimal value 1.8.
TabularMarkovGame bandit_mdp() {
  TabularMarkovGame g = TabularMarkovGame::zeros(2, 2, {2}, 0, RewardNoise::kBernoulli);
  for (int h = 0; h < 2; ++h) {
    for (int s = 0; s < 2; ++s) {
      g.reward_mut(h, 0, s, 0) = 0.9;
      g.reward_mut(h, 0, s, 1) = 0.1;
      g.transition_mut(h, s, 0, 0) = 0.7;
      g.transition_mut(h, s, 0, 1) = 0.3;
      g.transition_mut(h, s, 1, 0) = 0.3;
      g.transition_mut(h, s, 1, 1) = 0.7;
    }
  }
  g.validate();
  return g;
}

LinearGameEnv pennies_env() {
  LinearGameEnv env;
  env.game = matching_pennies();
  env.features = tabular_features(env.game);
  return env;
}

PrefiParams pennies_params(EquilibriumMode mode) {
  PrefiParams p;
  p.epsilon = 0.2;
  p.delta = 0.1;
  p.lambda = 1.0;
  p.radius = std::sqrt(2.0);
  p.beta = 1.0;
  p.t_trig = 8.0;
  p.k_max = 50;
  p.inner_rounds = mode == EquilibriumMode::kCce ? 18 : 60;
  p.data_budget = 40;
  p.mode = mode;
  return p;
}

}  // namespace

TEST_CASE("default parameters follow the closed forms") {
  EnvDims dims{2, 1, 2, 2, 4};  // H=2, S=1, m=2, A_max=2, d_max=4
  PrefiParams p = default_prefi_params(0.2, 0.1, dims, EquilibriumMode::kCce);
  // Second code path for every formula.
  double T = std::ceil(std::pow(2.0, 4) * std::log(2.0) / 0.04);
  CHECK(p.inner_rounds == static_cast<long long>(T));
  double N = std::ceil(4.0 * 16.0 * 16.0 / 0.04);
  CHECK(p.data_budget == static_cast<long long>(N));
  CHECK(p.radius == doctest::Approx(2.0 * std::sqrt(4.0)));  // W = H sqrt(d)
  double lambda = 2.0 *
                  std::log(16.0 * 4.0 * 2.0 * N * 2.0 * T / 0.1) /
                  std::log(36.0 / 35.0);
  CHECK(p.lambda == doctest::Approx(lambda).epsilon(1e-12));
  double t_trig = 64.0 * std::log(8.0 * 2.0 * 2.0 * N * N / 0.1);
  CHECK(p.t_trig == doctest::Approx(t_trig).epsilon(1e-12));
  double k_max = 2.0 * 2.0 * 2.0 * 4.0 * std::log(N + lambda) / std::log(1.0 + t_trig / 4.0);
  CHECK(p.k_max == static_cast<long long>(std::ceil(k_max)));
  double beta = 16.0 * (p.radius + 2.0) *
                std::sqrt(lambda + 4.0 * std::log(32.0 * p.radius * N * (p.radius + 2.0)) +
                          4.0 * std::log(8.0 * 2.0 * p.k_max * 2.0 * T / 0.1));
  CHECK(p.beta == doctest::Approx(beta).epsilon(1e-12));

  // W at H=3, d_max=4 is 6.
  EnvDims d2{3, 1, 2, 2, 4};
  CHECK(default_prefi_params(0.2, 0.1, d2, EquilibriumMode::kCce).radius ==
        doctest::Approx(6.0));

  // CE mode scales the inner rounds by A_max before rounding.
  PrefiParams ce = default_prefi_params(0.2, 0.1, dims, EquilibriumMode::kCe);
  CHECK(ce.inner_rounds ==
        static_cast<long long>(std::ceil(std::pow(2.0, 4) * 2.0 * std::log(2.0) / 0.04)));
}

TEST_CASE("t_trig grows by exactly 64 ln 4 when N doubles") {
  // Dims chosen so the budget is integral: N = m^2 H^4 d^2 / eps^2.
  EnvDims dims{1, 1, 2, 2, 2};
  PrefiParams a = default_prefi_params(0.5, 0.1, dims, EquilibriumMode::kCce, CoverMode::kLazy, 1.0, 1.0);
  PrefiParams b = default_prefi_params(0.5, 0.1, dims, EquilibriumMode::kCce, CoverMode::kLazy, 1.0, 2.0);
  CHECK(b.data_budget == 2 * a.data_budget);
  CHECK(b.t_trig - a.t_trig == doctest::Approx(64.0 * std::log(4.0)).epsilon(1e-12));
}

TEST_CASE("matching pennies: certified policy reaches a small exact CCE gap") {
  LinearGameEnv env = pennies_env();
  PrefiParams p = pennies_params(EquilibriumMode::kCce);
  int ok = 0, sound = 0;
  for (int sd = 0; sd < 10; ++sd) {
    PrefiResult r = run_prefi(env, p, 1000 + sd);
    GapReport gap = cce_gap(env.game, r.policy);
    if (gap.max_gap <= 0.2) ++ok;
    REQUIRE(r.certified_bound.has_value());
    if (gap.max_gap <= *r.certified_bound + 0.05) ++sound;
  }
  CHECK(ok == 10);
  CHECK(sound == 10);
}

TEST_CASE("matching pennies: CE mode reaches a small exact CE gap") {
  LinearGameEnv env = pennies_env();
  PrefiParams p = pennies_params(EquilibriumMode::kCe);
  int ok = 0;
  for (int sd = 0; sd < 10; ++sd) {
    PrefiResult r = run_prefi(env, p, 2000 + sd);
    if (ce_gap(env.game, r.policy).max_gap <= 0.25) ++ok;
  }
  CHECK(ok >= 9);
}

TEST_CASE("single-player environment: certified policy is near optimal" *
          doctest::timeout(1200)) {
  TabularMarkovGame game = bandit_mdp();
  LinearGameEnv env{game, tabular_features(game)};
  BestResponse br = best_response_value(env.game, MixtureMarkovPolicy::uniform(env.game), 0);
  const double v_star = br.value.at(0, 0, 0);
  PrefiParams p;
  p.epsilon = 0.2;
  p.delta = 0.1;
  p.lambda = 1.0;
  p.radius = 2.0 * std::sqrt(4.0);
  p.beta = 2.0;
  p.t_trig = 8.0;
  p.k_max = 60;
  p.inner_rounds = 1000;
  p.data_budget = 200;
  p.keep_episode_policies = true;
  int ok = 0, optimistic = 0, pessimistic = 0, episodes = 0, sound = 0;
  for (int sd = 0; sd < 20; ++sd) {
    PrefiResult r = run_prefi(env, p, 500 + sd);
    ValueTable v = evaluate_value(env.game, r.policy);
    double sub = v_star - v.at(0, 0, 0);
    if (sub <= 0.2) ++ok;
    if (sub <= *r.certified_bound + 0.05) ++sound;
    for (std::size_t k = 0; k < r.episode_policies.size(); ++k) {
      BestResponse ebr = best_response_value(env.game, r.episode_policies[k], 0);
      ValueTable ev = evaluate_value(env.game, r.episode_policies[k]);
      ++episodes;
      if (r.episodes[k].v_upper[0] + 1e-6 >= ebr.value.at(0, 0, 0)) ++optimistic;
      if (r.episodes[k].v_lower[0] <= ev.at(0, 0, 0) + 1e-6) ++pessimistic;
    }
  }
  CHECK(ok >= 18);     // 0.9 of 20 seeds
  CHECK(sound >= 18);  // certified-gap soundness
  CHECK(optimistic >= static_cast<int>(0.9 * episodes));
  CHECK(pessimistic >= static_cast<int>(0.9 * episodes));
}

TEST_CASE("optimism and pessimism hold on matching pennies episodes") {
  LinearGameEnv env = pennies_env();
  PrefiParams p = pennies_params(EquilibriumMode::kCce);
  p.beta = 1.5;  // cold-start optimism needs beta >= H sqrt(lambda)
  p.keep_episode_policies = true;
  int optimistic = 0, pessimistic = 0, pairs = 0;
  for (int sd = 0; sd < 10; ++sd) {
    PrefiResult r = run_prefi(env, p, 3000 + sd);
    for (std::size_t k = 0; k < r.episode_policies.size(); ++k) {
      const MixtureMarkovPolicy& pi = r.episode_policies[k];
      ValueTable v = evaluate_value(env.game, pi);
      for (int i = 0; i < 2; ++i) {
        BestResponse ebr = best_response_value(env.game, pi, i);
        ++pairs;
        if (r.episodes[k].v_upper[i] + 1e-6 >= ebr.value.at(0, 0, 0)) ++optimistic;
        if (r.episodes[k].v_lower[i] <= v.at(0, 0, i) + 1e-6) ++pessimistic;
      }
    }
  }
  CHECK(optimistic >= static_cast<int>(0.9 * pairs));
  CHECK(pessimistic >= static_cast<int>(0.9 * pairs));
}

TEST_CASE("agile mode: K=1 outputs the first episode policy; cover grows by one") {
  LinearGameEnv env = pennies_env();
  PrefiParams p = pennies_params(EquilibriumMode::kCce);
  p.cover = CoverMode::kAgile;
  p.k_max = 1;
  p.data_budget = 1;
  PrefiResult r = run_prefi(env, p, 11);
  CHECK(r.output_episode == 1);
  CHECK(r.episodes.size() == 1);
  CHECK(!r.certified_bound.has_value());

  p.k_max = 7;
  p.data_budget = 7;
  PrefiResult r7 = run_prefi(env, p, 12);
  CHECK(r7.episodes.size() == 7);
  for (const auto& ep : r7.episodes) CHECK(ep.repeats == 1);
  CHECK(r7.output_episode >= 1);
  CHECK(r7.output_episode <= 7);
}

TEST_CASE("agile mode reaches a small median CCE gap on matching pennies") {
  LinearGameEnv env = pennies_env();
  PrefiParams p = pennies_params(EquilibriumMode::kCce);
  p.cover = CoverMode::kAgile;
  p.k_max = 25;
  p.data_budget = 25;
  p.inner_rounds = 30;
  std::vector<double> gaps;
  for (int sd = 0; sd < 20; ++sd) {
    PrefiResult r = run_prefi(env, p, 900 + sd);
    gaps.push_back(cce_gap(env.game, r.policy).max_gap);
  }
  std::sort(gaps.begin(), gaps.end());
  CHECK(gaps[10] <= 0.25);
}

TEST_CASE("runs are reproducible and within the trajectory budget") {
  LinearGameEnv env = pennies_env();
  PrefiParams p = pennies_params(EquilibriumMode::kCce);
  PrefiResult a = run_prefi(env, p, 77);
  PrefiResult b = run_prefi(env, p, 77);
  CHECK(a.trajectories == b.trajectories);
  CHECK(a.output_episode == b.output_episode);
  CHECK(*a.certified_bound == *b.certified_bound);
  REQUIRE(a.episodes.size() == b.episodes.size());
  for (std::size_t k = 0; k < a.episodes.size(); ++k) {
    CHECK(a.episodes[k].v_upper == b.episodes[k].v_upper);
    CHECK(a.episodes[k].v_lower == b.episodes[k].v_lower);
    CHECK(a.episodes[k].repeats == b.episodes[k].repeats);
  }
  long long cap = 2LL * 1 * p.inner_rounds * p.k_max * p.data_budget;
  CHECK(a.trajectories <= cap);
}

TEST_CASE("cover totals increase every episode and the run terminates") {
  LinearGameEnv env = pennies_env();
  PrefiParams p = pennies_params(EquilibriumMode::kCce);
  PrefiResult r = run_prefi(env, p, 5);
  long long last = 0;
  for (std::size_t k = 0; k + 1 < r.episodes.size(); ++k) {
    CHECK(r.episodes[k].total_repeats > last);
    last = r.episodes[k].total_repeats;
  }
  CHECK(r.budget_reached);
  CHECK(r.episodes.back().total_repeats == p.data_budget);
}

TEST_CASE("serial and parallel data collection produce identical results") {
  LinearGameEnv env = pennies_env();
  PrefiParams serial = pennies_params(EquilibriumMode::kCce);
  PrefiParams parallel = serial;
  parallel.parallel_collect = true;
  PrefiResult a = run_prefi(env, serial, 1234);
  PrefiResult b = run_prefi(env, parallel, 1234);
  CHECK(a.trajectories == b.trajectories);
  CHECK(*a.certified_bound == *b.certified_bound);
  CHECK(a.output_episode == b.output_episode);
  REQUIRE(a.episodes.size() == b.episodes.size());
  for (std::size_t k = 0; k < a.episodes.size(); ++k) {
    CHECK(a.episodes[k].v_upper == b.episodes[k].v_upper);
    CHECK(a.episodes[k].v_lower == b.episodes[k].v_lower);
  }
  const auto& ca = a.policy.at(0, 0);
  const auto& cb = b.policy.at(0, 0);
  REQUIRE(ca.size() == cb.size());
  for (std::size_t c = 0; c < ca.size(); ++c) {
    CHECK(ca[c].weight == cb[c].weight);
    CHECK(ca[c].layer.dists == cb[c].layer.dists);
  }
}

TEST_CASE("invalid environments and parameters are rejected") {
  LinearGameEnv env = pennies_env();
  PrefiParams p = pennies_params(EquilibriumMode::kCce);
  p.inner_rounds = 0;
  CHECK_THROWS_AS(run_prefi(env, p, 1), std::invalid_argument);
  LinearGameEnv bad = env;
  bad.features = FeatureMap(2, {2, 2}, {4, 4});  // wrong state count
  CHECK_THROWS_AS(run_prefi(bad, pennies_params(EquilibriumMode::kCce), 1),
                  std::invalid_argument);
}
