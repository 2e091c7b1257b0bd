#include <doctest.h>

#include <cmath>

#include "mgeq/envs.hpp"
#include "mgeq/harness.hpp"
#include "mgeq/linear_mdp.hpp"
#include "mgeq/nash_ca.hpp"
#include "mgeq/value.hpp"

using namespace mgeq;

namespace {

LinearMdpParams desk_solver(double epsilon, double radius) {
  LinearMdpParams p;
  p.epsilon = epsilon;
  p.delta = 0.1;
  p.lambda = 1.0;
  p.radius = radius;
  p.beta = 0.7;
  p.t_trig = 8.0;
  p.k_max = 60;
  p.data_budget = 256;
  return p;
}

NashCaParams desk_nash_params(const CongestionConversion& conv) {
  EnvDims dims = EnvDims::of({conv.game, conv.features});
  NashCaParams p = default_nash_ca_params(0.1, 0.1, dims, 2.0, 1.0);
  p.solver = desk_solver(0.1 / 8.0, conv.radius);
  return p;
}

}  // namespace

TEST_CASE("default parameters follow the closed forms") {
  EnvDims dims{2, 3, 2, 2, 12};
  NashCaParams p = default_nash_ca_params(0.1, 0.1, dims);
  CHECK(p.outer_episodes == static_cast<long long>(std::ceil(5.0 * 2 * 2 / 0.1)));
  double eval = std::ceil(2.0 * 4.0 * std::log(4.0 * 2.0 * p.outer_episodes / 0.1) / 0.01);
  CHECK(p.eval_episodes == static_cast<long long>(eval));
  // Solver preset: accuracy eps/8 and failure share delta/(2 m K).
  LinearMdpParams solver =
      default_linear_mdp_params(0.1 / 8.0, 0.1 / (2.0 * 2.0 * p.outer_episodes), 2, 12);
  CHECK(p.solver.data_budget == solver.data_budget);
  CHECK(p.solver.beta == doctest::Approx(solver.beta));
  CHECK(p.solver.lambda == doctest::Approx(solver.lambda));
}

TEST_CASE("linear mdp defaults follow the closed forms") {
  LinearMdpParams p = default_linear_mdp_params(0.1, 0.05, 3, 4);
  double N = std::ceil(std::pow(3.0, 4) * 16.0 / 0.01);
  CHECK(p.data_budget == static_cast<long long>(N));
  CHECK(p.radius == doctest::Approx(3.0 * 2.0));
  double lambda = 2.0 * std::log(16.0 * 4.0 * N * 3.0 / 0.05) / std::log(36.0 / 35.0);
  CHECK(p.lambda == doctest::Approx(lambda).epsilon(1e-12));
  double t_trig = 64.0 * std::log(8.0 * 3.0 * N * N / 0.05);
  CHECK(p.t_trig == doctest::Approx(t_trig).epsilon(1e-12));
}

TEST_CASE("induced MDP: exact values agree with the full game") {
  TabularMarkovGame g = random_game(61, 3, {2, 3}, 2);
  FeatureMap features = tabular_features(g);
  // Correlated opponent mixture.
  MixtureMarkovPolicy opponents(g.horizon, g.num_states, g.actions.counts());
  Rng rng(62);
  for (int h = 0; h < g.horizon; ++h) {
    for (int s = 0; s < g.num_states; ++s) {
      auto& cell = opponents.at_mut(h, s);
      for (int c = 0; c < 2; ++c) {
        std::vector<int> chosen = {static_cast<int>(rng.next_u64() % 2),
                                   static_cast<int>(rng.next_u64() % 3)};
        cell.push_back({0.5, ProductPolicyLayer::deterministic(g.actions.counts(), chosen)});
      }
    }
  }
  opponents.validate();
  const int player = 1;
  LinearGameEnv induced = induced_mdp(g, opponents, player, features);
  CHECK(induced.game.num_players() == 1);
  CHECK(induced.game.actions.count(0) == 3);

  // Deviator policy evaluated in the induced MDP...
  DeterministicProductPolicy dev;
  dev.action.assign(g.horizon, std::vector<std::vector<int>>(g.num_states, std::vector<int>(1)));
  for (int h = 0; h < g.horizon; ++h) {
    for (int s = 0; s < g.num_states; ++s) dev.action[h][s][0] = (h + s) % 3;
  }
  ValueTable v_induced =
      evaluate_value(induced.game, dev.to_mixture(induced.game.actions.counts()));

  // ...equals the full-game value of (deviator, opponent marginal).
  MixtureMarkovPolicy combined(g.horizon, g.num_states, g.actions.counts());
  for (int h = 0; h < g.horizon; ++h) {
    for (int s = 0; s < g.num_states; ++s) {
      auto& cell = combined.at_mut(h, s);
      for (const auto& comp : opponents.at(h, s)) {
        MixtureMarkovPolicy::Component c = comp;
        std::fill(c.layer.dists[player].begin(), c.layer.dists[player].end(), 0.0);
        c.layer.dists[player][dev.action[h][s][0]] = 1.0;
        cell.push_back(std::move(c));
      }
    }
  }
  combined.validate();
  ValueTable v_full = evaluate_value(g, combined);
  CHECK(v_induced.at(0, g.initial_state, 0) ==
        doctest::Approx(v_full.at(0, g.initial_state, player)).epsilon(1e-12));

  // Marginalized transition rows are distributions.
  induced.game.validate();
}

TEST_CASE("estimate_value_mc: deterministic games are exact after one episode") {
  TabularMarkovGame g = TabularMarkovGame::zeros(2, 1, {1}, 0, RewardNoise::kDeterministic);
  g.reward_mut(0, 0, 0, 0) = 0.25;
  g.reward_mut(1, 0, 0, 0) = 0.5;
  g.transition_mut(0, 0, 0, 0) = 1.0;
  g.transition_mut(1, 0, 0, 0) = 1.0;
  g.validate();
  MixtureMarkovPolicy pi = MixtureMarkovPolicy::uniform(g);
  CHECK(estimate_value_mc(g, pi, 0, 1, 99) == doctest::Approx(0.75));
}

TEST_CASE("estimate_value_mc: law of large numbers on a noisy one-step game") {
  TabularMarkovGame g = TabularMarkovGame::zeros(1, 1, {1}, 0, RewardNoise::kBernoulli);
  g.reward_mut(0, 0, 0, 0) = 0.5;
  g.transition_mut(0, 0, 0, 0) = 1.0;
  g.validate();
  MixtureMarkovPolicy pi = MixtureMarkovPolicy::uniform(g);
  CHECK(std::abs(estimate_value_mc(g, pi, 0, 10'000, 12) - 0.5) < 0.02);
}

TEST_CASE("estimate_values_mc: per-player estimates share the rollouts") {
  TabularMarkovGame g = random_game(63, 2, {2, 2}, 2);
  MixtureMarkovPolicy pi = MixtureMarkovPolicy::uniform(g);
  std::vector<double> all = estimate_values_mc(g, pi, 500, 64);
  CHECK(all[0] == doctest::Approx(estimate_value_mc(g, pi, 0, 500, 64)));
  CHECK(all[1] == doctest::Approx(estimate_value_mc(g, pi, 1, 500, 64)));
}

TEST_CASE("solve_linear_mdp separates two arms with exact linear means") {
  TabularMarkovGame g = TabularMarkovGame::zeros(1, 1, {2}, 0, RewardNoise::kBernoulli);
  g.reward_mut(0, 0, 0, 0) = 0.9;
  g.reward_mut(0, 0, 0, 1) = 0.1;
  g.transition_mut(0, 0, 0, 0) = 1.0;
  g.transition_mut(0, 0, 1, 0) = 1.0;
  g.validate();
  LinearGameEnv env{g, tabular_features(g)};
  LinearMdpParams p = desk_solver(0.2, std::sqrt(2.0));
  p.data_budget = 200;
  p.k_max = 40;
  p.beta = 1.0;
  int ok = 0;
  for (int sd = 0; sd < 20; ++sd) {
    if (solve_linear_mdp(env, p, 100 + sd).policy.action[0][0] == 0) ++ok;
  }
  CHECK(ok >= 18);
}

TEST_CASE("solve_linear_mdp finds the unique optimal path of a chain MDP") {
  TabularMarkovGame g = TabularMarkovGame::zeros(2, 3, {2}, 0, RewardNoise::kDeterministic);
  for (int s = 0; s < 3; ++s) {
    g.transition_mut(0, s, 0, 1) = 1.0;
    g.transition_mut(0, s, 1, 2) = 1.0;
    g.transition_mut(1, s, 0, s) = 1.0;
    g.transition_mut(1, s, 1, s) = 1.0;
  }
  g.reward_mut(0, 0, 0, 0) = 0.2;
  g.reward_mut(0, 0, 0, 1) = 0.1;
  g.reward_mut(1, 0, 1, 0) = 1.0;
  g.reward_mut(1, 0, 2, 0) = 0.3;
  g.reward_mut(1, 0, 2, 1) = 0.2;
  g.validate();
  LinearGameEnv env{g, tabular_features(g)};
  BestResponse opt = best_response_value(g, MixtureMarkovPolicy::uniform(g), 0);
  LinearMdpParams p = desk_solver(0.1, 2.0 * std::sqrt(6.0));
  p.beta = 2.0;
  p.data_budget = 400;
  int ok = 0;
  for (int sd = 0; sd < 20; ++sd) {
    LinearMdpResult r = solve_linear_mdp(env, p, 200 + sd);
    if (r.policy.action[0][0] == opt.policy.action[0][0] &&
        r.policy.action[1][1] == opt.policy.action[1][1])
      ++ok;
  }
  CHECK(ok >= 18);
}

TEST_CASE("solve_linear_mdp with a single action certifies early") {
  TabularMarkovGame g = TabularMarkovGame::zeros(1, 1, {1}, 0, RewardNoise::kBernoulli);
  g.reward_mut(0, 0, 0, 0) = 0.6;
  g.transition_mut(0, 0, 0, 0) = 1.0;
  g.validate();
  LinearGameEnv env{g, tabular_features(g)};
  LinearMdpParams p = desk_solver(0.2, 1.0);
  p.data_budget = 300;
  p.beta = 1.0;
  LinearMdpResult r = solve_linear_mdp(env, p, 17);
  CHECK(r.policy.action[0][0] == 0);
  CHECK(r.certified_bound <= 0.2);
}

TEST_CASE("congestion games: output is a pure Nash equilibrium") {
  int member = 0, gap_ok = 0, ascent_violations = 0;
  for (int sd = 0; sd < 10; ++sd) {
    CongestionGame cg =
        random_congestion_game(7000 + sd, 2, 2, true, RewardNoise::kBernoulli, 0.08);
    CongestionConversion conv = congestion_to_markov_game(cg);
    LinearGameEnv env{conv.game, conv.features};
    NashCaParams p = desk_nash_params(conv);
    PotentialFn pot = [&cg](const DeterministicProductPolicy& pi) {
      return rosenthal_potential(cg, pi.action[0][0]);
    };
    NashCaResult r = run_nash_ca(env, p, 300 + sd, pot);
    CHECK(r.certified);
    GapReport gap = nash_gap(conv.game, r.policy.to_mixture(conv.game.actions.counts()));
    if (gap.max_gap <= 0.1) ++gap_ok;
    auto pure = brute_force_pure_nash(conv.game);
    for (const auto& eq : pure) {
      if (eq.action == r.policy.action) {
        ++member;
        break;
      }
    }
    for (std::size_t k = 0; k + 1 < r.episodes.size(); ++k) {
      if (r.episodes[k].switched_player >= 0 &&
          r.episodes[k + 1].potential <= r.episodes[k].potential)
        ++ascent_violations;
    }
  }
  CHECK(gap_ok >= 9);
  CHECK(member >= 9);
  CHECK(ascent_violations == 0);
}

TEST_CASE("potential ascent: accepted switches gain at least eps/4 minus slack") {
  int good = 0, accepted = 0;
  for (int sd = 0; sd < 10; ++sd) {
    CongestionGame cg =
        random_congestion_game(7600 + sd, 2, 2, true, RewardNoise::kBernoulli, 0.08);
    CongestionConversion conv = congestion_to_markov_game(cg);
    NashCaParams p = desk_nash_params(conv);
    PotentialFn pot = [&cg](const DeterministicProductPolicy& pi) {
      return rosenthal_potential(cg, pi.action[0][0]);
    };
    NashCaResult r = run_nash_ca({conv.game, conv.features}, p, 700 + sd, pot);
    for (std::size_t k = 0; k + 1 < r.episodes.size(); ++k) {
      if (r.episodes[k].switched_player < 0) continue;
      ++accepted;
      if (r.episodes[k + 1].potential - r.episodes[k].potential >= 0.1 / 4.0 - 0.05) ++good;
    }
  }
  if (accepted > 0) CHECK(good >= static_cast<int>(0.9 * accepted));
}

TEST_CASE("m=1 reduces to the solver; output is the optimal policy") {
  TabularMarkovGame g = TabularMarkovGame::zeros(1, 1, {2}, 0, RewardNoise::kBernoulli);
  g.reward_mut(0, 0, 0, 0) = 0.9;
  g.reward_mut(0, 0, 0, 1) = 0.2;
  g.transition_mut(0, 0, 0, 0) = 1.0;
  g.transition_mut(0, 0, 1, 0) = 1.0;
  g.validate();
  LinearGameEnv env{g, tabular_features(g)};
  EnvDims dims = EnvDims::of(env);
  NashCaParams p = default_nash_ca_params(0.1, 0.1, dims, 1.0, 1.0);
  p.solver = desk_solver(0.1 / 8.0, std::sqrt(2.0));
  NashCaResult r = run_nash_ca(env, p, 5);
  CHECK(r.certified);
  CHECK(r.policy.action[0][0][0] == 0);
  CHECK(r.episodes.size() <= 3);
}

TEST_CASE("cooperative dominant action is found") {
  // Shared reward rises with every player that picks action 1; the profile
  // (1, 1) pays 1, anything else strictly less, so ascent must reach it.
  TabularMarkovGame g = TabularMarkovGame::zeros(1, 1, {2, 2}, 0, RewardNoise::kBernoulli);
  std::vector<int> profile;
  for (long long a = 0; a < 4; ++a) {
    g.actions.decode(a, &profile);
    double r = 0.5 * profile[0] + 0.5 * profile[1];
    g.reward_mut(0, 0, 0, a) = r;
    g.reward_mut(0, 1, 0, a) = r;
    g.transition_mut(0, 0, a, 0) = 1.0;
  }
  g.validate();
  LinearGameEnv env{g, tabular_features(g)};
  EnvDims dims = EnvDims::of(env);
  int ok = 0;
  for (int sd = 0; sd < 10; ++sd) {
    NashCaParams p = default_nash_ca_params(0.1, 0.1, dims, 2.0, 1.0);
    p.solver = desk_solver(0.1 / 8.0, std::sqrt(2.0));
    NashCaResult r = run_nash_ca(env, p, 800 + sd);
    if (r.policy.action[0][0][0] == 1 && r.policy.action[0][0][1] == 1) ++ok;
  }
  CHECK(ok >= 9);
}

TEST_CASE("output purity and hard termination") {
  CongestionGame cg = random_congestion_game(51, 2, 2, true, RewardNoise::kBernoulli, 0.08);
  CongestionConversion conv = congestion_to_markov_game(cg);
  NashCaParams p = desk_nash_params(conv);
  NashCaResult r = run_nash_ca({conv.game, conv.features}, p, 31);
  CHECK(static_cast<long long>(r.episodes.size()) <= p.outer_episodes);
  // The policy is deterministic per (h, s, player) by construction of the
  // result type; verify the action indices are in range.
  for (const auto& per_state : r.policy.action) {
    for (const auto& per_player : per_state) {
      REQUIRE(per_player.size() == 2);
      for (std::size_t i = 0; i < per_player.size(); ++i) {
        CHECK(per_player[i] >= 0);
        CHECK(per_player[i] < conv.game.actions.count(static_cast<int>(i)));
      }
    }
  }
}
