#include <doctest.h>

#include <cmath>

#include "mgeq/envs.hpp"
#include "mgeq/value.hpp"
#include "oracle_helpers.hpp"

using namespace mgeq;

TEST_CASE("tabular features: one-hot layout, unit norms, identity Gram") {
  TabularMarkovGame g = random_game(1, 2, {3, 2}, 1);
  FeatureMap map = tabular_features(g);
  CHECK(map.dim(0) == 6);
  CHECK(map.dim(1) == 4);
  CHECK(map.d_max() == 6);
  // Row-major s-then-a: (s=1, a=2) for player 0 lands at index 5.
  auto phi = map.at(0, 1, 2);
  for (int j = 0; j < 6; ++j) CHECK(phi[j] == (j == 5 ? 1.0 : 0.0));
  // Unit norms and orthogonality across all pairs.
  for (int s = 0; s < 2; ++s) {
    for (int a = 0; a < 3; ++a) {
      auto x = map.at(0, s, a);
      double norm = 0.0;
      for (double v : x) norm += v * v;
      CHECK(norm == doctest::Approx(1.0));
      for (int s2 = 0; s2 < 2; ++s2) {
        for (int a2 = 0; a2 < 3; ++a2) {
          if (s == s2 && a == a2) continue;
          auto y = map.at(0, s2, a2);
          double dot = 0.0;
          for (int j = 0; j < 6; ++j) dot += x[j] * y[j];
          CHECK(dot == 0.0);
        }
      }
    }
  }
}

TEST_CASE("congestion conversion: loads, rewards, features") {
  CongestionGame cg;
  cg.num_facilities = 2;
  cg.noise = RewardNoise::kDeterministic;
  cg.facility_reward = {{0.4, 0.1}, {0.3, 0.2}};
  cg.actions = {{{0}, {1}, {0, 1}}, {{0}, {1}}};
  cg.validate();
  CongestionConversion conv = congestion_to_markov_game(cg);
  CHECK(conv.game.horizon == 1);
  CHECK(conv.game.num_states == 1);
  CHECK(conv.radius == doctest::Approx(2.0));

  // Both on facility 0: load 2, player 0 earns R^0(2).
  std::vector<int> both = {0, 0};
  CHECK(facility_loads(cg, both)[0] == 2);
  CHECK(conv.game.reward(0, 0, 0, conv.game.actions.index(both)) == doctest::Approx(0.1));

  // Two-facility action: unscaled feature (1, 1).
  auto phi = conv.features.at(0, 0, 2);
  CHECK(phi[0] * conv.feature_scale == doctest::Approx(1.0));
  CHECK(phi[1] * conv.feature_scale == doctest::Approx(1.0));

  // Rewards stay within [0, 1].
  for (long long a = 0; a < conv.game.num_joint_actions(); ++a) {
    for (int i = 0; i < 2; ++i) {
      CHECK(conv.game.reward(0, i, 0, a) >= 0.0);
      CHECK(conv.game.reward(0, i, 0, a) <= 1.0);
    }
  }
}

TEST_CASE("congestion realizability: expected reward is linear in incidence features") {
  // For any fixed opponent product policy the induced mean reward equals
  // <phi_i(a_i), theta> with theta_f = E[R^f(n^f(a_-i) + 1)].
  CongestionGame cg = random_congestion_game(91, 3, 3, false);
  CongestionConversion conv = congestion_to_markov_game(cg);
  const int player = 1;
  Rng rng(17);
  // Random opponent product policy.
  MixtureMarkovPolicy opp(1, 1, conv.game.actions.counts());
  ProductPolicyLayer layer;
  for (int i = 0; i < cg.num_players(); ++i) {
    std::vector<double> d(cg.actions[i].size());
    double tot = 0.0;
    for (double& x : d) {
      x = rng.next_double() + 0.05;
      tot += x;
    }
    for (double& x : d) x /= tot;
    layer.dists.push_back(std::move(d));
  }
  opp.set_single(0, 0, layer);

  // theta from the construction, on the unscaled features.
  std::vector<double> theta(cg.num_facilities, 0.0);
  // Enumerate opponent profiles (players != player).
  std::vector<int> others;
  for (int i = 0; i < cg.num_players(); ++i)
    if (i != player) others.push_back(i);
  long long combos = 1;
  for (int i : others) combos *= static_cast<long long>(cg.actions[i].size());
  for (long long idx = 0; idx < combos; ++idx) {
    long long rest = idx;
    std::vector<int> profile(cg.num_players(), 0);
    double prob = 1.0;
    for (int i : others) {
      profile[i] = static_cast<int>(rest % cg.actions[i].size());
      rest /= static_cast<long long>(cg.actions[i].size());
      prob *= layer.dists[i][profile[i]];
    }
    std::vector<int> loads(cg.num_facilities, 0);
    for (int i : others) {
      for (int f : cg.actions[i][profile[i]]) loads[f] += 1;
    }
    for (int f = 0; f < cg.num_facilities; ++f) {
      theta[f] += prob * cg.facility_reward[f][loads[f]];  // load + 1, zero-based
    }
  }
  for (std::size_t a = 0; a < cg.actions[player].size(); ++a) {
    double expected = 0.0;
    auto phi = conv.features.at(player, 0, static_cast<int>(a));
    for (int f = 0; f < cg.num_facilities; ++f) {
      expected += conv.feature_scale * phi[f] * theta[f];
    }
    // Direct expectation from the tabular game.
    double direct = 0.0;
    for (long long idx = 0; idx < combos; ++idx) {
      long long rest = idx;
      std::vector<int> profile(cg.num_players(), 0);
      double prob = 1.0;
      for (int i : others) {
        profile[i] = static_cast<int>(rest % cg.actions[i].size());
        rest /= static_cast<long long>(cg.actions[i].size());
        prob *= layer.dists[i][profile[i]];
      }
      profile[player] = static_cast<int>(a);
      direct += prob * conv.game.reward(0, player, 0, conv.game.actions.index(profile));
    }
    CHECK(expected == doctest::Approx(direct).epsilon(1e-12));
  }
}

TEST_CASE("abstraction env: identity map has zero error") {
  TabularMarkovGame g = random_game(7, 3, {2, 2}, 2);
  std::vector<int> psi = {0, 1, 2};
  AbstractionEnv env = abstraction_env(g, psi);
  CHECK(env.num_abstract == 3);
  CHECK(env.max_epsilon() == 0.0);
  CHECK(env.features.dim(0) == 6);
}

TEST_CASE("abstraction env: merged identical states have zero error") {
  TabularMarkovGame g = random_game(7, 2, {2, 2}, 1);
  // Duplicate state 0 into a 3-state game where states 0 and 2 are identical.
  TabularMarkovGame g3 = TabularMarkovGame::zeros(1, 3, {2, 2}, 0, g.noise);
  for (long long a = 0; a < g.num_joint_actions(); ++a) {
    for (int src : {0, 1}) {
      for (int dst = 0; dst < 2; ++dst) {
        g3.transition_mut(0, src, a, dst) = g.transition_prob(0, src, a, dst);
      }
      for (int i = 0; i < 2; ++i) g3.reward_mut(0, i, src, a) = g.reward(0, i, src, a);
    }
    for (int dst = 0; dst < 2; ++dst) {
      g3.transition_mut(0, 2, a, dst) = g.transition_prob(0, 0, a, dst);
    }
    for (int i = 0; i < 2; ++i) g3.reward_mut(0, i, 2, a) = g.reward(0, i, 0, a);
  }
  g3.validate();
  AbstractionEnv env = abstraction_env(g3, {0, 1, 0});
  CHECK(env.max_epsilon() == doctest::Approx(0.0));
}

TEST_CASE("abstraction env: reward difference shows up exactly") {
  TabularMarkovGame g = TabularMarkovGame::zeros(1, 2, {1}, 0, RewardNoise::kDeterministic);
  g.transition_mut(0, 0, 0, 0) = 1.0;
  g.transition_mut(0, 1, 0, 1) = 1.0;
  g.reward_mut(0, 0, 0, 0) = 0.6;
  g.reward_mut(0, 0, 1, 0) = 0.3;
  g.validate();
  AbstractionEnv env = abstraction_env(g, {0, 0});
  // Reward gap 0.3; transition rows differ by L1 distance 2.
  CHECK(env.epsilon[0] == doctest::Approx(2.0));
  // With matched transitions the reward gap is the error.
  g.transition_mut(0, 1, 0, 0) = 1.0;
  g.transition_mut(0, 1, 0, 1) = 0.0;
  g.validate();
  AbstractionEnv env2 = abstraction_env(g, {0, 0});
  CHECK(env2.epsilon[0] == doctest::Approx(0.3));
}

TEST_CASE("random games reproduce bit-identically from the seed") {
  for (std::uint64_t seed : {1ULL, 99ULL, 12345ULL}) {
    TabularMarkovGame a = random_game(seed, 3, {2, 3}, 2);
    TabularMarkovGame b = random_game(seed, 3, {2, 3}, 2);
    CHECK(a.transition == b.transition);
    CHECK(a.mean_reward == b.mean_reward);
  }
}

TEST_CASE("zero-sum generator: rewards sum to 1 per cell") {
  TabularMarkovGame g = random_zero_sum_game(3, 2, 2, 3, 2);
  for (int h = 0; h < g.horizon; ++h) {
    for (int s = 0; s < g.num_states; ++s) {
      for (long long a = 0; a < g.num_joint_actions(); ++a) {
        CHECK(g.reward(h, 0, s, a) + g.reward(h, 1, s, a) == doctest::Approx(1.0));
      }
    }
  }
}

TEST_CASE("rosenthal potential: unilateral deviation identity") {
  CongestionGame cg = random_congestion_game(55, 3, 3, false);
  CongestionConversion conv = congestion_to_markov_game(cg);
  const long long A = conv.game.num_joint_actions();
  std::vector<int> profile;
  for (long long a = 0; a < A; ++a) {
    conv.game.actions.decode(a, &profile);
    double phi_a = rosenthal_potential(cg, profile);
    CHECK(phi_a >= 0.0);
    CHECK(phi_a <= cg.num_players());
    for (int i = 0; i < cg.num_players(); ++i) {
      std::vector<int> dev = profile;
      for (std::size_t alt = 0; alt < cg.actions[i].size(); ++alt) {
        dev[i] = static_cast<int>(alt);
        double lhs = phi_a - rosenthal_potential(cg, dev);
        double rhs = conv.game.reward(0, i, 0, a) -
                     conv.game.reward(0, i, 0, conv.game.actions.index(dev));
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("rosenthal potential: single player reduces to the reward") {
  CongestionGame cg = random_congestion_game(66, 1, 2, false);
  CongestionConversion conv = congestion_to_markov_game(cg);
  for (long long a = 0; a < conv.game.num_joint_actions(); ++a) {
    std::vector<int> profile;
    conv.game.actions.decode(a, &profile);
    CHECK(rosenthal_potential(cg, profile) ==
          doctest::Approx(conv.game.reward(0, 0, 0, a)).epsilon(1e-12));
  }
}

TEST_CASE("feature map validation rejects oversized vectors") {
  FeatureMap map(1, {1}, {2});
  auto phi = map.at_mut(0, 0, 0);
  phi[0] = 1.0;
  phi[1] = 0.3;
  CHECK_THROWS_AS(map.validate_norms(), std::invalid_argument);
}
