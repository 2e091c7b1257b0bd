#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mgeq/game.hpp"

namespace mgeq {

// Per-player feature map phi_i(s, a_i) stored densely; every vector must have
// Euclidean norm at most 1, checked on construction by full enumeration.
class FeatureMap {
 public:
  FeatureMap() = default;
  FeatureMap(int num_states, std::vector<int> action_counts, std::vector<int> dims);

  int num_players() const { return static_cast<int>(dims_.size()); }
  int num_states() const { return num_states_; }
  int dim(int player) const { return dims_[player]; }
  int d_max() const;
  const std::vector<int>& action_counts() const { return action_counts_; }

  std::span<const double> at(int player, int s, int a) const {
    const auto& table = tables_[player];
    std::size_t base = static_cast<std::size_t>(s * action_counts_[player] + a) * dims_[player];
    return {table.data() + base, static_cast<std::size_t>(dims_[player])};
  }
  std::span<double> at_mut(int player, int s, int a) {
    auto& table = tables_[player];
    std::size_t base = static_cast<std::size_t>(s * action_counts_[player] + a) * dims_[player];
    return {table.data() + base, static_cast<std::size_t>(dims_[player])};
  }

  // Throws if any feature vector exceeds unit norm (beyond 1e-9 slack).
  void validate_norms() const;

 private:
  int num_states_ = 0;
  std::vector<int> action_counts_;
  std::vector<int> dims_;
  std::vector<std::vector<double>> tables_;  // [player][(s*A_i + a)*d_i + coord]
};

// A game together with per-player features; the unit of input for the linear
// function approximation algorithms.
struct LinearGameEnv {
  TabularMarkovGame game;
  FeatureMap features;
};

// Canonical one-hot features e_{(s, a_i)} with d_i = S * A_i, row-major in s
// then a_i. Exact representation (zero misspecification).
FeatureMap tabular_features(const TabularMarkovGame& game);

// Facility-based normal-form game. Player actions are nonempty facility
// subsets; the per-facility reward depends only on the number of users.
struct CongestionGame {
  int num_facilities = 0;
  // actions[i][a] lists the facilities of player i's a-th action.
  std::vector<std::vector<std::vector<int>>> actions;
  // facility_reward[f][n-1] is the mean reward of facility f with n users,
  // each value in [0, 1/F].
  std::vector<std::vector<double>> facility_reward;
  RewardNoise noise = RewardNoise::kBernoulli;

  int num_players() const { return static_cast<int>(actions.size()); }
  void validate() const;
};

struct CongestionConversion {
  TabularMarkovGame game;  // S = 1, H = 1
  FeatureMap features;     // facility incidence scaled by 1/sqrt(F)
  double feature_scale;    // sqrt(F): multiply features by this to undo scaling
  // Constraint radius consistent with the scaled features (W = F).
  double radius;
};

// Expands the congestion game into its one-shot Markov game with joint mean
// rewards R_i(a) = sum_{f in a_i} R^f(n^f(a)), plus incidence features. The
// incidence vectors are scaled by 1/sqrt(F) to satisfy the library-wide unit
// norm contract; `feature_scale` and `radius` record the adjustment.
CongestionConversion congestion_to_markov_game(const CongestionGame& cg);

double rosenthal_potential(const CongestionGame& cg, std::span<const int> joint_action);
// Facility load profile n^f(a).
std::vector<int> facility_loads(const CongestionGame& cg, std::span<const int> joint_action);

struct AbstractionEnv {
  TabularMarkovGame game;  // the base game, unchanged
  FeatureMap features;     // e_{(psi(s), a_i)} with d_i = |Z| * A_i
  std::vector<int> psi;
  int num_abstract = 0;
  // epsilon[h * |Z| + z]: the exact per-(h, z) abstraction error, the max over
  // merged state pairs and joint actions of reward and L1-transition gaps.
  std::vector<double> epsilon;

  double max_epsilon() const;
};

AbstractionEnv abstraction_env(const TabularMarkovGame& base, std::vector<int> psi);

// Dirichlet(1,...,1) transition rows and Uniform[0,1] mean rewards,
// reproducible from the seed.
TabularMarkovGame random_game(std::uint64_t seed, int num_states, std::vector<int> action_counts,
                              int horizon, RewardNoise noise = RewardNoise::kBernoulli);

// Two-player variant with R_1 + R_2 = 1 per cell (zero-sum shifted into the
// library's [0,1] reward range; gaps are invariant to the shift).
TabularMarkovGame random_zero_sum_game(std::uint64_t seed, int num_states, int actions_p1,
                                       int actions_p2, int horizon,
                                       RewardNoise noise = RewardNoise::kBernoulli);

// Random congestion game with monotone nonincreasing facility rewards in the
// load, values in [0, 1/F]; singleton facility actions when `singleton_actions`.
// `min_margin` > 0 enforces general position: all pairwise differences among
// the facility reward values are at least the margin (draws are rejected and
// redrawn otherwise), so no unilateral improvement sits arbitrarily close to a
// stopping threshold.
CongestionGame random_congestion_game(std::uint64_t seed, int num_players, int num_facilities,
                                      bool singleton_actions = true,
                                      RewardNoise noise = RewardNoise::kBernoulli,
                                      double min_margin = 0.0);

}  // namespace mgeq
