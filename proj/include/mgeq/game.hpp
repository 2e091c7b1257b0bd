#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mgeq/rng.hpp"

namespace mgeq {

enum class RewardNoise { kDeterministic, kBernoulli };

// Mixed-radix indexing of joint actions. Player 0 is the most significant
// digit, the last player varies fastest.
class JointActionSpace {
 public:
  JointActionSpace() = default;
  explicit JointActionSpace(std::vector<int> action_counts);

  int num_players() const { return static_cast<int>(counts_.size()); }
  long long size() const { return size_; }
  int count(int player) const { return counts_[player]; }
  const std::vector<int>& counts() const { return counts_; }

  long long index(std::span<const int> actions) const;
  void decode(long long joint, std::vector<int>* actions) const;
  int action_of(long long joint, int player) const;
  // Joint index with player `i`'s digit replaced by `action`.
  long long replace(long long joint, int player, int action) const;

 private:
  std::vector<int> counts_;
  std::vector<long long> strides_;
  long long size_ = 1;
};

// Finite-horizon multi-player general-sum Markov game with a fixed initial
// state. A stochastic initial state can be emulated with a dummy state whose
// transition realizes the initial distribution; this library keeps s_1 fixed.
struct TabularMarkovGame {
  int horizon = 0;
  int num_states = 0;
  int initial_state = 0;
  RewardNoise noise = RewardNoise::kBernoulli;
  JointActionSpace actions;

  // transition[(h*S + s)*A + a] is a length-S distribution over next states.
  std::vector<double> transition;
  // mean_reward[((h*m + i)*S + s)*A + a] in [0, 1].
  std::vector<double> mean_reward;

  int num_players() const { return actions.num_players(); }
  long long num_joint_actions() const { return actions.size(); }

  double transition_prob(int h, int s, long long joint, int next) const {
    return transition[trans_base(h, s, joint) + next];
  }
  std::span<const double> transition_row(int h, int s, long long joint) const {
    return {transition.data() + trans_base(h, s, joint), static_cast<std::size_t>(num_states)};
  }
  double reward(int h, int player, int s, long long joint) const {
    return mean_reward[((static_cast<long long>(h) * num_players() + player) * num_states + s) *
                           num_joint_actions() +
                       joint];
  }
  double& reward_mut(int h, int player, int s, long long joint) {
    return mean_reward[((static_cast<long long>(h) * num_players() + player) * num_states + s) *
                           num_joint_actions() +
                       joint];
  }
  double& transition_mut(int h, int s, long long joint, int next) {
    return transition[trans_base(h, s, joint) + next];
  }

  static TabularMarkovGame zeros(int horizon, int num_states, std::vector<int> action_counts,
                                 int initial_state = 0,
                                 RewardNoise noise = RewardNoise::kBernoulli);

  // Throws std::invalid_argument if any structural invariant fails: rows must
  // sum to 1 within 1e-12, entries nonnegative, rewards in [0, 1].
  void validate() const;

 private:
  std::size_t trans_base(int h, int s, long long joint) const {
    return static_cast<std::size_t>(
        ((static_cast<long long>(h) * num_states + s) * num_joint_actions() + joint) * num_states);
  }
};

// One state's product distribution: dists[i] is player i's distribution.
struct ProductPolicyLayer {
  std::vector<std::vector<double>> dists;

  static ProductPolicyLayer uniform(const std::vector<int>& action_counts);
  static ProductPolicyLayer deterministic(const std::vector<int>& action_counts,
                                          std::span<const int> chosen);
  void validate() const;
};

// Markov joint policy stored per (step, state) as a weighted mixture of
// product layers. Algorithm outputs are exactly of this form; the joint
// probability of an action profile is recomputed on demand rather than being
// materialized over the joint action space.
class MixtureMarkovPolicy {
 public:
  MixtureMarkovPolicy() = default;
  MixtureMarkovPolicy(int horizon, int num_states, std::vector<int> action_counts);

  static MixtureMarkovPolicy uniform(const TabularMarkovGame& game);

  int horizon() const { return horizon_; }
  int num_states() const { return num_states_; }
  int num_players() const { return static_cast<int>(action_counts_.size()); }
  const std::vector<int>& action_counts() const { return action_counts_; }

  struct Component {
    double weight;
    ProductPolicyLayer layer;
  };

  const std::vector<Component>& at(int h, int s) const { return cells_[cell(h, s)]; }
  std::vector<Component>& at_mut(int h, int s) { return cells_[cell(h, s)]; }
  void set_single(int h, int s, ProductPolicyLayer layer);

  double joint_probability(int h, int s, std::span<const int> actions) const;
  // Marginal distribution of one player's action at (h, s).
  std::vector<double> player_marginal(int h, int s, int player) const;
  // Joint distribution over the other players' actions (deviator view): the
  // correlation with player i is summed out.
  std::vector<double> opponent_marginal(int h, int s, int player) const;
  // Dense joint distribution at (h, s); only valid under small action spaces.
  std::vector<double> joint_table(int h, int s) const;

  void validate() const;

 private:
  std::size_t cell(int h, int s) const {
    return static_cast<std::size_t>(h) * num_states_ + s;
  }
  int horizon_ = 0;
  int num_states_ = 0;
  std::vector<int> action_counts_;
  std::vector<std::vector<Component>> cells_;
};

// Deterministic policy per (h, s) for a single decision maker.
struct DeterministicPolicy {
  std::vector<std::vector<int>> action;  // [h][s]
};

// Deterministic Markov product policy: action[h][s][i].
struct DeterministicProductPolicy {
  std::vector<std::vector<std::vector<int>>> action;

  MixtureMarkovPolicy to_mixture(const std::vector<int>& action_counts) const;
};

// Per-(h, s) deterministic remap of one player's recommended action.
struct StrategyModification {
  int player = 0;
  std::vector<std::vector<std::vector<int>>> replacement;  // [h][s][a_i]

  static StrategyModification identity(int horizon, int num_states, int num_actions, int player);
  void validate(int num_actions) const;
};

struct TrajectoryStep {
  int state = 0;
  std::vector<int> actions;
  std::vector<double> rewards;
  int next_state = 0;
};

struct Trajectory {
  std::vector<TrajectoryStep> steps;
};

// Draws `stop_step` steps under the mixture policy. At each (h, s) one
// component is drawn by weight, then each player samples independently from
// their factor; this realizes sampling with shared component seeds.
Trajectory sample_trajectory(const TabularMarkovGame& game, const MixtureMarkovPolicy& policy,
                             int stop_step, std::uint64_t seed);

// Follows `cover_policy` for steps 1..h-1, then plays `switch_layers[s_h]` at
// step h. Returns the full prefix plus the step-h tuple.
Trajectory concat_rollout(const TabularMarkovGame& game, const MixtureMarkovPolicy& cover_policy,
                          std::span<const ProductPolicyLayer> switch_layers, int h,
                          std::uint64_t seed);

}  // namespace mgeq
