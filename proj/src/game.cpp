#include "mgeq/game.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mgeq {

namespace {
constexpr double kProbTol = 1e-12;
}

JointActionSpace::JointActionSpace(std::vector<int> action_counts)
    : counts_(std::move(action_counts)) {
  if (counts_.empty()) throw std::invalid_argument("JointActionSpace: no players");
  strides_.assign(counts_.size(), 1);
  size_ = 1;
  for (int i = static_cast<int>(counts_.size()) - 1; i >= 0; --i) {
    if (counts_[i] <= 0) throw std::invalid_argument("JointActionSpace: nonpositive action count");
    strides_[i] = size_;
    size_ *= counts_[i];
  }
}

long long JointActionSpace::index(std::span<const int> actions) const {
  long long joint = 0;
  for (std::size_t i = 0; i < counts_.size(); ++i) {
    joint += strides_[i] * actions[i];
  }
  return joint;
}

void JointActionSpace::decode(long long joint, std::vector<int>* actions) const {
  actions->resize(counts_.size());
  for (std::size_t i = 0; i < counts_.size(); ++i) {
    (*actions)[i] = static_cast<int>((joint / strides_[i]) % counts_[i]);
  }
}

int JointActionSpace::action_of(long long joint, int player) const {
  return static_cast<int>((joint / strides_[player]) % counts_[player]);
}

long long JointActionSpace::replace(long long joint, int player, int action) const {
  int old = action_of(joint, player);
  return joint + strides_[player] * static_cast<long long>(action - old);
}

TabularMarkovGame TabularMarkovGame::zeros(int horizon, int num_states,
                                           std::vector<int> action_counts, int initial_state,
                                           RewardNoise noise) {
  TabularMarkovGame g;
  g.horizon = horizon;
  g.num_states = num_states;
  g.initial_state = initial_state;
  g.noise = noise;
  g.actions = JointActionSpace(std::move(action_counts));
  g.transition.assign(static_cast<std::size_t>(horizon) * num_states * g.actions.size() *
                          num_states,
                      0.0);
  g.mean_reward.assign(static_cast<std::size_t>(horizon) * g.actions.num_players() * num_states *
                           g.actions.size(),
                       0.0);
  return g;
}

void TabularMarkovGame::validate() const {
  if (horizon <= 0 || num_states <= 0) throw std::invalid_argument("game: empty horizon or states");
  if (initial_state < 0 || initial_state >= num_states)
    throw std::invalid_argument("game: initial state out of range");
  const long long A = num_joint_actions();
  if (transition.size() !=
      static_cast<std::size_t>(horizon) * num_states * A * num_states)
    throw std::invalid_argument("game: transition tensor shape mismatch");
  if (mean_reward.size() !=
      static_cast<std::size_t>(horizon) * num_players() * num_states * A)
    throw std::invalid_argument("game: reward tensor shape mismatch");
  for (int h = 0; h < horizon; ++h) {
    for (int s = 0; s < num_states; ++s) {
      for (long long a = 0; a < A; ++a) {
        double sum = 0.0;
        for (int next = 0; next < num_states; ++next) {
          double p = transition_prob(h, s, a, next);
          if (p < 0.0) throw std::invalid_argument("game: negative transition probability");
          sum += p;
        }
        if (std::abs(sum - 1.0) > kProbTol)
          throw std::invalid_argument("game: transition row does not sum to 1");
        for (int i = 0; i < num_players(); ++i) {
          double r = reward(h, i, s, a);
          if (r < 0.0 || r > 1.0) throw std::invalid_argument("game: mean reward outside [0,1]");
        }
      }
    }
  }
}

ProductPolicyLayer ProductPolicyLayer::uniform(const std::vector<int>& action_counts) {
  ProductPolicyLayer layer;
  layer.dists.reserve(action_counts.size());
  for (int a : action_counts) layer.dists.emplace_back(a, 1.0 / a);
  return layer;
}

ProductPolicyLayer ProductPolicyLayer::deterministic(const std::vector<int>& action_counts,
                                                     std::span<const int> chosen) {
  ProductPolicyLayer layer;
  layer.dists.reserve(action_counts.size());
  for (std::size_t i = 0; i < action_counts.size(); ++i) {
    std::vector<double> d(action_counts[i], 0.0);
    d.at(chosen[i]) = 1.0;
    layer.dists.push_back(std::move(d));
  }
  return layer;
}

void ProductPolicyLayer::validate() const {
  for (const auto& d : dists) {
    double sum = 0.0;
    for (double p : d) {
      if (p < 0.0) throw std::invalid_argument("policy layer: negative probability");
      sum += p;
    }
    if (std::abs(sum - 1.0) > kProbTol)
      throw std::invalid_argument("policy layer: distribution does not sum to 1");
  }
}

MixtureMarkovPolicy::MixtureMarkovPolicy(int horizon, int num_states,
                                         std::vector<int> action_counts)
    : horizon_(horizon), num_states_(num_states), action_counts_(std::move(action_counts)) {
  cells_.resize(static_cast<std::size_t>(horizon_) * num_states_);
}

MixtureMarkovPolicy MixtureMarkovPolicy::uniform(const TabularMarkovGame& game) {
  MixtureMarkovPolicy pi(game.horizon, game.num_states, game.actions.counts());
  for (int h = 0; h < game.horizon; ++h) {
    for (int s = 0; s < game.num_states; ++s) {
      pi.set_single(h, s, ProductPolicyLayer::uniform(game.actions.counts()));
    }
  }
  return pi;
}

void MixtureMarkovPolicy::set_single(int h, int s, ProductPolicyLayer layer) {
  cells_[cell(h, s)] = {Component{1.0, std::move(layer)}};
}

double MixtureMarkovPolicy::joint_probability(int h, int s, std::span<const int> actions) const {
  double total = 0.0;
  for (const Component& c : cells_[cell(h, s)]) {
    double p = c.weight;
    for (std::size_t i = 0; i < actions.size(); ++i) p *= c.layer.dists[i][actions[i]];
    total += p;
  }
  return total;
}

std::vector<double> MixtureMarkovPolicy::player_marginal(int h, int s, int player) const {
  std::vector<double> marg(action_counts_[player], 0.0);
  for (const Component& c : cells_[cell(h, s)]) {
    const auto& d = c.layer.dists[player];
    for (std::size_t a = 0; a < d.size(); ++a) marg[a] += c.weight * d[a];
  }
  return marg;
}

std::vector<double> MixtureMarkovPolicy::opponent_marginal(int h, int s, int player) const {
  // Indexed by the joint action space with player `player`'s digit fixed to 0.
  JointActionSpace space(action_counts_);
  std::vector<double> marg(static_cast<std::size_t>(space.size() / action_counts_[player]), 0.0);
  const int m = num_players();
  std::vector<int> profile(m, 0);
  // Enumerate reduced profiles (all players except `player`).
  std::vector<int> reduced_counts;
  for (int i = 0; i < m; ++i)
    if (i != player) reduced_counts.push_back(action_counts_[i]);
  long long reduced_size = 1;
  for (int c : reduced_counts) reduced_size *= c;
  for (long long idx = 0; idx < reduced_size; ++idx) {
    long long rest = idx;
    for (int i = m - 1; i >= 0; --i) {
      if (i == player) {
        profile[i] = 0;
        continue;
      }
      profile[i] = static_cast<int>(rest % action_counts_[i]);
      rest /= action_counts_[i];
    }
    double p = 0.0;
    for (const Component& c : cells_[cell(h, s)]) {
      double q = c.weight;
      for (int i = 0; i < m; ++i) {
        if (i == player) continue;
        q *= c.layer.dists[i][profile[i]];
      }
      p += q;
    }
    marg[idx] = p;
  }
  return marg;
}

std::vector<double> MixtureMarkovPolicy::joint_table(int h, int s) const {
  JointActionSpace space(action_counts_);
  std::vector<double> table(static_cast<std::size_t>(space.size()), 0.0);
  std::vector<int> profile;
  for (long long a = 0; a < space.size(); ++a) {
    space.decode(a, &profile);
    table[a] = joint_probability(h, s, profile);
  }
  return table;
}

void MixtureMarkovPolicy::validate() const {
  for (int h = 0; h < horizon_; ++h) {
    for (int s = 0; s < num_states_; ++s) {
      const auto& comps = cells_[cell(h, s)];
      if (comps.empty()) throw std::invalid_argument("mixture policy: empty cell");
      double wsum = 0.0;
      for (const Component& c : comps) {
        if (c.weight < 0.0) throw std::invalid_argument("mixture policy: negative weight");
        wsum += c.weight;
        if (c.layer.dists.size() != action_counts_.size())
          throw std::invalid_argument("mixture policy: player count mismatch");
        c.layer.validate();
      }
      if (std::abs(wsum - 1.0) > kProbTol)
        throw std::invalid_argument("mixture policy: weights do not sum to 1");
    }
  }
}

MixtureMarkovPolicy DeterministicProductPolicy::to_mixture(
    const std::vector<int>& action_counts) const {
  int H = static_cast<int>(action.size());
  int S = H > 0 ? static_cast<int>(action[0].size()) : 0;
  MixtureMarkovPolicy pi(H, S, action_counts);
  for (int h = 0; h < H; ++h) {
    for (int s = 0; s < S; ++s) {
      pi.set_single(h, s, ProductPolicyLayer::deterministic(action_counts, action[h][s]));
    }
  }
  return pi;
}

StrategyModification StrategyModification::identity(int horizon, int num_states, int num_actions,
                                                    int player) {
  StrategyModification mod;
  mod.player = player;
  mod.replacement.assign(horizon, std::vector<std::vector<int>>(num_states));
  for (auto& per_state : mod.replacement) {
    for (auto& per_action : per_state) {
      per_action.resize(num_actions);
      for (int a = 0; a < num_actions; ++a) per_action[a] = a;
    }
  }
  return mod;
}

void StrategyModification::validate(int num_actions) const {
  for (const auto& per_state : replacement) {
    for (const auto& per_action : per_state) {
      for (int a : per_action) {
        if (a < 0 || a >= num_actions)
          throw std::invalid_argument("strategy modification: action out of range");
      }
    }
  }
}

namespace {

double realize_reward(const TabularMarkovGame& game, double mean, Rng& rng) {
  switch (game.noise) {
    case RewardNoise::kDeterministic:
      return mean;
    case RewardNoise::kBernoulli:
      return rng.bernoulli(mean) ? 1.0 : 0.0;
  }
  return mean;
}

TrajectoryStep play_step(const TabularMarkovGame& game, const ProductPolicyLayer& layer, int h,
                         int s, Rng& rng) {
  TrajectoryStep step;
  step.state = s;
  const int m = game.num_players();
  step.actions.resize(m);
  for (int i = 0; i < m; ++i) {
    step.actions[i] = rng.categorical(layer.dists[i]);
  }
  long long joint = game.actions.index(step.actions);
  step.rewards.resize(m);
  for (int i = 0; i < m; ++i) {
    step.rewards[i] = realize_reward(game, game.reward(h, i, s, joint), rng);
  }
  step.next_state = rng.categorical(game.transition_row(h, s, joint));
  return step;
}

const ProductPolicyLayer& draw_component(const MixtureMarkovPolicy& policy, int h, int s,
                                         Rng& rng) {
  const auto& comps = policy.at(h, s);
  if (comps.size() == 1) return comps[0].layer;
  std::vector<double> weights;
  weights.reserve(comps.size());
  for (const auto& c : comps) weights.push_back(c.weight);
  return comps[rng.categorical(weights)].layer;
}

}  // namespace

Trajectory sample_trajectory(const TabularMarkovGame& game, const MixtureMarkovPolicy& policy,
                             int stop_step, std::uint64_t seed) {
  if (stop_step < 1 || stop_step > game.horizon)
    throw std::invalid_argument("sample_trajectory: stop_step out of range");
  Rng rng(seed);
  Trajectory traj;
  traj.steps.reserve(stop_step);
  int s = game.initial_state;
  for (int h = 0; h < stop_step; ++h) {
    const ProductPolicyLayer& layer = draw_component(policy, h, s, rng);
    traj.steps.push_back(play_step(game, layer, h, s, rng));
    s = traj.steps.back().next_state;
  }
  return traj;
}

Trajectory concat_rollout(const TabularMarkovGame& game, const MixtureMarkovPolicy& cover_policy,
                          std::span<const ProductPolicyLayer> switch_layers, int h,
                          std::uint64_t seed) {
  if (h < 1 || h > game.horizon) throw std::invalid_argument("concat_rollout: h out of range");
  if (switch_layers.size() != static_cast<std::size_t>(game.num_states))
    throw std::invalid_argument("concat_rollout: one switch layer per state required");
  Rng rng(seed);
  Trajectory traj;
  traj.steps.reserve(h);
  int s = game.initial_state;
  for (int step = 0; step + 1 < h; ++step) {
    const ProductPolicyLayer& layer = draw_component(cover_policy, step, s, rng);
    traj.steps.push_back(play_step(game, layer, step, s, rng));
    s = traj.steps.back().next_state;
  }
  traj.steps.push_back(play_step(game, switch_layers[s], h - 1, s, rng));
  return traj;
}

}  // namespace mgeq
