#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "mgeq/envs.hpp"
#include "mgeq/game.hpp"
#include "mgeq/linear_mdp.hpp"
#include "mgeq/prefi.hpp"

namespace mgeq {

struct NashCaParams {
  double epsilon = 0.1;
  double delta = 0.1;
  long long outer_episodes = 1;  // K = ceil(5 m H / epsilon)
  long long eval_episodes = 1;   // Monte-Carlo budget per value estimate
  LinearMdpParams solver;        // best-response oracle at accuracy epsilon/8
};

// K and the Hoeffding-sized evaluation budget from the closed forms; the
// solver preset targets accuracy epsilon/8 with failure share delta/(2mK).
// `mc_mult` and `solver_n_mult` scale the polylog-hidden budgets.
NashCaParams default_nash_ca_params(double epsilon, double delta, const EnvDims& dims,
                                    double mc_mult = 1.0, double solver_n_mult = 1.0);

// Single-agent view of the game with every player but `player` frozen to the
// joint policy's exact per-state marginals. Realizes the game each deviator
// faces; values computed in the view equal values in the full game.
LinearGameEnv induced_mdp(const TabularMarkovGame& game, const MixtureMarkovPolicy& opponents,
                          int player, const FeatureMap& features);

// Empirical mean of the total realized reward for one player.
double estimate_value_mc(const TabularMarkovGame& game, const MixtureMarkovPolicy& policy,
                         int player, long long episodes, std::uint64_t seed);
// Same rollouts, every player's return at once.
std::vector<double> estimate_values_mc(const TabularMarkovGame& game,
                                       const MixtureMarkovPolicy& policy, long long episodes,
                                       std::uint64_t seed, long long* rollout_count = nullptr);

struct NashCaEpisode {
  long long episode = 0;
  std::vector<double> improvements;  // Delta_i
  int switched_player = -1;          // -1 when the episode accepted the policy
  double potential = 0.0;            // exact Rosenthal potential when available
  bool has_potential = false;
};

struct NashCaResult {
  DeterministicProductPolicy policy;
  bool certified = false;  // stopped because max_i Delta_i <= epsilon/2
  std::vector<NashCaEpisode> episodes;
  long long trajectories = 0;
};

using PotentialFn = std::function<double(const DeterministicProductPolicy&)>;

// Iterative best response for Markov potential games: estimate each player's
// improvement via the linear-MDP solver, switch the argmax player while any
// improvement exceeds epsilon/2, and output the first profile where none does.
NashCaResult run_nash_ca(const LinearGameEnv& env, const NashCaParams& params, std::uint64_t seed,
                         const PotentialFn& potential = nullptr);

}  // namespace mgeq
