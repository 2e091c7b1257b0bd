#pragma once

#include <cstdint>
#include <vector>

#include "mgeq/envs.hpp"
#include "mgeq/game.hpp"

namespace mgeq {

struct LinearMdpParams {
  double epsilon = 0.1;
  double delta = 0.1;
  double lambda = 1.0;
  double radius = 1.0;  // W
  double beta = 1.0;
  double t_trig = 16.0;
  long long k_max = 1;
  long long data_budget = 1;  // N
};

// Closed-form single-agent defaults; `n_mult` scales the polylog-hidden N.
LinearMdpParams default_linear_mdp_params(double epsilon, double delta, int horizon, int dim,
                                          double n_mult = 1.0);

struct LinearMdpEpisode {
  long long episode = 0;
  long long repeats = 0;
  double v_upper = 0.0;
  double v_lower = 0.0;
  double bound = 0.0;
};

struct LinearMdpResult {
  DeterministicPolicy policy;
  long long output_episode = 0;
  double certified_bound = 0.0;
  bool budget_reached = false;
  std::vector<LinearMdpEpisode> episodes;
  long long trajectories = 0;
};

// Policy-replay solver for (mis)specified linear MDPs: optimistic and
// pessimistic constrained least-squares value iteration over a lazily grown
// policy cover, certified by the argmin of the upper-lower gap at s_1.
// The environment must be single-player; ties in the greedy argmax break
// toward the smallest action index.
LinearMdpResult solve_linear_mdp(const LinearGameEnv& env, const LinearMdpParams& params,
                                 std::uint64_t seed);

MixtureMarkovPolicy deterministic_to_mixture(const DeterministicPolicy& policy,
                                             const std::vector<int>& action_counts);

}  // namespace mgeq
