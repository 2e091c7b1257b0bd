#pragma once

#include <vector>

#include "mgeq/game.hpp"

namespace mgeq {

// Per-(step, state, player) values with V_{H+1} = 0. Entry (h, s, i) is
// bounded by the remaining reward, i.e. lies in [0, H - h] for 0-based h.
struct ValueTable {
  int horizon = 0;
  int num_states = 0;
  int num_players = 0;
  std::vector<double> values;  // [(h*S + s)*m + i], h in [0, H]

  static ValueTable zeros(int horizon, int num_states, int num_players);
  double at(int h, int s, int i) const {
    return values[(static_cast<std::size_t>(h) * num_states + s) * num_players + i];
  }
  double& at_mut(int h, int s, int i) {
    return values[(static_cast<std::size_t>(h) * num_states + s) * num_players + i];
  }
};

struct EvalOptions {
  // Joint-action enumeration budget in (h, s, a) cells.
  long long enumeration_cap = 10'000'000;
};

// Exact backward dynamic programming value of a mixture policy, all players.
ValueTable evaluate_value(const TabularMarkovGame& game, const MixtureMarkovPolicy& policy,
                          const EvalOptions& opts = {});

struct BestResponse {
  ValueTable value;             // deviator's value table (num_players == 1)
  DeterministicPolicy policy;   // maximizing deterministic policy, smallest-index ties
};

// Optimal deviation value for `player` against the policy's opponent
// marginals. The deviator ignores within-state correlation: opponents act
// according to the summed-out joint marginal at each (h, s).
BestResponse best_response_value(const TabularMarkovGame& game, const MixtureMarkovPolicy& policy,
                                 int player, const EvalOptions& opts = {});

struct BestModification {
  ValueTable value;  // modified-play value table (num_players == 1)
  StrategyModification modification;
};

// Optimal strategy modification value for `player`: backward DP over
// per-recommendation conditional opponent distributions. Recommendations with
// zero marginal mass map to themselves and contribute nothing.
BestModification best_modification_value(const TabularMarkovGame& game,
                                         const MixtureMarkovPolicy& policy, int player,
                                         const EvalOptions& opts = {});

struct GapReport {
  std::vector<double> per_player;
  double max_gap = 0.0;
};

GapReport cce_gap(const TabularMarkovGame& game, const MixtureMarkovPolicy& policy,
                  const EvalOptions& opts = {});
GapReport ce_gap(const TabularMarkovGame& game, const MixtureMarkovPolicy& policy,
                 const EvalOptions& opts = {});
// Requires a product policy (single-component mixture at every cell).
GapReport nash_gap(const TabularMarkovGame& game, const MixtureMarkovPolicy& policy,
                   const EvalOptions& opts = {});

struct PureNashOptions {
  double tolerance = 1e-9;
  long long policy_cap = 1'000'000;  // bound on enumerated deterministic profiles
};

// Enumerates every deterministic product policy and returns those whose Nash
// gap is within tolerance.
std::vector<DeterministicProductPolicy> brute_force_pure_nash(const TabularMarkovGame& game,
                                                              const PureNashOptions& opts = {});

// Evaluates the modified policy psi ⋄ pi exactly; used by gap computations and
// as a direct check that the DP and the policy-transform route agree.
MixtureMarkovPolicy apply_modification(const MixtureMarkovPolicy& policy,
                                       const StrategyModification& mod);

}  // namespace mgeq
