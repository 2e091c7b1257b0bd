#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "mgeq/game.hpp"
#include "mgeq/prefi.hpp"

namespace mgeq {

// Per-visit-count optimism bonus: beta_n = sqrt(numerator / (n v floor)).
// Nonincreasing in n by construction; the floor keeps beta_0 >= H so states a
// retraining pass never reaches stay fully optimistic.
struct BonusSchedule {
  double numerator = 0.0;
  double floor_n = 1.0;

  double at(long long n) const;
};

struct PreboParams {
  double epsilon = 0.1;
  double delta = 0.1;
  double t_trig = 4.0;
  long long k_max = 1;
  long long n_max = 1;
  EquilibriumMode mode = EquilibriumMode::kCce;
  BonusSchedule bonus;
  // Certification constants: BReg(n) = c1 sqrt(B n) ln(B n / delta),
  // BSwapReg(n) = c2 B sqrt(n) ln(B n / delta).
  double bandit_regret_const = 2.0;
  double bandit_swap_const = 3.0;
  // Scales the regret adjustment added to V-bar alongside the bonus.
  double regret_scale = 1.0;
};

PreboParams default_prebo_params(double epsilon, double delta, const EnvDims& dims,
                                 EquilibriumMode mode, double n_mult = 1.0,
                                 double bonus_scale = 1.0);

struct PreboEpisode {
  long long episode = 0;
  long long repeats = 0;
  long long total_repeats = 0;
  std::vector<double> v_upper;
  std::vector<double> v_lower;
  double bound = 0.0;
  long long trajectories = 0;
};

struct PreboResult {
  MixtureMarkovPolicy policy;
  bool certified = false;
  long long output_episode = 0;
  double certified_bound = 0.0;
  std::vector<PreboEpisode> episodes;
  long long trajectories = 0;
};

using PreboEpisodeSink = std::function<void(const PreboEpisode&)>;

// Policy replay with adversarial bandit oracles for tabular Markov games.
// Certifies as soon as the optimistic-pessimistic gap at s_1 drops to epsilon;
// on budget exhaustion the best recorded certificate is returned uncertified.
PreboResult run_prebo(const TabularMarkovGame& game, const PreboParams& params,
                      std::uint64_t seed, const PreboEpisodeSink& on_episode = nullptr);

}  // namespace mgeq
