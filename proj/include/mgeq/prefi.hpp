#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "mgeq/envs.hpp"
#include "mgeq/game.hpp"

namespace mgeq {

enum class EquilibriumMode { kCce, kCe };
enum class CoverMode { kLazy, kAgile };

struct EnvDims {
  int horizon = 0;
  int states = 0;
  int players = 0;
  int a_max = 0;
  int d_max = 0;

  static EnvDims of(const LinearGameEnv& env);
};

struct PrefiParams {
  double epsilon = 0.1;
  double delta = 0.1;
  double lambda = 1.0;
  double radius = 1.0;   // W, the constrained-LS ball
  double beta = 1.0;     // elliptical bonus coefficient
  double t_trig = 16.0;  // lazy cover trigger threshold
  long long k_max = 1;
  long long inner_rounds = 1;  // T
  long long data_budget = 1;   // N (lazy) / K episodes double as budget (agile)
  EquilibriumMode mode = EquilibriumMode::kCce;
  CoverMode cover = CoverMode::kLazy;
  // Concrete constants for the oracle regret terms added to V-bar:
  // Reg(T) = c1 sqrt(T ln B), SwapReg(T) = c2 sqrt(B T ln B).
  double full_regret_const = 2.0;
  double swap_regret_const = 3.0;
  bool parallel_collect = false;
  bool keep_episode_policies = false;
};

// Appendix-level defaults. The sample-size entries T and N carry the paper's
// polylog-hidden constants; `t_mult` / `n_mult` scale them for desk-size runs.
// The remaining fields follow the closed-form settings verbatim.
PrefiParams default_prefi_params(double epsilon, double delta, const EnvDims& dims,
                                 EquilibriumMode mode, CoverMode cover = CoverMode::kLazy,
                                 double t_mult = 1.0, double n_mult = 1.0);

struct PrefiEpisode {
  long long episode = 0;       // k, 1-based
  long long repeats = 0;       // n^k rollouts added to the cover this episode
  long long total_repeats = 0; // n^tot after the episode
  std::vector<double> v_upper; // optimistic values at s_1, per player
  std::vector<double> v_lower; // pessimistic values at s_1 (empty in agile mode)
  std::optional<double> bound; // max_i (v_upper - v_lower)
  long long trajectories = 0;  // cumulative rollouts so far
};

struct PrefiResult {
  MixtureMarkovPolicy policy;
  long long output_episode = 0;
  std::optional<double> certified_bound;  // absent in agile mode
  bool budget_reached = false;            // lazy: terminated via n_tot == N
  std::vector<PrefiEpisode> episodes;
  std::vector<MixtureMarkovPolicy> episode_policies;  // filled on request
  long long trajectories = 0;
};

using PrefiEpisodeSink = std::function<void(const PrefiEpisode&)>;

// Policy replay with a full-information no-regret oracle. Lazy cover mode runs
// the certified variant (optimistic/pessimistic tracks, argmin certificate on
// budget completion); agile mode grows the cover every episode and outputs a
// uniformly sampled episode policy without certification.
PrefiResult run_prefi(const LinearGameEnv& env, const PrefiParams& params, std::uint64_t seed,
                      const PrefiEpisodeSink& on_episode = nullptr);

}  // namespace mgeq
