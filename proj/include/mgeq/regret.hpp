#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mgeq/rng.hpp"

namespace mgeq {

enum class RegretMode { kFullExternal, kFullSwap, kBanditExternal, kBanditSwap };

// One no-regret instance over B arms. Concrete algorithms:
//   FullExternal  - Hedge (exponential weights), eta = sqrt(ln B / T).
//   FullSwap      - Blum-Mansour reduction over B Hedge experts; the emitted
//                   distribution is the stationary distribution of the
//                   row-stochastic expert matrix.
//   BanditExternal- EXP3-IX with eta_t = gamma_t = sqrt(ln B / (B t)).
//   BanditSwap    - Blum-Mansour over EXP3-IX experts; the expert responsible
//                   for an observed arm is drawn from its posterior using the
//                   learner's own seeded generator.
// When the horizon is unknown (hint = 0) the full-information modes run the
// doubling trick; bandit rates are anytime already.
class RegretLearner {
 public:
  RegretLearner(int num_arms, RegretMode mode, long long horizon_hint, std::uint64_t seed = 0);

  int num_arms() const { return num_arms_; }
  RegretMode mode() const { return mode_; }
  const std::vector<double>& distribution() const { return dist_; }

  // Full-information update; losses are clipped to [0,1] and the clip counter
  // is incremented when a value falls outside.
  void full_update(std::span<const double> loss);

  // Bandit update with the observed loss of the arm the caller sampled from
  // the current distribution.
  void bandit_update(int arm, double observed_loss);

  long long clipped_loss_count() const { return clipped_; }
  long long rounds() const { return rounds_; }

  // Swap modes only: the row-stochastic expert matrix whose stationary
  // distribution is `distribution()`.
  const std::vector<std::vector<double>>& expert_rows() const { return expert_dist_; }

 private:
  void hedge_step(std::vector<double>& log_weights, std::span<const double> loss, double eta);
  void renormalize_from_log(const std::vector<double>& log_weights, std::vector<double>& dist);
  void recompute_stationary();
  double full_info_rate();
  void exp3ix_step(std::vector<double>& log_weights, std::vector<double>& dist, int arm,
                   double loss, long long t);

  int num_arms_;
  RegretMode mode_;
  long long horizon_hint_;
  long long rounds_ = 0;
  long long clipped_ = 0;
  // Doubling trick state for unknown horizons.
  long long phase_length_ = 0;
  long long phase_round_ = 0;

  std::vector<double> dist_;
  std::vector<double> log_weights_;               // external modes
  std::vector<std::vector<double>> expert_logw_;  // swap modes, one per expert
  std::vector<std::vector<double>> expert_dist_;
  std::vector<long long> expert_rounds_;          // bandit swap: per-expert round count
  Rng rng_;
};

// Exact regrets from a recorded play history (test support). `dists[t]` is the
// distribution used at round t and `losses[t]` the full loss vector.
double external_regret(const std::vector<std::vector<double>>& dists,
                       const std::vector<std::vector<double>>& losses);

// Per-arm optimal reroute decomposition:
//   swap_regret = sum_b max_{b'} sum_t p_t(b) (l_t(b) - l_t(b')).
double swap_regret(const std::vector<std::vector<double>>& dists,
                   const std::vector<std::vector<double>>& losses);

}  // namespace mgeq
