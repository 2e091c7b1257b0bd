#include "mgeq/regret.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mgeq {

namespace {
constexpr double kStationaryTol = 1e-12;
}

RegretLearner::RegretLearner(int num_arms, RegretMode mode, long long horizon_hint,
                             std::uint64_t seed)
    : num_arms_(num_arms),
      mode_(mode),
      horizon_hint_(horizon_hint),
      rng_(derive_seed(seed, 0x6f7261636cULL)) {
  if (num_arms_ < 1) throw std::invalid_argument("RegretLearner: need at least one arm");
  dist_.assign(num_arms_, 1.0 / num_arms_);
  if (mode_ == RegretMode::kFullExternal || mode_ == RegretMode::kBanditExternal) {
    log_weights_.assign(num_arms_, 0.0);
  } else {
    expert_logw_.assign(num_arms_, std::vector<double>(num_arms_, 0.0));
    expert_dist_.assign(num_arms_, std::vector<double>(num_arms_, 1.0 / num_arms_));
    expert_rounds_.assign(num_arms_, 0);
  }
  if (horizon_hint_ <= 0) {
    phase_length_ = 1;
    phase_round_ = 0;
  }
}

double RegretLearner::full_info_rate() {
  if (num_arms_ == 1) return 0.0;
  if (horizon_hint_ > 0) {
    return std::sqrt(std::log(static_cast<double>(num_arms_)) /
                     static_cast<double>(horizon_hint_));
  }
  // Doubling trick: restart weights at each phase boundary.
  if (phase_round_ == phase_length_) {
    phase_length_ *= 2;
    phase_round_ = 0;
    if (!log_weights_.empty()) std::fill(log_weights_.begin(), log_weights_.end(), 0.0);
    for (auto& lw : expert_logw_) std::fill(lw.begin(), lw.end(), 0.0);
    for (auto& d : expert_dist_) std::fill(d.begin(), d.end(), 1.0 / num_arms_);
  }
  ++phase_round_;
  return std::sqrt(std::log(static_cast<double>(num_arms_)) /
                   static_cast<double>(phase_length_));
}

void RegretLearner::hedge_step(std::vector<double>& log_weights, std::span<const double> loss,
                               double eta) {
  for (int b = 0; b < num_arms_; ++b) log_weights[b] -= eta * loss[b];
}

void RegretLearner::renormalize_from_log(const std::vector<double>& log_weights,
                                         std::vector<double>& dist) {
  double max_lw = *std::max_element(log_weights.begin(), log_weights.end());
  double total = 0.0;
  for (int b = 0; b < num_arms_; ++b) {
    dist[b] = std::exp(log_weights[b] - max_lw);
    total += dist[b];
  }
  for (double& p : dist) p /= total;
}

void RegretLearner::recompute_stationary() {
  // Power iteration on the row-stochastic expert matrix; Hedge rows are
  // strictly positive so the chain is ergodic.
  std::vector<double> p(num_arms_, 1.0 / num_arms_);
  std::vector<double> next(num_arms_, 0.0);
  long long max_iters = 10LL * num_arms_ * num_arms_ + 64;
  for (long long it = 0; it < max_iters; ++it) {
    std::fill(next.begin(), next.end(), 0.0);
    for (int b = 0; b < num_arms_; ++b) {
      const auto& row = expert_dist_[b];
      for (int a = 0; a < num_arms_; ++a) next[a] += p[b] * row[a];
    }
    double diff = 0.0;
    for (int a = 0; a < num_arms_; ++a) diff += std::abs(next[a] - p[a]);
    p.swap(next);
    if (diff <= kStationaryTol) break;
  }
  double total = 0.0;
  for (double x : p) total += x;
  for (double& x : p) x /= total;
  dist_ = std::move(p);
}

void RegretLearner::full_update(std::span<const double> loss) {
  if (mode_ != RegretMode::kFullExternal && mode_ != RegretMode::kFullSwap)
    throw std::logic_error("full_update called on a bandit-mode learner");
  if (loss.size() != static_cast<std::size_t>(num_arms_))
    throw std::invalid_argument("full_update: loss size mismatch");
  std::vector<double> clipped(num_arms_);
  for (int b = 0; b < num_arms_; ++b) {
    double l = loss[b];
    if (!std::isfinite(l)) throw std::invalid_argument("full_update: non-finite loss");
    if (l < 0.0 || l > 1.0) {
      ++clipped_;
      l = std::clamp(l, 0.0, 1.0);
    }
    clipped[b] = l;
  }
  ++rounds_;
  double eta = full_info_rate();
  if (mode_ == RegretMode::kFullExternal) {
    hedge_step(log_weights_, clipped, eta);
    renormalize_from_log(log_weights_, dist_);
    return;
  }
  // Blum-Mansour: expert b sees the loss scaled by the mass it was played with.
  for (int b = 0; b < num_arms_; ++b) {
    double scale = dist_[b];
    std::vector<double> scaled(num_arms_);
    for (int a = 0; a < num_arms_; ++a) scaled[a] = scale * clipped[a];
    hedge_step(expert_logw_[b], scaled, eta);
    renormalize_from_log(expert_logw_[b], expert_dist_[b]);
  }
  recompute_stationary();
}

void RegretLearner::exp3ix_step(std::vector<double>& log_weights, std::vector<double>& dist,
                                int arm, double loss, long long t) {
  if (num_arms_ == 1) return;
  double rate = std::sqrt(std::log(static_cast<double>(num_arms_)) /
                          (static_cast<double>(num_arms_) * static_cast<double>(t)));
  double estimate = loss / (dist[arm] + rate);  // implicit exploration bias
  log_weights[arm] -= rate * estimate;
  renormalize_from_log(log_weights, dist);
}

void RegretLearner::bandit_update(int arm, double observed_loss) {
  if (mode_ != RegretMode::kBanditExternal && mode_ != RegretMode::kBanditSwap)
    throw std::logic_error("bandit_update called on a full-information learner");
  if (arm < 0 || arm >= num_arms_) throw std::invalid_argument("bandit_update: arm out of range");
  if (!std::isfinite(observed_loss) || observed_loss < 0.0 || observed_loss > 1.0)
    throw std::invalid_argument("bandit_update: loss outside [0,1]");
  ++rounds_;
  if (mode_ == RegretMode::kBanditExternal) {
    exp3ix_step(log_weights_, dist_, arm, observed_loss, rounds_);
    return;
  }
  // BanditSwap: attribute the observation to an expert drawn from the
  // posterior P(b | arm) proportional to p(b) * q_b(arm), then run that
  // expert's EXP3-IX step on its own clock.
  std::vector<double> posterior(num_arms_);
  double total = 0.0;
  for (int b = 0; b < num_arms_; ++b) {
    posterior[b] = dist_[b] * expert_dist_[b][arm];
    total += posterior[b];
  }
  int expert;
  if (total <= 0.0) {
    expert = arm;  // numerically extinct arm; any attribution is mass-free
  } else {
    expert = rng_.categorical(posterior);
  }
  ++expert_rounds_[expert];
  exp3ix_step(expert_logw_[expert], expert_dist_[expert], arm, observed_loss,
              expert_rounds_[expert]);
  recompute_stationary();
}

double external_regret(const std::vector<std::vector<double>>& dists,
                       const std::vector<std::vector<double>>& losses) {
  if (dists.size() != losses.size()) throw std::invalid_argument("history size mismatch");
  if (dists.empty()) return 0.0;
  const std::size_t B = dists[0].size();
  double incurred = 0.0;
  std::vector<double> arm_totals(B, 0.0);
  for (std::size_t t = 0; t < dists.size(); ++t) {
    for (std::size_t b = 0; b < B; ++b) {
      incurred += dists[t][b] * losses[t][b];
      arm_totals[b] += losses[t][b];
    }
  }
  return incurred - *std::min_element(arm_totals.begin(), arm_totals.end());
}

double swap_regret(const std::vector<std::vector<double>>& dists,
                   const std::vector<std::vector<double>>& losses) {
  if (dists.size() != losses.size()) throw std::invalid_argument("history size mismatch");
  if (dists.empty()) return 0.0;
  const std::size_t B = dists[0].size();
  double regret = 0.0;
  for (std::size_t b = 0; b < B; ++b) {
    double base = 0.0;
    std::vector<double> rerouted(B, 0.0);
    for (std::size_t t = 0; t < dists.size(); ++t) {
      base += dists[t][b] * losses[t][b];
      for (std::size_t target = 0; target < B; ++target) {
        rerouted[target] += dists[t][b] * losses[t][target];
      }
    }
    regret += base - *std::min_element(rerouted.begin(), rerouted.end());
  }
  return regret;
}

}  // namespace mgeq
