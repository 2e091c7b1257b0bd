#include "mgeq/prebo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>

#include "mgeq/regression.hpp"
#include "mgeq/regret.hpp"

namespace mgeq {

double BonusSchedule::at(long long n) const {
  double eff = std::max(static_cast<double>(n), floor_n);
  return std::sqrt(numerator / eff);
}

PreboParams default_prebo_params(double epsilon, double delta, const EnvDims& dims,
                                 EquilibriumMode mode, double n_mult, double bonus_scale) {
  if (!(epsilon > 0.0 && epsilon < 1.0) || !(delta > 0.0 && delta < 1.0))
    throw std::invalid_argument("default_prebo_params: epsilon, delta must lie in (0,1)");
  PreboParams p;
  p.epsilon = epsilon;
  p.delta = delta;
  p.mode = mode;
  const double H = dims.horizon;
  const double S = dims.states;
  const double m = dims.players;
  const double A = dims.a_max;
  double n_max = n_mult * std::pow(H, 4) * S * A / (epsilon * epsilon);
  if (mode == EquilibriumMode::kCe) n_max *= A;
  p.n_max = std::max<long long>(1, static_cast<long long>(std::ceil(n_max)));
  p.k_max = std::max<long long>(
      1, static_cast<long long>(std::ceil(9.0 * H * S * std::log(static_cast<double>(p.n_max)))));
  p.t_trig = 12.0 * std::log(8.0 * static_cast<double>(p.k_max) * H * S / delta);
  p.bonus.floor_n = p.t_trig;
  p.bonus.numerator = bonus_scale * bonus_scale * 8.0 * H * H * p.t_trig *
                      std::log(2.0 * m * static_cast<double>(p.k_max) * H * S / delta);
  return p;
}

namespace {

struct CoverEntry {
  MixtureMarkovPolicy policy;
  long long repeats;
};

double bandit_regret(const PreboParams& params, int num_arms, long long n, double delta) {
  if (num_arms <= 1 || n <= 0) return 0.0;
  double B = num_arms;
  double t = static_cast<double>(n);
  double log_term = std::log(std::max(2.0, B * t / delta));
  double reg = params.mode == EquilibriumMode::kCce
                   ? params.bandit_regret_const * std::sqrt(B * t) * log_term
                   : params.bandit_swap_const * B * std::sqrt(t) * log_term;
  return params.regret_scale * reg;
}

}  // namespace

PreboResult run_prebo(const TabularMarkovGame& game, const PreboParams& params,
                      std::uint64_t seed, const PreboEpisodeSink& on_episode) {
  game.validate();
  if (params.k_max < 1 || params.n_max < 1)
    throw std::invalid_argument("run_prebo: episode and data budgets must be positive");

  const int H = game.horizon;
  const int S = game.num_states;
  const int m = game.num_players();
  const int s1 = game.initial_state;
  const RegretMode oracle_mode = params.mode == EquilibriumMode::kCce
                                     ? RegretMode::kBanditExternal
                                     : RegretMode::kBanditSwap;

  PreboResult result;
  result.policy = MixtureMarkovPolicy::uniform(game);

  std::vector<CoverEntry> cover;
  std::vector<double> cover_weights;
  long long total_repeats = 0;

  std::vector<std::vector<double>> v_upper(H + 1,
                                           std::vector<double>(static_cast<std::size_t>(S) * m));
  std::vector<std::vector<double>> v_lower(H + 1,
                                           std::vector<double>(static_cast<std::size_t>(S) * m));

  double best_bound = std::numeric_limits<double>::infinity();
  MixtureMarkovPolicy best_policy = result.policy;
  long long best_episode = 0;

  for (long long k = 1; k <= params.k_max; ++k) {
    for (auto& row : v_upper) std::fill(row.begin(), row.end(), 0.0);
    for (auto& row : v_lower) std::fill(row.begin(), row.end(), 0.0);
    MixtureMarkovPolicy episode_policy(H, S, game.actions.counts());
    std::vector<std::vector<long long>> visits(H, std::vector<long long>(S, 0));

    for (int h = H - 1; h >= 0; --h) {
      // Bandit instances and their current distributions, created on first
      // visit of each state.
      std::vector<std::unique_ptr<RegretLearner>> learners(static_cast<std::size_t>(m) * S);
      std::vector<std::vector<std::vector<double>>> current(m);
      for (int i = 0; i < m; ++i) {
        current[i].assign(S, std::vector<double>(game.actions.count(i),
                                                 1.0 / game.actions.count(i)));
      }
      std::vector<std::vector<ProductPolicyLayer>> snapshots(S);
      std::vector<ProductPolicyLayer> layers(S);

      long long inner = 0;
      for (const auto& entry : cover) inner += entry.repeats;
      for (long long t = 1; t <= inner; ++t) {
        std::uint64_t rollout_seed = derive_seed(seed, 21, k, h, t);
        Rng pick(derive_seed(rollout_seed, 0));
        const MixtureMarkovPolicy& cover_policy =
            cover[cover_weights.empty() ? 0 : pick.categorical(cover_weights)].policy;
        for (int s = 0; s < S; ++s) {
          layers[s].dists.resize(m);
          for (int i = 0; i < m; ++i) layers[s].dists[i] = current[i][s];
        }
        Trajectory traj =
            concat_rollout(game, cover_policy, layers, h + 1, derive_seed(rollout_seed, 1));
        ++result.trajectories;
        const TrajectoryStep& step = traj.steps.back();
        const int s = step.state;
        long long n = ++visits[h][s];

        ProductPolicyLayer used;
        used.dists.resize(m);
        for (int i = 0; i < m; ++i) used.dists[i] = current[i][s];
        snapshots[s].push_back(std::move(used));

        for (int i = 0; i < m; ++i) {
          auto& learner = learners[static_cast<std::size_t>(i) * S + s];
          if (!learner) {
            learner = std::make_unique<RegretLearner>(game.actions.count(i), oracle_mode,
                                                      /*horizon_hint=*/0,
                                                      derive_seed(seed, 22, k, h, i, s));
          }
          double target_up =
              step.rewards[i] + v_upper[h + 1][static_cast<std::size_t>(step.next_state) * m + i];
          learner->bandit_update(step.actions[i], 1.0 - target_up / H);
          current[i][s] = learner->distribution();

          double& vu = v_upper[h][static_cast<std::size_t>(s) * m + i];
          vu = (static_cast<double>(n - 1) / n) * vu + target_up / n;
          double target_low =
              step.rewards[i] + v_lower[h + 1][static_cast<std::size_t>(step.next_state) * m + i];
          double& vl = v_lower[h][static_cast<std::size_t>(s) * m + i];
          vl = (static_cast<double>(n - 1) / n) * vl + target_low / n;
        }
      }

      for (int s = 0; s < S; ++s) {
        long long n = visits[h][s];
        double beta = params.bonus.at(n);
        for (int i = 0; i < m; ++i) {
          double& vu = v_upper[h][static_cast<std::size_t>(s) * m + i];
          double& vl = v_lower[h][static_cast<std::size_t>(s) * m + i];
          double reg = n > 0 ? (static_cast<double>(H) / n) *
                                   bandit_regret(params, game.actions.count(i), n, params.delta)
                             : 0.0;
          vu = clip_q(vu + reg + beta, h + 1, H);
          vl = clip_q(vl - beta, h + 1, H);
        }
        auto& cell = episode_policy.at_mut(h, s);
        if (snapshots[s].empty()) {
          // Never visited in this episode: the policy must still be total.
          cell.push_back({1.0, ProductPolicyLayer::uniform(game.actions.counts())});
        } else {
          double w = 1.0 / static_cast<double>(snapshots[s].size());
          cell.reserve(snapshots[s].size());
          for (auto& layer : snapshots[s]) cell.push_back({w, std::move(layer)});
        }
      }
    }

    PreboEpisode diag;
    diag.episode = k;
    diag.v_upper.resize(m);
    diag.v_lower.resize(m);
    double bound = 0.0;
    for (int i = 0; i < m; ++i) {
      diag.v_upper[i] = v_upper[0][static_cast<std::size_t>(s1) * m + i];
      diag.v_lower[i] = v_lower[0][static_cast<std::size_t>(s1) * m + i];
      bound = std::max(bound, diag.v_upper[i] - diag.v_lower[i]);
    }
    diag.bound = bound;
    if (bound < best_bound) {
      best_bound = bound;
      best_policy = episode_policy;
      best_episode = k;
    }

    if (bound <= params.epsilon) {
      diag.total_repeats = total_repeats;
      diag.trajectories = result.trajectories;
      result.episodes.push_back(diag);
      if (on_episode) on_episode(diag);
      result.policy = episode_policy;
      result.certified = true;
      result.certified_bound = bound;
      result.output_episode = k;
      return result;
    }

    if (total_repeats >= params.n_max) {
      diag.total_repeats = total_repeats;
      diag.trajectories = result.trajectories;
      result.episodes.push_back(diag);
      if (on_episode) on_episode(diag);
      break;
    }

    // Cover phase: roll the fresh policy until some (h, s) is hit
    // max(n^k_h(s), T_Trig) times or the global budget is spent.
    std::vector<std::vector<long long>> hits(H, std::vector<long long>(S, 0));
    long long repeats = 0;
    bool fired = false;
    while (!fired && total_repeats < params.n_max) {
      ++repeats;
      ++total_repeats;
      Trajectory traj =
          sample_trajectory(game, episode_policy, H, derive_seed(seed, 23, k, repeats));
      ++result.trajectories;
      for (int h = 0; h < H; ++h) {
        const int s = traj.steps[h].state;
        long long threshold =
            std::max(visits[h][s], static_cast<long long>(std::ceil(params.t_trig)));
        if (++hits[h][s] >= threshold) fired = true;
      }
    }
    cover.push_back({std::move(episode_policy), repeats});
    cover_weights.push_back(static_cast<double>(repeats));

    diag.repeats = repeats;
    diag.total_repeats = total_repeats;
    diag.trajectories = result.trajectories;
    result.episodes.push_back(diag);
    if (on_episode) on_episode(diag);
  }

  result.policy = best_policy;
  result.certified = false;
  result.certified_bound = best_bound;
  result.output_episode = best_episode;
  return result;
}

}  // namespace mgeq
