#include "mgeq/linear_mdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "mgeq/regression.hpp"

namespace mgeq {

LinearMdpParams default_linear_mdp_params(double epsilon, double delta, int horizon, int dim,
                                          double n_mult) {
  if (!(epsilon > 0.0 && epsilon < 1.0) || !(delta > 0.0 && delta < 1.0))
    throw std::invalid_argument("default_linear_mdp_params: epsilon, delta must lie in (0,1)");
  LinearMdpParams p;
  p.epsilon = epsilon;
  p.delta = delta;
  const double H = horizon;
  const double d = dim;
  double N = n_mult * std::pow(H, 4) * d * d / (epsilon * epsilon);
  p.data_budget = std::max<long long>(1, static_cast<long long>(std::ceil(N)));
  p.radius = H * std::sqrt(d);
  p.lambda = 2.0 * std::log(16.0 * d * static_cast<double>(p.data_budget) * H / delta) /
             std::log(36.0 / 35.0);
  p.t_trig = 64.0 * std::log(8.0 * H * static_cast<double>(p.data_budget) *
                             static_cast<double>(p.data_budget) / delta);
  double k_max = 2.0 * H * d * std::log(static_cast<double>(p.data_budget) + p.lambda) /
                 std::log(1.0 + p.t_trig / 4.0);
  p.k_max = std::max<long long>(
      1, std::min<long long>(static_cast<long long>(std::ceil(k_max)), p.data_budget));
  const double W = p.radius;
  p.beta = 16.0 * (W + H) *
           std::sqrt(p.lambda + d * std::log(32.0 * W * (W + H)) +
                     4.0 * std::log(8.0 * static_cast<double>(p.k_max) * H / delta));
  return p;
}

MixtureMarkovPolicy deterministic_to_mixture(const DeterministicPolicy& policy,
                                             const std::vector<int>& action_counts) {
  int H = static_cast<int>(policy.action.size());
  int S = H > 0 ? static_cast<int>(policy.action[0].size()) : 0;
  MixtureMarkovPolicy pi(H, S, action_counts);
  std::vector<int> chosen(action_counts.size());
  for (int h = 0; h < H; ++h) {
    for (int s = 0; s < S; ++s) {
      chosen[0] = policy.action[h][s];
      pi.set_single(h, s, ProductPolicyLayer::deterministic(action_counts, chosen));
    }
  }
  return pi;
}

LinearMdpResult solve_linear_mdp(const LinearGameEnv& env, const LinearMdpParams& params,
                                 std::uint64_t seed) {
  const TabularMarkovGame& game = env.game;
  if (game.num_players() != 1)
    throw std::invalid_argument("solve_linear_mdp: environment must be single-player");
  if (env.features.num_states() != game.num_states ||
      env.features.action_counts() != game.actions.counts())
    throw std::invalid_argument("solve_linear_mdp: feature dimensions mismatch");
  env.features.validate_norms();

  const int H = game.horizon;
  const int S = game.num_states;
  const int A = game.actions.count(0);
  const int d = env.features.dim(0);

  LinearMdpResult result;
  result.policy.action.assign(H, std::vector<int>(S, 0));

  std::vector<std::pair<DeterministicPolicy, long long>> cover;
  std::vector<double> cover_weights;
  long long total_repeats = 0;

  std::vector<std::vector<double>> v_upper(H + 1, std::vector<double>(S, 0.0));
  std::vector<std::vector<double>> v_lower(H + 1, std::vector<double>(S, 0.0));

  double best_bound = std::numeric_limits<double>::infinity();

  for (long long k = 1; k <= params.k_max; ++k) {
    for (auto& row : v_upper) std::fill(row.begin(), row.end(), 0.0);
    for (auto& row : v_lower) std::fill(row.begin(), row.end(), 0.0);
    DeterministicPolicy greedy;
    greedy.action.assign(H, std::vector<int>(S, 0));
    std::vector<CovarianceAccumulator> cov_by_step;
    cov_by_step.reserve(H);

    for (int h = H - 1; h >= 0; --h) {
      LeastSquaresAccumulator upper(d);
      LeastSquaresAccumulator lower(d);
      CovarianceAccumulator cov(d, params.lambda);
      for (long long l = 0; l < total_repeats; ++l) {
        std::uint64_t rollout_seed = derive_seed(seed, 11, k, h, l);
        Rng pick(derive_seed(rollout_seed, 0));
        const auto& chosen = cover[pick.categorical(cover_weights)];
        MixtureMarkovPolicy pi = deterministic_to_mixture(chosen.first, game.actions.counts());
        Trajectory traj = sample_trajectory(game, pi, H, derive_seed(rollout_seed, 1));
        ++result.trajectories;
        const TrajectoryStep& step = traj.steps[h];
        auto phi = env.features.at(0, step.state, step.actions[0]);
        cov.add(phi);
        upper.add(phi, step.rewards[0] + v_upper[h + 1][step.next_state]);
        lower.add(phi, step.rewards[0] + v_lower[h + 1][step.next_state]);
      }
      RegressionFit fit_up = fit_constrained_ls(upper, params.radius);
      RegressionFit fit_low = fit_constrained_ls(lower, params.radius);
      for (int s = 0; s < S; ++s) {
        double best_q = -1.0;
        int best_a = 0;
        for (int a = 0; a < A; ++a) {
          auto phi = env.features.at(0, s, a);
          double width = params.beta * cov.bonus(phi);
          double q = clip_q(fit_up.dot(phi) + width, h + 1, H);
          if (q > best_q) {
            best_q = q;
            best_a = a;
          }
        }
        greedy.action[h][s] = best_a;
        v_upper[h][s] = best_q;
        auto phi = env.features.at(0, s, best_a);
        v_lower[h][s] =
            clip_q(fit_low.dot(phi) - params.beta * cov.bonus(phi), h + 1, H);
      }
      cov_by_step.push_back(cov);  // stored in reverse step order
    }
    std::reverse(cov_by_step.begin(), cov_by_step.end());

    LinearMdpEpisode diag;
    diag.episode = k;
    diag.v_upper = v_upper[0][game.initial_state];
    diag.v_lower = v_lower[0][game.initial_state];
    diag.bound = diag.v_upper - diag.v_lower;
    if (diag.bound < best_bound) {
      best_bound = diag.bound;
      result.policy = greedy;
      result.output_episode = k;
    }

    if (total_repeats == params.data_budget) {
      result.episodes.push_back(diag);
      result.budget_reached = true;
      break;
    }

    MixtureMarkovPolicy rollout_policy = deterministic_to_mixture(greedy, game.actions.counts());
    std::vector<double> trigger(H, 0.0);
    long long repeats = 0;
    bool fired = false;
    while (!fired && total_repeats < params.data_budget) {
      ++repeats;
      ++total_repeats;
      Trajectory traj =
          sample_trajectory(game, rollout_policy, H, derive_seed(seed, 12, k, repeats));
      ++result.trajectories;
      for (int h = 0; h < H; ++h) {
        const TrajectoryStep& step = traj.steps[h];
        auto phi = env.features.at(0, step.state, step.actions[0]);
        double b = cov_by_step[h].bonus(phi);
        trigger[h] += b * b;
        if (trigger[h] >= params.t_trig) fired = true;
      }
    }
    cover.emplace_back(greedy, repeats);
    cover_weights.push_back(static_cast<double>(repeats));
    diag.repeats = repeats;
    result.episodes.push_back(diag);
  }
  result.certified_bound = best_bound;
  return result;
}

}  // namespace mgeq
