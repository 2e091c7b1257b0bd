#include "mgeq/prefi.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <memory>
#include <stdexcept>

#include "mgeq/regression.hpp"
#include "mgeq/regret.hpp"

namespace mgeq {

EnvDims EnvDims::of(const LinearGameEnv& env) {
  EnvDims dims;
  dims.horizon = env.game.horizon;
  dims.states = env.game.num_states;
  dims.players = env.game.num_players();
  dims.a_max = *std::max_element(env.game.actions.counts().begin(),
                                 env.game.actions.counts().end());
  dims.d_max = env.features.d_max();
  return dims;
}

PrefiParams default_prefi_params(double epsilon, double delta, const EnvDims& dims,
                                 EquilibriumMode mode, CoverMode cover, double t_mult,
                                 double n_mult) {
  if (!(epsilon > 0.0 && epsilon < 1.0) || !(delta > 0.0 && delta < 1.0))
    throw std::invalid_argument("default_prefi_params: epsilon, delta must lie in (0,1)");
  PrefiParams p;
  p.epsilon = epsilon;
  p.delta = delta;
  p.mode = mode;
  p.cover = cover;
  const double H = dims.horizon;
  const double d = dims.d_max;
  const double m = dims.players;
  const double lnA = std::log(std::max(2.0, static_cast<double>(dims.a_max)));

  double T = t_mult * std::pow(H, 4) * lnA / (epsilon * epsilon);
  if (mode == EquilibriumMode::kCe) T *= dims.a_max;
  p.inner_rounds = std::max<long long>(1, static_cast<long long>(std::ceil(T)));

  double N = n_mult * m * m * std::pow(H, 4) * d * d / (epsilon * epsilon);
  p.data_budget = std::max<long long>(1, static_cast<long long>(std::ceil(N)));

  p.radius = H * std::sqrt(d);
  p.lambda = 2.0 * std::log(16.0 * d * m * static_cast<double>(p.data_budget) * H *
                            static_cast<double>(p.inner_rounds) / delta) /
             std::log(36.0 / 35.0);
  p.t_trig = 64.0 * std::log(8.0 * m * H * static_cast<double>(p.data_budget) *
                             static_cast<double>(p.data_budget) / delta);
  double k_max = 2.0 * H * m * d * std::log(static_cast<double>(p.data_budget) + p.lambda) /
                 std::log(1.0 + p.t_trig / 4.0);
  p.k_max = std::max<long long>(
      1, std::min<long long>(static_cast<long long>(std::ceil(k_max)), p.data_budget));
  const double W = p.radius;
  p.beta = 16.0 * (W + H) *
           std::sqrt(p.lambda +
                     d * std::log(32.0 * W * static_cast<double>(p.data_budget) * (W + H)) +
                     4.0 * std::log(8.0 * m * static_cast<double>(p.k_max) * H *
                                    static_cast<double>(p.inner_rounds) / delta));
  if (cover == CoverMode::kAgile) {
    // Appendix-C budget: K episodes, one cover entry per episode.
    double K = n_mult * m * m * std::pow(H, 4) * d * d / (epsilon * epsilon);
    p.k_max = std::max<long long>(1, static_cast<long long>(std::ceil(K)));
    p.data_budget = p.k_max;
  }
  return p;
}

namespace {

struct CoverEntry {
  MixtureMarkovPolicy policy;
  long long repeats;
};

// Per-(player, state) current-round distributions for one step h.
using RoundPolicies = std::vector<std::vector<std::vector<double>>>;  // [i][s][a]

struct CollectResult {
  LeastSquaresAccumulator upper;
  LeastSquaresAccumulator lower;
  CovarianceAccumulator cov;
  long long rollouts = 0;
};

class PrefiRun {
 public:
  PrefiRun(const LinearGameEnv& env, const PrefiParams& params, std::uint64_t seed,
           const PrefiEpisodeSink& sink)
      : env_(env), params_(params), seed_(seed), sink_(sink) {}

  PrefiResult run();

 private:
  const TabularMarkovGame& game() const { return env_.game; }
  double regret_term(int player) const;
  CollectResult collect(int player, long long k, int h, long long t,
                        const RoundPolicies& current,
                        const std::vector<double>& v_next) const;

  const LinearGameEnv& env_;
  const PrefiParams& params_;
  std::uint64_t seed_;
  const PrefiEpisodeSink& sink_;

  std::vector<CoverEntry> cover_;
  long long total_repeats_ = 0;
  long long trajectories_ = 0;
};

double PrefiRun::regret_term(int player) const {
  const double B = game().actions.count(player);
  const double T = static_cast<double>(params_.inner_rounds);
  if (B <= 1.0) return 0.0;
  if (params_.mode == EquilibriumMode::kCce) {
    return params_.full_regret_const * std::sqrt(T * std::log(B));
  }
  return params_.swap_regret_const * std::sqrt(B * T * std::log(B));
}

// One (t, i) data pass: Sigma^{k,t}_{h,i}, constrained fits against both value
// targets. v_next holds r-target continuation values indexed [s * 2]: upper at
// even slots, lower at odd ones, so one rollout feeds both fits.
CollectResult PrefiRun::collect(int player, long long k, int h, long long t,
                                const RoundPolicies& current,
                                const std::vector<double>& v_next) const {
  const int S = game().num_states;
  const int m = game().num_players();
  const int d = env_.features.dim(player);
  CollectResult out{LeastSquaresAccumulator(d), LeastSquaresAccumulator(d),
                    CovarianceAccumulator(d, params_.lambda), 0};

  long long total = 0;
  if (params_.cover == CoverMode::kLazy) {
    for (const auto& entry : cover_) total += entry.repeats;
  } else {
    total = static_cast<long long>(cover_.size());
  }

  std::vector<double> cover_weights;
  if (params_.cover == CoverMode::kLazy && !cover_.empty()) {
    cover_weights.reserve(cover_.size());
    for (const auto& entry : cover_) {
      cover_weights.push_back(static_cast<double>(entry.repeats));
    }
  }

  std::vector<ProductPolicyLayer> layers(S);
  for (long long l = 0; l < total; ++l) {
    std::uint64_t rollout_seed = derive_seed(seed_, 1, k, h, t, player, l);
    const MixtureMarkovPolicy* cover_policy;
    if (params_.cover == CoverMode::kLazy) {
      Rng pick(derive_seed(rollout_seed, 0));
      cover_policy = &cover_[pick.categorical(cover_weights)].policy;
    } else {
      cover_policy = &cover_[l].policy;
    }
    // Switch layer at step h: player i keeps the cover policy's own marginal,
    // everyone else plays the current oracle round.
    for (int s = 0; s < S; ++s) {
      layers[s].dists.resize(m);
      for (int j = 0; j < m; ++j) {
        layers[s].dists[j] =
            (j == player) ? cover_policy->player_marginal(h, s, player) : current[j][s];
      }
    }
    Trajectory traj =
        concat_rollout(game(), *cover_policy, layers, h + 1, derive_seed(rollout_seed, 1));
    ++out.rollouts;
    const TrajectoryStep& step = traj.steps.back();
    auto phi = env_.features.at(player, step.state, step.actions[player]);
    out.cov.add(phi);
    double r = step.rewards[player];
    out.upper.add(phi, r + v_next[step.next_state * 2]);
    out.lower.add(phi, r + v_next[step.next_state * 2 + 1]);
  }
  return out;
}

PrefiResult PrefiRun::run() {
  env_.features.validate_norms();
  game().validate();
  if (env_.features.num_states() != game().num_states ||
      env_.features.action_counts() != game().actions.counts())
    throw std::invalid_argument("run_prefi: features and game disagree on dimensions");

  const int H = game().horizon;
  const int S = game().num_states;
  const int m = game().num_players();
  const bool agile = params_.cover == CoverMode::kAgile;
  const bool pessimistic = !agile;  // the agile variant tracks V-bar only
  const long long T = params_.inner_rounds;

  PrefiResult result;
  result.policy = MixtureMarkovPolicy::uniform(game());

  // v[h][(s, i)] upper/lower value tables; layer h = H is identically zero.
  auto table = [&](int) { return std::vector<double>(static_cast<std::size_t>(S) * m, 0.0); };
  std::vector<std::vector<double>> v_upper(H + 1, table(0));
  std::vector<std::vector<double>> v_lower(H + 1, table(0));

  double best_bound = std::numeric_limits<double>::infinity();
  long long best_episode = 0;
  MixtureMarkovPolicy best_policy = result.policy;

  for (long long k = 1; k <= params_.k_max; ++k) {
    for (auto& row : v_upper) std::fill(row.begin(), row.end(), 0.0);
    for (auto& row : v_lower) std::fill(row.begin(), row.end(), 0.0);

    MixtureMarkovPolicy episode_policy(H, S, game().actions.counts());
    // Saved t = 1 covariances drive the cover-phase triggers.
    std::vector<std::vector<CovarianceAccumulator>> cov_first(H);

    for (int h = H - 1; h >= 0; --h) {
      RoundPolicies current(m);
      std::vector<std::unique_ptr<RegretLearner>> learners(
          static_cast<std::size_t>(m) * S);
      RegretMode oracle_mode = params_.mode == EquilibriumMode::kCce ? RegretMode::kFullExternal
                                                                     : RegretMode::kFullSwap;
      for (int i = 0; i < m; ++i) {
        current[i].assign(S, std::vector<double>(game().actions.count(i),
                                                 1.0 / game().actions.count(i)));
        for (int s = 0; s < S; ++s) {
          learners[static_cast<std::size_t>(i) * S + s] = std::make_unique<RegretLearner>(
              game().actions.count(i), oracle_mode, T, derive_seed(seed_, 2, k, h, i, s));
        }
      }
      std::vector<std::vector<ProductPolicyLayer>> snapshots(
          T, std::vector<ProductPolicyLayer>(S));

      for (long long t = 1; t <= T; ++t) {
        for (int s = 0; s < S; ++s) {
          snapshots[t - 1][s].dists.resize(m);
          for (int i = 0; i < m; ++i) snapshots[t - 1][s].dists[i] = current[i][s];
        }
        std::vector<CollectResult> collected;
        collected.reserve(m);
        auto run_player = [&](int i) {
          std::vector<double> vn(static_cast<std::size_t>(S) * 2, 0.0);
          for (int s = 0; s < S; ++s) {
            vn[s * 2] = v_upper[h + 1][static_cast<std::size_t>(s) * m + i];
            vn[s * 2 + 1] = v_lower[h + 1][static_cast<std::size_t>(s) * m + i];
          }
          return collect(i, k, h, t, current, vn);
        };
        if (params_.parallel_collect && m > 1) {
          std::vector<std::future<CollectResult>> futures;
          futures.reserve(m);
          for (int i = 0; i < m; ++i) {
            futures.push_back(std::async(std::launch::async, run_player, i));
          }
          for (auto& f : futures) collected.push_back(f.get());
        } else {
          for (int i = 0; i < m; ++i) collected.push_back(run_player(i));
        }

        // Sequential coordinator: value averages and oracle updates.
        for (int i = 0; i < m; ++i) {
          trajectories_ += collected[i].rollouts;
          const int Ai = game().actions.count(i);
          RegressionFit fit_up = fit_constrained_ls(collected[i].upper, params_.radius);
          RegressionFit fit_low;
          if (pessimistic) fit_low = fit_constrained_ls(collected[i].lower, params_.radius);
          std::vector<double> loss(Ai);
          for (int s = 0; s < S; ++s) {
            double mean_up = 0.0;
            double mean_low = 0.0;
            for (int a = 0; a < Ai; ++a) {
              auto phi = env_.features.at(i, s, a);
              double width = params_.beta * collected[i].cov.bonus(phi);
              double q_up = clip_q(fit_up.dot(phi) + width, h + 1, H);
              loss[a] = 1.0 - q_up / H;
              mean_up += current[i][s][a] * q_up;
              if (pessimistic) {
                double q_low = clip_q(fit_low.dot(phi) - width, h + 1, H);
                mean_low += current[i][s][a] * q_low;
              }
            }
            double& vu = v_upper[h][static_cast<std::size_t>(s) * m + i];
            vu = (static_cast<double>(t - 1) / t) * vu + mean_up / t;
            if (pessimistic) {
              double& vl = v_lower[h][static_cast<std::size_t>(s) * m + i];
              vl = (static_cast<double>(t - 1) / t) * vl + mean_low / t;
            }
            learners[static_cast<std::size_t>(i) * S + s]->full_update(loss);
          }
        }
        for (int i = 0; i < m; ++i) {
          for (int s = 0; s < S; ++s) {
            current[i][s] = learners[static_cast<std::size_t>(i) * S + s]->distribution();
          }
        }
        if (t == 1) {
          cov_first[h].reserve(m);
          for (int i = 0; i < m; ++i) cov_first[h].push_back(collected[i].cov);
        }
      }

      for (int i = 0; i < m; ++i) {
        double reg = regret_term(i);
        for (int s = 0; s < S; ++s) {
          double& vu = v_upper[h][static_cast<std::size_t>(s) * m + i];
          vu = clip_q(vu + (static_cast<double>(H) / T) * reg, h + 1, H);
          if (pessimistic) {
            double& vl = v_lower[h][static_cast<std::size_t>(s) * m + i];
            vl = clip_q(vl, h + 1, H);
          }
        }
      }

      for (int s = 0; s < S; ++s) {
        auto& cell = episode_policy.at_mut(h, s);
        cell.reserve(T);
        for (long long t = 0; t < T; ++t) {
          cell.push_back({1.0 / T, std::move(snapshots[t][s])});
        }
      }
    }

    PrefiEpisode diag;
    diag.episode = k;
    const int s1 = game().initial_state;
    diag.v_upper.resize(m);
    for (int i = 0; i < m; ++i) diag.v_upper[i] = v_upper[0][static_cast<std::size_t>(s1) * m + i];
    if (pessimistic) {
      diag.v_lower.resize(m);
      double bound = 0.0;
      for (int i = 0; i < m; ++i) {
        diag.v_lower[i] = v_lower[0][static_cast<std::size_t>(s1) * m + i];
        bound = std::max(bound, diag.v_upper[i] - diag.v_lower[i]);
      }
      diag.bound = bound;
      if (bound < best_bound) {
        best_bound = bound;
        best_episode = k;
        best_policy = episode_policy;
      }
    }
    if (params_.keep_episode_policies) result.episode_policies.push_back(episode_policy);

    if (!agile && total_repeats_ == params_.data_budget) {
      diag.repeats = 0;
      diag.total_repeats = total_repeats_;
      diag.trajectories = trajectories_;
      result.episodes.push_back(diag);
      if (sink_) sink_(diag);
      result.budget_reached = true;
      break;
    }

    long long episode_repeats = 0;
    if (agile) {
      episode_repeats = 1;
      total_repeats_ += 1;
      cover_.push_back({episode_policy, 1});
    } else {
      // Cover update: roll the fresh policy until some (h, i) accumulates
      // T_Trig of episode-start uncertainty or the global budget is spent.
      std::vector<double> trigger(static_cast<std::size_t>(H) * m, 0.0);
      bool fired = false;
      while (!fired && total_repeats_ < params_.data_budget) {
        ++episode_repeats;
        ++total_repeats_;
        Trajectory traj = sample_trajectory(game(), episode_policy, H,
                                            derive_seed(seed_, 3, k, episode_repeats));
        ++trajectories_;
        for (int h = 0; h < H; ++h) {
          const TrajectoryStep& step = traj.steps[h];
          for (int i = 0; i < m; ++i) {
            auto phi = env_.features.at(i, step.state, step.actions[i]);
            double b = cov_first[h][i].bonus(phi);
            double& cnt = trigger[static_cast<std::size_t>(h) * m + i];
            cnt += b * b;
            if (cnt >= params_.t_trig) fired = true;
          }
        }
      }
      cover_.push_back({episode_policy, episode_repeats});
    }

    diag.repeats = episode_repeats;
    diag.total_repeats = total_repeats_;
    diag.trajectories = trajectories_;
    result.episodes.push_back(diag);
    if (sink_) sink_(diag);
  }

  result.trajectories = trajectories_;
  if (agile) {
    Rng pick(derive_seed(seed_, 4));
    long long k_out = 1 + static_cast<long long>(pick.next_u64() %
                                                 static_cast<std::uint64_t>(cover_.size()));
    result.policy = cover_[static_cast<std::size_t>(k_out - 1)].policy;
    result.output_episode = k_out;
    return result;
  }
  result.policy = best_policy;
  result.output_episode = best_episode;
  result.certified_bound = best_bound;
  return result;
}

}  // namespace

PrefiResult run_prefi(const LinearGameEnv& env, const PrefiParams& params, std::uint64_t seed,
                      const PrefiEpisodeSink& on_episode) {
  if (params.inner_rounds < 1 || params.k_max < 1 || params.data_budget < 1)
    throw std::invalid_argument("run_prefi: rounds, episodes and budget must be positive");
  PrefiRun runner(env, params, seed, on_episode);
  return runner.run();
}

}  // namespace mgeq
