#include "mgeq/value.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mgeq {

namespace {

constexpr double kGapFloor = -1e-9;

void check_enumeration_cap(const TabularMarkovGame& game, const EvalOptions& opts) {
  long long cells = static_cast<long long>(game.horizon) * game.num_states *
                    game.num_joint_actions();
  if (cells > opts.enumeration_cap)
    throw std::invalid_argument("joint-action enumeration exceeds configured cap");
}

// CE and Nash gaps are nonnegative by construction (the identity modification
// and the product-policy best response embed the policy itself), so anything
// below the floor flags an evaluator bug. CCE gaps of correlated mixtures can
// be genuinely negative: correlation may beat every unilateral deviation.
double clamp_gap(double g, bool assert_floor) {
  if (assert_floor && g < kGapFloor)
    throw std::logic_error("gap below numerical floor; evaluator inconsistency");
  return std::max(g, 0.0);
}

}  // namespace

ValueTable ValueTable::zeros(int horizon, int num_states, int num_players) {
  ValueTable t;
  t.horizon = horizon;
  t.num_states = num_states;
  t.num_players = num_players;
  t.values.assign(static_cast<std::size_t>(horizon + 1) * num_states * num_players, 0.0);
  return t;
}

ValueTable evaluate_value(const TabularMarkovGame& game, const MixtureMarkovPolicy& policy,
                          const EvalOptions& opts) {
  check_enumeration_cap(game, opts);
  const int H = game.horizon;
  const int S = game.num_states;
  const int m = game.num_players();
  const long long A = game.num_joint_actions();
  ValueTable v = ValueTable::zeros(H, S, m);
  std::vector<int> profile;
  for (int h = H - 1; h >= 0; --h) {
    for (int s = 0; s < S; ++s) {
      for (const auto& comp : policy.at(h, s)) {
        for (long long a = 0; a < A; ++a) {
          game.actions.decode(a, &profile);
          double p = comp.weight;
          for (int i = 0; i < m; ++i) p *= comp.layer.dists[i][profile[i]];
          if (p == 0.0) continue;
          auto row = game.transition_row(h, s, a);
          for (int i = 0; i < m; ++i) {
            double q = game.reward(h, i, s, a);
            for (int next = 0; next < S; ++next) {
              if (row[next] != 0.0) q += row[next] * v.at(h + 1, next, i);
            }
            v.at_mut(h, s, i) += p * q;
          }
        }
      }
    }
  }
  return v;
}

BestResponse best_response_value(const TabularMarkovGame& game, const MixtureMarkovPolicy& policy,
                                 int player, const EvalOptions& opts) {
  check_enumeration_cap(game, opts);
  const int H = game.horizon;
  const int S = game.num_states;
  const int m = game.num_players();
  const int Ai = game.actions.count(player);
  BestResponse br;
  br.value = ValueTable::zeros(H, S, 1);
  br.policy.action.assign(H, std::vector<int>(S, 0));
  std::vector<int> profile(m, 0);
  for (int h = H - 1; h >= 0; --h) {
    for (int s = 0; s < S; ++s) {
      std::vector<double> opp = policy.opponent_marginal(h, s, player);
      std::vector<double> q(Ai, 0.0);
      // Enumerate opponent profiles once; accumulate Q(a_i) for all deviations.
      long long opp_size = static_cast<long long>(opp.size());
      for (long long idx = 0; idx < opp_size; ++idx) {
        if (opp[idx] == 0.0) continue;
        long long rest = idx;
        for (int i = m - 1; i >= 0; --i) {
          if (i == player) {
            profile[i] = 0;
            continue;
          }
          profile[i] = static_cast<int>(rest % game.actions.count(i));
          rest /= game.actions.count(i);
        }
        for (int ai = 0; ai < Ai; ++ai) {
          profile[player] = ai;
          long long joint = game.actions.index(profile);
          double val = game.reward(h, player, s, joint);
          auto row = game.transition_row(h, s, joint);
          for (int next = 0; next < S; ++next) {
            if (row[next] != 0.0) val += row[next] * br.value.at(h + 1, next, 0);
          }
          q[ai] += opp[idx] * val;
        }
      }
      int best = 0;
      for (int ai = 1; ai < Ai; ++ai) {
        if (q[ai] > q[best]) best = ai;
      }
      br.policy.action[h][s] = best;
      br.value.at_mut(h, s, 0) = q[best];
    }
  }
  return br;
}

BestModification best_modification_value(const TabularMarkovGame& game,
                                         const MixtureMarkovPolicy& policy, int player,
                                         const EvalOptions& opts) {
  check_enumeration_cap(game, opts);
  const int H = game.horizon;
  const int S = game.num_states;
  const int m = game.num_players();
  const int Ai = game.actions.count(player);
  BestModification bm;
  bm.value = ValueTable::zeros(H, S, 1);
  bm.modification = StrategyModification::identity(H, S, Ai, player);
  std::vector<int> profile;
  for (int h = H - 1; h >= 0; --h) {
    for (int s = 0; s < S; ++s) {
      std::vector<double> joint = policy.joint_table(h, s);
      // g[a_i][a_i'] accumulates the unnormalized conditional continuation:
      // sum over a_{-i} of pi(a_i, a_{-i}) * [R + P V] with a_i replaced by a_i'.
      std::vector<std::vector<double>> g(Ai, std::vector<double>(Ai, 0.0));
      std::vector<double> marginal(Ai, 0.0);
      for (long long a = 0; a < game.num_joint_actions(); ++a) {
        double mass = joint[a];
        if (mass == 0.0) continue;
        int rec = game.actions.action_of(a, player);
        marginal[rec] += mass;
        for (int sub = 0; sub < Ai; ++sub) {
          long long swapped = game.actions.replace(a, player, sub);
          double val = game.reward(h, player, s, swapped);
          auto row = game.transition_row(h, s, swapped);
          for (int next = 0; next < S; ++next) {
            if (row[next] != 0.0) val += row[next] * bm.value.at(h + 1, next, 0);
          }
          g[rec][sub] += mass * val;
        }
      }
      double total = 0.0;
      for (int rec = 0; rec < Ai; ++rec) {
        if (marginal[rec] == 0.0) {
          bm.modification.replacement[h][s][rec] = rec;
          continue;
        }
        int best = 0;
        for (int sub = 1; sub < Ai; ++sub) {
          if (g[rec][sub] > g[rec][best]) best = sub;
        }
        bm.modification.replacement[h][s][rec] = best;
        total += g[rec][best];
      }
      bm.value.at_mut(h, s, 0) = total;
    }
  }
  return bm;
}

MixtureMarkovPolicy apply_modification(const MixtureMarkovPolicy& policy,
                                       const StrategyModification& mod) {
  MixtureMarkovPolicy out(policy.horizon(), policy.num_states(), policy.action_counts());
  const int player = mod.player;
  for (int h = 0; h < policy.horizon(); ++h) {
    for (int s = 0; s < policy.num_states(); ++s) {
      auto& cell = out.at_mut(h, s);
      cell = policy.at(h, s);
      for (auto& comp : cell) {
        const std::vector<double> original = comp.layer.dists[player];
        std::vector<double>& remapped = comp.layer.dists[player];
        std::fill(remapped.begin(), remapped.end(), 0.0);
        for (std::size_t a = 0; a < original.size(); ++a) {
          remapped[mod.replacement[h][s][a]] += original[a];
        }
      }
    }
  }
  return out;
}

GapReport cce_gap(const TabularMarkovGame& game, const MixtureMarkovPolicy& policy,
                  const EvalOptions& opts) {
  ValueTable v = evaluate_value(game, policy, opts);
  GapReport report;
  report.per_player.resize(game.num_players());
  bool product = true;
  for (int h = 0; h < policy.horizon() && product; ++h) {
    for (int s = 0; s < policy.num_states(); ++s) {
      if (policy.at(h, s).size() != 1) {
        product = false;
        break;
      }
    }
  }
  for (int i = 0; i < game.num_players(); ++i) {
    BestResponse br = best_response_value(game, policy, i, opts);
    report.per_player[i] = clamp_gap(
        br.value.at(0, game.initial_state, 0) - v.at(0, game.initial_state, i), product);
  }
  report.max_gap = *std::max_element(report.per_player.begin(), report.per_player.end());
  return report;
}

GapReport ce_gap(const TabularMarkovGame& game, const MixtureMarkovPolicy& policy,
                 const EvalOptions& opts) {
  ValueTable v = evaluate_value(game, policy, opts);
  GapReport report;
  report.per_player.resize(game.num_players());
  for (int i = 0; i < game.num_players(); ++i) {
    BestModification bm = best_modification_value(game, policy, i, opts);
    report.per_player[i] = clamp_gap(
        bm.value.at(0, game.initial_state, 0) - v.at(0, game.initial_state, i), true);
  }
  report.max_gap = *std::max_element(report.per_player.begin(), report.per_player.end());
  return report;
}

GapReport nash_gap(const TabularMarkovGame& game, const MixtureMarkovPolicy& policy,
                   const EvalOptions& opts) {
  for (int h = 0; h < policy.horizon(); ++h) {
    for (int s = 0; s < policy.num_states(); ++s) {
      if (policy.at(h, s).size() != 1)
        throw std::invalid_argument("nash_gap requires a product policy");
    }
  }
  return cce_gap(game, policy, opts);
}

std::vector<DeterministicProductPolicy> brute_force_pure_nash(const TabularMarkovGame& game,
                                                              const PureNashOptions& opts) {
  const int H = game.horizon;
  const int S = game.num_states;
  const int m = game.num_players();
  // One decision cell per (player, h, s); enumerate the product space.
  std::vector<int> cell_counts;
  cell_counts.reserve(static_cast<std::size_t>(m) * H * S);
  for (int i = 0; i < m; ++i) {
    for (int h = 0; h < H; ++h) {
      for (int s = 0; s < S; ++s) cell_counts.push_back(game.actions.count(i));
    }
  }
  double log_total = 0.0;
  for (int c : cell_counts) log_total += std::log(static_cast<double>(c));
  if (log_total > std::log(static_cast<double>(opts.policy_cap)))
    throw std::invalid_argument("brute_force_pure_nash: policy space exceeds cap");

  std::vector<DeterministicProductPolicy> equilibria;
  std::vector<int> digits(cell_counts.size(), 0);
  EvalOptions eval_opts;
  while (true) {
    DeterministicProductPolicy pi;
    pi.action.assign(H, std::vector<std::vector<int>>(S, std::vector<int>(m, 0)));
    std::size_t idx = 0;
    for (int i = 0; i < m; ++i) {
      for (int h = 0; h < H; ++h) {
        for (int s = 0; s < S; ++s) pi.action[h][s][i] = digits[idx++];
      }
    }
    GapReport gap = nash_gap(game, pi.to_mixture(game.actions.counts()), eval_opts);
    if (gap.max_gap <= opts.tolerance) equilibria.push_back(std::move(pi));

    int pos = static_cast<int>(digits.size()) - 1;
    while (pos >= 0) {
      if (++digits[pos] < cell_counts[pos]) break;
      digits[pos] = 0;
      --pos;
    }
    if (pos < 0) break;
  }
  return equilibria;
}

}  // namespace mgeq
