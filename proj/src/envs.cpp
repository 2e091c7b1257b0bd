#include "mgeq/envs.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mgeq {

FeatureMap::FeatureMap(int num_states, std::vector<int> action_counts, std::vector<int> dims)
    : num_states_(num_states), action_counts_(std::move(action_counts)), dims_(std::move(dims)) {
  if (action_counts_.size() != dims_.size())
    throw std::invalid_argument("FeatureMap: player count mismatch");
  tables_.resize(dims_.size());
  for (std::size_t i = 0; i < dims_.size(); ++i) {
    tables_[i].assign(static_cast<std::size_t>(num_states_) * action_counts_[i] * dims_[i], 0.0);
  }
}

int FeatureMap::d_max() const {
  int d = 0;
  for (int di : dims_) d = std::max(d, di);
  return d;
}

void FeatureMap::validate_norms() const {
  for (int i = 0; i < num_players(); ++i) {
    for (int s = 0; s < num_states_; ++s) {
      for (int a = 0; a < action_counts_[i]; ++a) {
        double sq = 0.0;
        for (double x : at(i, s, a)) sq += x * x;
        if (sq > 1.0 + 1e-9)
          throw std::invalid_argument("FeatureMap: feature norm exceeds 1");
      }
    }
  }
}

FeatureMap tabular_features(const TabularMarkovGame& game) {
  std::vector<int> dims;
  dims.reserve(game.num_players());
  for (int i = 0; i < game.num_players(); ++i) {
    dims.push_back(game.num_states * game.actions.count(i));
  }
  FeatureMap map(game.num_states, game.actions.counts(), dims);
  for (int i = 0; i < game.num_players(); ++i) {
    for (int s = 0; s < game.num_states; ++s) {
      for (int a = 0; a < game.actions.count(i); ++a) {
        map.at_mut(i, s, a)[s * game.actions.count(i) + a] = 1.0;
      }
    }
  }
  map.validate_norms();
  return map;
}

void CongestionGame::validate() const {
  if (num_facilities <= 0) throw std::invalid_argument("congestion game: no facilities");
  if (actions.empty()) throw std::invalid_argument("congestion game: no players");
  const double cap = 1.0 / num_facilities;
  if (facility_reward.size() != static_cast<std::size_t>(num_facilities))
    throw std::invalid_argument("congestion game: reward table shape mismatch");
  for (const auto& per_load : facility_reward) {
    if (per_load.size() != actions.size())
      throw std::invalid_argument("congestion game: reward table must cover loads 1..m");
    for (double r : per_load) {
      if (r < 0.0 || r > cap + 1e-12)
        throw std::invalid_argument("congestion game: facility reward outside [0, 1/F]");
    }
  }
  for (const auto& player_actions : actions) {
    if (player_actions.empty()) throw std::invalid_argument("congestion game: empty action set");
    for (const auto& subset : player_actions) {
      if (subset.empty())
        throw std::invalid_argument("congestion game: action must use at least one facility");
      for (int f : subset) {
        if (f < 0 || f >= num_facilities)
          throw std::invalid_argument("congestion game: facility index out of range");
      }
    }
  }
}

std::vector<int> facility_loads(const CongestionGame& cg, std::span<const int> joint_action) {
  std::vector<int> loads(cg.num_facilities, 0);
  for (int i = 0; i < cg.num_players(); ++i) {
    for (int f : cg.actions[i][joint_action[i]]) loads[f] += 1;
  }
  return loads;
}

CongestionConversion congestion_to_markov_game(const CongestionGame& cg) {
  cg.validate();
  const int m = cg.num_players();
  const int F = cg.num_facilities;
  std::vector<int> action_counts(m);
  for (int i = 0; i < m; ++i) action_counts[i] = static_cast<int>(cg.actions[i].size());

  CongestionConversion out;
  out.game = TabularMarkovGame::zeros(1, 1, action_counts, 0, cg.noise);
  const long long A = out.game.num_joint_actions();
  if (A > 10'000'000) throw std::invalid_argument("congestion conversion: joint space exceeds cap");
  std::vector<int> profile;
  for (long long a = 0; a < A; ++a) {
    out.game.actions.decode(a, &profile);
    std::vector<int> loads = facility_loads(cg, profile);
    for (int i = 0; i < m; ++i) {
      double r = 0.0;
      for (int f : cg.actions[i][profile[i]]) r += cg.facility_reward[f][loads[f] - 1];
      out.game.reward_mut(0, i, 0, a) = r;
    }
    out.game.transition_mut(0, 0, a, 0) = 1.0;
  }
  out.game.validate();

  out.feature_scale = std::sqrt(static_cast<double>(F));
  out.radius = static_cast<double>(F);
  std::vector<int> dims(m, F);
  out.features = FeatureMap(1, action_counts, dims);
  for (int i = 0; i < m; ++i) {
    for (int a = 0; a < action_counts[i]; ++a) {
      auto phi = out.features.at_mut(i, 0, a);
      for (int f : cg.actions[i][a]) phi[f] = 1.0 / out.feature_scale;
    }
  }
  out.features.validate_norms();
  return out;
}

double rosenthal_potential(const CongestionGame& cg, std::span<const int> joint_action) {
  std::vector<int> loads = facility_loads(cg, joint_action);
  double phi = 0.0;
  for (int f = 0; f < cg.num_facilities; ++f) {
    for (int n = 1; n <= loads[f]; ++n) phi += cg.facility_reward[f][n - 1];
  }
  return phi;
}

double AbstractionEnv::max_epsilon() const {
  double e = 0.0;
  for (double x : epsilon) e = std::max(e, x);
  return e;
}

AbstractionEnv abstraction_env(const TabularMarkovGame& base, std::vector<int> psi) {
  if (psi.size() != static_cast<std::size_t>(base.num_states))
    throw std::invalid_argument("abstraction: psi must be total over states");
  int Z = 0;
  for (int z : psi) {
    if (z < 0) throw std::invalid_argument("abstraction: negative class index");
    Z = std::max(Z, z + 1);
  }

  AbstractionEnv env;
  env.game = base;
  env.psi = std::move(psi);
  env.num_abstract = Z;

  const int m = base.num_players();
  std::vector<int> dims(m);
  for (int i = 0; i < m; ++i) dims[i] = Z * base.actions.count(i);
  env.features = FeatureMap(base.num_states, base.actions.counts(), dims);
  for (int i = 0; i < m; ++i) {
    for (int s = 0; s < base.num_states; ++s) {
      for (int a = 0; a < base.actions.count(i); ++a) {
        env.features.at_mut(i, s, a)[env.psi[s] * base.actions.count(i) + a] = 1.0;
      }
    }
  }
  env.features.validate_norms();

  // Exact abstraction error per (h, z): max over merged state pairs, players,
  // and joint actions of the reward gap and the L1 transition gap.
  env.epsilon.assign(static_cast<std::size_t>(base.horizon) * Z, 0.0);
  for (int h = 0; h < base.horizon; ++h) {
    for (int s = 0; s < base.num_states; ++s) {
      for (int t = s + 1; t < base.num_states; ++t) {
        if (env.psi[s] != env.psi[t]) continue;
        double& eps = env.epsilon[static_cast<std::size_t>(h) * Z + env.psi[s]];
        for (long long a = 0; a < base.num_joint_actions(); ++a) {
          for (int i = 0; i < m; ++i) {
            eps = std::max(eps, std::abs(base.reward(h, i, s, a) - base.reward(h, i, t, a)));
          }
          double l1 = 0.0;
          for (int next = 0; next < base.num_states; ++next) {
            l1 += std::abs(base.transition_prob(h, s, a, next) -
                           base.transition_prob(h, t, a, next));
          }
          eps = std::max(eps, l1);
        }
      }
    }
  }
  return env;
}

TabularMarkovGame random_game(std::uint64_t seed, int num_states, std::vector<int> action_counts,
                              int horizon, RewardNoise noise) {
  TabularMarkovGame g = TabularMarkovGame::zeros(horizon, num_states, action_counts, 0, noise);
  Rng rng(derive_seed(seed, 0x67616d65ULL));
  const long long A = g.num_joint_actions();
  for (int h = 0; h < horizon; ++h) {
    for (int s = 0; s < num_states; ++s) {
      for (long long a = 0; a < A; ++a) {
        double total = 0.0;
        std::vector<double> row(num_states);
        for (int next = 0; next < num_states; ++next) {
          row[next] = rng.exponential();
          total += row[next];
        }
        for (int next = 0; next < num_states; ++next) {
          g.transition_mut(h, s, a, next) = row[next] / total;
        }
        for (int i = 0; i < g.num_players(); ++i) {
          g.reward_mut(h, i, s, a) = rng.next_double();
        }
      }
    }
  }
  g.validate();
  return g;
}

TabularMarkovGame random_zero_sum_game(std::uint64_t seed, int num_states, int actions_p1,
                                       int actions_p2, int horizon, RewardNoise noise) {
  TabularMarkovGame g = random_game(seed, num_states, {actions_p1, actions_p2}, horizon, noise);
  for (int h = 0; h < horizon; ++h) {
    for (int s = 0; s < num_states; ++s) {
      for (long long a = 0; a < g.num_joint_actions(); ++a) {
        g.reward_mut(h, 1, s, a) = 1.0 - g.reward(h, 0, s, a);
      }
    }
  }
  g.validate();
  return g;
}

CongestionGame random_congestion_game(std::uint64_t seed, int num_players, int num_facilities,
                                      bool singleton_actions, RewardNoise noise,
                                      double min_margin) {
  CongestionGame cg;
  cg.num_facilities = num_facilities;
  cg.noise = noise;
  Rng rng(derive_seed(seed, 0x636f6e67ULL));
  const double cap = 1.0 / num_facilities;
  for (int attempt = 0;; ++attempt) {
    if (attempt > 10'000)
      throw std::invalid_argument("random_congestion_game: margin unattainable");
    cg.facility_reward.assign(num_facilities, {});
    std::vector<double> flat;
    for (int f = 0; f < num_facilities; ++f) {
      // Monotone nonincreasing in the load: sorted uniform draws.
      std::vector<double> vals(num_players);
      for (double& v : vals) v = rng.next_double() * cap;
      std::sort(vals.begin(), vals.end(), std::greater<>());
      flat.insert(flat.end(), vals.begin(), vals.end());
      cg.facility_reward[f] = std::move(vals);
    }
    if (min_margin <= 0.0) break;
    std::sort(flat.begin(), flat.end());
    bool separated = true;
    for (std::size_t j = 0; j + 1 < flat.size(); ++j) {
      if (flat[j + 1] - flat[j] < min_margin) separated = false;
    }
    if (separated) break;
  }
  cg.actions.resize(num_players);
  for (int i = 0; i < num_players; ++i) {
    if (singleton_actions) {
      for (int f = 0; f < num_facilities; ++f) cg.actions[i].push_back({f});
    } else {
      // All nonempty subsets.
      for (int mask = 1; mask < (1 << num_facilities); ++mask) {
        std::vector<int> subset;
        for (int f = 0; f < num_facilities; ++f) {
          if (mask & (1 << f)) subset.push_back(f);
        }
        cg.actions[i].push_back(std::move(subset));
      }
    }
  }
  cg.validate();
  return cg;
}

}  // namespace mgeq
