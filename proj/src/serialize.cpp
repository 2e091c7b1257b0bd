#include "mgeq/serialize.hpp"

#include <fstream>
#include <nlohmann/json.hpp>
#include <stdexcept>

namespace mgeq {

using nlohmann::json;

namespace {

std::string noise_name(RewardNoise noise) {
  return noise == RewardNoise::kDeterministic ? "deterministic" : "bernoulli";
}

RewardNoise noise_from_name(const std::string& name) {
  if (name == "deterministic") return RewardNoise::kDeterministic;
  if (name == "bernoulli") return RewardNoise::kBernoulli;
  throw std::invalid_argument("unknown noise model: " + name);
}

}  // namespace

json game_to_json(const TabularMarkovGame& game) {
  json doc;
  doc["horizon"] = game.horizon;
  doc["players"] = game.num_players();
  doc["states"] = game.num_states;
  doc["action_counts"] = game.actions.counts();
  doc["initial_state"] = game.initial_state;
  doc["noise"] = noise_name(game.noise);
  json transition = json::array();
  json reward = json::array();
  const long long A = game.num_joint_actions();
  for (int h = 0; h < game.horizon; ++h) {
    json per_state = json::array();
    for (int s = 0; s < game.num_states; ++s) {
      json per_action = json::array();
      for (long long a = 0; a < A; ++a) {
        auto row = game.transition_row(h, s, a);
        per_action.push_back(std::vector<double>(row.begin(), row.end()));
      }
      per_state.push_back(std::move(per_action));
    }
    transition.push_back(std::move(per_state));

    json per_player = json::array();
    for (int i = 0; i < game.num_players(); ++i) {
      json state_rows = json::array();
      for (int s = 0; s < game.num_states; ++s) {
        std::vector<double> vals(A);
        for (long long a = 0; a < A; ++a) vals[a] = game.reward(h, i, s, a);
        state_rows.push_back(std::move(vals));
      }
      per_player.push_back(std::move(state_rows));
    }
    reward.push_back(std::move(per_player));
  }
  doc["transition"] = std::move(transition);
  doc["mean_reward"] = std::move(reward);
  return doc;
}

TabularMarkovGame game_from_json(const json& doc) {
  TabularMarkovGame game = TabularMarkovGame::zeros(
      doc.at("horizon").get<int>(), doc.at("states").get<int>(),
      doc.at("action_counts").get<std::vector<int>>(), doc.at("initial_state").get<int>(),
      noise_from_name(doc.at("noise").get<std::string>()));
  if (doc.at("players").get<int>() != game.num_players())
    throw std::invalid_argument("game document: players/action_counts mismatch");
  const auto& transition = doc.at("transition");
  const auto& reward = doc.at("mean_reward");
  const long long A = game.num_joint_actions();
  for (int h = 0; h < game.horizon; ++h) {
    for (int s = 0; s < game.num_states; ++s) {
      for (long long a = 0; a < A; ++a) {
        const auto& row = transition.at(h).at(s).at(a);
        for (int next = 0; next < game.num_states; ++next) {
          game.transition_mut(h, s, a, next) = row.at(next).get<double>();
        }
      }
    }
    for (int i = 0; i < game.num_players(); ++i) {
      for (int s = 0; s < game.num_states; ++s) {
        const auto& vals = reward.at(h).at(i).at(s);
        for (long long a = 0; a < A; ++a) {
          game.reward_mut(h, i, s, a) = vals.at(a).get<double>();
        }
      }
    }
  }
  game.validate();
  return game;
}

json policy_to_json(const MixtureMarkovPolicy& policy) {
  json doc;
  doc["horizon"] = policy.horizon();
  doc["states"] = policy.num_states();
  doc["players"] = policy.num_players();
  doc["action_counts"] = policy.action_counts();
  json cells = json::array();
  for (int h = 0; h < policy.horizon(); ++h) {
    json per_state = json::array();
    for (int s = 0; s < policy.num_states(); ++s) {
      json comps = json::array();
      for (const auto& comp : policy.at(h, s)) {
        json c;
        c["weight"] = comp.weight;
        c["dists"] = comp.layer.dists;
        comps.push_back(std::move(c));
      }
      per_state.push_back(std::move(comps));
    }
    cells.push_back(std::move(per_state));
  }
  doc["layers"] = std::move(cells);
  return doc;
}

MixtureMarkovPolicy policy_from_json(const json& doc) {
  MixtureMarkovPolicy policy(doc.at("horizon").get<int>(), doc.at("states").get<int>(),
                             doc.at("action_counts").get<std::vector<int>>());
  const auto& cells = doc.at("layers");
  for (int h = 0; h < policy.horizon(); ++h) {
    for (int s = 0; s < policy.num_states(); ++s) {
      auto& cell = policy.at_mut(h, s);
      for (const auto& c : cells.at(h).at(s)) {
        MixtureMarkovPolicy::Component comp;
        comp.weight = c.at("weight").get<double>();
        comp.layer.dists = c.at("dists").get<std::vector<std::vector<double>>>();
        cell.push_back(std::move(comp));
      }
    }
  }
  policy.validate();
  return policy;
}

json congestion_to_json(const CongestionGame& cg) {
  json doc;
  doc["facilities"] = cg.num_facilities;
  doc["players"] = cg.num_players();
  doc["actions"] = cg.actions;
  doc["facility_reward"] = cg.facility_reward;
  doc["noise"] = noise_name(cg.noise);
  return doc;
}

CongestionGame congestion_from_json(const json& doc) {
  CongestionGame cg;
  cg.num_facilities = doc.at("facilities").get<int>();
  cg.actions = doc.at("actions").get<std::vector<std::vector<std::vector<int>>>>();
  cg.facility_reward = doc.at("facility_reward").get<std::vector<std::vector<double>>>();
  cg.noise = noise_from_name(doc.at("noise").get<std::string>());
  cg.validate();
  return cg;
}

json env_to_json(const EnvDocument& env) {
  json doc;
  doc["type"] = env.type;
  if (env.type == "tabular") {
    doc["game"] = game_to_json(env.game);
  } else if (env.type == "congestion") {
    doc["congestion"] = congestion_to_json(env.congestion);
  } else if (env.type == "abstraction") {
    doc["game"] = game_to_json(env.game);
    doc["psi"] = env.abstraction;
  } else {
    throw std::invalid_argument("unknown environment type: " + env.type);
  }
  return doc;
}

EnvDocument env_from_json(const json& doc) {
  EnvDocument env;
  env.type = doc.at("type").get<std::string>();
  if (env.type == "tabular") {
    env.game = game_from_json(doc.at("game"));
  } else if (env.type == "congestion") {
    env.congestion = congestion_from_json(doc.at("congestion"));
  } else if (env.type == "abstraction") {
    env.game = game_from_json(doc.at("game"));
    env.abstraction = doc.at("psi").get<std::vector<int>>();
  } else {
    throw std::invalid_argument("unknown environment type: " + env.type);
  }
  return env;
}

void write_json_file(const std::string& path, const json& doc) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << doc.dump(2) << "\n";
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  json doc;
  in >> doc;
  return doc;
}

}  // namespace mgeq
