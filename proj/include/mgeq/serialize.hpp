#pragma once

#include <nlohmann/json_fwd.hpp>
#include <string>

#include "mgeq/envs.hpp"
#include "mgeq/game.hpp"

namespace mgeq {

// Game document fields: horizon, players, states, action_counts, transition
// [h][s][joint][s'], mean_reward [h][i][s][joint], noise, initial_state.
// Joint actions are indexed mixed-radix with player 0 most significant.
nlohmann::json game_to_json(const TabularMarkovGame& game);
TabularMarkovGame game_from_json(const nlohmann::json& doc);

// Policy document: mixture components per (h, s).
nlohmann::json policy_to_json(const MixtureMarkovPolicy& policy);
MixtureMarkovPolicy policy_from_json(const nlohmann::json& doc);

nlohmann::json congestion_to_json(const CongestionGame& cg);
CongestionGame congestion_from_json(const nlohmann::json& doc);

// Environment documents carry a "type" tag: "tabular", "congestion", or
// "abstraction" (a base game plus the state map).
struct EnvDocument {
  std::string type;
  TabularMarkovGame game;          // tabular / abstraction base
  CongestionGame congestion;       // congestion only
  std::vector<int> abstraction;    // abstraction only
};
nlohmann::json env_to_json(const EnvDocument& env);
EnvDocument env_from_json(const nlohmann::json& doc);

void write_json_file(const std::string& path, const nlohmann::json& doc);
nlohmann::json read_json_file(const std::string& path);

}  // namespace mgeq
