#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "msabs/scenario.hpp"

namespace msabs::fixtures {

inline nlohmann::json agent_doc(int id, int n, const nlohmann::json& x0,
                                const nlohmann::json& dynamics, double L1, double L2,
                                double v_max = 1.0, double lambda = 0.5) {
  return {{"id", id}, {"n", n},   {"v_max", v_max}, {"lambda", lambda},
          {"L1", L1}, {"L2", L2}, {"x0", x0},       {"dynamics", dynamics}};
}

/// One decoupled agent with f = 0.
inline nlohmann::json decoupled_doc(int n, double horizon,
                                    std::optional<int> steps = std::nullopt,
                                    std::optional<double> d_max = std::nullopt) {
  nlohmann::json x0 = nlohmann::json::array();
  for (int k = 0; k < n; ++k) x0.push_back(0.0);
  nlohmann::json a = agent_doc(1, n, x0, "zero", 0.0, 0.0);
  if (d_max) a["d_max"] = *d_max;
  nlohmann::json doc = {{"horizon", horizon}, {"agents", {a}}};
  if (steps) doc["steps"] = *steps;
  return doc;
}

/// Two agents in 2D coupled by f_i = x_j - x_i.
inline nlohmann::json consensus_pair_doc(double horizon = 0.2) {
  const nlohmann::json c = {{"type", "consensus"}, {"gain", 1.0}};
  return {{"horizon", horizon},
          {"agents",
           {agent_doc(1, 2, {0.0, 0.0}, c, 1.0, 1.0), agent_doc(2, 2, {0.5, 0.2}, c, 1.0, 1.0)}},
          {"edges", {{{"from", 2}, {"to", 1}, {"mu", 1.0}}, {{"from", 1}, {"to", 2}, {"mu", 1.0}}}},
          {"numerics", {{"seed", 7}}}};
}

/// Agent 1 drifts freely, 2 follows 1, 3 follows 2.
inline nlohmann::json chain_doc(double horizon = 0.2) {
  const nlohmann::json c = {{"type", "consensus"}, {"gain", 1.0}};
  return {{"horizon", horizon},
          {"agents",
           {agent_doc(1, 2, {0.0, 0.0}, "zero", 0.0, 0.0), agent_doc(2, 2, {0.4, 0.0}, c, 1.0, 1.0),
            agent_doc(3, 2, {0.8, 0.1}, c, 1.0, 1.0)}},
          {"edges", {{{"from", 1}, {"to", 2}, {"mu", 1.0}}, {{"from", 2}, {"to", 3}, {"mu", 1.0}}}},
          {"numerics", {{"seed", 11}}}};
}

}  // namespace msabs::fixtures
