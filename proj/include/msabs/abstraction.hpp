#pragma once

#include <map>
#include <memory>
#include <optional>
#include <random>
#include <shared_mutex>
#include <string>
#include <vector>

#include "msabs/pipeline.hpp"

namespace msabs {

/// Outcome of the successor rule for one agent and one cell configuration.
struct TransitionInfo {
  Vec reference;         // x_{l_i,G}
  Vec chi_end;           // chi_i(dt)
  double radius = 0.0;   // r_i - r_slack, the radius used for intersection
  std::vector<CellId> extended;  // successor cells in the extended cover
  std::vector<CellId> post;      // restriction to the state set
};

/// Successor rule: cells meeting B(chi_i(dt); r_i - r_slack). Throws
/// kPrecondition when the own cell is not marked (no outgoing transitions).
TransitionInfo successors(const Engine& engine, const CellConfiguration& cfg);

/// TS_i with transitions materialized on demand and memoized. Safe for
/// concurrent use.
class IndividualTransitionSystem {
 public:
  IndividualTransitionSystem(const Engine& engine, std::size_t agent);

  std::size_t agent() const { return agent_; }
  /// Cells containing x0 (a singleton since x0 is a cell center).
  std::vector<CellId> initial_states() const;
  const TransitionInfo& transition(const CellConfiguration& cfg) const;
  /// Snapshot of every materialized transition, ordered by configuration.
  std::vector<std::pair<CellConfiguration, TransitionInfo>> materialized() const;

 private:
  const Engine* engine_;
  std::size_t agent_;
  mutable std::shared_mutex mutex_;
  mutable std::map<CellConfiguration, std::unique_ptr<TransitionInfo>> memo_;
};

using Path = std::vector<GlobalConfiguration>;

struct LayerResult {
  std::vector<std::vector<GlobalConfiguration>> layers;  // each sorted
  /// parents[k][m]: index in layers[k-1] of one predecessor of layers[k][m].
  std::vector<std::vector<std::size_t>> parents;
  bool truncated = false;
  std::string diagnostic;

  std::vector<std::size_t> sizes() const;
};

/// TS^P = TS_1 x ... x TS_N with the single action "*".
class ProductTransitionSystem {
 public:
  explicit ProductTransitionSystem(const Engine& engine);

  const Engine& engine() const { return *engine_; }
  const IndividualTransitionSystem& agent(std::size_t i) const { return *agents_.at(i); }
  std::size_t size() const { return agents_.size(); }

  /// Q0 = Q_10 x ... x Q_N0.
  std::vector<GlobalConfiguration> initial_states() const;
  /// Post_i(l_i; pr_i(l)) for every agent.
  std::vector<std::vector<CellId>> factors(const GlobalConfiguration& config) const;
  /// P(l): Cartesian product of the factors, sorted; empty if any factor is.
  std::vector<GlobalConfiguration> post(const GlobalConfiguration& config) const;
  bool is_transition(const GlobalConfiguration& from, const GlobalConfiguration& to) const;

  /// Layers P^0(Q0) ... P^depth(Q0), stopping early past layer_cap.
  LayerResult build_layers(int depth) const;

  /// Random walk from the initial configuration choosing each agent's
  /// successor uniformly.
  Path sample_path(int length, std::mt19937_64& rng) const;

 private:
  const Engine* engine_;
  std::vector<std::unique_ptr<IndividualTransitionSystem>> agents_;
};

/// Follows parent links from layers[layer][index] back to P^0.
Path reconstruct_path(const LayerResult& layers, std::size_t layer, std::size_t index);

/// Cartesian product of per-agent choices, in lexicographic order.
std::vector<GlobalConfiguration> cartesian_product(
    const std::vector<std::vector<CellId>>& factors);

}  // namespace msabs
