#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "msabs/abstraction.hpp"

namespace msabs {

/// Per-trial outcome of one consistency check.
struct ConsistencyTrial {
  std::uint64_t seed = 0;
  bool distance_ok = true;    // d(x_i(t), S_l) < (M + v_max) t
  bool landing_ok = true;     // x_i(dt) in the target cell
  bool controller_ok = true;  // |k_i(t)| < v_max
  double max_distance_excess = 0.0;  // max of d(x_i(t), S_l) - (M + v_max) t
  double landing_distance = 0.0;     // d(x_i(dt), target cell)
  double max_input = 0.0;            // max |k_i| over the nodes

  bool ok() const { return distance_ok && landing_ok && controller_ok; }
};

struct ConsistencyReport {
  std::size_t agent = 0;
  CellConfiguration configuration;
  CellId target = 0;
  Vec witness;
  std::vector<ConsistencyTrial> trials;

  bool ok() const;
  std::size_t violations() const;
  double max_input() const;
};

struct ConsistencyOptions {
  int trials = 100;
  std::uint64_t seed = 0;
  double endpoint_tolerance = 1e-6;
};

/// Samples x_i0 in the own cell and continuous neighbor disturbances, runs the
/// closed loop of agent i towards a witness point of `target`, and checks the
/// distance, landing and input-bound conditions at every integrator node.
ConsistencyReport check_consistency(const ProductTransitionSystem& ts,
                                    const CellConfiguration& cfg, CellId target,
                                    const ConsistencyOptions& options);

struct AgentStepReport {
  CellId claimed = 0;
  std::optional<CellId> landed;  // empty when outside the cover
  double boundary_distance = 0.0;  // d(x_i(dt), claimed cell)
  double max_input = 0.0;
  bool landed_ok = true;
  bool input_ok = true;
  bool ok() const { return landed_ok && input_ok; }
};

struct StepReport {
  std::vector<Vec> end_state;
  std::vector<AgentStepReport> agents;
  bool ok() const;
};

/// One dt of the coupled closed loop: every agent runs its hybrid controller
/// for pr_i(from) towards a witness point of its target cell. Targets that
/// are not successors still produce an input, clamped to |w_i| <= v_max.
StepReport realize_step(const ProductTransitionSystem& ts, const GlobalConfiguration& from,
                        const GlobalConfiguration& to, const std::vector<Vec>& start,
                        double tolerance = kDefaultEpsGeo);

struct RealizationReport {
  Path path;
  std::vector<StepReport> steps;
  bool ok = true;
  std::optional<std::size_t> failed_step;   // path index of the first configuration not reached
  std::optional<std::size_t> failed_agent;  // agent index

  nlohmann::json to_json(const Scenario& scenario) const;
};

/// Chains realize_step along the path from the initial states, stopping at
/// the first failure.
RealizationReport realize_path(const ProductTransitionSystem& ts, const Path& path,
                               double tolerance = kDefaultEpsGeo);

struct BoundAudit {
  std::size_t agent = 0;
  double L1_estimate = 0.0, L2_estimate = 0.0, M_estimate = 0.0;
  double L1_declared = 0.0, L2_declared = 0.0, M_declared = 0.0;
  std::vector<std::string> warnings;
};

/// Sampled difference quotients and norms of f_i over the engine's domains.
std::vector<BoundAudit> audit_bounds(const Engine& engine, int samples, std::uint64_t seed);

struct TubeAudit {
  int trials = 0;
  std::size_t checks = 0;
  std::size_t violations = 0;
  double worst_excess = -1e300;  // max of |x_i(t) - x_i0| - rho_i(t)
};

/// Random piecewise-constant inputs |v_i| <= v_max; every agent state at the
/// tube grid times must lie in R_i([0, t]).
TubeAudit audit_tube(const Scenario& scenario, const ReachTube& tube, int trials,
                     std::uint64_t seed, int pieces = 8, double eps = kDefaultEpsGeo);

/// Deterministic per-index seed derived from a base seed.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

nlohmann::json to_json(const ConsistencyReport& report, const Scenario& scenario);

}  // namespace msabs
