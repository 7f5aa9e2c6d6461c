#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "msabs/field.hpp"
#include "msabs/geometry.hpp"

namespace msabs {

/// One agent of the network: x_i' = f_i(x_i, x_j) + v_i, |v_i| <= v_max.
struct AgentSpec {
  int id = 0;
  int dim = 0;
  Field dynamics;
  double v_max = 1.0;
  /// Fraction of the free input reserved for reaching targets, in (0, 1).
  double lambda = 0.5;
  /// Lipschitz constant of f_i with respect to the stacked neighbor states.
  double L1 = 0.0;
  /// Lipschitz constant of f_i with respect to the agent's own state.
  double L2 = 0.0;
  Vec x0;
  /// Optional user-supplied global tube radius (constant in time).
  std::optional<double> tube_radius;
  /// Optional requested cell diameter; the solver never exceeds its cap.
  std::optional<double> d_max;
};

/// Directed coupling graph. neighbors(i) lists the agents whose states enter
/// f_i, in ascending agent-index order; mu(j, i) bounds d_max(j)/d_max(i).
class NetworkGraph {
 public:
  struct Edge {
    std::size_t from = 0;  // j, a neighbor of `to`
    std::size_t to = 0;    // i
    double mu = 1.0;
  };

  NetworkGraph() = default;
  /// Throws on self loops, duplicate edges, dangling indices or mu <= 0.
  NetworkGraph(std::size_t agent_count, std::vector<Edge> edges);

  std::size_t size() const { return neighbors_.size(); }
  std::span<const std::size_t> neighbors(std::size_t i) const {
    return neighbors_.at(i);
  }
  /// mu(j, i) for j in neighbors(i).
  double mu(std::size_t j, std::size_t i) const;
  const std::vector<Edge>& edges() const { return edges_; }

 private:
  std::vector<std::vector<std::size_t>> neighbors_;
  std::vector<std::vector<double>> mu_;  // parallel to neighbors_
  std::vector<Edge> edges_;
};

struct Numerics {
  double eps_geo = kDefaultEpsGeo;
  int integrator_divisor = 128;
  std::uint64_t seed = 0;
  /// Relative margin kept inside every open interval of the certificate.
  double margin = 0.05;
  /// Safety factor on the time-step bound; halved on backoff.
  double theta = 0.5;
  int backoff_retries = 8;
  double d_max_floor = 0.0;
  int sup_samples_per_axis = 9;
  double r_slack = 1e-6;
  std::uint64_t cell_cap = 10'000'000;
  std::uint64_t layer_cap = 1'000'000;
};

struct Scenario {
  std::vector<AgentSpec> agents;
  NetworkGraph graph;
  double horizon = 1.0;
  /// Optional fixed number of time steps l (dt = T / l).
  std::optional<int> steps;
  Numerics numerics;
  /// The document the scenario was loaded from (canonical form).
  nlohmann::json source;

  std::size_t size() const { return agents.size(); }
  int dim() const { return agents.empty() ? 0 : agents.front().dim; }
  std::size_t index_of(int id) const;
};

/// Parses and validates a scenario document. All schema violations are
/// collected and reported together in one kConfig error.
Scenario load_scenario(const nlohmann::json& doc);
Scenario load_scenario_file(const std::string& path);

/// Checks internal consistency of a programmatically built scenario.
void validate_scenario(const Scenario& scenario);

struct CycleViolation {
  std::vector<std::size_t> cycle;  // closed: front() == back()
  double product = 1.0;
};

/// Every simple cycle along which the product of mu falls below 1 - eps.
std::vector<CycleViolation> validate_cycle_condition(const NetworkGraph& graph,
                                                     double eps = kDefaultEpsGeo);

/// All simple directed cycles, each listed once starting at its smallest
/// agent index.
std::vector<std::vector<std::size_t>> simple_cycles(const NetworkGraph& graph);

struct NetworkParameters {
  /// (sum_j mu(j,i)^2)^(1/2)
  std::vector<double> mu_bold;
  /// (sum_j (M(j) + v_max(j))^2)^(1/2)
  std::vector<double> M_bold;
};

NetworkParameters network_parameters(const Scenario& scenario,
                                     std::span<const double> M);

}  // namespace msabs
