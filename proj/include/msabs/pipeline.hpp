#pragma once

#include <vector>

#include "msabs/discretization.hpp"
#include "msabs/dynamics.hpp"
#include "msabs/grid.hpp"
#include "msabs/reach.hpp"
#include "msabs/scenario.hpp"

namespace msabs {

struct EngineOptions {
  /// Extra cells per side appended to every extended cover.
  int extra_cells = 0;
  /// Multiplies every solved d_max. Values above 1 break the certificate and
  /// exist for negative controls only.
  double d_max_scale = 1.0;
  int max_pad_rounds = 10;
};

/// Everything derived from a scenario before any transition is computed:
/// tubes, bounds, the space-time discretization, grids and the extended
/// fields g_i. Immutable once built.
class Engine {
 public:
  static Engine build(const Scenario& scenario, const EngineOptions& options = {});

  const Scenario& scenario() const { return scenario_; }
  const EngineOptions& options() const { return options_; }
  const ReachTube& tube() const { return tube_; }
  const DynamicsBounds& bounds() const { return bounds_; }
  const NetworkParameters& network() const { return net_; }
  const SpaceTimeDiscretization& discretization() const { return disc_; }
  const NestingReport& nesting() const { return nesting_; }
  const CellDecomposition& grid(std::size_t i) const { return grids_.at(i); }
  const ExtendedField& field(std::size_t i) const { return fields_.at(i); }
  /// Radius allowance added to tube hulls when bounding f.
  const std::vector<double>& domain_pad() const { return pad_; }
  int pad_rounds() const { return pad_rounds_; }

  std::size_t size() const { return scenario_.size(); }
  double dt() const { return disc_.dt; }
  int steps() const { return disc_.steps; }
  double d_max(std::size_t i) const { return disc_.d_max.at(i); }
  int integrator_steps() const { return scenario_.numerics.integrator_divisor; }
  double eps() const { return scenario_.numerics.eps_geo; }
  /// r_i = lambda * dt * v_max.
  double reach_radius(std::size_t i) const;
  /// c_i(sigma).
  double inflation(std::size_t i, double sigma) const;
  /// Domain of x_i inside g_i.
  const Ball& own_domain(std::size_t i) const { return fields_.at(i).own_domain(); }
  /// Admissible region of agent i seen as a neighbor: B(x0, rho(T) + d_max).
  Ball neighbor_hull(std::size_t i) const;
  /// Radius around x0 covered by the extended decomposition.
  double extended_radius(std::size_t i) const;

  /// Initial global configuration (one cell per agent holding its x0).
  GlobalConfiguration initial_configuration() const;
  /// Reference points of the neighbor cells of cfg, in neighbor order.
  std::vector<Vec> neighbor_references(const CellConfiguration& cfg) const;

 private:
  Scenario scenario_;
  EngineOptions options_;
  ReachTube tube_;
  DynamicsBounds bounds_;
  NetworkParameters net_;
  SpaceTimeDiscretization disc_;
  NestingReport nesting_;
  std::vector<CellDecomposition> grids_;
  std::vector<ExtendedField> fields_;
  std::vector<double> pad_;
  int pad_rounds_ = 0;
};

}  // namespace msabs
