#include "msabs/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "msabs/error.hpp"

namespace msabs {
namespace {

// Radius of the own-state domain of g_i before adding d_max.
double own_reach(const ReachTube& tube, const DynamicsBounds& b, const AgentSpec& a,
                 std::size_t i, double tau) {
  const double T = tube.horizon();
  return std::max(tube.radius(i, T - tau) + inflation_constant(b.M[i], a.v_max, tau),
                  tube.radius(i, T));
}

}  // namespace

Engine Engine::build(const Scenario& sc, const EngineOptions& options) {
  validate_scenario(sc);
  if (!(options.d_max_scale > 0.0))
    fail(ErrorKind::kPrecondition, "d_max_scale must be positive");

  Engine e;
  e.scenario_ = sc;
  e.options_ = options;
  const std::size_t N = sc.size();
  const double T = sc.horizon;

  // Snapped regions reach up to d_max past the tube, so f must be bounded on
  // padded domains; the pad depends on d_max, which depends on the bound.
  std::vector<double> pad(N, 0.0);
  bool settled = false;
  for (int round = 1; round <= options.max_pad_rounds && !settled; ++round) {
    TubeOptions topt;
    topt.domain_pad = pad;
    TubeResult tr = compute_reach_tube(sc, topt);
    NetworkParameters net = network_parameters(sc, tr.bounds.M);
    SpaceTimeDiscretization disc = solve_discretization(sc, net);
    for (double& d : disc.d_max) d *= options.d_max_scale;

    settled = true;
    std::vector<double> needed(N);
    for (std::size_t i = 0; i < N; ++i) {
      needed[i] = own_reach(tr.tube, tr.bounds, sc.agents[i], i, disc.tau) +
                  disc.d_max[i] - tr.tube.radius(i, T);
      if (needed[i] > pad[i] * (1.0 + 1e-12)) settled = false;
    }
    e.tube_ = std::move(tr.tube);
    e.bounds_ = std::move(tr.bounds);
    e.net_ = std::move(net);
    e.disc_ = std::move(disc);
    e.pad_rounds_ = round;
    if (!settled)
      for (std::size_t i = 0; i < N; ++i) pad[i] = std::max(pad[i], needed[i] * 1.05);
  }
  if (!settled && options.d_max_scale == 1.0)
    fail(ErrorKind::kInfeasible, "domain padding for grid snapping did not settle");
  e.pad_ = pad;
  if (options.d_max_scale != 1.0)
    e.disc_.certificate = verify_certificate(sc, e.net_, e.disc_);
  e.nesting_ = check_nesting(sc, e.tube_, e.bounds_, e.disc_.dt, e.disc_.tau);

  std::uint64_t used = 0;
  for (std::size_t i = 0; i < N; ++i) {
    DecompositionRegions reg;
    reg.reach_T = e.tube_.radius(i, T);
    reg.reach_T_minus_dt = e.tube_.radius(i, T - e.disc_.dt);
    reg.reach_T_minus_tau = e.tube_.radius(i, T - e.disc_.tau);
    reg.inflation_tau = e.inflation(i, e.disc_.tau);
    const std::uint64_t cap = sc.numerics.cell_cap > used ? sc.numerics.cell_cap - used : 0;
    e.grids_.push_back(CellDecomposition::build(i, sc.agents[i].x0, e.disc_.d_max[i], reg,
                                                cap, options.extra_cells,
                                                sc.numerics.eps_geo));
    used += e.grids_.back().box_cell_count();
  }

  for (std::size_t i = 0; i < N; ++i) {
    const auto& a = sc.agents[i];
    Ball own = make_ball(a.x0, own_reach(e.tube_, e.bounds_, a, i, e.disc_.tau) +
                                   e.disc_.d_max[i]);
    std::vector<Ball> nbr;
    for (std::size_t j : sc.graph.neighbors(i)) nbr.push_back(e.neighbor_hull(j));
    e.fields_.emplace_back(a.dynamics, std::move(own), std::move(nbr));
  }
  return e;
}

double Engine::reach_radius(std::size_t i) const {
  const auto& a = scenario_.agents.at(i);
  return msabs::reach_radius(a.lambda, disc_.dt, a.v_max);
}

double Engine::inflation(std::size_t i, double sigma) const {
  return inflation_constant(bounds_.M.at(i), scenario_.agents.at(i).v_max, sigma);
}

Ball Engine::neighbor_hull(std::size_t i) const {
  return make_ball(scenario_.agents.at(i).x0,
                   tube_.radius(i, scenario_.horizon) + disc_.d_max.at(i));
}

double Engine::extended_radius(std::size_t i) const {
  const auto& r = grids_.at(i).regions();
  return std::max(r.reach_T_minus_tau + r.inflation_tau + disc_.d_max.at(i), r.reach_T);
}

GlobalConfiguration Engine::initial_configuration() const {
  GlobalConfiguration cfg;
  for (std::size_t i = 0; i < size(); ++i)
    cfg.push_back(grids_[i].locate(scenario_.agents[i].x0, eps()));
  return cfg;
}

std::vector<Vec> Engine::neighbor_references(const CellConfiguration& cfg) const {
  const auto nbrs = scenario_.graph.neighbors(cfg.agent);
  if (cfg.cells.size() != nbrs.size() + 1)
    fail(ErrorKind::kPrecondition, "cell configuration has the wrong length");
  std::vector<Vec> refs;
  for (std::size_t k = 0; k < nbrs.size(); ++k)
    refs.push_back(grids_.at(nbrs[k]).reference_point(cfg.cells[k + 1]));
  return refs;
}

}  // namespace msabs
