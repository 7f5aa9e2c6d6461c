#include "msabs/abstraction.hpp"

#include <algorithm>
#include <mutex>

#include "msabs/error.hpp"
#include "msabs/parallel.hpp"

namespace msabs {

TransitionInfo successors(const Engine& engine, const CellConfiguration& cfg) {
  const std::size_t i = cfg.agent;
  const CellDecomposition& grid = engine.grid(i);
  if (cfg.cells.empty() || !grid.is_marked(cfg.cells.front()))
    fail(ErrorKind::kPrecondition, "agent " + std::to_string(engine.scenario().agents[i].id) +
                                       ": own cell is not marked; no outgoing transitions "
                                       "defined here");
  const auto nbrs = engine.scenario().graph.neighbors(i);
  for (std::size_t k = 0; k < nbrs.size(); ++k)
    if (!engine.grid(nbrs[k]).in_state_set(cfg.cells[k + 1]))
      fail(ErrorKind::kPrecondition, "neighbor cell outside its state set");

  TransitionInfo info;
  info.reference = grid.reference_point(cfg.cells.front());
  const std::vector<Vec> refs = engine.neighbor_references(cfg);
  const Trajectory chi = reference_trajectory(engine.field(i), info.reference, refs,
                                              engine.dt(), engine.integrator_steps());
  info.chi_end = chi.back();
  const double r = engine.reach_radius(i);
  info.radius = r - engine.scenario().numerics.r_slack;

  const Vec& x0 = engine.scenario().agents[i].x0;
  if ((info.chi_end - x0).norm() + r > engine.extended_radius(i) + engine.eps())
    fail(ErrorKind::kInternal, "reach ball of agent " +
                                   std::to_string(engine.scenario().agents[i].id) +
                                   " leaves the extended cover");

  info.extended = grid.cells_meeting(make_ball(info.chi_end, info.radius), engine.eps());
  for (CellId c : info.extended)
    if (grid.in_state_set(c)) info.post.push_back(c);
  return info;
}

IndividualTransitionSystem::IndividualTransitionSystem(const Engine& engine,
                                                       std::size_t agent)
    : engine_(&engine), agent_(agent) {}

std::vector<CellId> IndividualTransitionSystem::initial_states() const {
  return {engine_->grid(agent_).locate(engine_->scenario().agents[agent_].x0,
                                       engine_->eps())};
}

const TransitionInfo& IndividualTransitionSystem::transition(
    const CellConfiguration& cfg) const {
  {
    std::shared_lock lock(mutex_);
    auto it = memo_.find(cfg);
    if (it != memo_.end()) return *it->second;
  }
  auto info = std::make_unique<TransitionInfo>(successors(*engine_, cfg));
  std::unique_lock lock(mutex_);
  auto [it, inserted] = memo_.try_emplace(cfg, std::move(info));
  return *it->second;
}

std::vector<std::pair<CellConfiguration, TransitionInfo>>
IndividualTransitionSystem::materialized() const {
  std::shared_lock lock(mutex_);
  std::vector<std::pair<CellConfiguration, TransitionInfo>> out;
  out.reserve(memo_.size());
  for (const auto& [cfg, info] : memo_) out.emplace_back(cfg, *info);
  return out;
}

std::vector<std::size_t> LayerResult::sizes() const {
  std::vector<std::size_t> s;
  for (const auto& l : layers) s.push_back(l.size());
  return s;
}

ProductTransitionSystem::ProductTransitionSystem(const Engine& engine)
    : engine_(&engine) {
  for (std::size_t i = 0; i < engine.size(); ++i)
    agents_.push_back(std::make_unique<IndividualTransitionSystem>(engine, i));
}

std::vector<GlobalConfiguration> ProductTransitionSystem::initial_states() const {
  std::vector<std::vector<CellId>> f;
  for (const auto& a : agents_) f.push_back(a->initial_states());
  return cartesian_product(f);
}

std::vector<std::vector<CellId>> ProductTransitionSystem::factors(
    const GlobalConfiguration& config) const {
  std::vector<std::vector<CellId>> f;
  const auto& graph = engine_->scenario().graph;
  for (std::size_t i = 0; i < agents_.size(); ++i)
    f.push_back(agents_[i]->transition(project_configuration(config, graph, i)).post);
  return f;
}

std::vector<GlobalConfiguration> ProductTransitionSystem::post(
    const GlobalConfiguration& config) const {
  return cartesian_product(factors(config));
}

bool ProductTransitionSystem::is_transition(const GlobalConfiguration& from,
                                            const GlobalConfiguration& to) const {
  if (to.size() != from.size()) return false;
  const auto f = factors(from);
  for (std::size_t i = 0; i < f.size(); ++i)
    if (!std::binary_search(f[i].begin(), f[i].end(), to[i])) return false;
  return true;
}

LayerResult ProductTransitionSystem::build_layers(int depth) const {
  const std::uint64_t cap = engine_->scenario().numerics.layer_cap;
  LayerResult out;
  out.layers.push_back(initial_states());
  out.parents.emplace_back(out.layers.front().size(), 0);

  for (int k = 1; k <= depth; ++k) {
    const auto& prev = out.layers.back();
    std::vector<std::vector<std::vector<CellId>>> fac(prev.size());
    parallel_for(prev.size(), [&](std::size_t m) { fac[m] = factors(prev[m]); });

    std::map<GlobalConfiguration, std::size_t> next;
    for (std::size_t m = 0; m < prev.size() && !out.truncated; ++m) {
      std::uint64_t count = 1;
      for (const auto& f : fac[m]) count *= f.size();
      if (count == 0)
        fail(ErrorKind::kInternal, "empty successor set in layer " + std::to_string(k - 1));
      for (auto& cfg : cartesian_product(fac[m])) {
        next.try_emplace(std::move(cfg), m);
        if (next.size() > cap) {
          out.truncated = true;
          out.diagnostic = "layer " + std::to_string(k) + " exceeds the cap of " +
                           std::to_string(cap) + " configurations";
          break;
        }
      }
    }
    if (out.truncated) break;
    std::vector<GlobalConfiguration> layer;
    std::vector<std::size_t> parent;
    layer.reserve(next.size());
    parent.reserve(next.size());
    for (auto& [cfg, p] : next) {
      layer.push_back(cfg);
      parent.push_back(p);
    }
    out.layers.push_back(std::move(layer));
    out.parents.push_back(std::move(parent));
  }
  return out;
}

Path ProductTransitionSystem::sample_path(int length, std::mt19937_64& rng) const {
  Path path;
  path.push_back(engine_->initial_configuration());
  for (int k = 0; k < length; ++k) {
    const auto f = factors(path.back());
    GlobalConfiguration next;
    for (const auto& choices : f) {
      if (choices.empty())
        fail(ErrorKind::kInternal, "empty successor set at step " + std::to_string(k));
      std::uniform_int_distribution<std::size_t> pick(0, choices.size() - 1);
      next.push_back(choices[pick(rng)]);
    }
    path.push_back(std::move(next));
  }
  return path;
}

Path reconstruct_path(const LayerResult& layers, std::size_t layer, std::size_t index) {
  if (layer >= layers.layers.size() || index >= layers.layers[layer].size())
    fail(ErrorKind::kPrecondition, "no such layer entry");
  Path path(layer + 1);
  for (std::size_t k = layer + 1; k-- > 0;) {
    path[k] = layers.layers[k][index];
    index = layers.parents[k][index];
  }
  return path;
}

std::vector<GlobalConfiguration> cartesian_product(
    const std::vector<std::vector<CellId>>& factors) {
  std::vector<GlobalConfiguration> out;
  for (const auto& f : factors)
    if (f.empty()) return out;
  std::vector<std::size_t> idx(factors.size(), 0);
  while (true) {
    GlobalConfiguration cfg(factors.size());
    for (std::size_t i = 0; i < factors.size(); ++i) cfg[i] = factors[i][idx[i]];
    out.push_back(std::move(cfg));
    std::size_t i = factors.size();
    while (i > 0) {
      --i;
      if (++idx[i] < factors[i].size()) break;
      idx[i] = 0;
      if (i == 0) return out;
    }
    if (factors.empty()) return out;
  }
}

}  // namespace msabs
