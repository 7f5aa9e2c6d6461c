#include "msabs/validation.hpp"

#include <algorithm>
#include <cmath>

#include "msabs/error.hpp"
#include "msabs/parallel.hpp"

namespace msabs {
namespace {

Vec stack(std::span<const Vec> parts) {
  Eigen::Index n = 0;
  for (const auto& p : parts) n += p.size();
  Vec out(n);
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    out.segment(at, p.size()) = p;
    at += p.size();
  }
  return out;
}

Vec clamp_norm(Vec w, double limit) {
  const double n = w.norm();
  if (n > limit) w *= limit / n;
  return w;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

bool ConsistencyReport::ok() const {
  return std::all_of(trials.begin(), trials.end(), [](const auto& t) { return t.ok(); });
}

std::size_t ConsistencyReport::violations() const {
  return static_cast<std::size_t>(
      std::count_if(trials.begin(), trials.end(), [](const auto& t) { return !t.ok(); }));
}

double ConsistencyReport::max_input() const {
  double m = 0.0;
  for (const auto& t : trials) m = std::max(m, t.max_input);
  return m;
}

ConsistencyReport check_consistency(const ProductTransitionSystem& ts,
                                    const CellConfiguration& cfg, CellId target,
                                    const ConsistencyOptions& options) {
  const Engine& e = ts.engine();
  const Scenario& sc = e.scenario();
  const std::size_t i = cfg.agent;
  const AgentSpec& agent = sc.agents.at(i);
  const CellDecomposition& grid = e.grid(i);
  if (!grid.in_extended_set(target))
    fail(ErrorKind::kPrecondition, "target cell outside the extended cover");

  const TransitionInfo& info = ts.agent(i).transition(cfg);
  const double eps = e.eps();
  const double dt = e.dt();
  const int steps = e.integrator_steps();
  const auto n = static_cast<Eigen::Index>(agent.dim);

  ConsistencyReport report;
  report.agent = i;
  report.configuration = cfg;
  report.target = target;
  const Box own = grid.cell(cfg.cells.front());
  const Box goal = grid.cell(target);
  report.witness = witness_point(goal, info.chi_end, 0.5 * sc.numerics.r_slack);
  const Vec w = target_parameter(report.witness, info.chi_end, agent.lambda, dt,
                                 agent.v_max, eps);

  const std::vector<Vec> refs = e.neighbor_references(cfg);
  const Trajectory chi = reference_trajectory(e.field(i), info.reference, refs, dt, steps);
  const auto nbrs = sc.graph.neighbors(i);
  std::vector<Box> nbr_cells;
  std::vector<double> nbr_growth;
  std::vector<Ball> nbr_hulls;
  for (std::size_t k = 0; k < nbrs.size(); ++k) {
    const std::size_t j = nbrs[k];
    nbr_cells.push_back(e.grid(j).cell(cfg.cells[k + 1]));
    nbr_growth.push_back(e.bounds().M[j] + sc.agents[j].v_max);
    nbr_hulls.push_back(e.neighbor_hull(j));
  }
  const double growth = e.bounds().M[i] + agent.v_max;

  report.trials.resize(static_cast<std::size_t>(std::max(options.trials, 0)));
  parallel_for(report.trials.size(), [&](std::size_t k) {
    ConsistencyTrial& trial = report.trials[k];
    trial.seed = derive_seed(options.seed, k);
    std::mt19937_64 rng(trial.seed);
    const Vec start = uniform_in_box(own, rng);
    std::vector<DisturbanceSignal> dist;
    for (std::size_t m = 0; m < nbrs.size(); ++m)
      dist.push_back(DisturbanceSignal::sample(nbr_cells[m], nbr_growth[m], nbr_hulls[m], rng));
    const HybridController ctrl(e.field(i), chi, refs, info.reference, start, w,
                                agent.lambda, dt);

    auto disturbances = [&](double t) {
      std::vector<Vec> d;
      d.reserve(dist.size());
      for (const auto& s : dist) d.push_back(s(t));
      return d;
    };
    const OdeRhs rhs = [&](double t, const Vec& X) {
      const Vec x = X.head(n);
      const Vec c = X.tail(n);
      const auto d = disturbances(t);
      Vec out(2 * n);
      out.head(n) = agent.dynamics(x, d) + ctrl.parts_at(c, x, d).total();
      out.tail(n) = ctrl.chi_rate(c);
      return out;
    };
    Vec X0(2 * n);
    X0 << start, info.reference;
    const Trajectory traj = integrate(rhs, X0, 0.0, dt, steps);

    trial.max_distance_excess = -1e300;
    for (std::size_t s = 0; s < traj.t.size(); ++s) {
      const double t = traj.t[s];
      const Vec x = traj.x[s].head(n);
      const Vec c = traj.x[s].tail(n);
      const double excess = distance_to_set(x, own) - growth * t;
      trial.max_distance_excess = std::max(trial.max_distance_excess, excess);
      if (!(excess < eps)) trial.distance_ok = false;
      const double k_norm = ctrl.parts_at(c, x, disturbances(t)).total().norm();
      trial.max_input = std::max(trial.max_input, k_norm);
      if (!(k_norm < agent.v_max + eps)) trial.controller_ok = false;
    }
    trial.landing_distance = distance_to_set(traj.back().head(n), goal);
    trial.landing_ok = trial.landing_distance <= options.endpoint_tolerance;
  });
  return report;
}

bool StepReport::ok() const {
  return std::all_of(agents.begin(), agents.end(), [](const auto& a) { return a.ok(); });
}

StepReport realize_step(const ProductTransitionSystem& ts, const GlobalConfiguration& from,
                        const GlobalConfiguration& to, const std::vector<Vec>& start,
                        double tolerance) {
  const Engine& e = ts.engine();
  const Scenario& sc = e.scenario();
  const std::size_t N = sc.size();
  if (from.size() != N || to.size() != N || start.size() != N)
    fail(ErrorKind::kPrecondition, "realize_step: sizes do not match the network");
  const double dt = e.dt();
  const int steps = e.integrator_steps();
  const double slack = std::max(tolerance, e.eps());

  std::vector<HybridController> ctrl;
  std::vector<Box> goals;
  for (std::size_t i = 0; i < N; ++i) {
    const Box own = e.grid(i).cell(from[i]);
    if (distance_to_set(start[i], own) > slack)
      fail(ErrorKind::kPrecondition, "start state of agent " + std::to_string(sc.agents[i].id) +
                                         " is outside its cell");
    const CellConfiguration cfg = project_configuration(from, sc.graph, i);
    const TransitionInfo& info = ts.agent(i).transition(cfg);
    goals.push_back(e.grid(i).cell(to[i]));
    const AgentSpec& a = sc.agents[i];
    const Vec witness = witness_point(goals.back(), info.chi_end, 0.5 * sc.numerics.r_slack);
    const Vec w = clamp_norm((witness - info.chi_end) / (a.lambda * dt), a.v_max);
    const std::vector<Vec> refs = e.neighbor_references(cfg);
    Trajectory chi = reference_trajectory(e.field(i), info.reference, refs, dt, steps);
    ctrl.emplace_back(e.field(i), std::move(chi), refs, info.reference, start[i], w,
                      a.lambda, dt);
  }

  const auto n = static_cast<Eigen::Index>(sc.dim());
  const auto Nn = static_cast<Eigen::Index>(N) * n;
  auto inputs = [&](const Vec& X, std::vector<Vec>* rates) {
    std::vector<Vec> k(N);
    for (std::size_t i = 0; i < N; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      const Vec x = X.segment(ii * n, n);
      const Vec c = X.segment(Nn + ii * n, n);
      std::vector<Vec> nbr;
      for (std::size_t j : sc.graph.neighbors(i))
        nbr.push_back(X.segment(static_cast<Eigen::Index>(j) * n, n));
      k[i] = ctrl[i].parts_at(c, x, nbr).total();
      if (rates) {
        (*rates)[i] = sc.agents[i].dynamics(x, nbr) + k[i];
        (*rates)[N + i] = ctrl[i].chi_rate(c);
      }
    }
    return k;
  };
  const OdeRhs rhs = [&](double, const Vec& X) {
    std::vector<Vec> rates(2 * N);
    inputs(X, &rates);
    return stack(rates);
  };

  std::vector<Vec> init(start);
  for (std::size_t i = 0; i < N; ++i)
    init.push_back(e.grid(i).reference_point(from[i]));
  const Trajectory traj = integrate(rhs, stack(init), 0.0, dt, steps);

  StepReport report;
  report.agents.resize(N);
  for (const Vec& X : traj.x) {
    const auto k = inputs(X, nullptr);
    for (std::size_t i = 0; i < N; ++i)
      report.agents[i].max_input = std::max(report.agents[i].max_input, k[i].norm());
  }
  for (std::size_t i = 0; i < N; ++i) {
    AgentStepReport& r = report.agents[i];
    const Vec x = traj.back().segment(static_cast<Eigen::Index>(i) * n, n);
    report.end_state.push_back(x);
    r.claimed = to[i];
    r.boundary_distance = distance_to_set(x, goals[i]);
    r.landed_ok = r.boundary_distance <= tolerance;
    r.input_ok = r.max_input < sc.agents[i].v_max + e.eps();
    try {
      r.landed = e.grid(i).locate(x, e.eps());
    } catch (const Error&) {
      r.landed.reset();
    }
  }
  return report;
}

RealizationReport realize_path(const ProductTransitionSystem& ts, const Path& path,
                               double tolerance) {
  const Engine& e = ts.engine();
  RealizationReport report;
  report.path = path;
  if (path.empty()) return report;
  std::vector<Vec> state;
  for (std::size_t i = 0; i < e.size(); ++i) {
    state.push_back(e.scenario().agents[i].x0);
    if (distance_to_set(state.back(), e.grid(i).cell(path.front().at(i))) > tolerance) {
      report.ok = false;
      report.failed_step = 0;
      report.failed_agent = i;
      return report;
    }
  }
  for (std::size_t k = 0; k + 1 < path.size(); ++k) {
    report.steps.push_back(realize_step(ts, path[k], path[k + 1], state, tolerance));
    const StepReport& s = report.steps.back();
    if (!s.ok()) {
      report.ok = false;
      report.failed_step = k + 1;
      for (std::size_t i = 0; i < s.agents.size(); ++i)
        if (!s.agents[i].ok()) {
          report.failed_agent = i;
          break;
        }
      break;
    }
    state = s.end_state;
  }
  return report;
}

nlohmann::json RealizationReport::to_json(const Scenario& sc) const {
  nlohmann::json steps_json = nlohmann::json::array();
  for (const auto& s : steps) {
    nlohmann::json agents = nlohmann::json::array();
    for (std::size_t i = 0; i < s.agents.size(); ++i) {
      const auto& a = s.agents[i];
      agents.push_back({{"agent", sc.agents[i].id},
                        {"claimed", a.claimed},
                        {"landed", a.landed ? nlohmann::json(*a.landed) : nlohmann::json()},
                        {"boundary_distance", a.boundary_distance},
                        {"max_input", a.max_input},
                        {"ok", a.ok()}});
    }
    steps_json.push_back({{"agents", agents}, {"ok", s.ok()}});
  }
  nlohmann::json j = {{"path", path}, {"steps", steps_json}, {"ok", ok}};
  j["failed_step"] = failed_step ? nlohmann::json(*failed_step) : nlohmann::json();
  j["failed_agent"] =
      failed_agent ? nlohmann::json(sc.agents[*failed_agent].id) : nlohmann::json();
  return j;
}

std::vector<BoundAudit> audit_bounds(const Engine& e, int samples, std::uint64_t seed) {
  const Scenario& sc = e.scenario();
  std::vector<BoundAudit> out(sc.size());
  parallel_for(sc.size(), [&](std::size_t i) {
    const AgentSpec& a = sc.agents[i];
    const auto nbrs = sc.graph.neighbors(i);
    std::mt19937_64 rng(derive_seed(seed, i));
    BoundAudit& r = out[i];
    r.agent = i;
    r.L1_declared = a.L1;
    r.L2_declared = a.L2;
    r.M_declared = e.bounds().M[i];
    auto draw_nbrs = [&] {
      std::vector<Vec> y;
      for (std::size_t j : nbrs) y.push_back(uniform_in_ball(e.neighbor_hull(j), rng));
      return y;
    };
    for (int s = 0; s < samples; ++s) {
      const Vec x = uniform_in_ball(e.own_domain(i), rng);
      const Vec x2 = uniform_in_ball(e.own_domain(i), rng);
      const auto y = draw_nbrs();
      const auto y2 = draw_nbrs();
      const Vec fx = a.dynamics(x, y);
      r.M_estimate = std::max(r.M_estimate, fx.norm());
      const double dx = (x - x2).norm();
      if (dx > 0) r.L2_estimate = std::max(r.L2_estimate, (fx - a.dynamics(x2, y)).norm() / dx);
      if (!nbrs.empty()) {
        const double dy = (stack(y) - stack(y2)).norm();
        if (dy > 0)
          r.L1_estimate = std::max(r.L1_estimate, (fx - a.dynamics(x, y2)).norm() / dy);
      }
    }
    const double tol = 1e-9;
    if (r.L1_estimate > r.L1_declared * (1 + tol) + tol)
      r.warnings.push_back("L1 estimate exceeds the declared value");
    if (r.L2_estimate > r.L2_declared * (1 + tol) + tol)
      r.warnings.push_back("L2 estimate exceeds the declared value");
    if (r.M_estimate > r.M_declared * (1 + tol) + tol)
      r.warnings.push_back("sampled |f| exceeds the certified bound M");
  });
  return out;
}

TubeAudit audit_tube(const Scenario& sc, const ReachTube& tube, int trials,
                     std::uint64_t seed, int pieces, double eps) {
  const std::size_t N = sc.size();
  const auto n = static_cast<Eigen::Index>(sc.dim());
  const auto intervals = static_cast<int>(tube.intervals());
  const int per_piece = std::max(1, 2 * intervals / pieces);
  const int total = per_piece * pieces;
  const double T = sc.horizon;

  std::vector<TubeAudit> partial(static_cast<std::size_t>(std::max(trials, 0)));
  parallel_for(partial.size(), [&](std::size_t k) {
    std::mt19937_64 rng(derive_seed(seed, k));
    std::vector<std::vector<Vec>> v(N);
    for (std::size_t i = 0; i < N; ++i)
      for (int p = 0; p < pieces; ++p)
        v[i].push_back(uniform_in_ball(make_ball(Vec::Zero(n), sc.agents[i].v_max), rng));

    std::vector<Vec> x0;
    for (const auto& a : sc.agents) x0.push_back(a.x0);
    Vec X = stack(x0);
    std::vector<Vec> nodes{X};
    for (int p = 0; p < pieces; ++p) {
      const OdeRhs rhs = [&](double, const Vec& Y) {
        std::vector<Vec> rates(N);
        for (std::size_t i = 0; i < N; ++i) {
          std::vector<Vec> nbr;
          for (std::size_t j : sc.graph.neighbors(i))
            nbr.push_back(Y.segment(static_cast<Eigen::Index>(j) * n, n));
          rates[i] = sc.agents[i].dynamics(Y.segment(static_cast<Eigen::Index>(i) * n, n), nbr) +
                     v[i][static_cast<std::size_t>(p)];
        }
        return stack(rates);
      };
      const Trajectory tr = integrate(rhs, X, T * p / pieces, T * (p + 1) / pieces, per_piece);
      nodes.insert(nodes.end(), tr.x.begin() + 1, tr.x.end());
      X = tr.back();
    }

    TubeAudit& r = partial[k];
    for (int g = 0; g <= intervals; ++g) {
      const double t = tube.grid_time(static_cast<std::size_t>(g));
      const auto node = static_cast<std::size_t>(std::llround(t / T * total));
      for (std::size_t i = 0; i < N; ++i) {
        const Vec x = nodes[node].segment(static_cast<Eigen::Index>(i) * n, n);
        const double excess = (x - sc.agents[i].x0).norm() - tube.radius(i, t);
        r.worst_excess = std::max(r.worst_excess, excess);
        ++r.checks;
        if (excess > eps) ++r.violations;
      }
    }
  });

  TubeAudit total_report;
  total_report.trials = trials;
  for (const auto& p : partial) {
    total_report.checks += p.checks;
    total_report.violations += p.violations;
    total_report.worst_excess = std::max(total_report.worst_excess, p.worst_excess);
  }
  return total_report;
}

nlohmann::json to_json(const ConsistencyReport& r, const Scenario& sc) {
  nlohmann::json trials = nlohmann::json::array();
  for (const auto& t : r.trials)
    trials.push_back({{"seed", t.seed},
                      {"distance_ok", t.distance_ok},
                      {"landing_ok", t.landing_ok},
                      {"controller_ok", t.controller_ok},
                      {"max_distance_excess", t.max_distance_excess},
                      {"landing_distance", t.landing_distance},
                      {"max_input", t.max_input}});
  return {{"agent", sc.agents[r.agent].id},
          {"configuration", r.configuration.cells},
          {"target", r.target},
          {"witness", std::vector<double>(r.witness.data(), r.witness.data() + r.witness.size())},
          {"violations", r.violations()},
          {"trials", trials}};
}

}  // namespace msabs
