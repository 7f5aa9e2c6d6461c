#include "msabs/reach.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "msabs/error.hpp"
#include "msabs/parallel.hpp"

namespace msabs {

ReachTube::ReachTube(double horizon, std::vector<AgentProfile> agents)
    : horizon_(horizon), agents_(std::move(agents)) {
  if (!(horizon_ > 0)) fail(ErrorKind::kPrecondition, "tube horizon must be > 0");
  for (const auto& a : agents_) {
    if (a.radii.size() < 2 || a.radii.size() != agents_.front().radii.size()) {
      fail(ErrorKind::kPrecondition, "tube profiles need a shared grid of >= 2 nodes");
    }
    for (double r : a.radii) {
      if (!(r >= 0) || !std::isfinite(r)) {
        fail(ErrorKind::kPrecondition, "tube radii must be finite and >= 0");
      }
    }
  }
}

ReachTube ReachTube::linear(double horizon, const std::vector<Vec>& centers,
                            const std::vector<double>& slopes, int intervals) {
  if (centers.size() != slopes.size() || intervals < 1) {
    fail(ErrorKind::kPrecondition, "linear tube: bad arguments");
  }
  std::vector<AgentProfile> agents;
  for (std::size_t i = 0; i < centers.size(); ++i) {
    AgentProfile p{centers[i], {}};
    p.radii.resize(static_cast<std::size_t>(intervals) + 1);
    for (int k = 0; k <= intervals; ++k) {
      p.radii[static_cast<std::size_t>(k)] = slopes[i] * horizon * k / intervals;
    }
    // Exact endpoint regardless of rounding in k / intervals.
    p.radii.back() = slopes[i] * horizon;
    agents.push_back(std::move(p));
  }
  return ReachTube(horizon, std::move(agents));
}

std::size_t ReachTube::intervals() const {
  return agents_.empty() ? 0 : agents_.front().radii.size() - 1;
}

double ReachTube::grid_time(std::size_t k) const {
  return horizon_ * static_cast<double>(k) / static_cast<double>(intervals());
}

double ReachTube::radius(std::size_t i, double t) const {
  const auto& r = agents_.at(i).radii;
  const double n = static_cast<double>(intervals());
  const double u = std::clamp(t / horizon_, 0.0, 1.0) * n;
  const auto k = std::min(static_cast<std::size_t>(std::floor(u)), r.size() - 2);
  const double frac = u - static_cast<double>(k);
  if (frac <= 0.0) return r[k];
  if (frac >= 1.0) return r[k + 1];
  return r[k] + frac * (r[k + 1] - r[k]);
}

Ball ReachTube::at(std::size_t i, double t) const {
  return Ball{agents_.at(i).center, radius(i, t)};
}

Ball ReachTube::hull(std::size_t i, double a, double b) const {
  if (a > b) fail(ErrorKind::kPrecondition, "hull over an empty interval");
  double r = std::max(radius(i, a), radius(i, b));
  const auto& radii = agents_.at(i).radii;
  for (std::size_t k = 0; k < radii.size(); ++k) {
    const double t = grid_time(k);
    if (t > a && t < b) r = std::max(r, radii[k]);
  }
  return Ball{agents_.at(i).center, r};
}

Ball ReachTube::inflated_hull(std::size_t i, double a, double b, double c) const {
  return inflate(hull(i, a, b), c);
}

namespace {

// Lattice over the bounding box of `ball`, projected back onto the ball.
struct SampleSet {
  std::vector<Vec> points;
  double covering_radius = 0.0;
};

SampleSet ball_samples(const Ball& ball, int per_axis) {
  SampleSet s;
  const auto n = ball.dim();
  if (ball.radius == 0.0 || per_axis < 2) {
    s.points.push_back(ball.center);
    s.covering_radius = ball.radius;
    return s;
  }
  const double h = 2.0 * ball.radius / (per_axis - 1);
  s.covering_radius = 0.5 * h * std::sqrt(static_cast<double>(n));
  std::vector<int> idx(static_cast<std::size_t>(n), 0);
  while (true) {
    Vec p(n);
    for (Eigen::Index d = 0; d < n; ++d) {
      p(d) = ball.center(d) - ball.radius + h * idx[static_cast<std::size_t>(d)];
    }
    s.points.push_back(project(p, ball));
    std::size_t d = 0;
    while (d < idx.size() && ++idx[d] == per_axis) idx[d++] = 0;
    if (d == idx.size()) break;
  }
  return s;
}

constexpr double kMaxSupEvaluations = 2.0e6;

}  // namespace

double sup_field_norm(const Scenario& sc, std::size_t i, std::span<const Ball> domains,
                      int samples_per_axis) {
  const auto& agent = sc.agents.at(i);
  const auto nbrs = sc.graph.neighbors(i);
  const double factors = static_cast<double>(nbrs.size() + 1) * agent.dim;

  int per_axis = samples_per_axis;
  while (per_axis > 2 && std::pow(per_axis, factors) > kMaxSupEvaluations) --per_axis;

  std::vector<SampleSet> sets;
  sets.push_back(ball_samples(domains[i], per_axis));
  for (auto j : nbrs) sets.push_back(ball_samples(domains[j], per_axis));

  double best = 0.0;
  std::vector<std::size_t> idx(sets.size(), 0);
  std::vector<Vec> args(nbrs.size());
  while (true) {
    for (std::size_t k = 0; k < nbrs.size(); ++k) args[k] = sets[k + 1].points[idx[k + 1]];
    const Vec value = agent.dynamics(sets[0].points[idx[0]], args);
    if (!value.allFinite()) {
      fail(ErrorKind::kConfig, "dynamics of agent " + std::to_string(agent.id) +
                                   " evaluated to a non-finite value");
    }
    best = std::max(best, value.norm());
    std::size_t d = 0;
    while (d < idx.size() && ++idx[d] == sets[d].points.size()) idx[d++] = 0;
    if (d == idx.size()) break;
  }

  double nbr_cov2 = 0.0;
  for (std::size_t k = 1; k < sets.size(); ++k) {
    nbr_cov2 += sets[k].covering_radius * sets[k].covering_radius;
  }
  const double pad = agent.L2 * sets[0].covering_radius + agent.L1 * std::sqrt(nbr_cov2);
  return best + pad;
}

namespace {

std::vector<double> bounds_over(const Scenario& sc, const std::vector<Ball>& domains) {
  std::vector<double> M(sc.size());
  parallel_for(sc.size(), [&](std::size_t i) {
    M[i] = sup_field_norm(sc, i, domains, sc.numerics.sup_samples_per_axis);
  });
  return M;
}

double pad_of(std::span<const double> pad, std::size_t i) {
  return i < pad.size() ? pad[i] : 0.0;
}

}  // namespace

DynamicsBounds dynamics_bound(const Scenario& sc, const ReachTube& tube,
                              std::span<const double> pad) {
  std::vector<Ball> domains;
  for (std::size_t i = 0; i < sc.size(); ++i) {
    domains.push_back(inflate(tube.hull(i, 0.0, tube.horizon()), pad_of(pad, i)));
  }
  return DynamicsBounds{bounds_over(sc, domains)};
}

TubeResult compute_reach_tube(const Scenario& sc, const TubeOptions& opt) {
  validate_scenario(sc);
  const double T = sc.horizon;
  const std::size_t N = sc.size();

  std::vector<double> rho(N);
  for (std::size_t i = 0; i < N; ++i) {
    rho[i] = sc.agents[i].tube_radius.value_or(sc.agents[i].v_max * T);
  }

  auto domains_for = [&](const std::vector<double>& radii) {
    std::vector<Ball> d;
    for (std::size_t i = 0; i < N; ++i) {
      d.push_back(Ball{sc.agents[i].x0, radii[i] + pad_of(opt.domain_pad, i)});
    }
    return d;
  };

  for (int iter = 1; iter <= opt.max_iterations; ++iter) {
    const auto M = bounds_over(sc, domains_for(rho));

    bool certified = true;
    double change = 0.0;
    std::vector<double> next = rho;
    for (std::size_t i = 0; i < N; ++i) {
      const double needed = (M[i] + sc.agents[i].v_max) * T;
      if (needed > rho[i]) certified = false;
      if (sc.agents[i].tube_radius) continue;
      next[i] = needed;
      change = std::max(change, std::abs(needed - rho[i]) / std::max(needed, 1e-300));
    }

    if (certified) {
      TubeResult out;
      out.iterations = iter;
      std::vector<ReachTube::AgentProfile> profiles;
      out.bounds.M.resize(N);
      const auto intervals = static_cast<std::size_t>(opt.grid_intervals);
      for (std::size_t i = 0; i < N; ++i) {
        ReachTube::AgentProfile p{sc.agents[i].x0, std::vector<double>(intervals + 1)};
        if (sc.agents[i].tube_radius) {
          std::fill(p.radii.begin(), p.radii.end(), rho[i]);
          out.bounds.M[i] = M[i];
        } else {
          // Slope M + v_max with M = rho(T)/T - v_max >= the certified sup.
          out.bounds.M[i] = std::max(M[i], rho[i] / T - sc.agents[i].v_max);
          const double slope = out.bounds.M[i] + sc.agents[i].v_max;
          for (std::size_t k = 0; k <= intervals; ++k) {
            p.radii[k] = slope * T * static_cast<double>(k) / static_cast<double>(intervals);
          }
          p.radii.back() = rho[i];
        }
        profiles.push_back(std::move(p));
      }
      out.tube = ReachTube(T, std::move(profiles));
      return out;
    }

    for (std::size_t i = 0; i < N; ++i) {
      if (sc.agents[i].tube_radius && (M[i] + sc.agents[i].v_max) * T > rho[i]) {
        fail(ErrorKind::kInfeasible,
             "tube_radius of agent " + std::to_string(sc.agents[i].id) +
                 " is too small: (M + v_max) T = " +
                 std::to_string((M[i] + sc.agents[i].v_max) * T) + " exceeds " +
                 std::to_string(rho[i]));
      }
    }
    // Near the fixed point, overshoot slightly so the next pass certifies.
    if (change < opt.rel_tol) {
      for (std::size_t i = 0; i < N; ++i) {
        if (!sc.agents[i].tube_radius) next[i] *= 1.0 + 10.0 * opt.rel_tol;
      }
    }
    for (double r : next) {
      if (!std::isfinite(r) || r > 1e12) iter = opt.max_iterations;
    }
    rho = std::move(next);
  }
  fail(ErrorKind::kInfeasible,
       "tube divergence: provide explicit global bound (agent tube_radius)");
}

double inflation_constant(double M, double v_max, double sigma) {
  if (!(sigma > 0)) fail(ErrorKind::kPrecondition, "sigma must be > 0");
  return (M + v_max) * sigma;
}

NestingReport check_nesting(const Scenario& sc, const ReachTube& tube,
                            const DynamicsBounds& bounds, double dt, double tau) {
  const double T = tube.horizon();
  if (!(dt > 0 && dt < tau && tau < T)) {
    fail(ErrorKind::kPrecondition, "nesting check needs 0 < dt < tau < T");
  }
  const double eps = sc.numerics.eps_geo;
  NestingReport report;
  for (std::size_t i = 0; i < tube.size(); ++i) {
    bool agent_ok = true;
    for (double sigma : {dt, tau - dt, tau}) {
      NestingReport::Entry e;
      e.agent = i;
      e.sigma = sigma;
      e.inflated = tube.hull(i, 0.0, T - tau).radius +
                   inflation_constant(bounds.M[i], sc.agents[i].v_max, sigma);
      e.required = tube.hull(i, 0.0, T - tau + sigma).radius;
      e.ok = e.inflated >= e.required - eps;
      agent_ok = agent_ok && e.ok;
      report.entries.push_back(e);
    }
    if (!agent_ok) {
      report.ok = false;
      report.flagged_agents.push_back(i);
    }
  }
  return report;
}

}  // namespace msabs
