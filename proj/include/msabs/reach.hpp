#pragma once

#include <span>
#include <vector>

#include "msabs/geometry.hpp"
#include "msabs/scenario.hpp"

namespace msabs {

/// Per-agent ball-shaped overapproximations R_i(t) = B(X_i0; rho_i(t)),
/// sampled on a uniform time grid over [0, T] and linearly interpolated.
class ReachTube {
 public:
  struct AgentProfile {
    Vec center;
    std::vector<double> radii;  // one per grid node, nondecreasing in practice
  };

  ReachTube() = default;
  ReachTube(double horizon, std::vector<AgentProfile> agents);

  /// rho_i(t) = slope_i * t on a grid with `intervals` steps.
  static ReachTube linear(double horizon, const std::vector<Vec>& centers,
                          const std::vector<double>& slopes, int intervals = 64);

  std::size_t size() const { return agents_.size(); }
  double horizon() const { return horizon_; }
  std::size_t intervals() const;
  double grid_time(std::size_t k) const;
  const AgentProfile& profile(std::size_t i) const { return agents_.at(i); }

  double radius(std::size_t i, double t) const;
  Ball at(std::size_t i, double t) const;
  /// R_i([a, b]): ball with the largest radius attained on [a, b].
  Ball hull(std::size_t i, double a, double b) const;
  /// R_i^c([a, b]) = R_i([a, b]) + B(c).
  Ball inflated_hull(std::size_t i, double a, double b, double c) const;

 private:
  double horizon_ = 0.0;
  std::vector<AgentProfile> agents_;
};

struct DynamicsBounds {
  /// M(i) >= sup |f_i| over the agent's domain times its neighbors' domains.
  std::vector<double> M;
};

/// Certified upper bound of |f_i| over domains[i] x prod_k domains[j_k].
///
/// Each ball is covered by a projected lattice with `samples_per_axis` nodes
/// per axis; the sampled maximum is padded by L2 * cov_i + L1 * |cov_j| where
/// cov is the covering radius of each sample set.
double sup_field_norm(const Scenario& scenario, std::size_t i,
                      std::span<const Ball> domains, int samples_per_axis);

/// M(i) over the tube hulls R_i([0, T]) grown by `pad` (may be empty).
DynamicsBounds dynamics_bound(const Scenario& scenario, const ReachTube& tube,
                              std::span<const double> pad = {});

struct TubeOptions {
  /// Extra radius added to each agent's domain when bounding f (e.g. the
  /// grid-snapping allowance). Empty means zero.
  std::vector<double> domain_pad;
  int max_iterations = 50;
  double rel_tol = 1e-6;
  int grid_intervals = 64;
};

struct TubeResult {
  ReachTube tube;
  DynamicsBounds bounds;
  int iterations = 0;
};

/// Fixed-point construction of linearly growing ball tubes
/// rho_i(t) = (M(i) + v_max(i)) t with M(i) certified over the resulting
/// tube. Agents with a user-supplied tube_radius keep a constant tube, which
/// must satisfy (M(i) + v_max(i)) T <= tube_radius.
TubeResult compute_reach_tube(const Scenario& scenario,
                              const TubeOptions& options = {});

/// c_i(sigma) = (M(i) + v_max(i)) sigma.
double inflation_constant(double M, double v_max, double sigma);

struct NestingReport {
  struct Entry {
    std::size_t agent = 0;
    double sigma = 0.0;
    double inflated = 0.0;  // radius of R_i^{c_i(sigma)}([0, T - tau])
    double required = 0.0;  // radius of R_i([0, T - tau + sigma])
    bool ok = true;
  };
  bool ok = true;
  std::vector<Entry> entries;
  std::vector<std::size_t> flagged_agents;
};

/// Checks R_i^{c_i(sigma)}([0, T - tau]) contains R_i([0, T - tau + sigma])
/// for sigma in {dt, tau - dt, tau}.
NestingReport check_nesting(const Scenario& scenario, const ReachTube& tube,
                            const DynamicsBounds& bounds, double dt, double tau);

}  // namespace msabs
