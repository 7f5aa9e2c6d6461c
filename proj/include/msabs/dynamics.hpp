#pragma once

#include <functional>
#include <random>
#include <span>
#include <vector>

#include "msabs/geometry.hpp"
#include "msabs/scenario.hpp"

namespace msabs {

using OdeRhs = std::function<Vec(double t, const Vec& x)>;

/// Samples of a trajectory at uniformly spaced nodes, including both ends.
struct Trajectory {
  std::vector<double> t;
  std::vector<Vec> x;

  const Vec& back() const { return x.back(); }
  /// Piecewise-linear interpolation; t is clamped to the sampled span.
  Vec at(double time) const;
};

/// One classical Runge-Kutta step of size h.
Vec rk4_step(const OdeRhs& rhs, double t, const Vec& x, double h);

/// Fixed-step RK4 from t0 to tf with `steps` steps.
Trajectory integrate(const OdeRhs& rhs, const Vec& x0, double t0, double tf,
                     int steps);

/// g_i: f_i with every argument first projected onto its domain ball. Equal
/// to f_i on the domains, bounded by M(i), and Lipschitz with the same
/// constants since projections onto convex sets are nonexpansive.
class ExtendedField {
 public:
  ExtendedField() = default;
  ExtendedField(Field f, Ball own_domain, std::vector<Ball> neighbor_domains);

  Vec operator()(const Vec& self, std::span<const Vec> nbrs) const;
  const Ball& own_domain() const { return own_; }
  const std::vector<Ball>& neighbor_domains() const { return nbr_; }

 private:
  Field f_;
  Ball own_;
  std::vector<Ball> nbr_;
};

/// chi_i on [0, dt] with neighbors frozen at their reference points.
Trajectory reference_trajectory(const ExtendedField& g, const Vec& x_ref,
                                const std::vector<Vec>& neighbor_refs, double dt,
                                int steps);

/// r_i = lambda * dt * v_max.
double reach_radius(double lambda, double dt, double v_max);

/// w_i = (x_target - chi(dt)) / (lambda dt). Rejects targets farther than
/// lambda * dt * v_max (up to eps) from the endpoint.
Vec target_parameter(const Vec& x_target, const Vec& chi_end, double lambda,
                     double dt, double v_max, double eps = kDefaultEpsGeo);

/// A point of `cell` within |chi_end - p| <= dist(chi_end, cell) + eta,
/// pushed by eta towards the cell center so it lies strictly inside.
Vec witness_point(const Box& cell, const Vec& chi_end, double eta);

/// k_i(t, x_i, x_j) = k1 + k2 + k3 for one agent and one step.
class HybridController {
 public:
  struct Parts {
    Vec k1, k2, k3;
    Vec total() const { return k1 + k2 + k3; }
  };

  HybridController() = default;
  HybridController(ExtendedField g, Trajectory chi, std::vector<Vec> neighbor_refs,
                   const Vec& x_ref, const Vec& x_start, const Vec& w,
                   double lambda, double dt);

  double dt() const { return dt_; }
  const Trajectory& chi() const { return chi_; }
  const ExtendedField& field() const { return g_; }
  const std::vector<Vec>& neighbor_refs() const { return refs_; }
  const Vec& w() const { return w_; }

  /// Uses chi interpolated linearly between its nodes. Throws for t outside
  /// [0, dt].
  Parts parts(double t, const Vec& x, std::span<const Vec> nbrs) const;
  /// Same, with the exact value chi(t) supplied by the caller.
  Parts parts_at(const Vec& chi_t, const Vec& x, std::span<const Vec> nbrs) const;
  Vec operator()(double t, const Vec& x, std::span<const Vec> nbrs) const {
    return parts(t, x, nbrs).total();
  }
  /// chi'(t) given chi(t).
  Vec chi_rate(const Vec& chi_t) const { return g_(chi_t, refs_); }

 private:
  ExtendedField g_;
  Trajectory chi_;
  std::vector<Vec> refs_;
  Vec k2_;
  Vec k3_;
  Vec w_;
  double dt_ = 0.0;
};

/// Continuous neighbor disturbance d(t) = P_t(a + b t), where P_t projects
/// onto (cell + B(growth t)) intersected with `hull`.
class DisturbanceSignal {
 public:
  DisturbanceSignal() = default;
  DisturbanceSignal(Box cell, double growth, Ball hull, Vec a, Vec b);

  /// a uniform in the cell, b uniform in B(growth).
  static DisturbanceSignal sample(const Box& cell, double growth, const Ball& hull,
                                  std::mt19937_64& rng);

  Vec operator()(double t) const;
  /// True iff x lies in the admissible set at time t (up to eps).
  bool admissible(double t, const Vec& x, double eps) const;

  const Box& cell() const { return cell_; }
  double growth() const { return growth_; }

 private:
  Box cell_;
  double growth_ = 0.0;
  Ball hull_;
  Vec a_, b_;
};

/// Uniform point in a box / ball.
Vec uniform_in_box(const Box& box, std::mt19937_64& rng);
Vec uniform_in_ball(const Ball& ball, std::mt19937_64& rng);

}  // namespace msabs
