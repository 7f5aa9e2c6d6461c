#pragma once

#include <limits>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "msabs/scenario.hpp"

namespace msabs {

inline constexpr double kUnbounded = std::numeric_limits<double>::infinity();

/// One checked inequality lower < value < upper (or value <= upper when
/// `strict` is false). `margin` is (upper - value) / (upper - lower), or +inf
/// for an unbounded interval.
struct CertificateEntry {
  std::size_t agent = 0;
  std::string inequality;
  double value = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  double margin = 0.0;
  bool strict = true;
  bool ok = true;
};

struct Certificate {
  bool ok = true;
  std::vector<CertificateEntry> entries;
};

struct SpaceTimeDiscretization {
  double horizon = 0.0;
  int steps = 0;  // l, with dt = horizon / steps
  double dt = 0.0;
  double tau = 0.0;
  double theta = 0.0;
  int backoffs = 0;
  std::vector<double> d_max;
  std::vector<double> dt_bound;  // per agent, may be kUnbounded
  std::vector<double> d_cap;     // (1 - margin) * d_max_upper_bound
  Certificate certificate;
};

/// (1 - lambda) v / (L1 M_bold + L2 lambda v); kUnbounded for a zero denominator.
double delta_t_upper_bound(const AgentSpec& agent, double M_bold);

/// min of the two upper bounds on d_max(i) for the given dt. Throws
/// kInfeasible when dt is at or above delta_t_upper_bound.
double d_max_upper_bound(const AgentSpec& agent, double dt, double mu_bold,
                         double M_bold);

/// Analytic bound on |k_i(t)| for t in [0, dt], linear in t.
double controller_budget(const AgentSpec& agent, double dt, double d_max,
                         double mu_bold, double M_bold, double t);

/// Chooses (dt, l, tau, d_max) satisfying every inequality with the configured
/// relative margin. Throws kInfeasible naming the binding agent and inequality.
SpaceTimeDiscretization solve_discretization(const Scenario& scenario,
                                             const NetworkParameters& net);

/// Re-evaluates every inequality for the given parameters.
Certificate verify_certificate(const Scenario& scenario,
                               const NetworkParameters& net,
                               const SpaceTimeDiscretization& disc);

nlohmann::json to_json(const Certificate& certificate);
nlohmann::json to_json(const SpaceTimeDiscretization& disc);

}  // namespace msabs
