#include "msabs/discretization.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "msabs/error.hpp"

namespace msabs {
namespace {

CertificateEntry open_interval(std::size_t agent, std::string name, double value,
                               double lower, double upper, double margin) {
  CertificateEntry e;
  e.agent = agent;
  e.inequality = std::move(name);
  e.value = value;
  e.lower = lower;
  e.upper = upper;
  if (std::isinf(upper)) {
    e.margin = kUnbounded;
  } else {
    e.margin = (upper - value) / (upper - lower);
  }
  e.ok = value > lower && value < upper && e.margin >= margin - 1e-12;
  return e;
}

int ceil_steps(double ratio) {
  const double c = std::ceil(ratio * (1.0 - 1e-12));
  if (!(c < 1e9)) fail(ErrorKind::kInfeasible, "time step underflow: l exceeds 1e9");
  return std::max(2, static_cast<int>(c));
}

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(6);
  os << x;
  return os.str();
}

}  // namespace

double delta_t_upper_bound(const AgentSpec& a, double M_bold) {
  const double denom = a.L1 * M_bold + a.L2 * a.lambda * a.v_max;
  if (denom <= 0.0) return kUnbounded;
  return (1.0 - a.lambda) * a.v_max / denom;
}

double d_max_upper_bound(const AgentSpec& a, double dt, double mu_bold,
                         double M_bold) {
  const double budget = 2.0 * (1.0 - a.lambda) * a.v_max * dt;
  const double term1 = budget / (1.0 + (a.L1 * mu_bold + a.L2) * dt);
  const double term2 =
      (budget - 2.0 * (a.L1 * M_bold + a.L2 * a.lambda * a.v_max) * dt * dt) /
      (1.0 + a.L1 * mu_bold * dt);
  if (!(term2 > 0.0))
    fail(ErrorKind::kInfeasible, "agent " + std::to_string(a.id) +
                                     ": time step " + fmt(dt) +
                                     " leaves no room for a cell diameter");
  return std::min(term1, term2);
}

double controller_budget(const AgentSpec& a, double dt, double d, double mu_bold,
                         double M_bold, double t) {
  const double k1 = a.L1 * (mu_bold * d / 2.0 + M_bold * t) +
                    a.L2 * ((dt - t) * d / (2.0 * dt) + a.lambda * a.v_max * t);
  return k1 + d / (2.0 * dt) + a.lambda * a.v_max;
}

SpaceTimeDiscretization solve_discretization(const Scenario& sc,
                                             const NetworkParameters& net) {
  const std::size_t N = sc.size();
  const Numerics& num = sc.numerics;
  const double T = sc.horizon;

  const auto cycles = validate_cycle_condition(sc.graph, num.eps_geo);
  if (!cycles.empty()) {
    std::string msg = "cycle condition violated on";
    for (std::size_t k : cycles.front().cycle) msg += " " + std::to_string(sc.agents[k].id);
    msg += " (mu product " + fmt(cycles.front().product) + ")";
    fail(ErrorKind::kInfeasible, msg);
  }

  SpaceTimeDiscretization out;
  out.horizon = T;
  out.dt_bound.resize(N);
  double dt_star = kUnbounded;
  std::size_t binding = 0;
  for (std::size_t i = 0; i < N; ++i) {
    out.dt_bound[i] = delta_t_upper_bound(sc.agents[i], net.M_bold[i]);
    if (out.dt_bound[i] < dt_star) {
      dt_star = out.dt_bound[i];
      binding = i;
    }
  }

  double theta = num.theta;
  const int attempts = sc.steps ? 1 : num.backoff_retries + 1;
  std::string last_failure;
  for (int attempt = 0; attempt < attempts; ++attempt, theta *= 0.5) {
    int steps = 0;
    if (sc.steps) {
      steps = *sc.steps;
      if (steps < 2) fail(ErrorKind::kConfig, "steps must be at least 2");
      if (T / steps > (1.0 - num.margin) * dt_star)
        fail(ErrorKind::kInfeasible,
             "agent " + std::to_string(sc.agents[binding].id) +
                 ": requested time step " + fmt(T / steps) +
                 " violates the time-step bound " + fmt(dt_star) + " with margin");
    } else if (std::isinf(dt_star)) {
      steps = ceil_steps(T / (2.0 * theta * T / 10.0));
    } else {
      steps = ceil_steps(T / (std::min(theta, 1.0 - num.margin) * dt_star));
    }
    const double dt = T / steps;

    std::vector<double> cap(N);
    for (std::size_t i = 0; i < N; ++i) {
      cap[i] = (1.0 - num.margin) *
               d_max_upper_bound(sc.agents[i], dt, net.mu_bold[i], net.M_bold[i]);
      if (sc.agents[i].d_max) cap[i] = std::min(cap[i], *sc.agents[i].d_max);
    }
    std::vector<double> d = cap;
    for (std::size_t pass = 0; pass <= N; ++pass) {
      bool changed = false;
      for (const auto& e : sc.graph.edges()) {
        const double limit = e.mu * d[e.to];
        if (limit < d[e.from]) {
          d[e.from] = limit;
          changed = true;
        }
      }
      if (!changed) break;
    }

    std::size_t low = N;
    for (std::size_t i = 0; i < N; ++i)
      if (!(d[i] > num.d_max_floor)) low = i;
    if (low != N) {
      last_failure = "agent " + std::to_string(sc.agents[low].id) +
                     ": cell diameter " + fmt(d[low]) + " at or below floor " +
                     fmt(num.d_max_floor) + " (dt " + fmt(dt) + ")";
      continue;
    }

    out.steps = steps;
    out.dt = dt;
    out.tau = std::min(2.0 * dt, 0.5 * (dt + T));
    out.theta = theta;
    out.backoffs = attempt;
    out.d_max = d;
    out.d_cap = cap;
    out.certificate = verify_certificate(sc, net, out);
    if (!out.certificate.ok) {
      for (const auto& e : out.certificate.entries)
        if (!e.ok)
          fail(ErrorKind::kInternal, "agent " + std::to_string(sc.agents[e.agent].id) +
                                         ": certificate entry " + e.inequality +
                                         " failed after solving");
    }
    return out;
  }
  fail(ErrorKind::kInfeasible, "no admissible discretization after backoff; " + last_failure);
}

Certificate verify_certificate(const Scenario& sc, const NetworkParameters& net,
                               const SpaceTimeDiscretization& disc) {
  Certificate cert;
  const double m = sc.numerics.margin;
  const double dt = disc.dt;
  for (std::size_t i = 0; i < sc.size(); ++i) {
    const AgentSpec& a = sc.agents[i];
    cert.entries.push_back(open_interval(
        i, "time_step", dt, 0.0, delta_t_upper_bound(a, net.M_bold[i]), m));
    double bound = 0.0;
    try {
      bound = d_max_upper_bound(a, dt, net.mu_bold[i], net.M_bold[i]);
    } catch (const Error&) {
      bound = 0.0;
    }
    cert.entries.push_back(
        open_interval(i, "cell_diameter", disc.d_max[i], 0.0, bound, m));
    for (double t : {0.0, dt}) {
      CertificateEntry e;
      e.agent = i;
      e.inequality = t == 0.0 ? "controller_budget_t0" : "controller_budget_dt";
      e.value = controller_budget(a, dt, disc.d_max[i], net.mu_bold[i],
                                  net.M_bold[i], t);
      e.lower = 0.0;
      e.upper = a.v_max;
      e.margin = (e.upper - e.value) / e.upper;
      e.ok = e.value < e.upper;
      cert.entries.push_back(e);
    }
    for (std::size_t j : sc.graph.neighbors(i)) {
      CertificateEntry e;
      e.agent = j;
      e.inequality = "diameter_ratio:" + std::to_string(a.id);
      e.value = disc.d_max[j];
      e.lower = 0.0;
      e.upper = sc.graph.mu(j, i) * disc.d_max[i];
      e.strict = false;
      e.margin = (e.upper - e.value) / e.upper;
      e.ok = e.value <= e.upper * (1.0 + 1e-12);
      cert.entries.push_back(e);
    }
  }
  {
    CertificateEntry e;
    e.agent = 0;
    e.inequality = "tau_interval";
    e.value = disc.tau;
    e.lower = dt;
    e.upper = disc.horizon;
    e.margin = (e.upper - e.value) / (e.upper - e.lower);
    e.ok = disc.tau > dt && disc.tau < disc.horizon;
    cert.entries.push_back(e);
  }
  {
    CertificateEntry e;
    e.agent = 0;
    e.inequality = "horizon_division";
    e.value = disc.steps * dt;
    e.lower = disc.horizon;
    e.upper = disc.horizon;
    e.strict = false;
    e.margin = 0.0;
    e.ok = disc.steps >= 1 && e.value == disc.horizon;
    cert.entries.push_back(e);
  }
  for (const auto& e : cert.entries) cert.ok = cert.ok && e.ok;
  return cert;
}

namespace {
nlohmann::json number_or_null(double x) {
  return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr);
}
}  // namespace

nlohmann::json to_json(const Certificate& c) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : c.entries)
    entries.push_back({{"agent", e.agent},
                       {"inequality", e.inequality},
                       {"value", e.value},
                       {"lower", e.lower},
                       {"upper", number_or_null(e.upper)},
                       {"margin", number_or_null(e.margin)},
                       {"strict", e.strict},
                       {"ok", e.ok}});
  return {{"ok", c.ok}, {"entries", entries}};
}

nlohmann::json to_json(const SpaceTimeDiscretization& d) {
  nlohmann::json bounds = nlohmann::json::array();
  for (double b : d.dt_bound) bounds.push_back(number_or_null(b));
  return {{"horizon", d.horizon}, {"steps", d.steps},   {"dt", d.dt},
          {"tau", d.tau},         {"theta", d.theta},   {"backoffs", d.backoffs},
          {"d_max", d.d_max},     {"d_cap", d.d_cap},   {"dt_bound", bounds},
          {"certificate", to_json(d.certificate)}};
}

}  // namespace msabs
