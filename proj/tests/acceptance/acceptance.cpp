// Acceptance harness: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Expected values come from formulas written out here, not from the
// library.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "fixtures.hpp"
#include "msabs/cli.hpp"
#include "msabs/discretization.hpp"
#include "msabs/error.hpp"
#include "msabs/persistence.hpp"
#include "msabs/validation.hpp"

using namespace msabs;
namespace fs = std::filesystem;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

struct Verdict {
  bool ok = true;
  std::ostringstream detail;

  void require(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      detail << "[fail: " << what << "] ";
    }
  }
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string scenario_path(const std::string& name) {
  return std::string(MSABS_SCENARIO_DIR) + "/" + name;
}

// (1 - lambda) v / (L1 M + L2 lambda v)
double oracle_dt_bound(double L1, double L2, double v, double lam, double M) {
  const double den = L1 * M + L2 * lam * v;
  return den > 0 ? (1 - lam) * v / den : INFINITY;
}

double oracle_d_bound(double L1, double L2, double v, double lam, double M, double mu,
                      double dt) {
  const double t1 = 2 * (1 - lam) * v * dt / (1 + (L1 * mu + L2) * dt);
  const double t2 =
      (2 * (1 - lam) * v * dt - 2 * (L1 * M + L2 * lam * v) * dt * dt) / (1 + L1 * mu * dt);
  return std::min(t1, t2);
}

// Minimum mu product over every simple cycle, by exhaustive DFS.
double min_cycle_product(const Scenario& sc) {
  const std::size_t N = sc.size();
  std::vector<std::vector<std::pair<std::size_t, double>>> out(N);
  for (const auto& e : sc.graph.edges()) out[e.from].push_back({e.to, e.mu});
  double best = INFINITY;
  std::vector<bool> seen(N, false);
  std::function<void(std::size_t, std::size_t, double)> dfs = [&](std::size_t start,
                                                                   std::size_t at, double prod) {
    for (auto [next, mu] : out[at]) {
      if (next == start) best = std::min(best, prod * mu);
      else if (next > start && !seen[next]) {
        seen[next] = true;
        dfs(start, next, prod * mu);
        seen[next] = false;
      }
    }
  };
  for (std::size_t s = 0; s < N; ++s) {
    seen[s] = true;
    dfs(s, s, 1.0);
    seen[s] = false;
  }
  return best;
}

json ring_doc(int n) {
  const json c = {{"type", "consensus"}, {"gain", 0.5}};
  json agents = json::array(), edges = json::array();
  for (int k = 0; k < n; ++k) {
    const double a = 2 * M_PI * k / n;
    agents.push_back(fixtures::agent_doc(k + 1, 2, {0.4 * std::cos(a), 0.4 * std::sin(a)}, c,
                                         0.5, 0.5));
    edges.push_back({{"from", (k + n - 1) % n + 1}, {"to", k + 1}, {"mu", 1.0}});
  }
  return {{"horizon", 0.2}, {"agents", agents}, {"edges", edges}, {"numerics", {{"seed", 5}}}};
}

void criterion1(Verdict& v) {
  AgentSpec a;
  a.L1 = 1;
  a.L2 = 1;
  a.v_max = 1;
  a.lambda = 0.5;
  const double dt_bound = delta_t_upper_bound(a, 2.0);
  const double d_bound = d_max_upper_bound(a, 0.1, 1.0, 2.0);
  // 0.5 / 2.5 and min(0.1 / 1.2, (0.1 - 0.05) / 1.1).
  v.require(std::abs(dt_bound - 0.2) <= 1e-12, "delta_t bound");
  v.require(std::abs(d_bound - 1.0 / 22.0) <= 1e-12, "d_max bound");
  v.require(std::abs(oracle_dt_bound(1, 1, 1, 0.5, 2) - 0.2) <= 1e-15, "oracle self-check");
  v.detail.precision(17);
  v.detail << "delta_t*=" << dt_bound << " d_max*=" << d_bound;
}

void criterion2(Verdict& v) {
  std::vector<std::pair<std::string, Scenario>> cases;
  for (const char* f : {"single_1d", "consensus_pair", "chain3"})
    cases.emplace_back(f, load_scenario_file(scenario_path(std::string(f) + ".json")));
  cases.emplace_back("ring5", load_scenario(ring_doc(5)));

  double worst_solve = 0.0, worst_build = 0.0;
  for (const auto& [name, sc] : cases) {
    const auto b0 = Clock::now();
    const Engine e = Engine::build(sc);
    worst_build = std::max(worst_build, seconds_since(b0));
    const auto t0 = Clock::now();
    const auto disc = solve_discretization(sc, e.network());
    worst_solve = std::max(worst_solve, seconds_since(t0));
    const double m = sc.numerics.margin;
    v.require(m >= 0.05, name + ": margin below 0.05");
    v.require(disc.certificate.ok, name + ": certificate flagged");
    v.require(static_cast<double>(disc.steps) * disc.dt == sc.horizon,
              name + ": l * dt != T");
    v.require(min_cycle_product(sc) >= 1.0 - 1e-12, name + ": cycle condition");

    for (std::size_t i = 0; i < sc.size(); ++i) {
      const AgentSpec& a = sc.agents[i];
      double mu2 = 0.0, M2 = 0.0;
      for (std::size_t j : sc.graph.neighbors(i)) {
        mu2 += sc.graph.mu(j, i) * sc.graph.mu(j, i);
        const double mj = e.bounds().M[j] + sc.agents[j].v_max;
        M2 += mj * mj;
      }
      const double mu = std::sqrt(mu2), M = std::sqrt(M2);
      const double dt_bound = oracle_dt_bound(a.L1, a.L2, a.v_max, a.lambda, M);
      // Strict membership in (0, bound) with at least m of the interval spare.
      v.require(disc.dt > 0 && (std::isinf(dt_bound) || disc.dt <= (1 - m) * dt_bound),
                name + ": dt margin agent " + std::to_string(a.id));
      const double d_bound = oracle_d_bound(a.L1, a.L2, a.v_max, a.lambda, M, mu, disc.dt);
      v.require(disc.d_max[i] > 0 && disc.d_max[i] <= (1 - m) * d_bound * (1 + 1e-12),
                name + ": d_max margin agent " + std::to_string(a.id));
      for (std::size_t j : sc.graph.neighbors(i))
        v.require(disc.d_max[j] <= sc.graph.mu(j, i) * disc.d_max[i] * (1 + 1e-12),
                  name + ": diameter ratio on edge into " + std::to_string(a.id));
    }
  }
  v.require(worst_solve < 1.0, "solver slower than 1 s");
  v.detail << cases.size() << " scenarios (N<=5), slowest solve " << worst_solve
           << " s, slowest full engine build " << worst_build << " s";
}

void criterion3(Verdict& v) {
  auto error = [](int steps) {
    const auto tr =
        integrate([](double, const Vec& x) { return Vec(-x); }, Vec::Ones(1), 0.0, 0.1, steps);
    return std::abs(tr.back()[0] - std::exp(-0.1));
  };
  const double e128 = error(128);
  v.require(e128 <= 1e-9, "error at 128 steps");
  // Ratios are measured where truncation error dominates rounding.
  double worst_ratio = INFINITY;
  for (int s = 1; s <= 8; s *= 2) worst_ratio = std::min(worst_ratio, error(s) / error(2 * s));
  v.require(worst_ratio >= 12.0, "halving ratio");
  v.detail << "err(128)=" << e128 << " min halving ratio over 1..16 steps=" << worst_ratio;
}

void criterion4(Verdict& v) {
  const Engine e = Engine::build(load_scenario_file(scenario_path("single_1d.json")));
  const auto& g = e.grid(0);
  v.require(std::abs(g.width() - 0.04) <= 1e-15, "cell width 0.04");
  v.require(std::abs(e.reach_radius(0) - 0.05) <= 1e-15, "reach radius 0.05");
  const ProductTransitionSystem ts(e);
  std::size_t checked = 0;
  for (CellId c : g.marked_set()) {
    const Lattice k = g.lattice(c);
    std::set<std::int64_t> offsets;
    for (CellId s : ts.agent(0).transition(CellConfiguration{0, {c}}).post)
      offsets.insert(g.lattice(s)[0] - k[0]);
    std::set<std::int64_t> expected;
    for (std::int64_t d : {-1, 0, 1}) {
      const auto id = g.id_of(Lattice{k[0] + d});
      if (id && g.in_state_set(*id)) expected.insert(d);
    }
    v.require(offsets == expected && offsets.count(0) == 1,
              "offsets at cell " + std::to_string(k[0]));
    if (expected.size() == 3) ++checked;
  }
  const auto layers = ts.build_layers(5);
  const std::vector<std::size_t> want{1, 3, 5, 7, 9, 11};
  v.require(layers.sizes() == want, "layer sizes");
  v.detail << checked << " interior cells with offsets {-1,0,+1}; layers";
  for (auto n : layers.sizes()) v.detail << " " << n;
}

struct HarnessResult {
  std::size_t transitions = 0, trials = 0, violations = 0;
  double max_input = 0.0, v_max = 0.0;
};

// Criterion 5 harness: product transitions along sampled paths, every agent
// checked with `trials` closed-loop runs.
HarnessResult consensus_harness(double d_max_scale, std::size_t transitions, int trials) {
  EngineOptions opt;
  opt.d_max_scale = d_max_scale;
  const Engine e = Engine::build(load_scenario_file(scenario_path("consensus_pair.json")), opt);
  const ProductTransitionSystem ts(e);
  std::mt19937_64 rng(e.scenario().numerics.seed);
  HarnessResult r;
  r.v_max = e.scenario().agents[0].v_max;
  while (r.transitions < transitions) {
    const Path path = ts.sample_path(e.steps(), rng);
    for (std::size_t k = 0; k + 1 < path.size() && r.transitions < transitions; ++k) {
      for (std::size_t i = 0; i < e.size(); ++i) {
        ConsistencyOptions co;
        co.trials = trials;
        co.endpoint_tolerance = 1e-6;
        co.seed = derive_seed(e.scenario().numerics.seed, r.transitions * e.size() + i);
        const auto cfg = project_configuration(path[k], e.scenario().graph, i);
        const auto rep = check_consistency(ts, cfg, path[k + 1][i], co);
        r.trials += rep.trials.size();
        r.violations += rep.violations();
        r.max_input = std::max(r.max_input, rep.max_input());
      }
      ++r.transitions;
    }
  }
  return r;
}

void criterion5(Verdict& v) {
  const auto t0 = Clock::now();
  const auto r = consensus_harness(1.0, 10, 100);
  const double secs = seconds_since(t0);
  v.require(r.transitions >= 10 && r.trials >= 10 * 100 * 2, "coverage");
  v.require(r.violations == 0, "violations");
  v.require(secs < 60.0, "time");
  v.detail << r.transitions << " product transitions, " << r.trials << " trials, "
           << r.violations << " violations, max|k|=" << r.max_input << ", " << secs << " s";
}

void criterion6(Verdict& v) {
  const auto t0 = Clock::now();
  const Engine e = Engine::build(load_scenario_file(scenario_path("chain3.json")));
  const ProductTransitionSystem ts(e);
  v.require(e.steps() <= 5, "l <= 5");
  std::mt19937_64 rng(e.scenario().numerics.seed);
  std::size_t realized = 0;
  double max_input = 0.0, worst = 0.0;
  for (int p = 0; p < 50; ++p) {
    const Path path = ts.sample_path(e.steps(), rng);
    const auto rep = realize_path(ts, path, 1e-9);
    if (rep.ok && rep.steps.size() == static_cast<std::size_t>(e.steps())) ++realized;
    for (std::size_t k = 0; k < rep.steps.size(); ++k)
      for (std::size_t i = 0; i < e.size(); ++i) {
        const double dist =
            distance_to_set(rep.steps[k].end_state[i], e.grid(i).cell(path[k + 1][i]));
        worst = std::max(worst, dist);
        v.require(rep.steps[k].agents[i].max_input < e.scenario().agents[i].v_max,
                  "input bound");
        max_input = std::max(max_input, rep.steps[k].agents[i].max_input);
      }
  }
  const double secs = seconds_since(t0);
  v.require(realized == 50, "paths realized");
  v.require(worst <= 1e-9, "landing tolerance");
  v.require(secs < 300.0, "time");
  v.detail << realized << "/50 paths of length " << e.steps() << ", worst landing distance "
           << worst << ", max|k|=" << max_input << ", " << secs << " s";
}

void criterion7(Verdict& v) {
  const auto r = consensus_harness(3.0, 10, 100);
  v.require(r.violations > 0, "inflated d_max not detected");

  const Engine e = Engine::build(load_scenario_file(scenario_path("chain3.json")));
  const ProductTransitionSystem ts(e);
  std::mt19937_64 rng(77);
  int located = 0, cases = 0;
  for (int n = 0; n < 6; ++n) {
    Path path = ts.sample_path(e.steps(), rng);
    const std::size_t step = 1 + rng() % static_cast<std::size_t>(e.steps());
    const std::size_t agent = rng() % e.size();
    const auto& g = e.grid(agent);
    Lattice k = g.lattice(path[step][agent]);
    k[0] += 3;
    if (!g.id_of(k)) k[0] -= 6;
    path[step][agent] = *g.id_of(k);
    const auto rep = realize_path(ts, path, 1e-9);
    ++cases;
    if (!rep.ok && rep.failed_step == step && rep.failed_agent == agent) ++located;
  }
  v.require(located == cases, "corrupted paths located");
  v.detail << "x3 d_max: " << r.violations << " violating trials of " << r.trials
           << "; corrupted paths located " << located << "/" << cases;
}

void criterion8(Verdict& v) {
  const auto t0 = Clock::now();
  std::size_t checks = 0, violations = 0;
  double worst = -INFINITY;
  for (const char* f : {"chain3", "consensus_pair"}) {
    const Scenario sc = load_scenario_file(scenario_path(std::string(f) + ".json"));
    const Engine e = Engine::build(sc);
    const auto audit = audit_tube(sc, e.tube(), 1000, sc.numerics.seed);
    checks += audit.checks;
    violations += audit.violations;
    worst = std::max(worst, audit.worst_excess);
  }
  const double secs = seconds_since(t0);
  v.require(violations == 0, "tube violations");
  v.require(secs < 60.0, "time");
  v.detail << "2x1000 input signals, " << checks << " grid-time checks, worst excess " << worst
           << ", " << secs << " s";
}

void criterion9(Verdict& v) {
  const fs::path root = fs::temp_directory_path() / "msabs_acceptance_determinism";
  fs::remove_all(root);
  std::ostringstream sink;
  for (const char* run : {"a", "b"})
    for (const char* cmd : {"abstract", "plan", "validate"}) {
      const std::string out = (root / run).string();
      const std::string sc = scenario_path("chain3.json");
      const char* argv[] = {"msabs", cmd, "--scenario", sc.c_str(), "--depth", "2",
                            "--out", out.c_str()};
      const int code = run_cli(8, argv, sink, sink);
      v.require(code == kExitOk, std::string(cmd) + " exit code");
    }
  std::size_t compared = 0, differing = 0;
  for (const auto& entry : fs::directory_iterator(root / "a")) {
    const auto name = entry.path().filename().string();
    if (name == "timings.json") continue;
    const fs::path other = root / "b" / name;
    if (!fs::exists(other) || read_text(entry.path().string()) != read_text(other.string()))
      ++differing;
    ++compared;
  }
  fs::remove_all(root);
  v.require(compared >= 10 && differing == 0, "exports differ");
  v.detail << compared << " export files compared, " << differing << " differing";
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, void (*)(Verdict&)>> criteria = {
      {"closed-form step and diameter bounds", criterion1},
      {"solver certificate", criterion2},
      {"RK4 accuracy and order", criterion3},
      {"1D successor offsets and layer growth", criterion4},
      {"2-agent consensus consistency", criterion5},
      {"3-agent chain path realization", criterion6},
      {"negative controls", criterion7},
      {"reach tube containment", criterion8},
      {"deterministic exports", criterion9},
  };
  int failures = 0;
  for (std::size_t n = 0; n < criteria.size(); ++n) {
    Verdict v;
    try {
      criteria[n].second(v);
    } catch (const std::exception& e) {
      v.ok = false;
      v.detail << "exception: " << e.what();
    }
    if (!v.ok) ++failures;
    std::cout << (v.ok ? "PASS" : "FAIL") << " criterion " << n + 1 << " ("
              << criteria[n].first << "): " << v.detail.str() << std::endl;
  }
  std::cout << (criteria.size() - static_cast<std::size_t>(failures)) << "/" << criteria.size()
            << " criteria passed" << std::endl;
  return failures == 0 ? 0 : 1;
}
