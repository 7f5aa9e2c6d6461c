#include "msabs/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "msabs/error.hpp"

namespace msabs {

using json = nlohmann::json;

NetworkGraph::NetworkGraph(std::size_t agent_count, std::vector<Edge> edges)
    : neighbors_(agent_count), mu_(agent_count) {
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (const auto& e : edges) {
    if (e.from >= agent_count || e.to >= agent_count) {
      fail(ErrorKind::kConfig, "edge references a missing agent");
    }
    if (e.from == e.to) fail(ErrorKind::kConfig, "self loops are not allowed");
    if (!(e.mu > 0.0) || !std::isfinite(e.mu)) {
      fail(ErrorKind::kConfig, "edge mu must be finite and > 0");
    }
    if (!seen.insert({e.from, e.to}).second) {
      fail(ErrorKind::kConfig, "duplicate edge");
    }
  }
  std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
    return std::tie(a.to, a.from) < std::tie(b.to, b.from);
  });
  for (const auto& e : edges) {
    neighbors_[e.to].push_back(e.from);
    mu_[e.to].push_back(e.mu);
  }
  edges_ = std::move(edges);
}

double NetworkGraph::mu(std::size_t j, std::size_t i) const {
  const auto& nb = neighbors_.at(i);
  const auto it = std::find(nb.begin(), nb.end(), j);
  if (it == nb.end()) {
    fail(ErrorKind::kPrecondition, "mu(j, i) queried for a non-neighbor");
  }
  return mu_[i][static_cast<std::size_t>(it - nb.begin())];
}

std::size_t Scenario::index_of(int id) const {
  for (std::size_t k = 0; k < agents.size(); ++k) {
    if (agents[k].id == id) return k;
  }
  fail(ErrorKind::kPrecondition, "no agent with id " + std::to_string(id));
}

namespace {

class Violations {
 public:
  void add(std::string msg) { list_.push_back(std::move(msg)); }
  bool empty() const { return list_.empty(); }
  [[noreturn]] void raise() const {
    std::ostringstream os;
    os << "invalid scenario (" << list_.size() << " problem"
       << (list_.size() == 1 ? "" : "s") << ")";
    for (const auto& m : list_) os << "\n  - " << m;
    fail(ErrorKind::kConfig, os.str());
  }

 private:
  std::vector<std::string> list_;
};

std::optional<double> number_at(const json& obj, const char* key,
                                const std::string& where, Violations& v,
                                bool required) {
  if (!obj.contains(key)) {
    if (required) v.add(where + ": missing field '" + key + "'");
    return std::nullopt;
  }
  const auto& x = obj.at(key);
  if (!x.is_number()) {
    v.add(where + ": '" + key + "' must be a number");
    return std::nullopt;
  }
  const double d = x.get<double>();
  if (!std::isfinite(d)) {
    v.add(where + ": '" + key + "' must be finite");
    return std::nullopt;
  }
  return d;
}

void parse_numerics(const json& doc, Numerics& num, Violations& v) {
  if (!doc.is_object()) {
    v.add("numerics must be an object");
    return;
  }
  const std::string w = "numerics";
  if (auto x = number_at(doc, "eps_geo", w, v, false)) {
    if (*x < 0) v.add("numerics.eps_geo must be >= 0");
    num.eps_geo = *x;
  }
  if (auto x = number_at(doc, "integrator_divisor", w, v, false)) {
    if (*x < 1 || *x != std::floor(*x)) {
      v.add("numerics.integrator_divisor must be a positive integer");
    }
    num.integrator_divisor = static_cast<int>(*x);
  }
  if (doc.contains("seed")) {
    const auto& seed = doc.at("seed");
    if (!seed.is_number_integer() || (!seed.is_number_unsigned() && seed.get<std::int64_t>() < 0)) {
      v.add("numerics.seed must be a non-negative integer");
    } else {
      num.seed = doc.at("seed").get<std::uint64_t>();
    }
  }
  if (auto x = number_at(doc, "margin", w, v, false)) {
    if (!(*x >= 0 && *x < 1)) v.add("numerics.margin must lie in [0, 1)");
    num.margin = *x;
  }
  if (auto x = number_at(doc, "theta", w, v, false)) {
    if (!(*x > 0 && *x <= 1)) v.add("numerics.theta must lie in (0, 1]");
    num.theta = *x;
  }
  if (auto x = number_at(doc, "backoff_retries", w, v, false)) {
    if (*x < 0) v.add("numerics.backoff_retries must be >= 0");
    num.backoff_retries = static_cast<int>(*x);
  }
  if (auto x = number_at(doc, "d_max_floor", w, v, false)) {
    if (*x < 0) v.add("numerics.d_max_floor must be >= 0");
    num.d_max_floor = *x;
  }
  if (auto x = number_at(doc, "sup_samples_per_axis", w, v, false)) {
    if (*x < 2) v.add("numerics.sup_samples_per_axis must be >= 2");
    num.sup_samples_per_axis = static_cast<int>(*x);
  }
  if (auto x = number_at(doc, "r_slack", w, v, false)) {
    if (*x < 0) v.add("numerics.r_slack must be >= 0");
    num.r_slack = *x;
  }
  if (auto x = number_at(doc, "cell_cap", w, v, false)) {
    if (*x < 1) v.add("numerics.cell_cap must be >= 1");
    num.cell_cap = static_cast<std::uint64_t>(*x);
  }
  if (auto x = number_at(doc, "layer_cap", w, v, false)) {
    if (*x < 1) v.add("numerics.layer_cap must be >= 1");
    num.layer_cap = static_cast<std::uint64_t>(*x);
  }
}

}  // namespace

Scenario load_scenario(const json& doc) {
  Violations v;
  Scenario sc;
  sc.source = doc;
  if (!doc.is_object()) {
    v.add("scenario document must be a JSON object");
    v.raise();
  }

  if (auto T = number_at(doc, "horizon", "scenario", v, true)) {
    if (*T <= 0) v.add("horizon must be > 0");
    sc.horizon = *T;
  }
  if (doc.contains("steps")) {
    if (!doc.at("steps").is_number_integer() || doc.at("steps").get<int>() < 1) {
      v.add("steps must be a positive integer");
    } else {
      sc.steps = doc.at("steps").get<int>();
    }
  }
  if (doc.contains("numerics")) parse_numerics(doc.at("numerics"), sc.numerics, v);

  if (!doc.contains("agents") || !doc.at("agents").is_array() ||
      doc.at("agents").empty()) {
    v.add("'agents' must be a non-empty array");
    v.raise();
  }

  // First pass: ids, so that edges and dynamics can refer to them.
  std::map<int, std::size_t> index;
  const auto& agents = doc.at("agents");
  for (std::size_t k = 0; k < agents.size(); ++k) {
    const auto& a = agents[k];
    const std::string where = "agents[" + std::to_string(k) + "]";
    if (!a.is_object() || !a.contains("id") || !a.at("id").is_number_integer()) {
      v.add(where + ": missing integer field 'id'");
      continue;
    }
    const int id = a.at("id").get<int>();
    if (!index.emplace(id, k).second) {
      v.add(where + ": duplicate agent id " + std::to_string(id));
    }
  }
  if (!v.empty()) v.raise();

  std::vector<NetworkGraph::Edge> edges;
  if (doc.contains("edges")) {
    if (!doc.at("edges").is_array()) {
      v.add("'edges' must be an array");
    } else {
      std::size_t k = 0;
      for (const auto& e : doc.at("edges")) {
        const std::string where = "edges[" + std::to_string(k++) + "]";
        if (!e.is_object() || !e.contains("from") || !e.contains("to") ||
            !e.at("from").is_number_integer() || !e.at("to").is_number_integer()) {
          v.add(where + ": needs integer 'from' and 'to'");
          continue;
        }
        const int from = e.at("from").get<int>();
        const int to = e.at("to").get<int>();
        if (!index.count(from) || !index.count(to)) {
          v.add(where + ": dangling neighbor index (" + std::to_string(from) +
                " -> " + std::to_string(to) + ")");
          continue;
        }
        if (from == to) {
          v.add(where + ": self loop on agent " + std::to_string(from));
          continue;
        }
        double mu = 1.0;
        if (auto m = number_at(e, "mu", where, v, false)) {
          if (*m <= 0) v.add(where + ": mu must be > 0");
          mu = *m;
        }
        edges.push_back({index.at(from), index.at(to), mu});
      }
    }
  }
  // Edge problems are reported together with agent problems below.
  bool graph_ok = v.empty();
  if (graph_ok) {
    try {
      sc.graph = NetworkGraph(agents.size(), edges);
    } catch (const Error& err) {
      v.add(err.what());
      graph_ok = false;
    }
  }

  int common_dim = -1;
  for (std::size_t k = 0; k < agents.size(); ++k) {
    const auto& a = agents[k];
    const std::string where = "agent " + std::to_string(a.at("id").get<int>());
    AgentSpec spec;
    spec.id = a.at("id").get<int>();
    if (!a.contains("n") || !a.at("n").is_number_integer() || a.at("n").get<int>() < 1) {
      v.add(where + ": 'n' must be a positive integer");
      continue;
    }
    spec.dim = a.at("n").get<int>();
    if (common_dim < 0) common_dim = spec.dim;
    if (spec.dim != common_dim) v.add(where + ": all agents must share dimension n");

    if (auto x = number_at(a, "v_max", where, v, true)) {
      if (*x <= 0) v.add(where + ": v_max must be > 0");
      spec.v_max = *x;
    }
    if (auto x = number_at(a, "lambda", where, v, true)) {
      if (!(*x > 0 && *x < 1)) v.add(where + ": lambda out of (0,1)");
      spec.lambda = *x;
    }
    if (auto x = number_at(a, "L1", where, v, true)) {
      if (*x < 0) v.add(where + ": L1 must be >= 0");
      spec.L1 = *x;
    }
    if (auto x = number_at(a, "L2", where, v, true)) {
      if (*x < 0) v.add(where + ": L2 must be >= 0");
      spec.L2 = *x;
    }
    if (auto x = number_at(a, "tube_radius", where, v, false)) {
      if (*x <= 0) v.add(where + ": tube_radius must be > 0");
      spec.tube_radius = *x;
    }
    if (auto x = number_at(a, "d_max", where, v, false)) {
      if (*x <= 0) v.add(where + ": d_max must be > 0");
      spec.d_max = *x;
    }
    if (!a.contains("x0") || !a.at("x0").is_array() ||
        static_cast<int>(a.at("x0").size()) != spec.dim) {
      v.add(where + ": 'x0' must be an array of n numbers");
    } else {
      spec.x0 = Vec(spec.dim);
      for (int c = 0; c < spec.dim; ++c) {
        const auto& e = a.at("x0").at(c);
        if (!e.is_number()) {
          v.add(where + ": x0 entries must be numbers");
          break;
        }
        spec.x0(c) = e.get<double>();
      }
    }

    if (!graph_ok) {
      sc.agents.push_back(std::move(spec));
      continue;
    }
    std::vector<int> neighbor_ids;
    for (auto j : sc.graph.neighbors(k)) {
      neighbor_ids.push_back(agents[j].at("id").get<int>());
    }
    if (!a.contains("dynamics")) {
      v.add(where + ": missing field 'dynamics'");
    } else {
      try {
        spec.dynamics = Field::from_json(a.at("dynamics"), spec.dim, neighbor_ids);
      } catch (const Error& err) {
        v.add(where + ": " + err.what());
      }
    }
    sc.agents.push_back(std::move(spec));
  }
  if (!v.empty()) v.raise();
  validate_scenario(sc);
  return sc;
}

Scenario load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kConfig, "cannot open scenario file '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorKind::kConfig, "scenario file '" + path + "' is not valid JSON: " + e.what());
  }
  return load_scenario(doc);
}

void validate_scenario(const Scenario& sc) {
  Violations v;
  if (!(sc.horizon > 0)) v.add("horizon must be > 0");
  if (sc.agents.empty()) v.add("no agents");
  if (sc.graph.size() != sc.agents.size()) v.add("graph size differs from agent count");
  for (const auto& a : sc.agents) {
    const std::string where = "agent " + std::to_string(a.id);
    if (a.dim != sc.dim()) v.add(where + ": inconsistent dimension");
    if (a.x0.size() != a.dim || !a.x0.allFinite()) v.add(where + ": bad x0");
    if (!(a.v_max > 0)) v.add(where + ": v_max must be > 0");
    if (!(a.lambda > 0 && a.lambda < 1)) v.add(where + ": lambda out of (0,1)");
    if (!(a.L1 >= 0) || !(a.L2 >= 0)) v.add(where + ": L1, L2 must be >= 0");
    if (!a.dynamics.valid()) v.add(where + ": dynamics not set");
  }
  if (!v.empty()) v.raise();
}

std::vector<std::vector<std::size_t>> simple_cycles(const NetworkGraph& graph) {
  const std::size_t n = graph.size();
  std::vector<std::vector<std::size_t>> succ(n);
  for (const auto& e : graph.edges()) succ[e.from].push_back(e.to);
  for (auto& s : succ) std::sort(s.begin(), s.end());

  std::vector<std::vector<std::size_t>> cycles;
  std::vector<std::size_t> path;
  std::vector<bool> on_path(n, false);
  for (std::size_t start = 0; start < n; ++start) {
    // Only cycles whose smallest vertex is `start`.
    std::function<void(std::size_t)> dfs = [&](std::size_t u) {
      for (auto w : succ[u]) {
        if (w == start) {
          auto c = path;
          c.push_back(start);
          cycles.push_back(std::move(c));
        } else if (w > start && !on_path[w]) {
          on_path[w] = true;
          path.push_back(w);
          dfs(w);
          path.pop_back();
          on_path[w] = false;
        }
      }
    };
    path = {start};
    on_path.assign(n, false);
    on_path[start] = true;
    dfs(start);
  }
  return cycles;
}

std::vector<CycleViolation> validate_cycle_condition(const NetworkGraph& graph,
                                                     double eps) {
  std::vector<CycleViolation> out;
  for (auto& c : simple_cycles(graph)) {
    double product = 1.0;
    for (std::size_t k = 0; k + 1 < c.size(); ++k) {
      product *= graph.mu(c[k], c[k + 1]);
    }
    if (product < 1.0 - eps) out.push_back({std::move(c), product});
  }
  return out;
}

NetworkParameters network_parameters(const Scenario& sc, std::span<const double> M) {
  if (M.size() != sc.size()) {
    fail(ErrorKind::kPrecondition, "one dynamics bound per agent required");
  }
  NetworkParameters p;
  p.mu_bold.resize(sc.size());
  p.M_bold.resize(sc.size());
  for (std::size_t i = 0; i < sc.size(); ++i) {
    double mu2 = 0.0;
    double m2 = 0.0;
    for (auto j : sc.graph.neighbors(i)) {
      const double mu = sc.graph.mu(j, i);
      const double mv = M[j] + sc.agents[j].v_max;
      mu2 += mu * mu;
      m2 += mv * mv;
    }
    p.mu_bold[i] = std::sqrt(mu2);
    p.M_bold[i] = std::sqrt(m2);
  }
  return p;
}

}  // namespace msabs
