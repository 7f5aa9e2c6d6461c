#include "msabs/persistence.hpp"

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "msabs/error.hpp"

namespace msabs {
namespace {

using nlohmann::json;

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

std::vector<double> to_vector(const Vec& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

std::string node_name(const GlobalConfiguration& cfg) {
  std::string s = "\"";
  for (std::size_t i = 0; i < cfg.size(); ++i) s += (i ? "," : "") + std::to_string(cfg[i]);
  return s + "\"";
}

template <typename T>
void put(std::ostream& os, T value) {
  static_assert(std::is_integral_v<T>);
  for (std::size_t b = 0; b < sizeof(T); ++b)
    os.put(static_cast<char>((static_cast<std::make_unsigned_t<T>>(value) >> (8 * b)) & 0xFF));
}

template <typename T>
T get(std::istream& is) {
  std::make_unsigned_t<T> v = 0;
  for (std::size_t b = 0; b < sizeof(T); ++b) {
    const int c = is.get();
    if (c == EOF) fail(ErrorKind::kIo, "binary layer file is truncated");
    v |= static_cast<std::make_unsigned_t<T>>(static_cast<unsigned char>(c)) << (8 * b);
  }
  return static_cast<T>(v);
}

constexpr char kMagic[8] = {'M', 'S', 'A', 'B', 'S', 'L', 'A', 'Y'};

}  // namespace

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string canonical_text(const json& doc) { return doc.dump(2) + "\n"; }

json make_envelope(const std::string& kind, const json& payload) {
  return {{"schema_version", kSchemaVersion},
          {"kind", kind},
          {"content_hash", hex64(fnv1a64(payload.dump()))},
          {"payload", payload}};
}

json open_envelope(const json& env, const std::string& kind) {
  if (!env.is_object() || !env.contains("schema_version") || !env.contains("payload"))
    fail(ErrorKind::kIo, "not an archive envelope");
  const auto& version = env.at("schema_version");
  if (!version.is_number_integer() || version.get<int>() != kSchemaVersion)
    fail(ErrorKind::kIo, "unsupported schema_version " + version.dump() +
                             "; this build reads version " + std::to_string(kSchemaVersion) +
                             ", re-export the file with a matching msabs build");
  if (!kind.empty() && env.value("kind", "") != kind)
    fail(ErrorKind::kIo, "archive kind is '" + env.value("kind", "") + "', expected '" +
                             kind + "'");
  const json& payload = env.at("payload");
  if (env.value("content_hash", "") != hex64(fnv1a64(payload.dump())))
    fail(ErrorKind::kIo, "content hash mismatch");
  return payload;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::kIo, "cannot write " + path);
  out << text;
  if (!out) fail(ErrorKind::kIo, "write failed: " + path);
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kIo, "cannot read " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void save_document(const std::string& path, const std::string& kind, const json& payload) {
  write_text(path, canonical_text(make_envelope(kind, payload)));
}

json load_document(const std::string& path, const std::string& kind) {
  json env;
  try {
    env = json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    fail(ErrorKind::kIo, path + ": " + e.what());
  }
  return open_envelope(env, kind);
}

json scenario_payload(const Scenario& sc) { return sc.source; }

json certificate_payload(const Engine& e) {
  const Scenario& sc = e.scenario();
  json agents = json::array();
  for (std::size_t i = 0; i < sc.size(); ++i) {
    agents.push_back({{"id", sc.agents[i].id},
                      {"M", e.bounds().M[i]},
                      {"mu_bold", e.network().mu_bold[i]},
                      {"M_bold", e.network().M_bold[i]},
                      {"tube_radius_T", e.tube().radius(i, sc.horizon)},
                      {"domain_pad", e.domain_pad()[i]},
                      {"reach_radius", e.reach_radius(i)},
                      {"inflation_tau", e.inflation(i, e.discretization().tau)},
                      {"cell_width", e.grid(i).width()},
                      {"state_cells", e.grid(i).state_set().size()},
                      {"marked_cells", e.grid(i).marked_set().size()},
                      {"extended_cells", e.grid(i).extended_set().size()}});
  }
  return {{"discretization", to_json(e.discretization())},
          {"agents", agents},
          {"nesting_ok", e.nesting().ok},
          {"pad_rounds", e.pad_rounds()}};
}

json decomposition_payload(const CellDecomposition& g, int agent_id) {
  return {{"agent", agent_id},
          {"origin", to_vector(g.origin())},
          {"anchor", to_vector(g.anchor())},
          {"width", g.width()},
          {"d_max", g.d_max()},
          {"lattice_lower", g.lattice_lower()},
          {"lattice_upper", g.lattice_upper()},
          {"state", g.state_set()},
          {"marked", g.marked_set()},
          {"extended", g.extended_set()}};
}

json individual_ts_payload(const Engine& e, const IndividualTransitionSystem& ts) {
  json transitions = json::array();
  for (const auto& [cfg, info] : ts.materialized())
    transitions.push_back({{"configuration", cfg.cells},
                           {"reference", to_vector(info.reference)},
                           {"chi_end", to_vector(info.chi_end)},
                           {"post", info.post},
                           {"extended", info.extended}});
  return {{"agent", e.scenario().agents[ts.agent()].id},
          {"initial", ts.initial_states()},
          {"states", e.grid(ts.agent()).state_set().size()},
          {"transitions", transitions}};
}

json layers_payload(const LayerResult& l) {
  return {{"sizes", l.sizes()},
          {"truncated", l.truncated},
          {"diagnostic", l.diagnostic},
          {"layers", l.layers},
          {"parents", l.parents}};
}

LayerResult layers_from_payload(const json& p) {
  LayerResult l;
  try {
    l.layers = p.at("layers").get<decltype(l.layers)>();
    l.parents = p.at("parents").get<decltype(l.parents)>();
    l.truncated = p.at("truncated").get<bool>();
    l.diagnostic = p.at("diagnostic").get<std::string>();
  } catch (const json::exception& e) {
    fail(ErrorKind::kIo, std::string("malformed layer document: ") + e.what());
  }
  return l;
}

json paths_payload(const std::vector<Path>& paths) { return {{"paths", paths}}; }

std::string individual_ts_dot(const Engine& e, const IndividualTransitionSystem& ts) {
  const int id = e.scenario().agents[ts.agent()].id;
  std::ostringstream os;
  os << "digraph ts_" << id << " {\n";
  for (CellId c : ts.initial_states()) os << "  \"" << c << "\" [shape=doublecircle];\n";
  for (const auto& [cfg, info] : ts.materialized()) {
    std::string label;
    for (std::size_t k = 1; k < cfg.cells.size(); ++k)
      label += (k > 1 ? "," : "") + std::to_string(cfg.cells[k]);
    for (CellId to : info.post)
      os << "  \"" << cfg.cells.front() << "\" -> \"" << to << "\" [label=\"" << label
         << "\"];\n";
  }
  os << "}\n";
  return os.str();
}

std::string product_dot(const ProductTransitionSystem& ts, const LayerResult& layers,
                        std::size_t max_edges) {
  std::ostringstream os;
  os << "digraph product {\n  rankdir=LR;\n";
  for (std::size_t k = 0; k < layers.layers.size(); ++k) {
    os << "  subgraph layer_" << k << " {\n    rank=same;\n";
    for (const auto& cfg : layers.layers[k]) os << "    " << node_name(cfg) << ";\n";
    os << "  }\n";
  }
  std::size_t edges = 0;
  for (std::size_t k = 0; k + 1 < layers.layers.size() && edges < max_edges; ++k) {
    for (const auto& cfg : layers.layers[k]) {
      for (const auto& next : ts.post(cfg)) {
        if (edges++ >= max_edges) break;
        os << "  " << node_name(cfg) << " -> " << node_name(next) << ";\n";
      }
      if (edges >= max_edges) break;
    }
  }
  if (edges >= max_edges) os << "  // edge list truncated at " << max_edges << "\n";
  os << "}\n";
  return os.str();
}

std::string tube_csv(const Scenario& sc, const ReachTube& tube) {
  std::ostringstream os;
  os << std::setprecision(17) << "agent,t";
  for (int a = 0; a < sc.dim(); ++a) os << ",c" << a;
  os << ",radius\n";
  for (std::size_t i = 0; i < tube.size(); ++i) {
    for (std::size_t k = 0; k <= tube.intervals(); ++k) {
      const double t = tube.grid_time(k);
      os << sc.agents[i].id << "," << t;
      for (Eigen::Index a = 0; a < tube.profile(i).center.size(); ++a)
        os << "," << tube.profile(i).center[a];
      os << "," << tube.radius(i, t) << "\n";
    }
  }
  return os.str();
}

std::string layers_csv(const Scenario& sc, const LayerResult& l) {
  std::ostringstream os;
  os << "layer,index,parent";
  for (const auto& a : sc.agents) os << ",cell_" << a.id;
  os << "\n";
  for (std::size_t k = 0; k < l.layers.size(); ++k)
    for (std::size_t m = 0; m < l.layers[k].size(); ++m) {
      os << k << "," << m << "," << l.parents[k][m];
      for (CellId c : l.layers[k][m]) os << "," << c;
      os << "\n";
    }
  return os.str();
}

void write_layers_binary(const std::string& path, const Engine& e, const LayerResult& l) {
  std::ostringstream os;
  os.write(kMagic, sizeof kMagic);
  put<std::uint32_t>(os, kSchemaVersion);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(e.size()));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(e.scenario().dim()));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(l.layers.size()));
  for (const auto& layer : l.layers) {
    put<std::uint64_t>(os, layer.size());
    for (const auto& cfg : layer)
      for (std::size_t i = 0; i < cfg.size(); ++i)
        for (std::int64_t c : e.grid(i).lattice(cfg[i])) put<std::int32_t>(os, static_cast<std::int32_t>(c));
  }
  write_text(path, os.str());
}

std::vector<std::vector<std::vector<Lattice>>> read_layers_binary(const std::string& path) {
  std::istringstream is(read_text(path));
  char magic[sizeof kMagic];
  if (!is.read(magic, sizeof magic) || !std::equal(magic, magic + sizeof magic, kMagic))
    fail(ErrorKind::kIo, "not a binary layer file");
  if (get<std::uint32_t>(is) != kSchemaVersion)
    fail(ErrorKind::kIo, "unsupported binary layer version");
  const auto agents = get<std::uint32_t>(is);
  const auto dim = get<std::uint32_t>(is);
  const auto count = get<std::uint32_t>(is);
  std::vector<std::vector<std::vector<Lattice>>> out(count);
  for (auto& layer : out) {
    const auto size = get<std::uint64_t>(is);
    layer.resize(size, std::vector<Lattice>(agents, Lattice(dim)));
    for (auto& cfg : layer)
      for (auto& lat : cfg)
        for (auto& c : lat) c = get<std::int32_t>(is);
  }
  if (is.peek() != EOF) fail(ErrorKind::kIo, "trailing bytes in binary layer file");
  return out;
}

}  // namespace msabs
