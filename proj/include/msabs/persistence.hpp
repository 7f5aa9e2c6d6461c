#pragma once

#include <cstdint>
#include <string>

#include <nlohmann/json.hpp>

#include "msabs/abstraction.hpp"

namespace msabs {

inline constexpr int kSchemaVersion = 1;

/// FNV-1a, 64 bit.
std::uint64_t fnv1a64(const std::string& bytes);

/// Canonical text of a document: sorted keys, two-space indent, final newline.
std::string canonical_text(const nlohmann::json& doc);

/// {schema_version, kind, content_hash, payload}; the hash covers the compact
/// dump of the payload.
nlohmann::json make_envelope(const std::string& kind, const nlohmann::json& payload);
/// Verifies version, kind (unless empty) and hash; returns the payload.
nlohmann::json open_envelope(const nlohmann::json& envelope, const std::string& kind = "");

void save_document(const std::string& path, const std::string& kind,
                   const nlohmann::json& payload);
nlohmann::json load_document(const std::string& path, const std::string& kind = "");

void write_text(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);

// Structured payloads.
nlohmann::json scenario_payload(const Scenario& scenario);
nlohmann::json certificate_payload(const Engine& engine);
nlohmann::json decomposition_payload(const CellDecomposition& grid, int agent_id);
nlohmann::json individual_ts_payload(const Engine& engine, const IndividualTransitionSystem& ts);
nlohmann::json layers_payload(const LayerResult& layers);
LayerResult layers_from_payload(const nlohmann::json& payload);
nlohmann::json paths_payload(const std::vector<Path>& paths);

// Text formats.
std::string individual_ts_dot(const Engine& engine, const IndividualTransitionSystem& ts);
/// Layered product graph; edges are enumerated from each configuration's
/// post set, skipped beyond `max_edges`.
std::string product_dot(const ProductTransitionSystem& ts, const LayerResult& layers,
                        std::size_t max_edges = 100000);
/// Columns: agent,t,c0..c{n-1},radius.
std::string tube_csv(const Scenario& scenario, const ReachTube& tube);
/// Columns: layer,index,parent,cell_<id>... one row per configuration.
std::string layers_csv(const Scenario& scenario, const LayerResult& layers);

/// Binary layer sidecar, little-endian:
///   magic "MSABSLAY", u32 version, u32 agents, u32 dim, u32 layer count,
///   then per layer: u64 count, followed by count * agents * dim int32
///   lattice coordinates (agent-major within a configuration).
void write_layers_binary(const std::string& path, const Engine& engine,
                         const LayerResult& layers);
/// Returns the lattice coordinates as stored: layers[k][m][i] is agent i's
/// lattice vector.
std::vector<std::vector<std::vector<Lattice>>> read_layers_binary(const std::string& path);

}  // namespace msabs
