#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "msabs/geometry.hpp"
#include "msabs/scenario.hpp"

namespace msabs {

/// Integer lattice coordinates of a grid cell, relative to the cell that is
/// centered at the agent's initial state.
using Lattice = std::vector<std::int64_t>;

/// Linear index of a cell inside a decomposition's bounding lattice box.
using CellId = std::int64_t;

/// Radii of the ball-shaped regions a decomposition is built against, all
/// centered at the agent's initial state.
struct DecompositionRegions {
  double reach_T = 0.0;           // R_i([0, T])
  double reach_T_minus_dt = 0.0;  // R_i([0, T - dt])
  double reach_T_minus_tau = 0.0; // R_i([0, T - tau])
  double inflation_tau = 0.0;     // c_i(tau)
};

/// Uniform hypercube decomposition of one agent's reachable set.
///
/// Cells are closed boxes of width w = d_max / sqrt(n), anchored so that the
/// initial state is the center of lattice cell 0. Three nested index sets
/// are kept: cells meeting R_i([0, T - dt]) ("marked", the only cells with
/// outgoing transitions), cells meeting R_i([0, T]) (the state set), and the
/// extended cover of R_i^{c_i(tau)}([0, T - tau]).
class CellDecomposition {
 public:
  CellDecomposition() = default;

  /// `extra_cells` grows the extended cover by that many cells per side.
  static CellDecomposition build(std::size_t agent, const Vec& x0, double d_max,
                                 const DecompositionRegions& regions,
                                 std::uint64_t cell_cap, int extra_cells = 0,
                                 double eps = kDefaultEpsGeo);

  std::size_t agent() const { return agent_; }
  int dim() const { return static_cast<int>(origin_.size()); }
  double width() const { return width_; }
  double d_max() const { return d_max_; }
  const Vec& origin() const { return origin_; }
  const Vec& anchor() const { return anchor_; }
  const DecompositionRegions& regions() const { return regions_; }
  const Lattice& lattice_lower() const { return lo_; }
  const Lattice& lattice_upper() const { return hi_; }
  std::uint64_t box_cell_count() const { return flags_.size(); }

  /// Ball hull of every cell in the state set: B(x0, rho(T) + d_max).
  Ball state_hull() const;
  /// Ball hull used for the extended cover: B(x0, rho(T - tau) + c(tau) + d_max).
  Ball extended_hull() const;

  bool in_state_set(CellId id) const { return has(id, kState); }
  bool in_extended_set(CellId id) const { return has(id, kExtended); }
  bool is_marked(CellId id) const { return has(id, kMarked); }

  const std::vector<CellId>& state_set() const { return state_; }
  const std::vector<CellId>& extended_set() const { return extended_; }
  const std::vector<CellId>& marked_set() const { return marked_; }

  Lattice lattice(CellId id) const;
  std::optional<CellId> id_of(std::span<const std::int64_t> lattice) const;
  Box cell(CellId id) const;
  Box cell_at(std::span<const std::int64_t> lattice) const;
  /// Cell center; satisfies |x_G - x| <= d_max / 2 on the cell.
  Vec reference_point(CellId id) const;

  /// Canonical cell of the extended cover containing x. A coordinate within
  /// eps below a face is assigned to the upper cell, as if exactly on it.
  CellId locate(const Vec& x, double eps = kDefaultEpsGeo) const;

  /// Extended-cover cells whose closed box meets `ball` (up to eps), sorted.
  std::vector<CellId> cells_meeting(const Ball& ball, double eps) const;

 private:
  static constexpr std::uint8_t kState = 1;
  static constexpr std::uint8_t kMarked = 2;
  static constexpr std::uint8_t kExtended = 4;

  bool has(CellId id, std::uint8_t bit) const {
    return id >= 0 && static_cast<std::uint64_t>(id) < flags_.size() &&
           (flags_[static_cast<std::size_t>(id)] & bit) != 0;
  }
  CellId linear(std::span<const std::int64_t> lattice) const;

  std::size_t agent_ = 0;
  Vec anchor_;
  Vec origin_;
  double width_ = 0.0;
  double d_max_ = 0.0;
  DecompositionRegions regions_;
  Lattice lo_;
  Lattice hi_;
  std::vector<std::int64_t> stride_;
  std::vector<std::uint8_t> flags_;
  std::vector<CellId> state_;
  std::vector<CellId> marked_;
  std::vector<CellId> extended_;
};

/// Cells of agent i and of its neighbors, in neighbor order j(i).
struct CellConfiguration {
  std::size_t agent = 0;
  std::vector<CellId> cells;  // cells[0] is the agent's own cell

  bool operator==(const CellConfiguration&) const = default;
  auto operator<=>(const CellConfiguration&) const = default;
};

/// One cell per agent.
using GlobalConfiguration = std::vector<CellId>;

/// pr_i: (l_1, ..., l_N) -> (l_i, l_{j1}, ..., l_{jNi}).
CellConfiguration project_configuration(const GlobalConfiguration& config,
                                        const NetworkGraph& graph, std::size_t i);

}  // namespace msabs
