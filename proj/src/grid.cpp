#include "msabs/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "msabs/error.hpp"

namespace msabs {
namespace {

// Distance from the anchor to the closed cell at lattice k, by axis offsets.
double lattice_distance(std::span<const std::int64_t> k, double width,
                        std::int64_t dilation) {
  double sq = 0.0;
  for (std::int64_t c : k) {
    const double gap = std::max<double>(
        static_cast<double>(std::llabs(c) - dilation) - 0.5, 0.0);
    sq += gap * gap;
  }
  return width * std::sqrt(sq);
}

// Calls visit(lattice) for each point of [lo, hi] with the last axis fastest.
template <typename Visit>
void for_each_lattice(const Lattice& lo, const Lattice& hi, Visit&& visit) {
  const std::size_t n = lo.size();
  for (std::size_t a = 0; a < n; ++a)
    if (lo[a] > hi[a]) return;
  Lattice k = lo;
  while (true) {
    visit(std::span<const std::int64_t>(k));
    std::size_t a = n;
    while (a > 0) {
      --a;
      if (k[a] < hi[a]) {
        ++k[a];
        break;
      }
      k[a] = lo[a];
      if (a == 0) return;
    }
    if (n == 0) return;
  }
}

}  // namespace

CellDecomposition CellDecomposition::build(std::size_t agent, const Vec& x0,
                                           double d_max,
                                           const DecompositionRegions& regions,
                                           std::uint64_t cell_cap,
                                           int extra_cells, double eps) {
  if (!(d_max > 0.0) || !std::isfinite(d_max))
    fail(ErrorKind::kPrecondition, "cell diameter must be positive and finite");
  if (x0.size() == 0) fail(ErrorKind::kPrecondition, "zero-dimensional state");
  if (extra_cells < 0) fail(ErrorKind::kPrecondition, "negative extra_cells");

  CellDecomposition g;
  const auto n = static_cast<std::size_t>(x0.size());
  g.agent_ = agent;
  g.anchor_ = x0;
  g.d_max_ = d_max;
  g.width_ = d_max / std::sqrt(static_cast<double>(n));
  g.origin_ = x0.array() - 0.5 * g.width_;
  g.regions_ = regions;

  const double r_state = regions.reach_T;
  const double r_marked = regions.reach_T_minus_dt;
  const double r_ext = std::max(
      regions.reach_T_minus_tau + regions.inflation_tau + d_max, regions.reach_T);
  const double reach = std::max(r_ext, r_state) + eps;
  const double half_span = std::ceil(reach / g.width_ + 0.5) + extra_cells;
  const double per_axis = 2.0 * half_span + 1.0;
  if (std::pow(per_axis, static_cast<double>(n)) > static_cast<double>(cell_cap))
    fail(ErrorKind::kInfeasible,
         "discretization too fine: agent " + std::to_string(agent) + " needs about " +
             std::to_string(std::pow(per_axis, static_cast<double>(n))) +
             " cells, cap is " + std::to_string(cell_cap));

  const auto K = static_cast<std::int64_t>(half_span);
  g.lo_.assign(n, -K);
  g.hi_.assign(n, K);
  g.stride_.assign(n, 1);
  for (std::size_t a = n - 1; a > 0; --a)
    g.stride_[a - 1] = g.stride_[a] * (2 * K + 1);
  g.flags_.assign(static_cast<std::size_t>(g.stride_[0] * (2 * K + 1)), 0);

  for_each_lattice(g.lo_, g.hi_, [&](std::span<const std::int64_t> k) {
    const double d0 = lattice_distance(k, g.width_, 0);
    std::uint8_t f = 0;
    if (d0 <= r_state + eps) f |= kState;
    if (d0 <= r_marked + eps) f |= kMarked;
    if (lattice_distance(k, g.width_, extra_cells) <= r_ext + eps || (f & kState))
      f |= kExtended;
    if (f == 0) return;
    const CellId id = g.linear(k);
    g.flags_[static_cast<std::size_t>(id)] = f;
    if (f & kState) g.state_.push_back(id);
    if (f & kMarked) g.marked_.push_back(id);
    g.extended_.push_back(id);
  });
  return g;
}

Ball CellDecomposition::state_hull() const {
  return make_ball(anchor_, regions_.reach_T + d_max_);
}

Ball CellDecomposition::extended_hull() const {
  return make_ball(anchor_, std::max(regions_.reach_T_minus_tau +
                                         regions_.inflation_tau + d_max_,
                                     regions_.reach_T) +
                                d_max_);
}

CellId CellDecomposition::linear(std::span<const std::int64_t> k) const {
  CellId id = 0;
  for (std::size_t a = 0; a < k.size(); ++a) id += (k[a] - lo_[a]) * stride_[a];
  return id;
}

std::optional<CellId> CellDecomposition::id_of(
    std::span<const std::int64_t> k) const {
  if (k.size() != lo_.size()) return std::nullopt;
  for (std::size_t a = 0; a < k.size(); ++a)
    if (k[a] < lo_[a] || k[a] > hi_[a]) return std::nullopt;
  const CellId id = linear(k);
  if (!in_extended_set(id)) return std::nullopt;
  return id;
}

Lattice CellDecomposition::lattice(CellId id) const {
  if (id < 0 || static_cast<std::uint64_t>(id) >= flags_.size())
    fail(ErrorKind::kPrecondition, "cell id out of range");
  Lattice k(lo_.size());
  for (std::size_t a = 0; a < k.size(); ++a) {
    k[a] = lo_[a] + id / stride_[a];
    id %= stride_[a];
  }
  return k;
}

Box CellDecomposition::cell_at(std::span<const std::int64_t> k) const {
  Vec lower(static_cast<Eigen::Index>(k.size()));
  for (std::size_t a = 0; a < k.size(); ++a)
    lower[static_cast<Eigen::Index>(a)] =
        origin_[static_cast<Eigen::Index>(a)] + static_cast<double>(k[a]) * width_;
  return Box{lower, lower.array() + width_};
}

Box CellDecomposition::cell(CellId id) const { return cell_at(lattice(id)); }

Vec CellDecomposition::reference_point(CellId id) const {
  const Lattice k = lattice(id);
  Vec p(static_cast<Eigen::Index>(k.size()));
  for (std::size_t a = 0; a < k.size(); ++a)
    p[static_cast<Eigen::Index>(a)] =
        anchor_[static_cast<Eigen::Index>(a)] + static_cast<double>(k[a]) * width_;
  return p;
}

CellId CellDecomposition::locate(const Vec& x, double eps) const {
  if (x.size() != origin_.size())
    fail(ErrorKind::kPrecondition, "locate: dimension mismatch");
  const std::size_t n = lo_.size();
  Lattice k(n);
  std::vector<bool> near_lower(n, false);
  for (std::size_t a = 0; a < n; ++a) {
    const auto ai = static_cast<Eigen::Index>(a);
    const double s = (x[ai] - origin_[ai]) / width_;
    double f = std::floor(s);
    if ((f + 1.0 - s) * width_ <= eps) f += 1.0;
    if ((s - f) * width_ <= eps) near_lower[a] = true;
    k[a] = static_cast<std::int64_t>(f);
  }
  if (auto id = id_of(k)) return *id;
  // Points on a face of the cover may belong only to the lower cell.
  for (std::size_t a = 0; a < n; ++a) {
    if (!near_lower[a]) continue;
    --k[a];
    if (auto id = id_of(k)) return *id;
    ++k[a];
  }
  fail(ErrorKind::kPrecondition,
       "point outside the cell cover of agent " + std::to_string(agent_));
}

std::vector<CellId> CellDecomposition::cells_meeting(const Ball& ball,
                                                     double eps) const {
  const std::size_t n = lo_.size();
  Lattice a(n), b(n);
  for (std::size_t ax = 0; ax < n; ++ax) {
    const auto i = static_cast<Eigen::Index>(ax);
    const double lo = (ball.center[i] - ball.radius - eps - origin_[i]) / width_;
    const double hi = (ball.center[i] + ball.radius + eps - origin_[i]) / width_;
    a[ax] = std::max<std::int64_t>(lo_[ax], static_cast<std::int64_t>(std::floor(lo)) - 1);
    b[ax] = std::min<std::int64_t>(hi_[ax], static_cast<std::int64_t>(std::floor(hi)) + 1);
  }
  std::vector<CellId> out;
  for_each_lattice(a, b, [&](std::span<const std::int64_t> k) {
    const CellId id = linear(k);
    if (!in_extended_set(id)) return;
    if (ball_intersects_box(ball, cell_at(k), eps)) out.push_back(id);
  });
  std::sort(out.begin(), out.end());
  return out;
}

CellConfiguration project_configuration(const GlobalConfiguration& config,
                                        const NetworkGraph& graph, std::size_t i) {
  if (config.size() != graph.size())
    fail(ErrorKind::kPrecondition, "configuration size does not match network");
  CellConfiguration out;
  out.agent = i;
  out.cells.push_back(config.at(i));
  for (std::size_t j : graph.neighbors(i)) out.cells.push_back(config[j]);
  return out;
}

}  // namespace msabs
