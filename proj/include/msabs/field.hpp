#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "msabs/geometry.hpp"

namespace msabs {

/// Coupling feedback f_i(x_i, x_j1, ..., x_jNi) of a single agent.
///
/// Fields are built from a small declarative vocabulary so that the declared
/// Lipschitz constants and bounds can be cross-checked by sampling. Neighbor
/// arguments are passed in the agent's stored neighbor order.
class Field {
 public:
  using Fn = std::function<Vec(const Vec& self, std::span<const Vec> nbrs)>;

  class Node;

  Field() = default;

  static Field zero(int dim);
  /// A x_i + sum_k B_k x_{j_k} + b. Empty neighbor matrices are skipped.
  static Field linear(const Eigen::MatrixXd& self,
                      std::vector<Eigen::MatrixXd> neighbor, const Vec& offset);
  /// gain * sum_k weight_k (x_{j_k} - x_i).
  static Field consensus(double gain, std::vector<double> weights);
  /// Radial saturation: y * min(1, limit / |y|).
  static Field saturation(double limit, Field inner);
  /// amplitude * sin(y), componentwise.
  static Field sine(double amplitude, Field inner);
  static Field sum(std::vector<Field> terms);
  static Field scale(double factor, Field inner);
  static Field custom(Fn fn);

  /// Parses one `dynamics` object. `neighbor_ids` maps neighbor slots to
  /// agent ids, so linear terms can reference neighbors by id.
  static Field from_json(const nlohmann::json& doc, int dim,
                         std::span<const int> neighbor_ids);

  Vec operator()(const Vec& self, std::span<const Vec> nbrs) const;

  int dim() const { return dim_; }
  bool valid() const { return root_ != nullptr; }

 private:
  Field(std::shared_ptr<const Node> root, int dim)
      : root_(std::move(root)), dim_(dim) {}

  std::shared_ptr<const Node> root_;
  int dim_ = 0;
};

}  // namespace msabs
