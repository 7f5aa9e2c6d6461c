#include "msabs/field.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "msabs/error.hpp"

namespace msabs {

class Field::Node {
 public:
  virtual ~Node() = default;
  virtual Vec eval(const Vec& self, std::span<const Vec> nbrs) const = 0;
};

namespace {

using json = nlohmann::json;

class ZeroNode final : public Field::Node {
 public:
  Vec eval(const Vec& x, std::span<const Vec>) const override {
    return Vec::Zero(x.size());
  }
};

class LinearNode final : public Field::Node {
 public:
  LinearNode(Eigen::MatrixXd self, std::vector<Eigen::MatrixXd> nbr, Vec b)
      : self_(std::move(self)), nbr_(std::move(nbr)), offset_(std::move(b)) {}

  Vec eval(const Vec& x, std::span<const Vec> nbrs) const override {
    Vec out = self_ * x + offset_;
    for (std::size_t k = 0; k < nbr_.size() && k < nbrs.size(); ++k) {
      if (nbr_[k].size() != 0) out.noalias() += nbr_[k] * nbrs[k];
    }
    return out;
  }

 private:
  Eigen::MatrixXd self_;
  std::vector<Eigen::MatrixXd> nbr_;
  Vec offset_;
};

class ConsensusNode final : public Field::Node {
 public:
  ConsensusNode(double gain, std::vector<double> weights)
      : gain_(gain), weights_(std::move(weights)) {}

  Vec eval(const Vec& x, std::span<const Vec> nbrs) const override {
    Vec out = Vec::Zero(x.size());
    for (std::size_t k = 0; k < nbrs.size(); ++k) {
      const double wk = k < weights_.size() ? weights_[k] : 1.0;
      out += wk * (nbrs[k] - x);
    }
    return gain_ * out;
  }

 private:
  double gain_;
  std::vector<double> weights_;
};

class SaturationNode final : public Field::Node {
 public:
  SaturationNode(double limit, Field inner)
      : limit_(limit), inner_(std::move(inner)) {}

  Vec eval(const Vec& x, std::span<const Vec> nbrs) const override {
    Vec y = inner_(x, nbrs);
    const double norm = y.norm();
    if (norm > limit_) y *= limit_ / norm;
    return y;
  }

 private:
  double limit_;
  Field inner_;
};

class SineNode final : public Field::Node {
 public:
  SineNode(double amplitude, Field inner)
      : amplitude_(amplitude), inner_(std::move(inner)) {}

  Vec eval(const Vec& x, std::span<const Vec> nbrs) const override {
    return amplitude_ * inner_(x, nbrs).array().sin().matrix();
  }

 private:
  double amplitude_;
  Field inner_;
};

class SumNode final : public Field::Node {
 public:
  explicit SumNode(std::vector<Field> terms) : terms_(std::move(terms)) {}

  Vec eval(const Vec& x, std::span<const Vec> nbrs) const override {
    Vec out = Vec::Zero(x.size());
    for (const auto& t : terms_) out += t(x, nbrs);
    return out;
  }

 private:
  std::vector<Field> terms_;
};

class ScaleNode final : public Field::Node {
 public:
  ScaleNode(double factor, Field inner)
      : factor_(factor), inner_(std::move(inner)) {}

  Vec eval(const Vec& x, std::span<const Vec> nbrs) const override {
    return factor_ * inner_(x, nbrs);
  }

 private:
  double factor_;
  Field inner_;
};

class CustomNode final : public Field::Node {
 public:
  explicit CustomNode(Field::Fn fn) : fn_(std::move(fn)) {}
  Vec eval(const Vec& x, std::span<const Vec> nbrs) const override {
    return fn_(x, nbrs);
  }

 private:
  Field::Fn fn_;
};

[[noreturn]] void bad(const std::string& what) {
  fail(ErrorKind::kConfig, "dynamics: " + what);
}

double finite_number(const json& doc, const char* key) {
  if (!doc.contains(key) || !doc.at(key).is_number()) {
    bad(std::string("missing numeric field '") + key + "'");
  }
  const double v = doc.at(key).get<double>();
  if (!std::isfinite(v)) bad(std::string("'") + key + "' must be finite");
  return v;
}

Eigen::MatrixXd parse_matrix(const json& doc, int dim, const std::string& what) {
  if (!doc.is_array() || static_cast<int>(doc.size()) != dim) {
    bad(what + " must be a " + std::to_string(dim) + "x" +
        std::to_string(dim) + " array of rows");
  }
  Eigen::MatrixXd m(dim, dim);
  for (int r = 0; r < dim; ++r) {
    const auto& row = doc.at(r);
    if (!row.is_array() || static_cast<int>(row.size()) != dim) {
      bad(what + " row " + std::to_string(r) + " has wrong length");
    }
    for (int c = 0; c < dim; ++c) {
      if (!row.at(c).is_number()) bad(what + " entries must be numbers");
      m(r, c) = row.at(c).get<double>();
    }
  }
  if (!m.allFinite()) bad(what + " entries must be finite");
  return m;
}

std::size_t neighbor_slot(std::span<const int> neighbor_ids, int id) {
  const auto it = std::find(neighbor_ids.begin(), neighbor_ids.end(), id);
  if (it == neighbor_ids.end()) {
    bad("agent " + std::to_string(id) + " is referenced but is not a neighbor");
  }
  return static_cast<std::size_t>(it - neighbor_ids.begin());
}

const json& inner_of(const json& doc) {
  if (!doc.contains("of")) bad("missing field 'of'");
  return doc.at("of");
}

}  // namespace

Field Field::zero(int dim) { return Field(std::make_shared<ZeroNode>(), dim); }

Field Field::linear(const Eigen::MatrixXd& self,
                    std::vector<Eigen::MatrixXd> neighbor, const Vec& offset) {
  const int dim = static_cast<int>(self.rows());
  return Field(std::make_shared<LinearNode>(self, std::move(neighbor), offset),
               dim);
}

Field Field::consensus(double gain, std::vector<double> weights) {
  return Field(std::make_shared<ConsensusNode>(gain, std::move(weights)), 0);
}

Field Field::saturation(double limit, Field inner) {
  const int dim = inner.dim();
  return Field(std::make_shared<SaturationNode>(limit, std::move(inner)), dim);
}

Field Field::sine(double amplitude, Field inner) {
  const int dim = inner.dim();
  return Field(std::make_shared<SineNode>(amplitude, std::move(inner)), dim);
}

Field Field::sum(std::vector<Field> terms) {
  int dim = 0;
  for (const auto& t : terms) dim = std::max(dim, t.dim());
  return Field(std::make_shared<SumNode>(std::move(terms)), dim);
}

Field Field::scale(double factor, Field inner) {
  const int dim = inner.dim();
  return Field(std::make_shared<ScaleNode>(factor, std::move(inner)), dim);
}

Field Field::custom(Fn fn) { return Field(std::make_shared<CustomNode>(std::move(fn)), 0); }

Vec Field::operator()(const Vec& self, std::span<const Vec> nbrs) const {
  if (!root_) return Vec::Zero(self.size());
  return root_->eval(self, nbrs);
}

Field Field::from_json(const json& doc, int dim,
                       std::span<const int> neighbor_ids) {
  if (doc.is_string()) {
    if (doc.get<std::string>() == "zero") return zero(dim);
    bad("unknown builtin '" + doc.get<std::string>() + "'");
  }
  if (!doc.is_object() || !doc.contains("type") || !doc.at("type").is_string()) {
    bad("expected an object with a string 'type'");
  }
  const std::string type = doc.at("type").get<std::string>();

  if (type == "zero") return zero(dim);

  if (type == "linear") {
    Eigen::MatrixXd self = Eigen::MatrixXd::Zero(dim, dim);
    if (doc.contains("self")) self = parse_matrix(doc.at("self"), dim, "linear.self");
    std::vector<Eigen::MatrixXd> nbr(neighbor_ids.size());
    if (doc.contains("neighbors")) {
      const auto& list = doc.at("neighbors");
      if (!list.is_array()) bad("linear.neighbors must be an array");
      for (const auto& entry : list) {
        if (!entry.contains("agent") || !entry.at("agent").is_number_integer()) {
          bad("linear.neighbors entries need an integer 'agent'");
        }
        const auto slot = neighbor_slot(neighbor_ids, entry.at("agent").get<int>());
        if (!entry.contains("matrix")) bad("linear.neighbors entries need 'matrix'");
        nbr[slot] = parse_matrix(entry.at("matrix"), dim, "linear.neighbors.matrix");
      }
    }
    Vec offset = Vec::Zero(dim);
    if (doc.contains("offset")) {
      const auto& b = doc.at("offset");
      if (!b.is_array() || static_cast<int>(b.size()) != dim) {
        bad("linear.offset must have " + std::to_string(dim) + " entries");
      }
      for (int k = 0; k < dim; ++k) offset(k) = b.at(k).get<double>();
    }
    return linear(self, std::move(nbr), offset);
  }

  if (type == "consensus") {
    const double gain = doc.contains("gain") ? finite_number(doc, "gain") : 1.0;
    std::vector<double> weights(neighbor_ids.size(), 1.0);
    if (doc.contains("weights")) {
      const auto& list = doc.at("weights");
      if (!list.is_array()) bad("consensus.weights must be an array");
      for (const auto& entry : list) {
        const auto slot = neighbor_slot(neighbor_ids, entry.at("agent").get<int>());
        weights[slot] = finite_number(entry, "weight");
      }
    }
    Field f = consensus(gain, std::move(weights));
    f.dim_ = dim;
    return f;
  }

  if (type == "saturation") {
    const double limit = finite_number(doc, "limit");
    if (limit < 0.0) bad("saturation.limit must be >= 0");
    return saturation(limit, from_json(inner_of(doc), dim, neighbor_ids));
  }

  if (type == "sine") {
    return sine(finite_number(doc, "amplitude"),
                from_json(inner_of(doc), dim, neighbor_ids));
  }

  if (type == "scale") {
    return scale(finite_number(doc, "factor"),
                 from_json(inner_of(doc), dim, neighbor_ids));
  }

  if (type == "sum") {
    if (!doc.contains("terms") || !doc.at("terms").is_array()) {
      bad("sum.terms must be an array");
    }
    std::vector<Field> terms;
    for (const auto& t : doc.at("terms")) {
      terms.push_back(from_json(t, dim, neighbor_ids));
    }
    Field f = sum(std::move(terms));
    f.dim_ = dim;
    return f;
  }

  bad("unknown type '" + type + "'");
}

}  // namespace msabs
