#include "msabs/geometry.hpp"

#include <cmath>

#include "msabs/error.hpp"

namespace msabs {
namespace {

void require_same_dim(Eigen::Index a, Eigen::Index b) {
  if (a != b) {
    fail(ErrorKind::kPrecondition,
         "dimension mismatch: " + std::to_string(a) + " vs " +
             std::to_string(b));
  }
}

}  // namespace

bool Ball::contains(const Vec& x, double eps) const {
  require_same_dim(x.size(), center.size());
  return (x - center).norm() <= radius + eps;
}

bool Box::contains(const Vec& x, double eps) const {
  require_same_dim(x.size(), lower.size());
  return ((x.array() >= lower.array() - eps) &&
          (x.array() <= upper.array() + eps))
      .all();
}

Ball make_ball(const Vec& center, double radius) {
  if (!(radius >= 0.0) || !std::isfinite(radius)) {
    fail(ErrorKind::kPrecondition, "ball radius must be finite and >= 0");
  }
  if (!center.allFinite()) {
    fail(ErrorKind::kPrecondition, "ball center must be finite");
  }
  return Ball{center, radius};
}

Box make_box(const Vec& lower, const Vec& upper) {
  require_same_dim(lower.size(), upper.size());
  if (!lower.allFinite() || !upper.allFinite()) {
    fail(ErrorKind::kPrecondition, "box bounds must be finite");
  }
  if ((lower.array() > upper.array()).any()) {
    fail(ErrorKind::kPrecondition, "box lower bound exceeds upper bound");
  }
  return Box{lower, upper};
}

Ball inflate(const Ball& region, double c) {
  if (!(c >= 0.0)) fail(ErrorKind::kPrecondition, "inflation must be >= 0");
  return Ball{region.center, region.radius + c};
}

Box inflate(const Box& region, double c) {
  if (!(c >= 0.0)) fail(ErrorKind::kPrecondition, "inflation must be >= 0");
  return Box{region.lower.array() - c, region.upper.array() + c};
}

double distance_to_set(const Vec& x, const Box& s) {
  require_same_dim(x.size(), s.dim());
  return (x - project(x, s)).norm();
}

double distance_to_set(const Vec& x, const Ball& s) {
  require_same_dim(x.size(), s.dim());
  return std::max(0.0, (x - s.center).norm() - s.radius);
}

Vec project(const Vec& x, const Ball& region) {
  require_same_dim(x.size(), region.dim());
  const Vec offset = x - region.center;
  const double dist = offset.norm();
  if (dist <= region.radius) return x;
  return region.center + offset * (region.radius / dist);
}

Vec project(const Vec& x, const Box& region) {
  require_same_dim(x.size(), region.dim());
  return x.cwiseMax(region.lower).cwiseMin(region.upper);
}

Vec project_rounded(const Vec& x, const Box& box, double c) {
  const Vec p = project(x, box);
  const Vec offset = x - p;
  const double dist = offset.norm();
  if (dist <= c) return x;
  return p + offset * (c / dist);
}

bool ball_intersects_box(const Ball& b, const Box& s, double eps) {
  return distance_to_set(b.center, s) <= b.radius + eps;
}

bool box_inside_ball(const Box& s, const Ball& b, double eps) {
  require_same_dim(s.dim(), b.dim());
  // Farthest corner from the center.
  const Vec far = (s.lower - b.center)
                      .cwiseAbs()
                      .cwiseMax((s.upper - b.center).cwiseAbs());
  return far.norm() <= b.radius + eps;
}

}  // namespace msabs
