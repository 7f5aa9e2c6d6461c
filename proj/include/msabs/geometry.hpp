#pragma once

#include <Eigen/Core>

namespace msabs {

using Vec = Eigen::VectorXd;

/// Default absolute tolerance for geometric predicates.
inline constexpr double kDefaultEpsGeo = 1e-9;

/// Closed Euclidean ball.
struct Ball {
  Vec center;
  double radius = 0.0;

  Eigen::Index dim() const { return center.size(); }
  bool contains(const Vec& x, double eps = 0.0) const;
};

/// Closed axis-aligned box, lower <= upper componentwise.
struct Box {
  Vec lower;
  Vec upper;

  Eigen::Index dim() const { return lower.size(); }
  Vec center() const { return 0.5 * (lower + upper); }
  /// Euclidean diameter (length of the main diagonal).
  double diameter() const { return (upper - lower).norm(); }
  bool contains(const Vec& x, double eps = 0.0) const;
};

Ball make_ball(const Vec& center, double radius);
Box make_box(const Vec& lower, const Vec& upper);

/// Minkowski sum with B(c); exact for balls.
Ball inflate(const Ball& region, double c);
/// Per-axis growth by c: an outer approximation of box + B(c).
Box inflate(const Box& region, double c);

/// inf over y in s of |x - y|.
double distance_to_set(const Vec& x, const Box& s);
double distance_to_set(const Vec& x, const Ball& s);

/// Euclidean projection onto a closed convex region.
Vec project(const Vec& x, const Ball& region);
Vec project(const Vec& x, const Box& region);

/// Projection onto box + B(c), the rounded box. Exact.
Vec project_rounded(const Vec& x, const Box& box, double c);

/// True iff distance_to_set(b.center, s) <= b.radius + eps.
bool ball_intersects_box(const Ball& b, const Box& s, double eps = 0.0);

/// True iff every point of s lies in b (up to eps).
bool box_inside_ball(const Box& s, const Ball& b, double eps = 0.0);

}  // namespace msabs
