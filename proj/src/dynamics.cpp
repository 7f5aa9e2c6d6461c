#include "msabs/dynamics.hpp"

#include <algorithm>
#include <cmath>

#include "msabs/error.hpp"

namespace msabs {

Vec Trajectory::at(double time) const {
  if (t.empty()) fail(ErrorKind::kPrecondition, "empty trajectory");
  if (time <= t.front()) return x.front();
  if (time >= t.back()) return x.back();
  const double h = (t.back() - t.front()) / static_cast<double>(t.size() - 1);
  auto k = static_cast<std::size_t>((time - t.front()) / h);
  k = std::min(k, t.size() - 2);
  const double s = (time - t[k]) / (t[k + 1] - t[k]);
  return (1.0 - s) * x[k] + s * x[k + 1];
}

Vec rk4_step(const OdeRhs& rhs, double t, const Vec& x, double h) {
  const Vec k1 = rhs(t, x);
  const Vec k2 = rhs(t + h / 2, x + (h / 2) * k1);
  const Vec k3 = rhs(t + h / 2, x + (h / 2) * k2);
  const Vec k4 = rhs(t + h, x + h * k3);
  return x + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4);
}

Trajectory integrate(const OdeRhs& rhs, const Vec& x0, double t0, double tf,
                     int steps) {
  if (steps < 1) fail(ErrorKind::kPrecondition, "integrate: steps must be >= 1");
  const double h = (tf - t0) / steps;
  Trajectory out;
  out.t.reserve(static_cast<std::size_t>(steps) + 1);
  out.x.reserve(static_cast<std::size_t>(steps) + 1);
  out.t.push_back(t0);
  out.x.push_back(x0);
  for (int k = 0; k < steps; ++k) {
    const double t = t0 + k * h;
    Vec next = rk4_step(rhs, t, out.x.back(), h);
    if (!next.allFinite())
      fail(ErrorKind::kPrecondition, "integrate: non-finite state at t=" + std::to_string(t));
    out.x.push_back(std::move(next));
    out.t.push_back(k + 1 == steps ? tf : t0 + (k + 1) * h);
  }
  return out;
}

ExtendedField::ExtendedField(Field f, Ball own_domain,
                             std::vector<Ball> neighbor_domains)
    : f_(std::move(f)), own_(std::move(own_domain)), nbr_(std::move(neighbor_domains)) {}

Vec ExtendedField::operator()(const Vec& self, std::span<const Vec> nbrs) const {
  if (nbrs.size() != nbr_.size())
    fail(ErrorKind::kPrecondition, "extended field: wrong neighbor count");
  std::vector<Vec> projected;
  projected.reserve(nbrs.size());
  for (std::size_t k = 0; k < nbrs.size(); ++k) projected.push_back(project(nbrs[k], nbr_[k]));
  return f_(project(self, own_), projected);
}

Trajectory reference_trajectory(const ExtendedField& g, const Vec& x_ref,
                                const std::vector<Vec>& neighbor_refs, double dt,
                                int steps) {
  return integrate([&](double, const Vec& chi) { return g(chi, neighbor_refs); },
                   x_ref, 0.0, dt, steps);
}

double reach_radius(double lambda, double dt, double v_max) {
  return lambda * dt * v_max;
}

Vec target_parameter(const Vec& x_target, const Vec& chi_end, double lambda,
                     double dt, double v_max, double eps) {
  const Vec diff = x_target - chi_end;
  if (diff.norm() > reach_radius(lambda, dt, v_max) + eps)
    fail(ErrorKind::kPrecondition, "target outside the reachable ball");
  Vec w = diff / (lambda * dt);
  const double n = w.norm();
  if (n > v_max) w *= v_max / n;
  return w;
}

Vec witness_point(const Box& cell, const Vec& chi_end, double eta) {
  const Vec p = project(chi_end, cell);
  const Vec c = cell.center();
  const Vec to_c = c - p;
  const double len = to_c.norm();
  if (len <= eta) return c;
  return p + (eta / len) * to_c;
}

HybridController::HybridController(ExtendedField g, Trajectory chi,
                                   std::vector<Vec> neighbor_refs, const Vec& x_ref,
                                   const Vec& x_start, const Vec& w, double lambda,
                                   double dt)
    : g_(std::move(g)),
      chi_(std::move(chi)),
      refs_(std::move(neighbor_refs)),
      k2_((x_ref - x_start) / dt),
      k3_(lambda * w),
      w_(w),
      dt_(dt) {}

HybridController::Parts HybridController::parts(double t, const Vec& x,
                                                std::span<const Vec> nbrs) const {
  if (t < -1e-12 || t > dt_ * (1.0 + 1e-12))
    fail(ErrorKind::kPrecondition, "controller evaluated outside [0, dt]");
  return parts_at(chi_.at(t), x, nbrs);
}

HybridController::Parts HybridController::parts_at(const Vec& chi_t, const Vec& x,
                                                   std::span<const Vec> nbrs) const {
  return Parts{g_(chi_t, refs_) - g_(x, nbrs), k2_, k3_};
}

DisturbanceSignal::DisturbanceSignal(Box cell, double growth, Ball hull, Vec a, Vec b)
    : cell_(std::move(cell)), growth_(growth), hull_(std::move(hull)),
      a_(std::move(a)), b_(std::move(b)) {
  if (!box_inside_ball(cell_, hull_, 1e-9))
    fail(ErrorKind::kInternal, "disturbance cell is not inside the neighbor hull");
}

DisturbanceSignal DisturbanceSignal::sample(const Box& cell, double growth,
                                            const Ball& hull, std::mt19937_64& rng) {
  Vec a = uniform_in_box(cell, rng);
  Vec b = uniform_in_ball(make_ball(Vec::Zero(cell.dim()), growth), rng);
  return DisturbanceSignal(cell, growth, hull, std::move(a), std::move(b));
}

bool DisturbanceSignal::admissible(double t, const Vec& x, double eps) const {
  return distance_to_set(x, cell_) <= growth_ * t + eps && hull_.contains(x, eps);
}

Vec DisturbanceSignal::operator()(double t) const {
  const double c = growth_ * t;
  const Vec raw = a_ + t * b_;
  Vec q = raw;
  for (int k = 0; k < 32; ++k) {
    q = project(project_rounded(q, cell_, c), hull_);
    if (admissible(t, q, 0.0)) return q;
  }
  // Bisect towards the cell center, which is always admissible.
  const Vec center = cell_.center();
  double lo = 0.0, hi = 1.0;
  for (int k = 0; k < 60; ++k) {
    const double mid = 0.5 * (lo + hi);
    if (admissible(t, center + mid * (q - center), 0.0))
      lo = mid;
    else
      hi = mid;
  }
  return center + lo * (q - center);
}

Vec uniform_in_box(const Box& box, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Vec x(box.dim());
  for (Eigen::Index a = 0; a < x.size(); ++a)
    x[a] = box.lower[a] + u(rng) * (box.upper[a] - box.lower[a]);
  return x;
}

Vec uniform_in_ball(const Ball& ball, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const Eigen::Index n = ball.dim();
  Vec dir(n);
  double len = 0.0;
  do {
    for (Eigen::Index a = 0; a < n; ++a) dir[a] = gauss(rng);
    len = dir.norm();
  } while (len == 0.0);
  const double r = ball.radius * std::pow(u(rng), 1.0 / static_cast<double>(n));
  return ball.center + (r / len) * dir;
}

}  // namespace msabs
