#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "msabs/dynamics.hpp"
#include "msabs/error.hpp"

using namespace msabs;

namespace {

Vec v1(double a) { return Vec::Constant(1, a); }
Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }

double exp_error(int steps) {
  const auto tr = integrate([](double, const Vec& x) { return Vec(-x); }, v1(1.0), 0.0, 0.1, steps);
  return std::abs(tr.back()[0] - std::exp(-0.1));
}

ExtendedField consensus_g(double own_r, double nbr_r) {
  return ExtendedField(Field::consensus(1.0, {1.0}), make_ball(Vec::Zero(2), own_r),
                       {make_ball(Vec::Zero(2), nbr_r)});
}

}  // namespace

TEST(Dynamics, ZeroFieldIsConstant) {
  const auto tr = integrate([](double, const Vec& x) { return Vec(Vec::Zero(x.size())); },
                            v2(1, 2), 0.0, 1.0, 10);
  for (const auto& x : tr.x) EXPECT_EQ(x, v2(1, 2));
  EXPECT_EQ(tr.t.size(), 11u);
  EXPECT_DOUBLE_EQ(tr.t.back(), 1.0);
}

TEST(Dynamics, Rk4MatchesTheExponential) {
  EXPECT_LE(exp_error(128), 1e-9);
  EXPECT_LE(exp_error(1), 1e-6);
}

TEST(Dynamics, Rk4IsFourthOrder) {
  // Coarse steps keep the error far above rounding.
  const double e1 = exp_error(2), e2 = exp_error(4), e3 = exp_error(8);
  EXPECT_NEAR(e1 / e2, 16.0, 1.5);
  EXPECT_NEAR(e2 / e3, 16.0, 1.5);
}

TEST(Dynamics, IntegrationHasTheSemigroupProperty) {
  const OdeRhs rhs = [](double t, const Vec& x) { return Vec(-x * std::cos(t)); };
  const auto whole = integrate(rhs, v1(2.0), 0.0, 1.0, 100);
  const auto first = integrate(rhs, v1(2.0), 0.0, 0.4, 40);
  const auto second = integrate(rhs, first.back(), 0.4, 1.0, 60);
  EXPECT_NEAR(first.back()[0], whole.x[40][0], 1e-12);
  EXPECT_NEAR(second.back()[0], whole.back()[0], 1e-12);
}

TEST(Dynamics, FutureInputDoesNotChangeThePast) {
  auto rhs_with = [](double switch_value) {
    return OdeRhs([=](double t, const Vec& x) { return Vec(-x + v1(t < 0.5 ? 1.0 : switch_value)); });
  };
  const auto a = integrate(rhs_with(0.0), v1(0), 0.0, 1.0, 100);
  const auto b = integrate(rhs_with(-3.0), v1(0), 0.0, 1.0, 100);
  // The step ending at t = 0.5 already samples the switched input.
  for (int k = 0; k < 50; ++k) EXPECT_EQ(a.x[k][0], b.x[k][0]);
  EXPECT_NE(a.back()[0], b.back()[0]);
}

TEST(Dynamics, ExtendedFieldAgreesInsideAndIsBoundedOutside) {
  const ExtendedField g = consensus_g(1.0, 1.0);
  const std::vector<Vec> inside{v2(0.5, 0.1)};
  EXPECT_TRUE(g(v2(-0.2, 0.3), inside).isApprox(inside[0] - v2(-0.2, 0.3)));
  for (double s : {2.0, 10.0, 1e3}) {
    const std::vector<Vec> far{v2(s, 0)};
    const Vec val = g(v2(-s, 0), far);
    EXPECT_TRUE(val.isApprox(v2(1, 0) - v2(-1, 0)));
    EXPECT_LE(val.norm(), 2.0 + 1e-12);
  }
}

TEST(Dynamics, ExtendedFieldKeepsLipschitzConstants) {
  const ExtendedField g = consensus_g(0.7, 0.4);
  std::mt19937_64 rng(21);
  const Ball box = make_ball(Vec::Zero(2), 3.0);
  for (int k = 0; k < 10000; ++k) {
    const Vec x = uniform_in_ball(box, rng), y = uniform_in_ball(box, rng);
    const std::vector<Vec> n1{uniform_in_ball(box, rng)}, n2{uniform_in_ball(box, rng)};
    const double num = (g(x, n1) - g(y, n2)).norm();
    // L2 = 1 (own state), L1 = 1 (neighbors).
    EXPECT_LE(num, (x - y).norm() + (n1[0] - n2[0]).norm() + 1e-12);
  }
}

TEST(Dynamics, ReferenceTrajectoryClosedForms) {
  const ExtendedField zero(Field::zero(2), make_ball(Vec::Zero(2), 5), {});
  EXPECT_EQ(reference_trajectory(zero, v2(1, 1), {}, 0.1, 128).back(), v2(1, 1));

  const ExtendedField decay(Field::linear(-Eigen::MatrixXd::Identity(1, 1), {}, Vec::Zero(1)),
                            make_ball(Vec::Zero(1), 5), {});
  EXPECT_NEAR(reference_trajectory(decay, v1(1.0), {}, 0.1, 128).back()[0], std::exp(-0.1), 1e-9);

  const ExtendedField g = consensus_g(5, 5);
  const Vec xi = v2(0.2, -0.1), xj = v2(1.0, 0.5);
  const auto chi = reference_trajectory(g, xi, {xj}, 0.1, 128);
  for (std::size_t k = 0; k < chi.t.size(); k += 16) {
    const Vec exact = xj + (xi - xj) * std::exp(-chi.t[k]);
    EXPECT_LE((chi.x[k] - exact).norm(), 1e-9);
  }
}

TEST(Dynamics, ReachRadiusAndTargetParameter) {
  EXPECT_NEAR(reach_radius(0.5, 0.1, 1.0), 0.05, 1e-15);
  EXPECT_NEAR(reach_radius(0.999999, 0.1, 2.0), 0.2, 1e-6);
  EXPECT_DOUBLE_EQ(reach_radius(0.5, 0.2, 1.0), 2 * reach_radius(0.5, 0.1, 1.0));

  const Vec chi = v2(0.3, 0.3);
  EXPECT_EQ(target_parameter(chi, chi, 0.5, 0.1, 1.0), Vec::Zero(2));
  EXPECT_NEAR(target_parameter(chi + v2(0.05, 0), chi, 0.5, 0.1, 1.0).norm(), 1.0, 1e-12);
  EXPECT_THROW(target_parameter(chi + v2(0.06, 0), chi, 0.5, 0.1, 1.0), Error);
}

TEST(Dynamics, WitnessIsInsideTheCellAndNearTheEndpoint) {
  const Box cell = make_box(v2(0, 0), v2(0.1, 0.1));
  const Vec chi = v2(0.13, 0.05);
  const Vec p = witness_point(cell, chi, 1e-6);
  EXPECT_TRUE(cell.contains(p));
  EXPECT_GT(p[0], 0.1 - 1e-6 - 1e-15);
  EXPECT_LT(p[0], 0.1);
  EXPECT_LE((p - chi).norm(), distance_to_set(chi, cell) + 1e-6 + 1e-15);
}

TEST(Dynamics, ControllerOnTheZeroField) {
  const ExtendedField g(Field::zero(2), make_ball(Vec::Zero(2), 5), {});
  const Vec xG = v2(0.5, 0.5);
  const auto chi = reference_trajectory(g, xG, {}, 0.1, 128);
  const HybridController idle(g, chi, {}, xG, xG, Vec::Zero(2), 0.5, 0.1);
  EXPECT_EQ(idle(0.05, v2(3, 3), {}), Vec::Zero(2));

  const Vec start = v2(0.52, 0.47), w = v2(0.6, -0.3);
  const HybridController k(g, chi, {}, xG, start, w, 0.5, 0.1);
  const Vec expected = (xG - start) / 0.1 + 0.5 * w;
  EXPECT_TRUE(k(0.0, start, {}).isApprox(expected));
  EXPECT_TRUE(k(0.1, v2(9, 9), {}).isApprox(expected));
  EXPECT_THROW(k(0.2, start, {}), Error);

  const auto closed = integrate([&](double t, const Vec& x) { return k(t, x, {}); }, start, 0.0,
                                0.1, 128);
  EXPECT_LE((closed.back() - (xG + 0.5 * w * 0.1)).norm(), 1e-12);
}

TEST(Dynamics, ClosedLoopLandsOnARandomTarget) {
  const ExtendedField g = consensus_g(5, 5);
  const Vec xG = v2(0.2, 0.0), nbr = v2(0.6, 0.1);
  const double lam = 0.5, dt = 0.1, v = 1.0;
  const auto chi = reference_trajectory(g, xG, {nbr}, dt, 128);
  std::mt19937_64 rng(4);
  for (int k = 0; k < 20; ++k) {
    const Vec target = uniform_in_ball(make_ball(chi.back(), reach_radius(lam, dt, v)), rng);
    const Vec w = target_parameter(target, chi.back(), lam, dt, v);
    EXPECT_LE(w.norm(), v + 1e-12);
    const HybridController ctrl(g, chi, {nbr}, xG, xG, w, lam, dt);
    Vec X(4);
    X << xG, xG;
    const auto tr = integrate(
        [&](double, const Vec& Y) {
          Vec out(4);
          const std::vector<Vec> n{nbr};
          out.head(2) = g(Y.head(2), n) + ctrl.parts_at(Y.tail(2), Y.head(2), n).total();
          out.tail(2) = ctrl.chi_rate(Y.tail(2));
          return out;
        },
        X, 0.0, dt, 128);
    EXPECT_LE((tr.back().head(2) - target).norm(), 1e-6);
  }
}

TEST(Dynamics, DisturbancesStayAdmissible) {
  const Box cell = make_box(v2(0.9, 0.0), v2(1.0, 0.1));
  const Ball hull = make_ball(v2(0.5, 0.0), 0.65);
  const double growth = 2.0, dt = 0.1;
  std::mt19937_64 rng(33);
  for (int k = 0; k < 1000; ++k) {
    const auto d = DisturbanceSignal::sample(cell, growth, hull, rng);
    Vec prev = d(0.0);
    EXPECT_TRUE(cell.contains(prev, 1e-9));
    for (int s = 1; s <= 32; ++s) {
      const double t = dt * s / 32;
      const Vec x = d(t);
      EXPECT_TRUE(d.admissible(t, x, 1e-9));
      EXPECT_LE((x - prev).norm(), growth * dt / 32 * 4 + 1e-9);
      prev = x;
    }
  }
  const DisturbanceSignal still(cell, growth, hull, cell.center(), Vec::Zero(2));
  EXPECT_EQ(still(0.07), cell.center());
}
