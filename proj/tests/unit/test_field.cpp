#include <cmath>
#include <vector>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "msabs/error.hpp"
#include "msabs/field.hpp"

using namespace msabs;
using nlohmann::json;

namespace {
Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }
}  // namespace

TEST(Field, ZeroHasTheStateDimension) {
  const Field f = Field::zero(3);
  EXPECT_EQ(f(Vec::Ones(3), {}), Vec::Zero(3));
}

TEST(Field, ConsensusSumsWeightedDifferences) {
  const Field f = Field::consensus(2.0, {1.0, 0.5});
  const std::vector<Vec> nbrs{v2(1, 0), v2(0, 2)};
  // 2 * (1*(1,0) + 0.5*(0,2)) = (2, 2)
  EXPECT_TRUE(f(v2(0, 0), nbrs).isApprox(v2(2, 2)));
  EXPECT_TRUE(f(v2(1, 1), nbrs).isApprox(2.0 * (v2(0, -1) + 0.5 * v2(-1, 1))));
}

TEST(Field, LinearAppliesEveryBlock) {
  Eigen::MatrixXd A(2, 2), B(2, 2);
  A << 0, 1, -1, 0;
  B << 2, 0, 0, 2;
  const Field f = Field::linear(A, {B}, v2(1, 1));
  const std::vector<Vec> nbrs{v2(1, -1)};
  EXPECT_TRUE(f(v2(3, 4), nbrs).isApprox(v2(4 + 2 + 1, -3 - 2 + 1)));
}

TEST(Field, SaturationClampsTheNorm) {
  const Field f = Field::saturation(1.0, Field::consensus(1.0, {1.0}));
  const std::vector<Vec> far{v2(10, 0)};
  EXPECT_NEAR(f(v2(0, 0), far).norm(), 1.0, 1e-15);
  const std::vector<Vec> near{v2(0.3, 0.4)};
  EXPECT_TRUE(f(v2(0, 0), near).isApprox(v2(0.3, 0.4)));
}

TEST(Field, SineScaleAndSumCompose) {
  const Field inner = Field::consensus(1.0, {1.0});
  const Field f = Field::sum({Field::sine(0.5, inner), Field::scale(-1.0, inner)});
  const std::vector<Vec> nbrs{v2(1, 2)};
  const Vec d = v2(1, 2);
  const Vec expect = 0.5 * d.array().sin().matrix() - d;
  EXPECT_TRUE(f(v2(0, 0), nbrs).isApprox(expect));
}

TEST(Field, ParsesDeclarativeDocuments) {
  const std::vector<int> ids{4, 9};
  const json doc = {{"type", "sum"},
                    {"terms",
                     {{{"type", "linear"},
                       {"self", {{-1, 0}, {0, -1}}},
                       {"neighbors", {{{"agent", 9}, {"matrix", {{1, 0}, {0, 1}}}}}}},
                      {{"type", "consensus"}, {"gain", 0.5}, {"weights", {{{"agent", 4}, {"weight", 2.0}}}}}}}};
  const Field f = Field::from_json(doc, 2, ids);
  const std::vector<Vec> nbrs{v2(1, 0), v2(0, 1)};
  // linear: -(1,1) + (0,1) = (-1, 0); consensus: 0.5*(2*((1,0)-(1,1)) + 1*((0,1)-(1,1))) = (-0.5, -1)
  EXPECT_TRUE(f(v2(1, 1), nbrs).isApprox(v2(-1.5, -1)));
  EXPECT_TRUE(Field::from_json("zero", 2, ids).valid());
}

TEST(Field, RejectsMalformedDocuments) {
  const std::vector<int> ids{2};
  EXPECT_THROW(Field::from_json(json{{"type", "warp"}}, 2, ids), Error);
  EXPECT_THROW(Field::from_json(json{{"type", "linear"}, {"self", {{1, 0}}}}, 2, ids), Error);
  EXPECT_THROW(Field::from_json(json{{"type", "consensus"}, {"weights", {{{"agent", 7}, {"weight", 1}}}}},
                                2, ids),
               Error);
  EXPECT_THROW(Field::from_json(json{{"type", "saturation"}, {"limit", 1}}, 2, ids), Error);
}

TEST(Field, CustomWrapsCallables) {
  const Field f = Field::custom([](const Vec& x, std::span<const Vec>) { return Vec(-x); });
  EXPECT_TRUE(f(v2(1, 2), {}).isApprox(v2(-1, -2)));
}
