#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "nodeplan/error.hpp"
#include "nodeplan/target_array.hpp"
#include "support/shapes.hpp"

using namespace nodeplan;

namespace {

const FunctionField kRotation([](const State& x) {
  State v(2);
  v << -x(1), x(0);
  return v;
});

State unit_x() {
  State x(2);
  x << 1.0, 0.0;
  return x;
}

}  // namespace

TEST(TargetArray, GridDividesSpan) {
  const TargetArray ta = generate_target_array(kRotation, unit_x(), 1.0, 0.3);
  EXPECT_EQ(ta.size(), 5);
  EXPECT_DOUBLE_EQ(ta.dt, 0.25);
}

TEST(TargetArray, RotationFollowsCircleAndVelocitiesMatchField) {
  const double span = 2.0 * std::numbers::pi;
  const TargetArray ta = generate_target_array(kRotation, unit_x(), span, 1e-2);
  EXPECT_TRUE(ta.periodic);
  for (Eigen::Index k = 0; k < ta.size(); k += 37) {
    const double t = static_cast<double>(k) * ta.dt;
    EXPECT_NEAR(ta.points(k, 0), std::cos(t), 1e-6);
    EXPECT_NEAR(ta.points(k, 1), std::sin(t), 1e-6);
    EXPECT_EQ(ta.velocity(k), kRotation.eval(ta.point(k)));
  }
}

TEST(TargetArray, OpenArrayIsNotPeriodic) {
  const TargetArray ta = generate_target_array(kRotation, unit_x(), 2.0, 1e-2);
  EXPECT_FALSE(ta.periodic);
}

TEST(TargetArray, TrimKeepsOnePeriod) {
  TargetOptions o;
  o.trim_to_period = true;
  const TargetArray ta = generate_target_array(kRotation, unit_x(), 9.0, 1e-2, o);
  EXPECT_TRUE(ta.periodic);
  const double period = static_cast<double>(ta.size() - 1) * ta.dt;
  EXPECT_NEAR(period, 2.0 * std::numbers::pi, 2e-2);
}

TEST(TargetArray, FirstReturnOnPolygonIsExact) {
  Matrix p(9, 2);
  for (int k = 0; k < 9; ++k) {
    p(k, 0) = std::cos(k * std::numbers::pi / 4.0);
    p(k, 1) = std::sin(k * std::numbers::pi / 4.0);
  }
  EXPECT_EQ(first_return_index(p, 0.05), 8);
  EXPECT_EQ(first_return_index(p.topRows(6), 0.05), -1);
}

TEST(TargetArray, BadArgumentsAreInputErrors) {
  EXPECT_THROW(generate_target_array(kRotation, unit_x(), 1.0, 0.0), Error);
  EXPECT_THROW(generate_target_array(kRotation, unit_x(), 0.01, 0.01), Error);
  State bad = unit_x();
  bad(0) = NAN;
  EXPECT_THROW(generate_target_array(kRotation, bad, 1.0, 0.1), Error);
}

TEST(TargetArray, JsonRoundTripPreservesDigest) {
  const TargetArray ta = generate_target_array(kRotation, unit_x(), 1.0, 0.1);
  const TargetArray back = target_array_from_json(nlohmann::json::parse(target_array_to_json(ta).dump()));
  EXPECT_EQ(back.points, ta.points);
  EXPECT_EQ(back.periodic, ta.periodic);
  EXPECT_EQ(target_array_digest(back), target_array_digest(ta));
  EXPECT_EQ(target_array_digest(ta).size(), 16U);
  TargetArray other = ta;
  other.points(3, 1) += 1e-15;
  EXPECT_NE(target_array_digest(other), target_array_digest(ta));
}

TEST(TargetArray, MismatchedJsonRejected) {
  auto j = target_array_to_json(generate_target_array(kRotation, unit_x(), 1.0, 0.1));
  j["velocities"].erase(0);
  EXPECT_THROW(target_array_from_json(j), Error);
}
