#include <regex>

#include <gmock/gmock.h>
#include <gtest/gtest.h>

#include "nodeplan/error.hpp"
#include "nodeplan/frame.hpp"

using namespace nodeplan;

namespace {

State vec(double a, double b) {
  State s(2);
  s << a, b;
  return s;
}

Frame sample_frame(int obstacles) {
  Frame f;
  f.seq = 123456;
  f.t = 12.345678912345;
  f.x = vec(0.1234567891234, -2.0 / 3.0);
  f.target = vec(1.0 / 3.0, 1e-17);
  f.target_index = 4321;
  f.u = vec(-1e5 / 7.0, 3.14159265358979);
  f.V = 0.000123456789123;
  f.epsilon = 0.0;
  f.target_array_digest = "0123456789abcdef";
  for (int i = 0; i < obstacles; ++i) {
    BarrierTerm term{i % 2 ? Barrier::circle(vec(0.1 * i + 1.0 / 7.0, -0.3 * i - 1.0 / 9.0), 0.123456789123)
                           : Barrier::box(vec(0.1 * i, 0.2 + 1.0 / 3.0), vec(0.1 * i + 0.25, 0.6 + 1.0 / 7.0), 0.01),
                     RateFn{1.0 + i / 3.0}};
    f.obstacles.push_back({i + 1, term});
  }
  if (obstacles > 0) f.minB = 0.0123456789123;
  return f;
}

}  // namespace

TEST(Frame, RoundTripWithinPrecision) {
  const Frame f = sample_frame(2);
  const Frame g = decode_frame(encode_frame(f));
  EXPECT_EQ(g.seq, f.seq);
  EXPECT_EQ(g.target_index, f.target_index);
  EXPECT_EQ(g.target_array_digest, f.target_array_digest);
  EXPECT_NEAR(g.t, f.t, 1e-8 * f.t);
  EXPECT_LT((g.x - f.x).norm(), 1e-8 * f.x.norm());
  EXPECT_LT((g.u - f.u).norm(), 1e-8 * f.u.norm());
  EXPECT_NEAR(*g.minB, *f.minB, 1e-8 * *f.minB);
  ASSERT_EQ(g.obstacles.size(), 2U);
  EXPECT_EQ(g.obstacles[1].id, 2);
  EXPECT_NEAR(g.obstacles[1].term.barrier.value(vec(1, 1)), f.obstacles[1].term.barrier.value(vec(1, 1)), 1e-7);
}

TEST(Frame, AbsentMinBIsNull) {
  const Frame f = sample_frame(0);
  const auto j = nlohmann::json::parse(encode_frame(f));
  EXPECT_EQ(j.at("type"), "frame");
  EXPECT_TRUE(j.at("minB").is_null());
  EXPECT_FALSE(decode_frame(encode_frame(f)).minB.has_value());
}

TEST(Frame, FieldNames) {
  const auto j = nlohmann::json::parse(encode_frame(sample_frame(1)));
  for (const char* k : {"seq", "t", "x", "target", "target_index", "u", "V", "minB", "epsilon", "obstacles",
                        "target_array_digest"}) {
    EXPECT_TRUE(j.contains(k)) << k;
  }
}

TEST(Frame, AtMostNineSignificantDigits) {
  const std::string text = encode_frame(sample_frame(8));
  const std::regex number(R"((-?)(\d+)(\.(\d+))?([eE][-+]?\d+)?)");
  for (auto it = std::sregex_iterator(text.begin(), text.end(), number); it != std::sregex_iterator(); ++it) {
    const auto& m = *it;
    if (m.position() > 0 && std::isalnum(static_cast<unsigned char>(text[m.position() - 1]))) continue;
    std::string digits = m[2].str() + m[4].str();
    digits.erase(0, digits.find_first_not_of('0'));
    while (!digits.empty() && digits.back() == '0') digits.pop_back();
    EXPECT_LE(digits.size(), 9U) << m.str();
  }
}

TEST(Frame, EightObstaclesUnderTwoKilobytes) {
  EXPECT_LT(encode_frame(sample_frame(8)).size(), 2048U);
}

TEST(Frame, CompactDumpHandlesSpecialCases) {
  EXPECT_EQ(dump_compact(nlohmann::json{{"a", 0.1}, {"b", 2}, {"c", "x\"y"}}), R"({"a":0.1,"b":2,"c":"x\"y"})");
  EXPECT_EQ(dump_compact(nlohmann::json(1.0 / 3.0)), "0.333333333");
  EXPECT_EQ(dump_compact(nlohmann::json(1e-20)), "1e-20");
  EXPECT_EQ(nlohmann::json::parse(dump_compact(nlohmann::json(3.0))).get<double>(), 3.0);
}

TEST(Frame, DecodeRejectsOtherTypes) {
  EXPECT_THROW(decode_frame(encode_notice("error", "boom")), Error);
  EXPECT_THROW(decode_frame("{not json"), Error);
  const auto j = nlohmann::json::parse(encode_notice("warning", "full"));
  EXPECT_EQ(j.at("type"), "warning");
  EXPECT_EQ(j.at("message"), "full");
}
