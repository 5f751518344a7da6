#include <functional>
#include <random>

#include <gmock/gmock.h>
#include <gtest/gtest.h>

#include "nodeplan/error.hpp"
#include "nodeplan/eval.hpp"
#include "support/shapes.hpp"

using namespace nodeplan;

namespace {

// Plain recursive DTW with memoisation.
double dtw_oracle(const Matrix& a, const Matrix& b) {
  std::vector<std::vector<double>> memo(a.rows(), std::vector<double>(b.rows(), -1.0));
  std::function<double(Eigen::Index, Eigen::Index)> d = [&](Eigen::Index i, Eigen::Index j) -> double {
    if (i < 0 || j < 0) return INFINITY;
    double& m = memo[i][j];
    if (m >= 0.0) return m;
    const double c = (a.row(i) - b.row(j)).norm();
    m = (i == 0 && j == 0) ? c : c + std::min({d(i - 1, j - 1), d(i - 1, j), d(i, j - 1)});
    return m;
  };
  return d(a.rows() - 1, b.rows() - 1);
}

Matrix random_path(std::mt19937_64& rng, int rows, int dim) {
  std::normal_distribution<double> g;
  Matrix m(rows, dim);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
  return m;
}

const FunctionField kCycle([](const State& x) { return support::limit_cycle_velocity(x, 1.0); });

DemonstrationSet clean_cycle(int demos) {
  support::ShapeOptions o;
  o.demos = demos;
  o.noise = 0.0;
  o.samples = 80;
  return support::limit_cycle_demos(o);
}

}  // namespace

TEST(Dtw, HandExamples) {
  Matrix a(2, 2), b(2, 2);
  a << 0, 0, 0, 0;
  b << 1, 0, 1, 0;
  EXPECT_DOUBLE_EQ(dtw(a, b).cost, 2.0);
  EXPECT_EQ(dtw(a, b).path_len, 2);
  EXPECT_EQ(dtw(a, a).cost, 0.0);
}

TEST(Dtw, MatchesOracleAndIsSymmetric) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 30; ++trial) {
    const Matrix a = random_path(rng, 2 + trial % 7, 3);
    const Matrix b = random_path(rng, 1 + trial % 5, 3);
    const double c = dtw(a, b).cost;
    EXPECT_NEAR(c, dtw_oracle(a, b), 1e-12 * (1.0 + c));
    EXPECT_DOUBLE_EQ(c, dtw(b, a).cost);
    EXPECT_GE(c, 0.0);
  }
}

TEST(Dtw, DimensionMismatchIsInputError) {
  EXPECT_THROW(dtw(Matrix::Zero(3, 2), Matrix::Zero(3, 3)), Error);
}

TEST(Pairwise, SymmetricAndSerialEqual) {
  support::ShapeOptions o;
  o.demos = 5;
  const DemonstrationSet ds = support::s_curve_demos(o);
  const Matrix p = dtw_pairwise(ds);
  EXPECT_EQ(p, serial::dtw_pairwise(ds));
  EXPECT_EQ(p, p.transpose());
  EXPECT_EQ(p.diagonal().norm(), 0.0);
  double sum = 0.0;
  for (int i = 0; i < 5; ++i) {
    for (int j = i + 1; j < 5; ++j) sum += p(i, j);
  }
  EXPECT_DOUBLE_EQ(mean_pairwise_dtw(ds), sum / 10.0);
}

TEST(Split, Parsing) {
  const Split s = parse_split("0,2:1");
  EXPECT_THAT(s.train, ::testing::ElementsAre(0, 2));
  EXPECT_THAT(s.test, ::testing::ElementsAre(1));
  EXPECT_TRUE(parse_split("0:").test.empty());
  EXPECT_TRUE(parse_split(":3").train.empty());
  EXPECT_EQ(to_string(s), "0,2:1");
  for (const char* bad : {"", ":", "0,1", "a:1", "0:-1", "0::1", "0,:1"}) {
    EXPECT_THROW(parse_split(bad), Error) << bad;
  }
}

TEST(Evaluate, ExactFieldReproducesDemos) {
  const DemonstrationSet ds = clean_cycle(3);
  const EvalReport r = evaluate_model(kCycle, ds, parse_split("0,1:2"));
  ASSERT_EQ(r.demos.size(), 3U);
  for (const auto& d : r.demos) {
    ASSERT_TRUE(d.ok);
    const Trajectory& demo = ds.demos[static_cast<std::size_t>(d.index)];
    double len = 0.0;
    for (Eigen::Index k = 1; k < demo.length(); ++k) len += (demo.at(k) - demo.at(k - 1)).norm();
    EXPECT_LE(d.dtw.cost, 1e-2 * len);
    EXPECT_EQ(d.reproduction.times, demo.times);
  }
  ASSERT_TRUE(r.train && r.test);
  EXPECT_EQ(r.train->count, 2);
  EXPECT_EQ(r.test->count, 1);
  EXPECT_EQ(r.test->variance, 0.0);
}

TEST(Evaluate, EmptyTestIsAbsent) {
  const EvalReport r = evaluate_model(kCycle, clean_cycle(2), parse_split("0,1:"));
  EXPECT_TRUE(r.train.has_value());
  EXPECT_FALSE(r.test.has_value());
  EXPECT_TRUE(to_json(r).at("test").is_null());
}

TEST(Evaluate, DuplicateDoublesWeight) {
  const FunctionField rough([](const State& x) { return State(0.8 * support::limit_cycle_velocity(x, 1.0)); });
  const DemonstrationSet ds = clean_cycle(2);
  const EvalReport once = evaluate_model(rough, ds, parse_split("0,1:"));
  const EvalReport twice = evaluate_model(rough, ds, parse_split("0,0,1:"));
  const double a = once.demos[0].dtw.cost, b = once.demos[1].dtw.cost;
  EXPECT_NEAR(twice.train->mean, (2.0 * a + b) / 3.0, 1e-12 * a);
  const double m = (a + b) / 2.0;
  EXPECT_NEAR(once.train->variance, ((a - m) * (a - m) + (b - m) * (b - m)) / 2.0, 1e-12 * m * m);
}

TEST(Evaluate, ParallelMatchesSerialAndFailuresIsolated) {
  const FunctionField wild([](const State& x) {
    if (x(0) < -1.2) return State(State::Constant(2, NAN));
    return support::limit_cycle_velocity(x, 1.0);
  });
  DemonstrationSet ds = clean_cycle(4);
  ds.demos[2].states.row(0) << -1.5, 0.0;
  const Split s = parse_split("0,1,2:3");
  const EvalReport par = evaluate_model(wild, ds, s);
  const EvalReport ser = serial::evaluate_model(wild, ds, s);
  EXPECT_EQ(to_json(par).dump(), to_json(ser).dump());
  EXPECT_FALSE(par.demos[2].ok);
  EXPECT_FALSE(par.demos[2].error.empty());
  EXPECT_EQ(par.train->count, 2);
}

TEST(Evaluate, OutOfRangeIndexRejected) {
  EXPECT_THROW(evaluate_model(kCycle, clean_cycle(2), parse_split("0:5")), Error);
}

TEST(Output, CsvAndSvg) {
  const DemonstrationSet ds = clean_cycle(2);
  const EvalReport r = evaluate_model(kCycle, ds, parse_split("0:1"));
  const std::string csv = eval_to_csv(r);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
  const std::string svg = eval_to_svg(r, ds);
  EXPECT_THAT(svg, ::testing::StartsWith("<svg"));
  EXPECT_THAT(svg, ::testing::HasSubstr("polyline"));
  EXPECT_FALSE(to_json(r, false).at("demos")[0].contains("reproduction"));
}
