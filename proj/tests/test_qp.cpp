#include <algorithm>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "nodeplan/error.hpp"
#include "nodeplan/qp.hpp"
#include "support/qp_oracle.hpp"
#include "support/random_qp.hpp"

using namespace nodeplan;

namespace {

QpProblem make(std::initializer_list<double> w, const Matrix& G, const Eigen::VectorXd& h) {
  QpProblem p;
  p.weights = Eigen::Map<const Eigen::VectorXd>(std::data(w), static_cast<Eigen::Index>(w.size()));
  p.G = G;
  p.h = h;
  return p;
}

}  // namespace

TEST(DenseQp, NoConstraintsGivesOrigin) {
  QpProblem p = make({1.0, 2.0, 3.0}, Matrix(0, 3), Eigen::VectorXd(0));
  const auto s = solve_dense_qp(p);
  ASSERT_TRUE(s.ok());
  EXPECT_EQ(s.z, Eigen::VectorXd::Zero(3));
  EXPECT_TRUE(s.active_set.empty());
}

TEST(DenseQp, SingleRowIsWeightedProjection) {
  // g^T z <= h with h < 0: z = W^{-1} g h / (g^T W^{-1} g).
  Matrix G(1, 2);
  G << 1.0, 2.0;
  Eigen::VectorXd h(1);
  h << -3.0;
  QpProblem p = make({2.0, 0.5}, G, h);
  const Eigen::Vector2d winv_g(0.5, 4.0);
  const Eigen::VectorXd expected = winv_g * (-3.0 / (0.5 + 8.0));
  const auto s = solve_dense_qp(p);
  ASSERT_TRUE(s.ok());
  EXPECT_LT((s.z - expected).norm(), 1e-12);
  EXPECT_EQ(s.active_set, std::vector<int>{0});
  EXPECT_LE(s.kkt_residual, 1e-12);
}

TEST(DenseQp, InactiveRowLeavesOrigin) {
  Matrix G(1, 2);
  G << 1.0, 1.0;
  Eigen::VectorXd h(1);
  h << 0.5;
  const auto s = solve_dense_qp(make({1.0, 1.0}, G, h));
  ASSERT_TRUE(s.ok());
  EXPECT_EQ(s.z, Eigen::VectorXd::Zero(2));
}

TEST(DenseQp, ContradictoryRowsAreInfeasible) {
  Matrix G(2, 1);
  G << 1.0, -1.0;
  Eigen::VectorXd h(2);
  h << -1.0, -1.0;  // z <= -1 and z >= 1
  const auto s = solve_dense_qp(make({1.0}, G, h));
  EXPECT_EQ(s.status, QpStatus::infeasible);
}

TEST(DenseQp, ZeroRowWithNegativeBoundIsInfeasible) {
  Matrix G = Matrix::Zero(1, 2);
  Eigen::VectorXd h(1);
  h << -1e-3;
  EXPECT_EQ(solve_dense_qp(make({1.0, 1.0}, G, h)).status, QpStatus::infeasible);
}

TEST(DenseQp, DuplicateRowsAreHandled) {
  Matrix G(3, 2);
  G << 1.0, 0.0, 1.0, 0.0, 2.0, 0.0;
  Eigen::VectorXd h(3);
  h << -1.0, -1.0, -2.0;
  const auto s = solve_dense_qp(make({1.0, 1.0}, G, h));
  ASSERT_TRUE(s.ok());
  EXPECT_NEAR(s.z(0), -1.0, 1e-12);
  EXPECT_NEAR(s.z(1), 0.0, 1e-12);
  EXPECT_LE(s.kkt_residual, 1e-10);
}

TEST(DenseQp, RejectsTooManyRows) {
  QpProblem p = make({1.0}, Matrix::Ones(kMaxQpConstraints + 1, 1),
                     Eigen::VectorXd::Ones(kMaxQpConstraints + 1));
  EXPECT_THROW(solve_dense_qp(p), Error);
}

TEST(DenseQp, RejectsNonPositiveWeight) {
  EXPECT_THROW(solve_dense_qp(make({1.0, 0.0}, Matrix(0, 2), Eigen::VectorXd(0))), Error);
}

TEST(DenseQp, IterationCapReportsInfeasible) {
  Matrix G(2, 2);
  G << 1.0, 0.0, 0.0, 1.0;
  Eigen::VectorXd h(2);
  h << -1.0, -1.0;
  const auto s = solve_dense_qp(make({1.0, 1.0}, G, h), 1);
  EXPECT_EQ(s.status, QpStatus::infeasible);
  EXPECT_NE(s.message.find("iteration cap"), std::string::npos);
}

TEST(DenseQp, MatchesBruteForceOnRandomDenseProblems) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> w(0.1, 10.0);
  int feasible = 0;
  for (int trial = 0; trial < 400; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 4);
    const int m = static_cast<int>(rng() % 7);
    QpProblem p;
    p.weights.resize(n);
    for (int i = 0; i < n; ++i) p.weights(i) = w(rng);
    p.G.resize(m, n);
    p.h.resize(m);
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < n; ++j) p.G(i, j) = g(rng);
      p.h(i) = g(rng);
    }
    const auto s = solve_dense_qp(p);
    const auto oracle = support::brute_force_qp(p);
    ASSERT_EQ(s.ok(), oracle.has_value()) << "trial " << trial;
    if (!oracle) continue;
    ++feasible;
    EXPECT_NEAR(s.objective, oracle->objective, 1e-6 * (1.0 + oracle->objective)) << "trial " << trial;
    EXPECT_LE(s.kkt_residual, 1e-8) << "trial " << trial;
  }
  EXPECT_GT(feasible, 200);
}

TEST(DenseQp, PermutedRowsGiveSameSolution) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const auto inst = support::random_clf_cbf(rng);
    const QpProblem p = clf_cbf_problem(inst.clf, inst.cbf, inst.drift, inst.f_at_x, inst.lambda);
    std::vector<Eigen::Index> perm(static_cast<std::size_t>(p.num_rows()));
    std::iota(perm.begin(), perm.end(), 0);
    std::reverse(perm.begin(), perm.end());
    QpProblem q = p;
    for (std::size_t k = 0; k < perm.size(); ++k) {
      q.G.row(static_cast<Eigen::Index>(k)) = p.G.row(perm[k]);
      q.h(static_cast<Eigen::Index>(k)) = p.h(perm[k]);
    }
    const auto a = solve_dense_qp(p);
    const auto b = solve_dense_qp(q);
    ASSERT_TRUE(a.ok() && b.ok());
    EXPECT_LT((a.z - b.z).lpNorm<Eigen::Infinity>(), 1e-9);
  }
}

TEST(DenseQp, AddingARowNeverLowersTheObjective) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 200; ++trial) {
    auto inst = support::random_clf_cbf(rng);
    if (inst.cbf.empty()) continue;
    const auto full = solve_clf_cbf(inst.clf, inst.cbf, inst.drift, inst.f_at_x, inst.lambda);
    inst.cbf.pop_back();
    const auto fewer = solve_clf_cbf(inst.clf, inst.cbf, inst.drift, inst.f_at_x, inst.lambda);
    ASSERT_TRUE(full.ok() && fewer.ok());
    EXPECT_GE(full.objective, fewer.objective - 1e-12);
  }
}

TEST(DenseQp, ComplementarityAndStationarityHold) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 300; ++trial) {
    const auto inst = support::random_clf_cbf(rng);
    const QpProblem p = clf_cbf_problem(inst.clf, inst.cbf, inst.drift, inst.f_at_x, inst.lambda);
    const auto s = solve_dense_qp(p);
    ASSERT_TRUE(s.ok());
    const Eigen::VectorXd slack = p.h - p.G * s.z;
    for (Eigen::Index i = 0; i < slack.size(); ++i) {
      EXPECT_GE(s.multipliers(i), 0.0);
      EXPECT_LE(std::abs(s.multipliers(i) * slack(i)), 1e-8);
      EXPECT_GE(slack(i), -1e-9);
    }
    EXPECT_LE((p.weights.cwiseProduct(s.z) + p.G.transpose() * s.multipliers).lpNorm<Eigen::Infinity>(), 1e-8);
  }
}

TEST(ClfClosedForm, OnTrajectoryIsZero) {
  const auto s = solve_clf_closed_form(State::Zero(2), 0.0, State::Constant(2, 3.0));
  ASSERT_TRUE(s.ok());
  EXPECT_EQ(s.u, State::Zero(2));
}

TEST(ClfClosedForm, HandKkt) {
  State a(1), drift(1);
  a << 2.0;
  drift << 0.0;
  const auto s = solve_clf_closed_form(a, 1.0, drift);
  ASSERT_TRUE(s.ok());
  EXPECT_DOUBLE_EQ(s.u(0), -0.5);
}

TEST(ClfClosedForm, DownhillDriftNeedsNoCorrection) {
  State a(2), drift(2);
  a << 1.0, 1.0;
  drift << -2.0, -2.0;
  const auto s = solve_clf_closed_form(a, 1.0, drift);
  EXPECT_EQ(s.u, State::Zero(2));
}

TEST(ClfClosedForm, MatchesDenseQp) {
  std::mt19937_64 rng(19);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 500; ++trial) {
    const int d = 2 + static_cast<int>(rng() % 2);
    State a(d), drift(d);
    for (int i = 0; i < d; ++i) {
      a(i) = g(rng);
      drift(i) = g(rng);
    }
    const double alpha_v = std::abs(g(rng));
    const auto cf = solve_clf_closed_form(a, alpha_v, drift);
    const auto qp = solve_dense_qp(clf_problem(a, alpha_v, drift));
    ASSERT_TRUE(cf.ok() && qp.ok());
    EXPECT_LT((cf.u - qp.u).lpNorm<Eigen::Infinity>(), 1e-9);
  }
}

TEST(ClfCbf, NoBarriersLargeLambdaMatchesClosedForm) {
  std::mt19937_64 rng(23);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const int d = 2 + static_cast<int>(rng() % 2);
    CertificateSet cs;
    State e(d), drift(d);
    for (int i = 0; i < d; ++i) {
      e(i) = g(rng);
      drift(i) = g(rng);
    }
    const auto clf = clf_terms(cs, e);
    const auto cf = solve_clf_closed_form(clf.grad, clf.alpha_v, drift);
    const auto relaxed = solve_clf_cbf(clf, {}, drift, State::Zero(d), 1e9);
    ASSERT_TRUE(relaxed.ok());
    EXPECT_LT((cf.u - relaxed.u).lpNorm<Eigen::Infinity>(), 1e-6);
  }
}

TEST(ClfCbf, FarFromObstacleOnTrajectoryIsZero) {
  CertificateSet cs;
  cs.barriers.push_back({Barrier::circle(State::Constant(2, 5.0), 1.0), RateFn{1.0}});
  const State x = State::Zero(2);
  const auto s = solve_clf_cbf(clf_terms(cs, State::Zero(2)), cbf_terms(cs, x), State::Zero(2), State::Zero(2), 100.0);
  ASSERT_TRUE(s.ok());
  EXPECT_EQ(s.u, State::Zero(2));
  EXPECT_EQ(s.slack, 0.0);
}

TEST(ClfCbf, RandomInstancesMatchOracle) {
  std::mt19937_64 rng(29);
  for (int trial = 0; trial < 300; ++trial) {
    const auto inst = support::random_clf_cbf(rng);
    const QpProblem p = clf_cbf_problem(inst.clf, inst.cbf, inst.drift, inst.f_at_x, inst.lambda);
    const auto s = solve_dense_qp(p);
    const auto oracle = support::brute_force_qp(p);
    ASSERT_TRUE(oracle.has_value());
    ASSERT_TRUE(s.ok());
    EXPECT_NEAR(s.objective, oracle->objective, 1e-6);
    EXPECT_LE(s.kkt_residual, 1e-8);
  }
}

TEST(ClfCbf, CbfOnlyDropsTheClfRow) {
  CertificateSet cs;
  cs.barriers.push_back({Barrier::circle(State::Zero(2), 1.0), RateFn{1.0}});
  State x(2), f(2);
  x << 1.5, 0.0;
  f << -10.0, 0.0;  // heading straight into the obstacle
  const auto s = solve_cbf_only(cbf_terms(cs, x), f);
  ASSERT_TRUE(s.ok());
  const auto t = cbf_terms(cs, x)[0];
  EXPECT_GE(t.grad.dot(f + s.u), -t.gamma_b - 1e-9);
}

TEST(QpJson, DumpsProblemAndSolution) {
  Matrix G(1, 1);
  G << 1.0;
  Eigen::VectorXd h(1);
  h << -1.0;
  const QpProblem p = make({1.0}, G, h);
  const auto j = to_json(solve_dense_qp(p));
  EXPECT_EQ(j.at("status"), "optimal");
  EXPECT_EQ(to_json(p).at("G").size(), 1U);
}
