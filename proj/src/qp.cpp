#include "nodeplan/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "nodeplan/demo_io.hpp"
#include "nodeplan/error.hpp"

namespace nodeplan {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Working-set projections in the scaled space y = W^{1/2} z, where the problem
// reads min 1/2 ||y||^2 s.t. N^T y >= b.
struct WorkingSet {
  std::vector<int> rows;
  Matrix N;  // columns n_i of the active rows

  void rebuild(const Matrix& n_all) {
    N.resize(n_all.rows(), static_cast<Eigen::Index>(rows.size()));
    for (std::size_t k = 0; k < rows.size(); ++k) N.col(static_cast<Eigen::Index>(k)) = n_all.col(rows[k]);
  }

  // r = (N^T N)^{-1} N^T n and the residual of n off span(N).
  void directions(const Eigen::VectorXd& n, Eigen::VectorXd& step, Eigen::VectorXd& r) const {
    if (N.cols() == 0) {
      r.resize(0);
      step = n;
      return;
    }
    r = (N.transpose() * N).ldlt().solve(N.transpose() * n);
    step = n - N * r;
  }
};

QpSolution finish(const QpProblem& p, Eigen::VectorXd z, const Eigen::VectorXd& mu, std::vector<int> active,
                  int iterations) {
  QpSolution s;
  s.z = std::move(z);
  s.multipliers = mu;
  std::sort(active.begin(), active.end());
  s.active_set = std::move(active);
  s.iterations = iterations;
  const Eigen::Index nv = p.has_slack ? p.num_vars() - 1 : p.num_vars();
  s.u = s.z.head(nv);
  s.slack = p.has_slack ? s.z(nv) : 0.0;
  s.objective = s.z.dot(p.weights.cwiseProduct(s.z));
  s.kkt_residual = kkt_residual(p, s.z, mu);
  s.status = QpStatus::optimal;
  return s;
}

QpSolution infeasible(const QpProblem& p, int iterations, std::string why) {
  QpSolution s;
  const Eigen::Index nv = p.has_slack ? p.num_vars() - 1 : p.num_vars();
  s.z = Eigen::VectorXd::Zero(p.num_vars());
  s.u = State::Zero(nv);
  s.multipliers = Eigen::VectorXd::Zero(p.num_rows());
  s.iterations = iterations;
  s.kkt_residual = kInf;
  s.status = QpStatus::infeasible;
  s.message = std::move(why);
  return s;
}

}  // namespace

std::string to_string(QpStatus s) { return s == QpStatus::optimal ? "optimal" : "infeasible"; }

void QpProblem::validate() const {
  if (weights.size() < 1) fail(ErrorKind::input, "qp: no decision variables");
  if (!(weights.array() > 0.0).all() || !weights.allFinite()) {
    fail(ErrorKind::input, "qp: quadratic weights must be positive and finite");
  }
  if (G.cols() != weights.size() || G.rows() != h.size()) fail(ErrorKind::input, "qp: constraint shape mismatch");
  if (G.rows() > kMaxQpConstraints) {
    fail(ErrorKind::input, "qp: " + std::to_string(G.rows()) + " constraints exceed the limit of " +
                               std::to_string(kMaxQpConstraints));
  }
  if (!G.allFinite() || !h.allFinite()) fail(ErrorKind::numeric, "qp: non-finite constraint data");
}

double kkt_residual(const QpProblem& p, const Eigen::VectorXd& z, const Eigen::VectorXd& mu) {
  double r = (p.weights.cwiseProduct(z) + p.G.transpose() * mu).lpNorm<Eigen::Infinity>();
  const Eigen::VectorXd slack = p.h - p.G * z;
  for (Eigen::Index i = 0; i < slack.size(); ++i) {
    r = std::max(r, -slack(i));
    r = std::max(r, -mu(i));
    r = std::max(r, std::abs(mu(i) * slack(i)));
  }
  return r;
}

QpSolution solve_dense_qp(const QpProblem& p, int max_iterations) {
  p.validate();
  const Eigen::Index n = p.num_vars();
  const Eigen::Index m = p.num_rows();
  const Eigen::VectorXd inv_sqrt_w = p.weights.array().sqrt().inverse();

  // Constraint i in scaled form: n_i^T y >= b_i.
  Matrix n_all(n, m);
  Eigen::VectorXd b(m);
  Eigen::VectorXd row_scale(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    n_all.col(i) = -(p.G.row(i).transpose().array() * inv_sqrt_w.array()).matrix();
    b(i) = -p.h(i);
    row_scale(i) = 1.0 + n_all.col(i).norm() + std::abs(p.h(i));
  }

  Eigen::VectorXd y = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(m);
  WorkingSet ws;
  Eigen::VectorXd step, r;
  int iterations = 0;

  while (true) {
    int entering = -1;
    double worst = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (std::find(ws.rows.begin(), ws.rows.end(), static_cast<int>(i)) != ws.rows.end()) continue;
      const double s = (n_all.col(i).dot(y) - b(i)) / row_scale(i);
      if (s < -1e-14 && s < worst) {
        worst = s;
        entering = static_cast<int>(i);
      }
    }
    if (entering < 0) break;

    const Eigen::VectorXd np = n_all.col(entering);
    double mu_p = 0.0;
    while (true) {
      if (++iterations > max_iterations) {
        auto s = infeasible(p, iterations, "iteration cap exceeded");
        return s;
      }
      ws.directions(np, step, r);

      double t1 = kInf;
      int leaving = -1;
      for (Eigen::Index k = 0; k < r.size(); ++k) {
        if (r(k) > 1e-14) {
          const double t = mu(ws.rows[static_cast<std::size_t>(k)]) / r(k);
          if (t < t1) {
            t1 = t;
            leaving = static_cast<int>(k);
          }
        }
      }
      const double curvature = step.dot(np);
      const double t2 = step.norm() > 1e-12 * np.norm() && curvature > 0.0 ? (b(entering) - np.dot(y)) / curvature
                                                                           : kInf;
      const double t = std::min(t1, t2);
      if (t == kInf) return infeasible(p, iterations, "constraints are infeasible");

      if (t2 < kInf) y += t * step;
      for (Eigen::Index k = 0; k < r.size(); ++k) mu(ws.rows[static_cast<std::size_t>(k)]) -= t * r(k);
      mu_p += t;

      if (t2 <= t1) {
        mu(entering) = mu_p;
        ws.rows.push_back(entering);
        ws.rebuild(n_all);
        break;
      }
      mu(ws.rows[static_cast<std::size_t>(leaving)]) = 0.0;
      ws.rows.erase(ws.rows.begin() + leaving);
      ws.rebuild(n_all);
    }
  }

  // Exact re-solve on the final working set in the original coordinates:
  // z = -W^{-1} G_A^T mu_A with (G_A W^{-1} G_A^T) mu_A = -h_A, refined twice.
  Eigen::VectorXd z_out = y.cwiseQuotient(p.weights.cwiseSqrt());
  if (!ws.rows.empty()) {
    const auto k = static_cast<Eigen::Index>(ws.rows.size());
    Matrix ga(k, n);
    Eigen::VectorXd ha(k);
    for (Eigen::Index i = 0; i < k; ++i) {
      ga.row(i) = p.G.row(ws.rows[static_cast<std::size_t>(i)]);
      ha(i) = p.h(ws.rows[static_cast<std::size_t>(i)]);
    }
    const Eigen::VectorXd w_inv = p.weights.cwiseInverse();
    const Matrix gw = ga * w_inv.asDiagonal();
    const auto ldlt = (gw * ga.transpose()).ldlt();
    Eigen::VectorXd lam = ldlt.solve(-ha);
    Eigen::VectorXd z = -(gw.transpose() * lam);
    for (int pass = 0; pass < 2; ++pass) {
      lam += ldlt.solve(ga * z - ha);
      z = -(gw.transpose() * lam);
    }
    if (lam.allFinite() && (lam.array() >= 0.0).all()) {
      z_out = z;
      mu.setZero();
      for (Eigen::Index i = 0; i < k; ++i) mu(ws.rows[static_cast<std::size_t>(i)]) = lam(i);
    }
  }
  return finish(p, std::move(z_out), mu, ws.rows, iterations);
}

QpProblem clf_problem(const State& grad_v, double alpha_v, const State& drift) {
  QpProblem p;
  p.weights = Eigen::VectorXd::Ones(grad_v.size());
  p.G = grad_v.transpose();
  p.h.resize(1);
  p.h(0) = -alpha_v - grad_v.dot(drift);
  return p;
}

QpSolution solve_clf_closed_form(const State& grad_v, double alpha_v, const State& drift) {
  if (grad_v.size() != drift.size()) fail(ErrorKind::input, "clf: gradient and drift dimensions differ");
  if (!grad_v.allFinite() || !drift.allFinite() || !std::isfinite(alpha_v)) {
    fail(ErrorKind::numeric, "clf: non-finite input");
  }
  const QpProblem p = clf_problem(grad_v, alpha_v, drift);
  const double b = p.h(0);
  const double a2 = grad_v.squaredNorm();
  QpSolution s;
  s.z = State::Zero(grad_v.size());
  s.multipliers = Eigen::VectorXd::Zero(1);
  if (b < 0.0) {
    if (a2 == 0.0) return infeasible(p, 0, "clf row reads 0 <= b with b < 0");
    s.z = (b / a2) * grad_v;
    s.multipliers(0) = -b / a2;
    s.active_set = {0};
  }
  s.u = s.z;
  s.objective = s.z.squaredNorm();
  s.kkt_residual = kkt_residual(p, s.z, s.multipliers);
  s.status = QpStatus::optimal;
  return s;
}

QpProblem clf_cbf_problem(const ClfTerms& clf, const std::vector<CbfTerms>& cbf, const State& drift,
                          const State& f_at_x, double lambda) {
  if (!(lambda > 0.0)) fail(ErrorKind::input, "clf-cbf: lambda must be positive");
  const Eigen::Index d = drift.size();
  const Eigen::Index m = static_cast<Eigen::Index>(cbf.size()) + 1;
  QpProblem p;
  p.has_slack = true;
  p.weights = Eigen::VectorXd::Ones(d + 1);
  p.weights(d) = lambda;
  p.G = Matrix::Zero(m, d + 1);
  p.h.resize(m);
  for (std::size_t i = 0; i < cbf.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    p.G.row(k).head(d) = -cbf[i].grad.transpose();
    p.h(k) = cbf[i].gamma_b + cbf[i].grad.dot(f_at_x);
  }
  p.G.row(m - 1).head(d) = clf.grad.transpose();
  p.G(m - 1, d) = -1.0;
  p.h(m - 1) = -clf.alpha_v - clf.grad.dot(drift);
  return p;
}

QpSolution solve_clf_cbf(const ClfTerms& clf, const std::vector<CbfTerms>& cbf, const State& drift,
                         const State& f_at_x, double lambda) {
  return solve_dense_qp(clf_cbf_problem(clf, cbf, drift, f_at_x, lambda));
}

QpProblem cbf_only_problem(const std::vector<CbfTerms>& cbf, const State& f_at_x) {
  const Eigen::Index d = f_at_x.size();
  const auto m = static_cast<Eigen::Index>(cbf.size());
  QpProblem p;
  p.weights = Eigen::VectorXd::Ones(d);
  p.G.resize(m, d);
  p.h.resize(m);
  for (Eigen::Index k = 0; k < m; ++k) {
    p.G.row(k) = -cbf[static_cast<std::size_t>(k)].grad.transpose();
    p.h(k) = cbf[static_cast<std::size_t>(k)].gamma_b + cbf[static_cast<std::size_t>(k)].grad.dot(f_at_x);
  }
  return p;
}

QpSolution solve_cbf_only(const std::vector<CbfTerms>& cbf, const State& f_at_x) {
  return solve_dense_qp(cbf_only_problem(cbf, f_at_x));
}

nlohmann::json to_json(const QpProblem& p) {
  return {{"weights", state_to_json(p.weights)},
          {"G", matrix_to_json(p.G)},
          {"h", state_to_json(p.h)},
          {"has_slack", p.has_slack}};
}

nlohmann::json to_json(const QpSolution& s) {
  return {{"status", to_string(s.status)},
          {"u", state_to_json(s.u)},
          {"slack", s.slack},
          {"z", state_to_json(s.z)},
          {"multipliers", state_to_json(s.multipliers)},
          {"active_set", s.active_set},
          {"objective", s.objective},
          {"kkt_residual", std::isfinite(s.kkt_residual) ? nlohmann::json(s.kkt_residual) : nlohmann::json()},
          {"iterations", s.iterations},
          {"message", s.message}};
}

}  // namespace nodeplan
