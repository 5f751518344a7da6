#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "nodeplan/cert.hpp"
#include "nodeplan/core.hpp"

namespace nodeplan {

inline constexpr int kMaxQpConstraints = 16;
inline constexpr int kMaxQpIterations = 100;

/// min 1/2 z^T diag(weights) z  s.t.  G z <= h.
/// With has_slack the last variable is the CLF relaxation epsilon.
struct QpProblem {
  Eigen::VectorXd weights;
  Matrix G;
  Eigen::VectorXd h;
  bool has_slack = false;

  Eigen::Index num_vars() const { return weights.size(); }
  Eigen::Index num_rows() const { return G.rows(); }
  void validate() const;
};

enum class QpStatus { optimal, infeasible };

std::string to_string(QpStatus s);

struct QpSolution {
  State u;                     // the v block of z
  double slack = 0.0;          // 0 without a slack variable
  Eigen::VectorXd z;           // full primal solution
  Eigen::VectorXd multipliers; // one per row, zero off the active set
  std::vector<int> active_set; // ascending
  double objective = 0.0;      // z^T diag(weights) z
  double kkt_residual = 0.0;
  int iterations = 0;
  QpStatus status = QpStatus::infeasible;
  std::string message;

  bool ok() const { return status == QpStatus::optimal; }
};

/// Max of stationarity, primal and dual violation and complementarity, all in
/// the inf-norm.
double kkt_residual(const QpProblem& p, const Eigen::VectorXd& z, const Eigen::VectorXd& mu);

/// Goldfarb-Idnani dual active-set method. The most violated row enters the
/// working set (lowest index on ties); rows leave through the dual ratio test.
/// The final working set is re-solved exactly before reporting.
QpSolution solve_dense_qp(const QpProblem& p, int max_iterations = kMaxQpIterations);

/// min ||v||^2 s.t. gradV^T (drift + v) <= -alphaV.
QpSolution solve_clf_closed_form(const State& grad_v, double alpha_v, const State& drift);

/// Single-row problem that solve_clf_closed_form answers in closed form.
QpProblem clf_problem(const State& grad_v, double alpha_v, const State& drift);

/// min ||v||^2 + lambda eps^2 with one hard row per barrier,
///   -gradB^T v <= gamma(B) + gradB^T f(x),
/// and the relaxed CLF row
///   gradV^T v - eps <= -alpha(V) - gradV^T drift.
/// Barrier rows come first, the CLF row is last.
QpProblem clf_cbf_problem(const ClfTerms& clf, const std::vector<CbfTerms>& cbf, const State& drift,
                          const State& f_at_x, double lambda);
QpSolution solve_clf_cbf(const ClfTerms& clf, const std::vector<CbfTerms>& cbf, const State& drift,
                         const State& f_at_x, double lambda);

/// Barrier rows only: the safety-first fallback.
QpProblem cbf_only_problem(const std::vector<CbfTerms>& cbf, const State& f_at_x);
QpSolution solve_cbf_only(const std::vector<CbfTerms>& cbf, const State& f_at_x);

nlohmann::json to_json(const QpProblem& p);
nlohmann::json to_json(const QpSolution& s);

}  // namespace nodeplan
