#include "nodeplan/planner.hpp"

#include <cmath>
#include <limits>

namespace nodeplan {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Eigen::Index wrap(Eigen::Index k, Eigen::Index n) { return ((k % n) + n) % n; }

std::string join(const std::vector<std::string>& s) {
  std::string out;
  for (const auto& p : s) out += (out.empty() ? "" : ", ") + p;
  return out;
}

std::vector<std::string> describe(const std::vector<Eigen::Index>& cands, const std::vector<std::string>& st) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < cands.size(); ++i) out.push_back(std::to_string(cands[i]) + ": " + st[i]);
  return out;
}

}  // namespace

std::string to_string(NearestMode m) { return m == NearestMode::global ? "global" : "windowed"; }
std::string to_string(InfeasiblePolicy p) { return p == InfeasiblePolicy::freeze ? "freeze" : "cbf_only"; }

std::string to_string(PlanStatus s) {
  switch (s) {
    case PlanStatus::optimal: return "optimal";
    case PlanStatus::cbf_only: return "cbf_only";
    case PlanStatus::frozen: return "frozen";
  }
  return "?";
}

NearestMode nearest_mode_from_string(const std::string& s) {
  if (s == "global") return NearestMode::global;
  if (s == "windowed") return NearestMode::windowed;
  fail(ErrorKind::input, "unknown nearest-neighbour mode '" + s + "' (expected global or windowed)");
}

InfeasiblePolicy infeasible_policy_from_string(const std::string& s) {
  if (s == "freeze") return InfeasiblePolicy::freeze;
  if (s == "cbf_only") return InfeasiblePolicy::cbf_only;
  fail(ErrorKind::input, "unknown infeasible policy '" + s + "' (expected freeze or cbf_only)");
}

void PlannerConfig::validate(Eigen::Index target_len) const {
  if (lookahead_N < 1) fail(ErrorKind::input, "lookahead_N must be >= 1");
  if (target_len > 0 && lookahead_N > target_len) {
    fail(ErrorKind::input, "lookahead_N (" + std::to_string(lookahead_N) + ") exceeds target array length " +
                               std::to_string(target_len));
  }
  if (!(alpha_gain > 0.0) || !std::isfinite(alpha_gain)) fail(ErrorKind::input, "alpha_gain must be positive");
  if (!(lambda > 0.0) || !std::isfinite(lambda)) fail(ErrorKind::input, "lambda must be positive");
  if (nn_radius < 0) fail(ErrorKind::input, "nn_radius must be >= 0");
}

nlohmann::json to_json(const PlannerConfig& c) {
  return {{"lookahead_N", c.lookahead_N},       {"alpha_gain", c.alpha_gain},
          {"lambda", c.lambda},                 {"nn_mode", to_string(c.nn_mode)},
          {"nn_radius", c.nn_radius},           {"infeasible_policy", to_string(c.infeasible_policy)}};
}

PlannerConfig planner_config_from_json(const nlohmann::json& j) {
  PlannerConfig c;
  try {
    c.lookahead_N = j.value("lookahead_N", c.lookahead_N);
    c.alpha_gain = j.value("alpha_gain", c.alpha_gain);
    c.lambda = j.value("lambda", c.lambda);
    c.nn_radius = j.value("nn_radius", c.nn_radius);
    if (j.contains("nn_mode")) c.nn_mode = nearest_mode_from_string(j.at("nn_mode").get<std::string>());
    if (j.contains("infeasible_policy")) {
      c.infeasible_policy = infeasible_policy_from_string(j.at("infeasible_policy").get<std::string>());
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::input, std::string("planner config: ") + e.what());
  }
  c.validate(0);
  return c;
}

TargetSelectionError::TargetSelectionError(std::vector<Eigen::Index> candidates, std::vector<std::string> statuses)
    : Error(ErrorKind::numeric, "no feasible target candidate (" + join(describe(candidates, statuses)) + ")"),
      candidates_(std::move(candidates)),
      statuses_(std::move(statuses)) {}

Eigen::Index nearest_index(const State& x, const TargetArray& ta, std::optional<Eigen::Index> around, int radius) {
  const Eigen::Index n = ta.size();
  if (n == 0) fail(ErrorKind::input, "target array is empty");
  if (x.size() != ta.dim()) fail(ErrorKind::input, "state dimension does not match the target array");
  Eigen::Index lo = 0;
  Eigen::Index hi = n - 1;
  bool wraps = false;
  if (around && 2 * static_cast<Eigen::Index>(radius) + 1 < n) {
    lo = *around - radius;
    hi = *around + radius;
    if (ta.periodic) {
      wraps = true;
    } else {
      lo = std::max<Eigen::Index>(lo, 0);
      hi = std::min<Eigen::Index>(hi, n - 1);
    }
  }
  Eigen::Index best = -1;
  double best_d = kInf;
  for (Eigen::Index j = lo; j <= hi; ++j) {
    const Eigen::Index k = wraps ? wrap(j, n) : j;
    const double d = (ta.points.row(k).transpose() - x).squaredNorm();
    if (d < best_d || (d == best_d && k < best)) {
      best_d = d;
      best = k;
    }
  }
  return best;
}

std::vector<Eigen::Index> candidate_window(Eigen::Index m, const TargetArray& ta, int lookahead) {
  const Eigen::Index n = ta.size();
  std::vector<Eigen::Index> out;
  for (Eigen::Index j = 0; j < lookahead; ++j) {
    Eigen::Index k = m + j;
    if (k >= n) {
      if (!ta.periodic) break;
      k = wrap(k, n);
    }
    out.push_back(k);
  }
  return out;
}

TargetChoice choose_target(const State& x, const State& fx, const TargetArray& ta, const CertificateSet& cs,
                           const PlannerConfig& cfg, std::optional<Eigen::Index> previous) {
  if (!x.allFinite()) fail(ErrorKind::numeric, "planner: non-finite state");
  TargetChoice out;
  const bool windowed = cfg.nn_mode == NearestMode::windowed;
  out.nearest_index = nearest_index(x, ta, windowed ? previous : std::nullopt, cfg.nn_radius);
  out.candidates = candidate_window(out.nearest_index, ta, cfg.lookahead_N);

  CertificateSet local = cs;
  local.alpha.gain = cfg.alpha_gain;
  const std::vector<CbfTerms> cbf = cbf_terms(local, x);

  std::vector<std::string> statuses;
  double best = kInf;
  bool found = false;
  for (const Eigen::Index k : out.candidates) {
    const State y = ta.point(k);
    const State drift = fx - ta.velocity(k);
    const ClfTerms clf = clf_terms(local, x - y);
    QpSolution s = cbf.empty() ? solve_clf_closed_form(clf.grad, clf.alpha_v, drift)
                               : solve_clf_cbf(clf, cbf, drift, fx, cfg.lambda);
    const double cost = s.ok() ? s.u.squaredNorm() : kInf;
    out.costs.push_back(cost);
    statuses.push_back(s.ok() ? "optimal" : "infeasible: " + s.message);
    if (s.ok() && cost < best) {
      best = cost;
      out.index = k;
      out.solution = std::move(s);
      found = true;
    }
  }
  if (!found) throw TargetSelectionError(out.candidates, std::move(statuses));
  return out;
}

PlanStep plan_step(const State& x, const TargetArray& ta, const VectorField& model, const CertificateSet& cs,
                   const PlannerConfig& cfg, std::optional<Eigen::Index> previous) {
  const State fx = model.eval(x);
  if (!fx.allFinite()) fail(ErrorKind::numeric, "planner: model produced a non-finite velocity");
  PlanStep step;
  step.min_b = cs.min_barrier(x);
  try {
    TargetChoice c = choose_target(x, fx, ta, cs, cfg, previous);
    step.target_index = c.index;
    step.nearest_index = c.nearest_index;
    step.u = c.solution.u;
    step.slack = c.solution.slack;
    step.candidate_costs = std::move(c.costs);
    step.status = PlanStatus::optimal;
  } catch (const TargetSelectionError&) {
    const bool windowed = cfg.nn_mode == NearestMode::windowed;
    step.nearest_index = nearest_index(x, ta, windowed ? previous : std::nullopt, cfg.nn_radius);
    step.target_index = step.nearest_index;
    step.candidate_costs.assign(candidate_window(step.nearest_index, ta, cfg.lookahead_N).size(), kInf);
    step.status = PlanStatus::frozen;
    step.u = -fx;
    if (cfg.infeasible_policy == InfeasiblePolicy::cbf_only) {
      const QpSolution s = solve_cbf_only(cbf_terms(cs, x), fx);
      if (s.ok()) {
        step.u = s.u;
        step.status = PlanStatus::cbf_only;
      }
    }
  }
  step.target = ta.point(step.target_index);
  step.V = cs.lyapunov.value(x - step.target);
  step.xdot_ref = fx + step.u;
  return step;
}

Planner::Planner(const VectorField& model, TargetArray ta, PlannerConfig cfg)
    : model_(&model), ta_(std::move(ta)), cfg_(cfg) {
  if (ta_.size() == 0) fail(ErrorKind::input, "target array is empty");
  cfg_.validate(ta_.size());
}

void Planner::set_config(const PlannerConfig& cfg) {
  cfg.validate(ta_.size());
  cfg_ = cfg;
}

PlanStep Planner::step(const State& x, const CertificateSet& cs) {
  PlanStep s = plan_step(x, ta_, *model_, cs, cfg_, previous_);
  previous_ = s.target_index;
  return s;
}

}  // namespace nodeplan
