#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "nodeplan/cert.hpp"
#include "nodeplan/core.hpp"
#include "nodeplan/error.hpp"
#include "nodeplan/integrate.hpp"
#include "nodeplan/qp.hpp"

namespace nodeplan {

enum class NearestMode { global, windowed };
enum class InfeasiblePolicy { freeze, cbf_only };

std::string to_string(NearestMode m);
std::string to_string(InfeasiblePolicy p);
NearestMode nearest_mode_from_string(const std::string& s);
InfeasiblePolicy infeasible_policy_from_string(const std::string& s);

struct PlannerConfig {
  int lookahead_N = 10;
  double alpha_gain = 1.0;  // replaces the certificate set's alpha
  double lambda = 100.0;
  NearestMode nn_mode = NearestMode::global;
  int nn_radius = 50;  // windowed mode: search +-radius around the previous index
  InfeasiblePolicy infeasible_policy = InfeasiblePolicy::cbf_only;

  void validate(Eigen::Index target_len) const;
};

nlohmann::json to_json(const PlannerConfig& c);
PlannerConfig planner_config_from_json(const nlohmann::json& j);

enum class PlanStatus {
  optimal,   // CLF-CBF (or closed-form CLF) solve succeeded
  cbf_only,  // every candidate infeasible; CLF row dropped
  frozen,    // no safe command found; xdot_ref = 0
};

std::string to_string(PlanStatus s);

struct PlanStep {
  State target;
  Eigen::Index target_index = 0;
  Eigen::Index nearest_index = 0;
  State u;
  double slack = 0.0;
  State xdot_ref;  // f(x) + u
  double V = 0.0;
  double min_b = std::numeric_limits<double>::infinity();
  PlanStatus status = PlanStatus::optimal;
  std::vector<double> candidate_costs;  // ||u*||^2 per candidate, +inf if infeasible
};

struct TargetChoice {
  Eigen::Index index = 0;
  Eigen::Index nearest_index = 0;
  QpSolution solution;
  std::vector<Eigen::Index> candidates;
  std::vector<double> costs;
};

/// Thrown by choose_target when no candidate admits a feasible QP.
class TargetSelectionError : public Error {
 public:
  TargetSelectionError(std::vector<Eigen::Index> candidates, std::vector<std::string> statuses);

  const std::vector<Eigen::Index>& candidates() const { return candidates_; }
  const std::vector<std::string>& statuses() const { return statuses_; }

 private:
  std::vector<Eigen::Index> candidates_;
  std::vector<std::string> statuses_;
};

/// argmin_k ||x - points[k]||, lowest k on ties. With `around`, only indices
/// within +-radius of it are searched (wrapping when periodic).
Eigen::Index nearest_index(const State& x, const TargetArray& ta, std::optional<Eigen::Index> around = {},
                           int radius = 0);

/// Window m, m+1, ..., m+N-1, wrapped modulo T when periodic, else truncated.
std::vector<Eigen::Index> candidate_window(Eigen::Index m, const TargetArray& ta, int lookahead);

/// Picks the candidate whose QP has the smallest ||u*||^2 (earliest on ties),
/// using f(y) = ta.velocities at each candidate y. `fx` is model(x).
TargetChoice choose_target(const State& x, const State& fx, const TargetArray& ta, const CertificateSet& cs,
                           const PlannerConfig& cfg, std::optional<Eigen::Index> previous = {});

/// One planning step, stateless except for the optional previous index used
/// by windowed nearest-neighbour search.
PlanStep plan_step(const State& x, const TargetArray& ta, const VectorField& model, const CertificateSet& cs,
                   const PlannerConfig& cfg, std::optional<Eigen::Index> previous = {});

/// Holds the previous index between steps. Drive from a single thread.
class Planner {
 public:
  Planner(const VectorField& model, TargetArray ta, PlannerConfig cfg);

  PlanStep step(const State& x, const CertificateSet& cs);
  void reset() { previous_.reset(); }

  const TargetArray& target_array() const { return ta_; }
  const PlannerConfig& config() const { return cfg_; }
  void set_config(const PlannerConfig& cfg);
  const VectorField& model() const { return *model_; }

 private:
  const VectorField* model_;
  TargetArray ta_;
  PlannerConfig cfg_;
  std::optional<Eigen::Index> previous_;
};

}  // namespace nodeplan
