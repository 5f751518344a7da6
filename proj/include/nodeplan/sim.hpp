#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "nodeplan/cert.hpp"
#include "nodeplan/core.hpp"
#include "nodeplan/error.hpp"
#include "nodeplan/integrate.hpp"
#include "nodeplan/planner.hpp"

namespace nodeplan {

struct Teleport {
  double at = 0.0;
  State offset;  // added to x at the first tick with t >= at
};

struct VelocityBias {
  double from = 0.0;
  double to = 0.0;
  State bias;  // added to xdot_ref on [from, to)
};

struct Hold {
  double from = 0.0;
  double to = 0.0;  // xdot = 0 on [from, to)
};

using Disturbance = std::variant<Teleport, VelocityBias, Hold>;

struct Scenario {
  TargetArray target_array;
  CertificateSet certificates;
  PlannerConfig planner;
  std::vector<Disturbance> disturbances;
  State x0;
  double horizon = 10.0;
  double control_dt = 1e-3;

  long num_ticks() const;
  void validate() const;
};

struct RolloutRecord {
  double t = 0.0;
  State x;
  Eigen::Index target_index = 0;
  Eigen::Index nearest_index = 0;
  State u;
  double epsilon = 0.0;
  double V = 0.0;
  double min_b = 0.0;
  PlanStatus status = PlanStatus::optimal;
};

struct RolloutSummary {
  double final_error = 0.0;  // ||x - pi(x)|| at the last record
  double min_b = std::numeric_limits<double>::infinity();
  double mean_u_norm = 0.0;
  double max_slack = 0.0;
  long steps = 0;
  long infeasible_steps = 0;  // records with status cbf_only or frozen
  bool moving_obstacles = false;
};

struct RolloutLog {
  std::vector<RolloutRecord> records;
  RolloutSummary summary;
};

/// Failure inside run(); carries the records logged before it.
class RolloutError : public Error {
 public:
  RolloutError(ErrorKind kind, const std::string& what, RolloutLog partial)
      : Error(kind, what), partial_(std::move(partial)) {}
  const RolloutLog& partial() const { return partial_; }

 private:
  RolloutLog partial_;
};

/// Closed loop on the kinematic plant xdot = xdot_ref at control_dt. Each tick
/// applies due disturbances, places obstacles at the tick time, plans, and
/// advances x by one RK4 step of the held command. num_ticks()+1 records: the
/// last one is the state at the horizon.
RolloutLog run(const VectorField& model, const Scenario& sc);

struct BatchItem {
  std::optional<RolloutLog> log;
  std::string error;  // set when the run threw
};

/// Independent runs on the OpenMP pool, results in input order. A failing
/// scenario yields an error entry and does not affect the others.
std::vector<BatchItem> run_batch(const VectorField& model, const std::vector<Scenario>& scenarios);

namespace serial {
std::vector<BatchItem> run_batch(const VectorField& model, const std::vector<Scenario>& scenarios);
}  // namespace serial

RolloutSummary summarize(const std::vector<RolloutRecord>& records, bool moving_obstacles);

std::string rollout_to_csv(const RolloutLog& log);
nlohmann::json to_json(const RolloutSummary& s);

Disturbance disturbance_from_json(const nlohmann::json& j);
nlohmann::json disturbance_to_json(const Disturbance& d);

// Scenario file:
//   {"model": "model.json",
//    "target": {"file": "target.json"} | {"x0": [...] | "data": "demos.json", "span": s, "dt": dt,
//               "trim_to_period": bool},
//    "x0": [...] (defaults to the target's first point),
//    "horizon": s, "control_dt": s, "planner": {...},
//    "obstacles": [...], "disturbances": [{"kind": "teleport", "at": s, "offset": [...]}, ...]}
// Relative paths resolve against the scenario file's directory.
struct ScenarioFile {
  nlohmann::json raw;
  std::filesystem::path base_dir;
  std::optional<std::filesystem::path> model_path;
};

ScenarioFile load_scenario_file(const std::filesystem::path& path);
ScenarioFile scenario_file_from_json(nlohmann::json j, std::filesystem::path base_dir);

/// Builds the runnable scenario; target arrays given by parameters are
/// integrated from `model`.
Scenario build_scenario(const ScenarioFile& file, const VectorField& model);

/// JSON echo of a built scenario (target array omitted, digest included).
nlohmann::json scenario_to_json(const Scenario& sc);

}  // namespace nodeplan
