#include "nodeplan/sim.hpp"

#include <cmath>
#include <sstream>

#include "nodeplan/demo_io.hpp"
#include "nodeplan/error.hpp"
#include "nodeplan/target_array.hpp"

namespace nodeplan {
namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

long tick_of(double t, double dt) { return static_cast<long>(std::ceil(t / dt - 1e-9)); }

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path q(p);
  return q.is_absolute() ? q : base / q;
}

void put_vec(std::ostringstream& os, const State& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) os << ',' << v(i);
}

}  // namespace

long Scenario::num_ticks() const { return static_cast<long>(std::llround(horizon / control_dt)); }

void Scenario::validate() const {
  if (!(control_dt > 0.0)) fail(ErrorKind::input, "scenario: control_dt must be positive");
  if (!(horizon >= control_dt)) fail(ErrorKind::input, "scenario: horizon must be >= control_dt");
  if (target_array.size() == 0) fail(ErrorKind::input, "scenario: empty target array");
  if (x0.size() != target_array.dim() || !x0.allFinite()) fail(ErrorKind::input, "scenario: bad x0");
  for (const auto& b : certificates.barriers) {
    if (b.barrier.dim() != x0.size()) fail(ErrorKind::input, "scenario: obstacle dimension mismatch");
  }
  planner.validate(target_array.size());
  for (const auto& d : disturbances) {
    std::visit(overloaded{[&](const Teleport& t) {
                            if (t.offset.size() != x0.size() || !t.offset.allFinite()) {
                              fail(ErrorKind::input, "teleport: bad offset");
                            }
                            if (t.at < 0.0 || t.at > horizon) fail(ErrorKind::input, "teleport: time outside horizon");
                          },
                          [&](const VelocityBias& v) {
                            if (v.bias.size() != x0.size() || !v.bias.allFinite()) {
                              fail(ErrorKind::input, "velocity_bias: bad bias");
                            }
                            if (v.from < 0.0 || v.to < v.from || v.to > horizon) {
                              fail(ErrorKind::input, "velocity_bias: interval outside horizon");
                            }
                          },
                          [&](const Hold& h) {
                            if (h.from < 0.0 || h.to < h.from || h.to > horizon) {
                              fail(ErrorKind::input, "hold: interval outside horizon");
                            }
                          }},
               d);
  }
}

RolloutLog run(const VectorField& model, const Scenario& sc) {
  sc.validate();
  const long n = sc.num_ticks();
  const double dt = sc.control_dt;
  bool moving = false;
  for (const auto& b : sc.certificates.barriers) moving = moving || b.barrier.moving();

  Planner planner(model, sc.target_array, sc.planner);
  RolloutLog log;
  log.records.reserve(static_cast<std::size_t>(n + 1));
  State x = sc.x0;
  try {
    for (long k = 0; k <= n; ++k) {
      const double t = static_cast<double>(k) * dt;
      State bias = State::Zero(x.size());
      bool held = false;
      for (const auto& d : sc.disturbances) {
        std::visit(overloaded{[&](const Teleport& tp) {
                                if (tick_of(tp.at, dt) == k) x += tp.offset;
                              },
                              [&](const VelocityBias& vb) {
                                if (k >= tick_of(vb.from, dt) && k < tick_of(vb.to, dt)) bias += vb.bias;
                              },
                              [&](const Hold& h) {
                                if (k >= tick_of(h.from, dt) && k < tick_of(h.to, dt)) held = true;
                              }},
                   d);
      }
      const CertificateSet cs = moving ? sc.certificates.at_time(t) : sc.certificates;
      const PlanStep step = planner.step(x, cs);
      log.records.push_back({t, x, step.target_index, step.nearest_index, step.u, step.slack, step.V, step.min_b,
                             step.status});
      if (k == n) break;
      // RK4 on a field held constant over the tick reduces to x + dt * xdot.
      const State xdot = held ? State::Zero(x.size()) : State(step.xdot_ref + bias);
      x += dt * xdot;
      if (!x.allFinite()) fail(ErrorKind::numeric, "rollout diverged at t=" + std::to_string(t));
    }
  } catch (const Error& e) {
    log.summary = summarize(log.records, moving);
    throw RolloutError(e.kind(), e.what(), std::move(log));
  }
  log.summary = summarize(log.records, moving);
  return log;
}

RolloutSummary summarize(const std::vector<RolloutRecord>& records, bool moving_obstacles) {
  RolloutSummary s;
  s.moving_obstacles = moving_obstacles;
  s.steps = static_cast<long>(records.size());
  if (records.empty()) return s;
  double u_sum = 0.0;
  for (const auto& r : records) {
    s.min_b = std::min(s.min_b, r.min_b);
    u_sum += r.u.norm();
    s.max_slack = std::max(s.max_slack, r.epsilon);
    if (r.status != PlanStatus::optimal) ++s.infeasible_steps;
  }
  s.mean_u_norm = u_sum / static_cast<double>(records.size());
  s.final_error = std::sqrt(records.back().V);
  return s;
}

namespace {

template <bool Parallel>
std::vector<BatchItem> batch(const VectorField& model, const std::vector<Scenario>& scenarios) {
  std::vector<BatchItem> out(scenarios.size());
  const long n = static_cast<long>(scenarios.size());
#pragma omp parallel for schedule(dynamic, 1) if (Parallel)
  for (long i = 0; i < n; ++i) {
    auto& item = out[static_cast<std::size_t>(i)];
    try {
      item.log = run(model, scenarios[static_cast<std::size_t>(i)]);
    } catch (const std::exception& e) {
      item.error = e.what();
    }
  }
  return out;
}

}  // namespace

std::vector<BatchItem> run_batch(const VectorField& model, const std::vector<Scenario>& scenarios) {
  return batch<true>(model, scenarios);
}

std::vector<BatchItem> serial::run_batch(const VectorField& model, const std::vector<Scenario>& scenarios) {
  return batch<false>(model, scenarios);
}

std::string rollout_to_csv(const RolloutLog& log) {
  std::ostringstream os;
  os.precision(17);
  const Eigen::Index d = log.records.empty() ? 0 : log.records.front().x.size();
  os << 't';
  for (Eigen::Index i = 0; i < d; ++i) os << ",x" << i;
  os << ",target_index,nearest_index";
  for (Eigen::Index i = 0; i < d; ++i) os << ",u" << i;
  os << ",epsilon,V,minB,status\n";
  for (const auto& r : log.records) {
    os << r.t;
    put_vec(os, r.x);
    os << ',' << r.target_index << ',' << r.nearest_index;
    put_vec(os, r.u);
    os << ',' << r.epsilon << ',' << r.V << ',';
    if (std::isfinite(r.min_b)) os << r.min_b;
    os << ',' << to_string(r.status) << '\n';
  }
  return os.str();
}

nlohmann::json to_json(const RolloutSummary& s) {
  return {{"final_error", s.final_error},
          {"min_b", std::isfinite(s.min_b) ? nlohmann::json(s.min_b) : nlohmann::json()},
          {"mean_u_norm", s.mean_u_norm},
          {"max_slack", s.max_slack},
          {"steps", s.steps},
          {"infeasible_steps", s.infeasible_steps},
          {"moving_obstacles", s.moving_obstacles}};
}

Disturbance disturbance_from_json(const nlohmann::json& j) {
  try {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "teleport") return Teleport{j.at("at").get<double>(), state_from_json(j.at("offset"), "offset")};
    if (kind == "velocity_bias") {
      return VelocityBias{j.at("from").get<double>(), j.at("to").get<double>(), state_from_json(j.at("bias"), "bias")};
    }
    if (kind == "hold") return Hold{j.at("from").get<double>(), j.at("to").get<double>()};
    fail(ErrorKind::input, "unknown disturbance kind '" + kind + "'");
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::input, std::string("disturbance: ") + e.what());
  }
}

nlohmann::json disturbance_to_json(const Disturbance& d) {
  return std::visit(
      overloaded{[](const Teleport& t) -> nlohmann::json {
                   return {{"kind", "teleport"}, {"at", t.at}, {"offset", state_to_json(t.offset)}};
                 },
                 [](const VelocityBias& v) -> nlohmann::json {
                   return {{"kind", "velocity_bias"}, {"from", v.from}, {"to", v.to}, {"bias", state_to_json(v.bias)}};
                 },
                 [](const Hold& h) -> nlohmann::json { return {{"kind", "hold"}, {"from", h.from}, {"to", h.to}}; }},
      d);
}

ScenarioFile scenario_file_from_json(nlohmann::json j, std::filesystem::path base_dir) {
  if (!j.is_object()) fail(ErrorKind::input, "scenario: expected a JSON object");
  ScenarioFile f{std::move(j), std::move(base_dir), std::nullopt};
  if (f.raw.contains("model")) {
    if (!f.raw.at("model").is_string()) fail(ErrorKind::input, "scenario: \"model\" must be a path string");
    f.model_path = resolve(f.base_dir, f.raw.at("model").get<std::string>());
  }
  return f;
}

ScenarioFile load_scenario_file(const std::filesystem::path& path) {
  return scenario_file_from_json(parse_json(read_text_file(path), path.string()), path.parent_path());
}

Scenario build_scenario(const ScenarioFile& file, const VectorField& model) {
  const nlohmann::json& j = file.raw;
  Scenario sc;
  try {
    const nlohmann::json& t = j.at("target");
    if (t.contains("file")) {
      const auto p = resolve(file.base_dir, t.at("file").get<std::string>());
      sc.target_array = target_array_from_json(parse_json(read_text_file(p), p.string()));
    } else {
      State tx0;
      if (t.contains("x0")) {
        tx0 = state_from_json(t.at("x0"), "target x0");
      } else if (t.contains("data")) {
        const DemonstrationSet ds = load_demo_set(resolve(file.base_dir, t.at("data").get<std::string>()));
        require_valid(ds);
        if (ds.demos.empty()) fail(ErrorKind::input, "scenario: target data has no demonstrations");
        tx0 = ds.demos.front().at(0);
      } else {
        fail(ErrorKind::input, "scenario: target needs \"file\", \"x0\" or \"data\"");
      }
      TargetOptions opts;
      opts.trim_to_period = t.value("trim_to_period", false);
      opts.closure_fraction = t.value("closure_fraction", kDefaultClosureFraction);
      sc.target_array = generate_target_array(model, tx0, t.at("span").get<double>(), t.value("dt", 1e-3), opts);
    }
    sc.x0 = j.contains("x0") ? state_from_json(j.at("x0"), "x0") : sc.target_array.point(0);
    sc.horizon = j.value("horizon", sc.horizon);
    sc.control_dt = j.value("control_dt", sc.control_dt);
    if (j.contains("planner")) sc.planner = planner_config_from_json(j.at("planner"));
    if (j.contains("obstacles")) sc.certificates.barriers = obstacles_from_json(j.at("obstacles"));
    if (j.contains("disturbances")) {
      for (const auto& d : j.at("disturbances")) sc.disturbances.push_back(disturbance_from_json(d));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::input, std::string("scenario: ") + e.what());
  }
  sc.certificates.alpha.gain = sc.planner.alpha_gain;
  sc.validate();
  return sc;
}

nlohmann::json scenario_to_json(const Scenario& sc) {
  nlohmann::json d = nlohmann::json::array();
  for (const auto& x : sc.disturbances) d.push_back(disturbance_to_json(x));
  return {{"x0", state_to_json(sc.x0)},
          {"horizon", sc.horizon},
          {"control_dt", sc.control_dt},
          {"planner", to_json(sc.planner)},
          {"obstacles", obstacles_to_json(sc.certificates.barriers).at("obstacles")},
          {"disturbances", d},
          {"target_array",
           {{"size", sc.target_array.size()},
            {"dt", sc.target_array.dt},
            {"periodic", sc.target_array.periodic},
            {"digest", target_array_digest(sc.target_array)}}}};
}

}  // namespace nodeplan
