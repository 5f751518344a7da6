#include "nodeplan/command.hpp"

#include <cmath>

#include "nodeplan/demo_io.hpp"
#include "nodeplan/error.hpp"

namespace nodeplan {
namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

State vec(const nlohmann::json& j, const char* key, Eigen::Index dim) {
  State v = state_from_json(j.at(key), key);
  if (v.size() != dim) {
    fail(ErrorKind::input, std::string(key) + ": expected " + std::to_string(dim) + " components, got " +
                               std::to_string(v.size()));
  }
  if (!v.allFinite()) fail(ErrorKind::input, std::string(key) + ": non-finite value");
  return v;
}

}  // namespace

ClientCommand parse_command(const nlohmann::json& j, Eigen::Index dim) {
  try {
    if (!j.is_object()) fail(ErrorKind::input, "command: expected a JSON object");
    const std::string type = j.at("type").get<std::string>();
    if (type == "set_state") return SetState{vec(j, "x", dim)};
    if (type == "nudge") {
      const double dur = j.at("duration").get<double>();
      if (!(dur > 0.0) || !std::isfinite(dur)) fail(ErrorKind::input, "nudge: duration must be positive");
      return Nudge{vec(j, "dv", dim), dur};
    }
    if (type == "add_obstacle") {
      BarrierTerm b = barrier_from_json(j.at("shape"));
      if (b.barrier.dim() != dim) fail(ErrorKind::input, "add_obstacle: shape dimension mismatch");
      return AddObstacle{std::move(b)};
    }
    if (type == "move_obstacle") return MoveObstacle{j.at("id").get<int>(), vec(j, "center", dim)};
    if (type == "remove_obstacle") return RemoveObstacle{j.at("id").get<int>()};
    if (type == "pause") return Pause{};
    if (type == "resume") return Resume{};
    if (type == "reset") {
      Reset r;
      if (j.contains("x0") && !j.at("x0").is_null()) r.x0 = vec(j, "x0", dim);
      return r;
    }
    if (type == "set_param") {
      SetParam p{j.at("name").get<std::string>(), j.at("value").get<double>()};
      if (p.name != "alpha_gain" && p.name != "lambda" && p.name != "lookahead_N") {
        fail(ErrorKind::input, "set_param: unknown parameter '" + p.name + "'");
      }
      if (!(p.value > 0.0) || !std::isfinite(p.value)) fail(ErrorKind::input, "set_param: value must be positive");
      if (p.name == "lookahead_N" && p.value != std::floor(p.value)) {
        fail(ErrorKind::input, "set_param: lookahead_N must be an integer");
      }
      return p;
    }
    fail(ErrorKind::input, "command: unknown type '" + type + "'");
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::input, std::string("command: ") + e.what());
  }
}

ClientCommand parse_command_text(const std::string& text, Eigen::Index dim) {
  return parse_command(parse_json(text, "command"), dim);
}

std::string command_name(const ClientCommand& c) {
  return std::visit(overloaded{[](const SetState&) { return "set_state"; }, [](const Nudge&) { return "nudge"; },
                               [](const AddObstacle&) { return "add_obstacle"; },
                               [](const MoveObstacle&) { return "move_obstacle"; },
                               [](const RemoveObstacle&) { return "remove_obstacle"; },
                               [](const Pause&) { return "pause"; }, [](const Resume&) { return "resume"; },
                               [](const Reset&) { return "reset"; }, [](const SetParam&) { return "set_param"; }},
                    c);
}

nlohmann::json command_to_json(const ClientCommand& c) {
  nlohmann::json j = std::visit(
      overloaded{[](const SetState& s) -> nlohmann::json { return {{"x", state_to_json(s.x)}}; },
                 [](const Nudge& n) -> nlohmann::json { return {{"dv", state_to_json(n.dv)}, {"duration", n.duration}}; },
                 [](const AddObstacle& a) -> nlohmann::json { return {{"shape", barrier_to_json(a.obstacle)}}; },
                 [](const MoveObstacle& m) -> nlohmann::json {
                   return {{"id", m.id}, {"center", state_to_json(m.center)}};
                 },
                 [](const RemoveObstacle& r) -> nlohmann::json { return {{"id", r.id}}; },
                 [](const Pause&) -> nlohmann::json { return nlohmann::json::object(); },
                 [](const Resume&) -> nlohmann::json { return nlohmann::json::object(); },
                 [](const Reset& r) -> nlohmann::json {
                   return r.x0 ? nlohmann::json{{"x0", state_to_json(*r.x0)}} : nlohmann::json::object();
                 },
                 [](const SetParam& p) -> nlohmann::json { return {{"name", p.name}, {"value", p.value}}; }},
      c);
  j["type"] = command_name(c);
  return j;
}

}  // namespace nodeplan
