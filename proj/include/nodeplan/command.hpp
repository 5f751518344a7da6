#pragma once

#include <optional>
#include <string>
#include <variant>

#include "json.hpp"
#include "nodeplan/cert.hpp"
#include "nodeplan/core.hpp"

namespace nodeplan {

struct SetState { State x; };
struct Nudge {
  State dv;
  double duration = 0.0;
};
struct AddObstacle { BarrierTerm obstacle; };
struct MoveObstacle {
  int id = 0;
  State center;
};
struct RemoveObstacle { int id = 0; };
struct Pause {};
struct Resume {};
struct Reset { std::optional<State> x0; };
struct SetParam {
  std::string name;  // alpha_gain | lambda | lookahead_N
  double value = 0.0;
};

using ClientCommand =
    std::variant<SetState, Nudge, AddObstacle, MoveObstacle, RemoveObstacle, Pause, Resume, Reset, SetParam>;

// Client-to-server JSON, discriminated by "type":
//   {"type": "set_state", "x": [...]}
//   {"type": "nudge", "dv": [...], "duration": s}
//   {"type": "add_obstacle", "shape": <obstacle>}
//   {"type": "move_obstacle", "id": k, "center": [...]}
//   {"type": "remove_obstacle", "id": k}
//   {"type": "pause"} | {"type": "resume"}
//   {"type": "reset", "x0": [...]}            (x0 optional)
//   {"type": "set_param", "name": "alpha_gain" | "lambda" | "lookahead_N", "value": v}
/// Schema and bounds checks against state dimension `dim`; throws
/// ErrorKind::input on anything malformed.
ClientCommand parse_command(const nlohmann::json& j, Eigen::Index dim);
ClientCommand parse_command_text(const std::string& text, Eigen::Index dim);

std::string command_name(const ClientCommand& c);
nlohmann::json command_to_json(const ClientCommand& c);

}  // namespace nodeplan
