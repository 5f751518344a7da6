#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "nodeplan/cert.hpp"
#include "nodeplan/core.hpp"

namespace nodeplan {

inline constexpr int kFrameDigits = 9;

struct FrameObstacle {
  int id = 0;
  BarrierTerm term;
};

/// One server-to-client state message.
struct Frame {
  long long seq = 0;
  double t = 0.0;
  State x;
  State target;
  Eigen::Index target_index = 0;
  State u;
  double V = 0.0;
  std::optional<double> minB;  // absent without obstacles
  double epsilon = 0.0;
  std::vector<FrameObstacle> obstacles;
  std::string target_array_digest;
};

/// Compact JSON where every floating-point number carries at most
/// kFrameDigits significant digits.
std::string dump_compact(const nlohmann::json& j, int digits = kFrameDigits);

nlohmann::json frame_to_json(const Frame& f);
/// {"type": "frame", ...Frame fields...}
std::string encode_frame(const Frame& f);
Frame decode_frame(const std::string& text);

/// {"type": "error" | "warning", "message": ...}
std::string encode_notice(const std::string& type, const std::string& message);

}  // namespace nodeplan
