#include "nodeplan/frame.hpp"

#include <array>
#include <charconv>
#include <cmath>

#include "nodeplan/demo_io.hpp"
#include "nodeplan/error.hpp"

namespace nodeplan {
namespace {

void emit(const nlohmann::json& j, int digits, std::string& out) {
  switch (j.type()) {
    case nlohmann::json::value_t::object: {
      out += '{';
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ',';
        first = false;
        out += nlohmann::json(it.key()).dump();
        out += ':';
        emit(it.value(), digits, out);
      }
      out += '}';
      break;
    }
    case nlohmann::json::value_t::array: {
      out += '[';
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) out += ',';
        emit(j[i], digits, out);
      }
      out += ']';
      break;
    }
    case nlohmann::json::value_t::number_float: {
      const double v = j.get<double>();
      if (!std::isfinite(v)) {
        out += "null";
        break;
      }
      std::array<char, 32> buf{};
      const auto r = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::general, digits);
      out.append(buf.data(), r.ptr);
      break;
    }
    default:
      out += j.dump();
  }
}

State vec(const nlohmann::json& j, const char* key) { return state_from_json(j.at(key), key); }

}  // namespace

std::string dump_compact(const nlohmann::json& j, int digits) {
  std::string out;
  emit(j, digits, out);
  return out;
}

nlohmann::json frame_to_json(const Frame& f) {
  nlohmann::json obs = nlohmann::json::array();
  for (const auto& o : f.obstacles) {
    nlohmann::json e = barrier_to_json(o.term);
    e["id"] = o.id;
    obs.push_back(std::move(e));
  }
  return {{"type", "frame"},
          {"seq", f.seq},
          {"t", f.t},
          {"x", state_to_json(f.x)},
          {"target", state_to_json(f.target)},
          {"target_index", f.target_index},
          {"u", state_to_json(f.u)},
          {"V", f.V},
          {"minB", f.minB ? nlohmann::json(*f.minB) : nlohmann::json()},
          {"epsilon", f.epsilon},
          {"obstacles", obs},
          {"target_array_digest", f.target_array_digest}};
}

std::string encode_frame(const Frame& f) { return dump_compact(frame_to_json(f)); }

Frame decode_frame(const std::string& text) {
  const nlohmann::json j = parse_json(text, "frame");
  Frame f;
  try {
    if (j.at("type") != "frame") fail(ErrorKind::input, "frame: unexpected message type");
    f.seq = j.at("seq").get<long long>();
    f.t = j.at("t").get<double>();
    f.x = vec(j, "x");
    f.target = vec(j, "target");
    f.target_index = j.at("target_index").get<Eigen::Index>();
    f.u = vec(j, "u");
    f.V = j.at("V").get<double>();
    if (!j.at("minB").is_null()) f.minB = j.at("minB").get<double>();
    f.epsilon = j.at("epsilon").get<double>();
    for (const auto& o : j.at("obstacles")) f.obstacles.push_back({o.at("id").get<int>(), barrier_from_json(o)});
    f.target_array_digest = j.at("target_array_digest").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::input, std::string("frame: ") + e.what());
  }
  return f;
}

std::string encode_notice(const std::string& type, const std::string& message) {
  return dump_compact({{"type", type}, {"message", message}});
}

}  // namespace nodeplan
