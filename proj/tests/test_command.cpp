#include <gmock/gmock.h>
#include <gtest/gtest.h>

#include "nodeplan/command.hpp"
#include "nodeplan/error.hpp"

using namespace nodeplan;
using nlohmann::json;

TEST(Command, ParsesEveryType) {
  EXPECT_EQ(std::get<SetState>(parse_command_text(R"({"type":"set_state","x":[1,2]})", 2)).x(1), 2.0);
  const auto n = std::get<Nudge>(parse_command_text(R"({"type":"nudge","dv":[0.1,0],"duration":0.5})", 2));
  EXPECT_DOUBLE_EQ(n.duration, 0.5);
  const auto a = std::get<AddObstacle>(
      parse_command_text(R"({"type":"add_obstacle","shape":{"shape":"circle","center":[0,0],"radius":0.2}})", 2));
  EXPECT_NEAR(a.obstacle.barrier.value(State::Zero(2)), -0.04, 1e-15);
  EXPECT_EQ(std::get<MoveObstacle>(parse_command_text(R"({"type":"move_obstacle","id":3,"center":[1,1]})", 2)).id, 3);
  EXPECT_EQ(std::get<RemoveObstacle>(parse_command_text(R"({"type":"remove_obstacle","id":4})", 2)).id, 4);
  EXPECT_TRUE(std::holds_alternative<Pause>(parse_command_text(R"({"type":"pause"})", 2)));
  EXPECT_TRUE(std::holds_alternative<Resume>(parse_command_text(R"({"type":"resume"})", 2)));
  EXPECT_FALSE(std::get<Reset>(parse_command_text(R"({"type":"reset"})", 2)).x0);
  EXPECT_TRUE(std::get<Reset>(parse_command_text(R"({"type":"reset","x0":[0,0]})", 2)).x0);
  const auto p = std::get<SetParam>(parse_command_text(R"({"type":"set_param","name":"lookahead_N","value":4})", 2));
  EXPECT_EQ(p.name, "lookahead_N");
}

TEST(Command, RejectsMalformed) {
  for (const char* bad : {
           "not json",
           "[1,2]",
           R"({"type":"teleport"})",
           R"({"x":[1,2]})",
           R"({"type":"set_state","x":[1,2,3]})",
           R"({"type":"set_state","x":"far"})",
           R"({"type":"nudge","dv":[0,0],"duration":0})",
           R"({"type":"add_obstacle","shape":{"shape":"circle","center":[0,0,0],"radius":1}})",
           R"({"type":"add_obstacle","shape":{"shape":"circle","center":[0,0],"radius":-1}})",
           R"({"type":"set_param","name":"alpha_gain","value":-1})",
           R"({"type":"set_param","name":"gamma","value":1})",
           R"({"type":"set_param","name":"lookahead_N","value":2.5})",
           R"({"type":"move_obstacle","center":[0,0]})",
       }) {
    try {
      parse_command_text(std::string(bad), 2);
      ADD_FAILURE() << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::input) << bad;
    }
  }
}

TEST(Command, JsonRoundTrip) {
  const std::vector<std::string> texts = {
      R"({"type":"set_state","x":[1.5,-2]})",
      R"({"type":"nudge","dv":[0.25,0],"duration":0.5})",
      R"({"type":"move_obstacle","id":3,"center":[1,1]})",
      R"({"type":"pause"})",
      R"({"type":"reset","x0":[0,1]})",
      R"({"type":"set_param","name":"lambda","value":50})",
  };
  for (const auto& t : texts) {
    const ClientCommand c = parse_command_text(t, 2);
    const ClientCommand back = parse_command(command_to_json(c), 2);
    EXPECT_EQ(command_to_json(back), command_to_json(c)) << t;
    EXPECT_EQ(command_name(c), json::parse(t).at("type")) << t;
  }
}
