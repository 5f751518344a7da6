#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <regex>

#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>
#include <gmock/gmock.h>
#include <gtest/gtest.h>

#include "nodeplan/checkpoint.hpp"
#include "nodeplan/demo_io.hpp"
#include "support/shapes.hpp"

using namespace nodeplan;
using ::testing::HasSubstr;
namespace fs = std::filesystem;
namespace net = boost::asio;

namespace {

struct Result {
  int code = -1;
  std::string output;
};

Result run_cli(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " " NODEPLAN_CLI_PATH " " + args + " 2>&1";
  Result r;
  FILE* p = popen(cmd.c_str(), "r");
  std::array<char, 4096> buf{};
  while (std::fgets(buf.data(), buf.size(), p)) r.output += buf.data();
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = fs::temp_directory_path() / ("nodeplan_cli_" + std::to_string(getpid()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    support::ShapeOptions o;
    o.demos = 3;
    o.samples = 40;
    save_demo_set(support::limit_cycle_demos(o), dir_ / "demos.json");
    const Result r = run_cli("train --data " + path("demos.json") + " --out " + path("model.json") +
                             " --epochs 15 --hidden 8 --seed 3");
    ASSERT_EQ(r.code, 0) << r.output;
  }
  static std::string path(const std::string& name) { return (dir_ / name).string(); }
  static fs::path dir_;
};

fs::path Cli::dir_;

}  // namespace

TEST_F(Cli, TrainWritesCheckpointAndReport) {
  EXPECT_NO_THROW(load_checkpoint(path("model.json")));
  const auto report = nlohmann::json::parse(read_text_file(path("model.report.json")));
  EXPECT_EQ(report.at("config").at("epochs"), 15);
  EXPECT_EQ(report.at("loss_history").size(), 15U);
}

TEST_F(Cli, SameSeedSameBytes) {
  const std::string base = "train --data " + path("demos.json") + " --epochs 15 --hidden 8 --seed 3 --out ";
  ASSERT_EQ(run_cli(base + path("again.json")).code, 0);
  EXPECT_EQ(read_text_file(path("again.json")), read_text_file(path("model.json")));
}

TEST_F(Cli, MissingDataFileExitsTwoNamingPath) {
  const Result r = run_cli("train --data " + path("nope.json") + " --out " + path("m.json"));
  EXPECT_EQ(r.code, 2);
  EXPECT_THAT(r.output, HasSubstr(path("nope.json")));
}

TEST_F(Cli, MalformedDataReportsLine) {
  write_text_file(dir_ / "bad.csv", "t,x0,x1\n0,1,2\n0.1,oops,2\n");
  const Result r = run_cli("train --data " + path("bad.csv") + " --out " + path("m.json"));
  EXPECT_EQ(r.code, 2);
  EXPECT_THAT(r.output, HasSubstr("bad.csv:3:"));
}

TEST_F(Cli, BadFlagsExitTwo) {
  EXPECT_EQ(run_cli("train --data x").code, 2);
  EXPECT_EQ(run_cli("frobnicate").code, 2);
  EXPECT_EQ(run_cli("train --data " + path("demos.json") + " --out " + path("m.json") + " --epochs 0").code, 2);
}

TEST_F(Cli, EvalTrainOnlySplit) {
  const Result r = run_cli("eval --model " + path("model.json") + " --data " + path("demos.json") +
                           " --split 0: --out " + path("eval.json") + " --csv " + path("eval.csv"));
  ASSERT_EQ(r.code, 0) << r.output;
  const auto j = nlohmann::json::parse(read_text_file(path("eval.json")));
  EXPECT_TRUE(j.at("test").is_null());
  EXPECT_EQ(j.at("train").at("count"), 1);
  EXPECT_THAT(r.output, HasSubstr("test absent"));
}

TEST_F(Cli, EvalBadSplitAndUnwritableOutput) {
  EXPECT_EQ(run_cli("eval --model " + path("model.json") + " --data " + path("demos.json") + " --split 0-1 --out " +
                    path("e.json"))
                .code,
            2);
  EXPECT_EQ(run_cli("eval --model " + path("model.json") + " --data " + path("demos.json") +
                    " --split 0:1 --out /proc/nodeplan/e.json")
                .code,
            4);
}

TEST_F(Cli, EnvironmentVariablesSetFlags) {
  const Result r = run_cli("eval --out " + path("env.json"), "NODEPLAN_MODEL=" + path("model.json") +
                                                                 " NODEPLAN_DATA=" + path("demos.json") +
                                                                 " NODEPLAN_SPLIT=0,1:2");
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_EQ(nlohmann::json::parse(read_text_file(path("env.json"))).at("test").at("count"), 1);
}

TEST_F(Cli, TargetAndRollout) {
  ASSERT_EQ(run_cli("target --model " + path("model.json") + " --data " + path("demos.json") +
                    " --span 2 --dt 0.01 --out " + path("target.json"))
                .code,
            0);
  const nlohmann::json scn = {{"model", "model.json"},
                              {"target", {{"file", "target.json"}}},
                              {"horizon", 0.2},
                              {"planner", {{"lookahead_N", 5}}},
                              {"disturbances", {{{"kind", "teleport"}, {"at", 0.05}, {"offset", {0.1, 0.0}}}}}};
  write_text_file(dir_ / "scn.json", scn.dump());
  const Result r = run_cli("rollout --scenario " + path("scn.json") + " --out " + path("log.csv"));
  ASSERT_EQ(r.code, 0) << r.output;
  const std::string csv = read_text_file(path("log.csv"));
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 202);
  const auto summary = nlohmann::json::parse(read_text_file(path("log.summary.json")));
  EXPECT_EQ(summary.at("summary").at("steps"), 201);
  EXPECT_EQ(summary.at("config").at("planner").at("lookahead_N"), 5);
}

TEST_F(Cli, ServeInvalidModelExitsTwo) {
  write_text_file(dir_ / "garbage.json", "{\"format\":\"other\"}");
  write_text_file(dir_ / "scn_bad.json", nlohmann::json{{"model", "garbage.json"},
                                                        {"target", {{"x0", {1.0, 0.0}}, {"span", 1.0}}}}
                                             .dump());
  EXPECT_EQ(run_cli("serve --scenario " + path("scn_bad.json") + " --port 0").code, 2);
}

TEST_F(Cli, ServeBusyPortExitsFive) {
  net::io_context ioc;
  net::ip::tcp::acceptor hold(ioc, {net::ip::make_address("127.0.0.1"), 0});
  write_text_file(dir_ / "scn_srv.json",
                  nlohmann::json{{"model", "model.json"}, {"target", {{"x0", {1.0, 0.0}}, {"span", 1.0}}}}.dump());
  const Result r =
      run_cli("serve --scenario " + path("scn_srv.json") + " --port " + std::to_string(hold.local_endpoint().port()));
  EXPECT_EQ(r.code, 5) << r.output;
}

TEST_F(Cli, ServeStreamsFramesAndStopsOnSignal) {
  write_text_file(dir_ / "scn_srv.json",
                  nlohmann::json{{"model", "model.json"}, {"target", {{"x0", {1.0, 0.0}}, {"span", 1.0}}}}.dump());
  int out[2];
  ASSERT_EQ(pipe(out), 0);
  const pid_t pid = fork();
  if (pid == 0) {
    dup2(out[1], STDOUT_FILENO);
    close(out[0]);
    const std::string scn = path("scn_srv.json");
    execl(NODEPLAN_CLI_PATH, NODEPLAN_CLI_PATH, "serve", "--scenario", scn.c_str(), "--port", "0", nullptr);
    _exit(127);
  }
  close(out[1]);
  FILE* f = fdopen(out[0], "r");
  std::array<char, 512> line{};
  ASSERT_NE(std::fgets(line.data(), line.size(), f), nullptr);
  std::smatch m;
  const std::string text = line.data();
  ASSERT_TRUE(std::regex_search(text, m, std::regex(R"(:(\d+) )"))) << text;
  const auto port = static_cast<unsigned short>(std::stoi(m[1]));

  const auto start = std::chrono::steady_clock::now();
  net::io_context ioc;
  boost::beast::websocket::stream<boost::beast::tcp_stream> ws(ioc);
  boost::beast::get_lowest_layer(ws).connect({net::ip::make_address("127.0.0.1"), port});
  ws.handshake("127.0.0.1", "/ws");
  boost::beast::flat_buffer buf;
  ws.read(buf);
  EXPECT_LT(std::chrono::steady_clock::now() - start, std::chrono::seconds(1));
  EXPECT_EQ(nlohmann::json::parse(boost::beast::buffers_to_string(buf.data())).at("type"), "frame");

  kill(pid, SIGINT);
  int status = 0;
  waitpid(pid, &status, 0);
  fclose(f);
  EXPECT_TRUE(WIFEXITED(status));
  EXPECT_EQ(WEXITSTATUS(status), 0);
}
