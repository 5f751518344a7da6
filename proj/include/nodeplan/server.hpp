#pragma once

#include <memory>
#include <string>

#include "nodeplan/session.hpp"

namespace nodeplan {

inline constexpr double kBroadcastHz = 60.0;

struct ServerOptions {
  std::string address = "127.0.0.1";
  unsigned short port = 8080;  // 0 picks a free port
  bool handle_signals = false; // stop on SIGINT/SIGTERM
};

/// HTTP + websocket front end of a PlaygroundSession on one io thread:
///   GET /health, GET /scenario, GET /target_array, websocket /ws.
/// run() also drives the session's control loop on its own thread.
class PlaygroundServer {
 public:
  /// Binds immediately; a busy port throws ErrorKind::network.
  PlaygroundServer(PlaygroundSession& session, ServerOptions opts);
  ~PlaygroundServer();
  PlaygroundServer(const PlaygroundServer&) = delete;
  PlaygroundServer& operator=(const PlaygroundServer&) = delete;

  unsigned short port() const;
  /// Blocks until stop() (or a signal when handle_signals is set).
  void run();
  /// Safe from any thread.
  void stop();
  long long frames_broadcast() const;

  struct Impl;

 private:
  std::unique_ptr<Impl> impl_;
};

}  // namespace nodeplan
