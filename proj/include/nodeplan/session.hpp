#pragma once

#include <atomic>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <stop_token>
#include <string>
#include <vector>

#include "json.hpp"
#include "nodeplan/command.hpp"
#include "nodeplan/frame.hpp"
#include "nodeplan/planner.hpp"
#include "nodeplan/sim.hpp"

namespace nodeplan {

inline constexpr std::size_t kCommandQueueCapacity = 64;
inline constexpr char kUnsafePlacement[] = "obstacle placement violates current safety";

/// Delivers a text message back to the client that sent a command. Called on
/// the control thread; implementations must not block.
using ReplyFn = std::function<void(const std::string&)>;

struct TickStats {
  long ticks = 0;
  double p99_jitter = 0.0;  // seconds
  double max_jitter = 0.0;
};

/// Interactive closed loop. Exactly one thread calls tick() (or run());
/// submit() and the snapshot accessors are safe from any thread.
class PlaygroundSession {
 public:
  PlaygroundSession(const VectorField& model, Scenario scenario);

  /// Queues a command for the next tick. When full, the oldest queued command
  /// is dropped and its sender receives a warning.
  void submit(ClientCommand cmd, ReplyFn reply = {});
  /// Parses then submits; malformed text is answered with an error notice.
  void submit_text(const std::string& text, const ReplyFn& reply);

  /// One control step: apply queued commands, plan, publish, advance.
  void tick();
  /// Ticks every control_dt until `stop` is requested.
  void run(std::stop_token stop);

  /// Latest published state; seq is left at 0 for the broadcaster to assign.
  Frame snapshot() const;
  nlohmann::json scenario_json() const;
  nlohmann::json target_array_json() const;
  Eigen::Index dim() const { return scenario_.x0.size(); }
  TickStats tick_stats() const;

 private:
  struct Pending {
    ClientCommand cmd;
    ReplyFn reply;
  };
  struct ActiveNudge {
    State dv;
    double until = 0.0;
  };
  struct Obstacle {
    int id = 0;
    BarrierTerm term;
  };

  void apply(const Pending& p);
  CertificateSet certificates_at(double t) const;
  bool placement_safe(const Barrier& b) const;

  const VectorField* model_;
  Scenario scenario_;
  Planner planner_;
  std::string digest_;

  // Control-thread state.
  State x_;
  double t_ = 0.0;
  bool paused_ = false;
  std::vector<Obstacle> obstacles_;
  int next_id_ = 1;
  std::vector<ActiveNudge> nudges_;

  mutable std::mutex queue_mu_;
  std::deque<Pending> queue_;

  mutable std::mutex snap_mu_;
  Frame latest_;
  nlohmann::json scenario_json_;
  std::vector<double> jitter_;
  long ticks_ = 0;
};

}  // namespace nodeplan
