#include "nodeplan/session.hpp"

#include <algorithm>
#include <chrono>
#include <iostream>
#include <thread>

#include "nodeplan/target_array.hpp"

namespace nodeplan {
namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

constexpr std::size_t kJitterWindow = 10000;

std::string ack(const std::string& command, std::optional<int> id = {}) {
  nlohmann::json j = {{"type", "ack"}, {"command", command}};
  if (id) j["id"] = *id;
  return dump_compact(j);
}

}  // namespace

PlaygroundSession::PlaygroundSession(const VectorField& model, Scenario scenario)
    : model_(&model),
      scenario_(std::move(scenario)),
      planner_(model, scenario_.target_array, scenario_.planner),
      digest_(target_array_digest(scenario_.target_array)),
      x_(scenario_.x0) {
  scenario_.validate();
  for (auto& b : scenario_.certificates.barriers) obstacles_.push_back({next_id_++, b});
  std::lock_guard lock(snap_mu_);
  scenario_json_ = scenario_to_json(scenario_);
  latest_.x = x_;
  latest_.target = x_;
  latest_.u = State::Zero(x_.size());
  latest_.target_array_digest = digest_;
}

void PlaygroundSession::submit(ClientCommand cmd, ReplyFn reply) {
  std::optional<Pending> dropped;
  {
    std::lock_guard lock(queue_mu_);
    if (queue_.size() >= kCommandQueueCapacity) {
      dropped = std::move(queue_.front());
      queue_.pop_front();
    }
    queue_.push_back({std::move(cmd), std::move(reply)});
  }
  if (dropped && dropped->reply) {
    dropped->reply(encode_notice("warning", "command queue full; dropped " + command_name(dropped->cmd)));
  }
}

void PlaygroundSession::submit_text(const std::string& text, const ReplyFn& reply) {
  try {
    submit(parse_command_text(text, dim()), reply);
  } catch (const std::exception& e) {
    if (reply) reply(encode_notice("error", e.what()));
  }
}

CertificateSet PlaygroundSession::certificates_at(double t) const {
  CertificateSet cs;
  cs.alpha.gain = planner_.config().alpha_gain;
  for (const auto& o : obstacles_) cs.barriers.push_back({o.term.barrier.at_time(t), o.term.gamma});
  return cs;
}

bool PlaygroundSession::placement_safe(const Barrier& b) const { return b.at_time(t_).value(x_) >= 0.0; }

void PlaygroundSession::apply(const Pending& p) {
  auto reply = [&](const std::string& msg) {
    if (p.reply) p.reply(msg);
  };
  auto find = [&](int id) {
    return std::find_if(obstacles_.begin(), obstacles_.end(), [id](const Obstacle& o) { return o.id == id; });
  };
  std::visit(overloaded{[&](const SetState& c) {
                          x_ = c.x;
                          reply(ack("set_state"));
                        },
                        [&](const Nudge& c) {
                          nudges_.push_back({c.dv, t_ + c.duration});
                          reply(ack("nudge"));
                        },
                        [&](const AddObstacle& c) {
                          if (obstacles_.size() + 1 >= static_cast<std::size_t>(kMaxQpConstraints)) {
                            reply(encode_notice("error", "add_obstacle: obstacle limit reached"));
                          } else if (!placement_safe(c.obstacle.barrier)) {
                            reply(encode_notice("error", kUnsafePlacement));
                          } else {
                            obstacles_.push_back({next_id_, c.obstacle});
                            reply(ack("add_obstacle", next_id_++));
                          }
                        },
                        [&](const MoveObstacle& c) {
                          auto it = find(c.id);
                          if (it == obstacles_.end()) {
                            reply(encode_notice("error", "move_obstacle: unknown id " + std::to_string(c.id)));
                            return;
                          }
                          const Barrier moved = Barrier(it->term.barrier.moved_to(c.center).shape());
                          if (!placement_safe(moved)) {
                            reply(encode_notice("error", kUnsafePlacement));
                            return;
                          }
                          it->term.barrier = moved;
                          reply(ack("move_obstacle", c.id));
                        },
                        [&](const RemoveObstacle& c) {
                          auto it = find(c.id);
                          if (it == obstacles_.end()) {
                            reply(encode_notice("error", "remove_obstacle: unknown id " + std::to_string(c.id)));
                            return;
                          }
                          obstacles_.erase(it);
                          reply(ack("remove_obstacle", c.id));
                        },
                        [&](const Pause&) {
                          paused_ = true;
                          reply(ack("pause"));
                        },
                        [&](const Resume&) {
                          paused_ = false;
                          reply(ack("resume"));
                        },
                        [&](const Reset& c) {
                          x_ = c.x0 ? *c.x0 : scenario_.x0;
                          t_ = 0.0;
                          nudges_.clear();
                          planner_.reset();
                          reply(ack("reset"));
                        },
                        [&](const SetParam& c) {
                          PlannerConfig cfg = planner_.config();
                          if (c.name == "alpha_gain") cfg.alpha_gain = c.value;
                          if (c.name == "lambda") cfg.lambda = c.value;
                          if (c.name == "lookahead_N") cfg.lookahead_N = static_cast<int>(c.value);
                          try {
                            planner_.set_config(cfg);
                            reply(ack("set_param"));
                          } catch (const std::exception& e) {
                            reply(encode_notice("error", std::string("set_param: ") + e.what()));
                          }
                        }},
             p.cmd);
}

void PlaygroundSession::tick() {
  std::deque<Pending> batch;
  {
    std::lock_guard lock(queue_mu_);
    batch.swap(queue_);
  }
  for (const auto& p : batch) apply(p);

  const CertificateSet cs = certificates_at(t_);
  Frame f;
  f.t = t_;
  f.x = x_;
  f.target_array_digest = digest_;
  for (std::size_t i = 0; i < obstacles_.size(); ++i) f.obstacles.push_back({obstacles_[i].id, cs.barriers[i]});
  State xdot = State::Zero(x_.size());
  try {
    const PlanStep step = planner_.step(x_, cs);
    f.target = step.target;
    f.target_index = step.target_index;
    f.u = step.u;
    f.V = step.V;
    f.epsilon = step.slack;
    if (!cs.barriers.empty()) f.minB = step.min_b;
    xdot = step.xdot_ref;
  } catch (const std::exception& e) {
    std::cerr << "nodeplan: planning failed at t=" << t_ << ": " << e.what() << '\n';
    f.target = x_;
    f.u = State::Zero(x_.size());
  }
  {
    std::lock_guard lock(snap_mu_);
    latest_ = std::move(f);
    scenario_json_["planner"] = to_json(planner_.config());
    scenario_json_["paused"] = paused_;
  }
  if (paused_) return;

  nudges_.erase(std::remove_if(nudges_.begin(), nudges_.end(), [&](const ActiveNudge& n) { return t_ >= n.until; }),
                nudges_.end());
  for (const auto& n : nudges_) xdot += n.dv;
  x_ += scenario_.control_dt * xdot;
  t_ += scenario_.control_dt;
}

void PlaygroundSession::run(std::stop_token stop) {
  using clock = std::chrono::steady_clock;
  const auto period = std::chrono::duration_cast<clock::duration>(std::chrono::duration<double>(scenario_.control_dt));
  auto next = clock::now();
  while (!stop.stop_requested()) {
    tick();
    next += period;
    std::this_thread::sleep_until(next);
    const auto now = clock::now();
    const double late = std::chrono::duration<double>(now - next).count();
    if (late > 0.005) next = now;  // fell far behind: resynchronise
    std::lock_guard lock(snap_mu_);
    if (jitter_.size() < kJitterWindow) {
      jitter_.push_back(late);
    } else {
      jitter_[static_cast<std::size_t>(ticks_) % kJitterWindow] = late;
    }
    ++ticks_;
  }
}

Frame PlaygroundSession::snapshot() const {
  std::lock_guard lock(snap_mu_);
  return latest_;
}

nlohmann::json PlaygroundSession::scenario_json() const {
  Frame f = snapshot();
  nlohmann::json j;
  {
    std::lock_guard lock(snap_mu_);
    j = scenario_json_;
  }
  nlohmann::json obs = nlohmann::json::array();
  for (const auto& o : f.obstacles) {
    nlohmann::json e = barrier_to_json(o.term);
    e["id"] = o.id;
    obs.push_back(std::move(e));
  }
  j["obstacles"] = obs;
  return j;
}

nlohmann::json PlaygroundSession::target_array_json() const { return target_array_to_json(scenario_.target_array); }

TickStats PlaygroundSession::tick_stats() const {
  std::lock_guard lock(snap_mu_);
  TickStats s;
  s.ticks = ticks_;
  if (jitter_.empty()) return s;
  std::vector<double> j = jitter_;
  std::sort(j.begin(), j.end());
  s.p99_jitter = j[static_cast<std::size_t>(0.99 * static_cast<double>(j.size() - 1))];
  s.max_jitter = j.back();
  return s;
}

}  // namespace nodeplan
