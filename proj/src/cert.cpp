#include "nodeplan/cert.hpp"

#include <algorithm>
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

// Signed distances to the 2d face planes of the inflated box, ordered
// (+x0, -x0, +x1, -x1, ...).
Eigen::VectorXd face_distances(const BoxShape& b, const State& x) {
  const Eigen::Index d = x.size();
  Eigen::VectorXd g(2 * d);
  for (Eigen::Index j = 0; j < d; ++j) {
    g(2 * j) = x(j) - (b.max(j) + b.margin);
    g(2 * j + 1) = (b.min(j) - b.margin) - x(j);
  }
  return g;
}

// Softmax weights of the face distances and the shifted log-sum-exp value.
std::pair<double, Eigen::VectorXd> box_lse(const BoxShape& b, const State& x) {
  const double tau = b.effective_temperature();
  const Eigen::VectorXd g = face_distances(b, x);
  const double top = g.maxCoeff();
  Eigen::VectorXd w = ((g.array() - top) / tau).exp();
  const double sum = w.sum();
  w /= sum;
  const double n = static_cast<double>(g.size());
  return {top + tau * std::log(sum / n), w};
}

}  // namespace

double BoxShape::effective_temperature() const {
  if (temperature > 0.0) return temperature;
  const double diag = ((max.array() + margin) - (min.array() - margin)).matrix().norm();
  return 0.05 * diag;
}

Barrier::Barrier(Shape shape, std::vector<Waypoint> path) : shape_(std::move(shape)), path_(std::move(path)) {
  validate();
}

Barrier Barrier::circle(State center, double radius) {
  return Barrier(CircleShape{std::move(center), radius});
}

Barrier Barrier::box(State min, State max, double margin, double temperature) {
  return Barrier(BoxShape{std::move(min), std::move(max), margin, temperature});
}

void Barrier::validate() const {
  std::visit(overloaded{[](const CircleShape& c) {
                          if (c.center.size() < 1 || !c.center.allFinite()) {
                            fail(ErrorKind::input, "circle obstacle: bad center");
                          }
                          if (!(c.radius > 0.0) || !std::isfinite(c.radius)) {
                            fail(ErrorKind::input, "circle obstacle: radius must be positive");
                          }
                        },
                        [](const BoxShape& b) {
                          if (b.min.size() < 1 || b.min.size() != b.max.size() || !b.min.allFinite() ||
                              !b.max.allFinite()) {
                            fail(ErrorKind::input, "box obstacle: bad corners");
                          }
                          if (!(b.max.array() > b.min.array()).all()) {
                            fail(ErrorKind::input, "box obstacle: max must exceed min on every axis");
                          }
                          if (!(b.margin >= 0.0) || !(b.temperature >= 0.0)) {
                            fail(ErrorKind::input, "box obstacle: margin and temperature must be >= 0");
                          }
                        }},
             shape_);
  for (const auto& w : path_) {
    if (w.center.size() != dim() || !w.center.allFinite()) {
      fail(ErrorKind::input, "obstacle path: waypoint center has wrong dimension");
    }
  }
  for (std::size_t i = 1; i < path_.size(); ++i) {
    if (!(path_[i].t > path_[i - 1].t)) fail(ErrorKind::input, "obstacle path: waypoint times must increase");
  }
}

Eigen::Index Barrier::dim() const {
  return std::visit(overloaded{[](const CircleShape& c) { return c.center.size(); },
                               [](const BoxShape& b) { return b.min.size(); }},
                    shape_);
}

double Barrier::value(const State& x) const {
  return std::visit(overloaded{[&](const CircleShape& c) {
                                 return (x - c.center).squaredNorm() - c.radius * c.radius;
                               },
                               [&](const BoxShape& b) { return box_lse(b, x).first; }},
                    shape_);
}

State Barrier::gradient(const State& x) const {
  return std::visit(overloaded{[&](const CircleShape& c) -> State { return 2.0 * (x - c.center); },
                               [&](const BoxShape& b) -> State {
                                 const auto [v, w] = box_lse(b, x);
                                 State g(x.size());
                                 for (Eigen::Index j = 0; j < x.size(); ++j) g(j) = w(2 * j) - w(2 * j + 1);
                                 return g;
                               }},
                    shape_);
}

State Barrier::center() const {
  return std::visit(overloaded{[](const CircleShape& c) -> State { return c.center; },
                               [](const BoxShape& b) -> State { return 0.5 * (b.min + b.max); }},
                    shape_);
}

Barrier Barrier::moved_to(const State& c) const {
  Barrier out = *this;
  std::visit(overloaded{[&](CircleShape& s) { s.center = c; },
                        [&](BoxShape& b) {
                          const State shift = c - 0.5 * (b.min + b.max);
                          b.min += shift;
                          b.max += shift;
                        }},
             out.shape_);
  return out;
}

Barrier Barrier::at_time(double t) const {
  if (path_.empty()) return *this;
  if (t <= path_.front().t) return moved_to(path_.front().center);
  if (t >= path_.back().t) return moved_to(path_.back().center);
  const auto it = std::upper_bound(path_.begin(), path_.end(), t,
                                   [](double tv, const Waypoint& w) { return tv < w.t; });
  const Waypoint& b = *it;
  const Waypoint& a = *(it - 1);
  const double s = (t - a.t) / (b.t - a.t);
  return moved_to((1.0 - s) * a.center + s * b.center);
}

CertificateSet CertificateSet::at_time(double t) const {
  CertificateSet out = *this;
  for (auto& b : out.barriers) b.barrier = b.barrier.at_time(t);
  return out;
}

double CertificateSet::min_barrier(const State& x) const {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& b : barriers) m = std::min(m, b.barrier.value(x));
  return m;
}

ClfTerms clf_terms(const CertificateSet& cs, const State& e) {
  ClfTerms out;
  out.V = cs.lyapunov.value(e);
  out.grad = cs.lyapunov.gradient(e);
  out.alpha_v = cs.alpha(out.V);
  return out;
}

CbfTerms cbf_terms(const Barrier& b, const RateFn& gamma, const State& x) {
  CbfTerms out;
  out.B = b.value(x);
  out.grad = b.gradient(x);
  out.gamma_b = gamma(out.B);
  return out;
}

std::vector<CbfTerms> cbf_terms(const CertificateSet& cs, const State& x) {
  std::vector<CbfTerms> out;
  out.reserve(cs.barriers.size());
  for (const auto& b : cs.barriers) out.push_back(cbf_terms(b.barrier, b.gamma, x));
  return out;
}

BarrierTerm barrier_from_json(const nlohmann::json& j) {
  try {
    const std::string shape = j.at("shape").get<std::string>();
    std::vector<Waypoint> path;
    if (j.contains("path")) {
      for (const auto& w : j.at("path")) {
        path.push_back({w.at("t").get<double>(), state_from_json(w.at("center"), "waypoint center")});
      }
    }
    RateFn gamma{j.value("gamma_gain", 1.0)};
    if (!(gamma.gain > 0.0)) fail(ErrorKind::input, "obstacle: gamma_gain must be positive");
    if (shape == "circle") {
      return {Barrier(CircleShape{state_from_json(j.at("center"), "circle center"), j.at("radius").get<double>()},
                      std::move(path)),
              gamma};
    }
    if (shape == "box") {
      return {Barrier(BoxShape{state_from_json(j.at("min"), "box min"), state_from_json(j.at("max"), "box max"),
                               j.value("margin", 0.0), j.value("temperature", 0.0)},
                      std::move(path)),
              gamma};
    }
    fail(ErrorKind::input, "obstacle: unknown shape '" + shape + "'");
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::input, std::string("obstacle: ") + e.what());
  }
}

nlohmann::json barrier_to_json(const BarrierTerm& b) {
  nlohmann::json j = std::visit(
      overloaded{[](const CircleShape& c) -> nlohmann::json {
                   return {{"shape", "circle"}, {"center", state_to_json(c.center)}, {"radius", c.radius}};
                 },
                 [](const BoxShape& s) -> nlohmann::json {
                   return {{"shape", "box"},
                           {"min", state_to_json(s.min)},
                           {"max", state_to_json(s.max)},
                           {"margin", s.margin},
                           {"temperature", s.temperature}};
                 }},
      b.barrier.shape());
  j["gamma_gain"] = b.gamma.gain;
  if (!b.barrier.path().empty()) {
    j["path"] = nlohmann::json::array();
    for (const auto& w : b.barrier.path()) j["path"].push_back({{"t", w.t}, {"center", state_to_json(w.center)}});
  }
  return j;
}

std::vector<BarrierTerm> obstacles_from_json(const nlohmann::json& j) {
  const nlohmann::json& arr = j.is_object() ? j.at("obstacles") : j;
  if (!arr.is_array()) fail(ErrorKind::input, "obstacles: expected an array");
  std::vector<BarrierTerm> out;
  for (const auto& o : arr) out.push_back(barrier_from_json(o));
  return out;
}

nlohmann::json obstacles_to_json(const std::vector<BarrierTerm>& obs) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& b : obs) arr.push_back(barrier_to_json(b));
  return {{"obstacles", arr}};
}

}  // namespace nodeplan
