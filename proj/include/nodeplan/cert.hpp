#pragma once

#include <limits>
#include <variant>
#include <vector>

#include "json.hpp"
#include "nodeplan/core.hpp"

namespace nodeplan {

/// V(e) = ||e||^2, grad V = 2e.
struct Lyapunov {
  double value(const State& e) const { return e.squaredNorm(); }
  State gradient(const State& e) const { return 2.0 * e; }
};

/// Linear class-K-infinity rate s -> gain * s, oddly extended to s < 0.
struct RateFn {
  double gain = 1.0;
  double operator()(double s) const { return gain * s; }
};

/// Disc/ball obstacle: B(x) = ||x - c||^2 - r^2.
struct CircleShape {
  State center;
  double radius = 0.0;
};

/// Axis-aligned box inflated by `margin`. B is a log-sum-exp smoothing of the
/// 2d face-plane signed distances, shifted by -tau*log(2d) so that B <= max
/// face distance: {B >= 0} never intersects the inflated box. tau = 0 selects
/// 0.05 * (inflated box diagonal).
struct BoxShape {
  State min;
  State max;
  double margin = 0.0;
  double temperature = 0.0;

  double effective_temperature() const;
};

struct Waypoint {
  double t = 0.0;
  State center;
};

/// Obstacle primitive with an optional piecewise-linear center path. Before the
/// first waypoint the first center is used, after the last the last one.
class Barrier {
 public:
  using Shape = std::variant<CircleShape, BoxShape>;

  Barrier() = default;
  explicit Barrier(Shape shape, std::vector<Waypoint> path = {});

  static Barrier circle(State center, double radius);
  static Barrier box(State min, State max, double margin = 0.0, double temperature = 0.0);

  double value(const State& x) const;
  State gradient(const State& x) const;

  const Shape& shape() const { return shape_; }
  const std::vector<Waypoint>& path() const { return path_; }
  bool moving() const { return path_.size() >= 2; }
  Eigen::Index dim() const;

  /// Current center (circle center or box midpoint).
  State center() const;
  /// Copy translated so its center sits at `c`.
  Barrier moved_to(const State& c) const;
  /// Copy positioned at time t along the path.
  Barrier at_time(double t) const;

  void validate() const;

 private:
  Shape shape_;
  std::vector<Waypoint> path_;
};

struct BarrierTerm {
  Barrier barrier;
  RateFn gamma;
};

struct CertificateSet {
  Lyapunov lyapunov;
  RateFn alpha;
  std::vector<BarrierTerm> barriers;  // empty = CLF-only

  CertificateSet at_time(double t) const;
  /// min_i B_i(x), +inf without barriers.
  double min_barrier(const State& x) const;
};

struct ClfTerms {
  double V = 0.0;
  State grad;
  double alpha_v = 0.0;
};

struct CbfTerms {
  double B = 0.0;
  State grad;
  double gamma_b = 0.0;
};

ClfTerms clf_terms(const CertificateSet& cs, const State& e);
CbfTerms cbf_terms(const Barrier& b, const RateFn& gamma, const State& x);
std::vector<CbfTerms> cbf_terms(const CertificateSet& cs, const State& x);

// Obstacle JSON:
//   {"shape": "circle", "center": [...], "radius": r, "gamma_gain": g,
//    "path": [{"t": s, "center": [...]}, ...]}
//   {"shape": "box", "min": [...], "max": [...], "margin": m, "temperature": tau, ...}
BarrierTerm barrier_from_json(const nlohmann::json& j);
nlohmann::json barrier_to_json(const BarrierTerm& b);
/// Accepts {"obstacles": [...]} or a bare array.
std::vector<BarrierTerm> obstacles_from_json(const nlohmann::json& j);
nlohmann::json obstacles_to_json(const std::vector<BarrierTerm>& obs);

}  // namespace nodeplan
