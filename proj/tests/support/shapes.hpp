#pragma once

#include <cmath>
#include <random>
#include <string>

#include "nodeplan/core.hpp"

namespace nodeplan::support {

// Closed-form trajectories of three demonstration families. `scale` is the
// workspace size; noise is i.i.d. Gaussian with sigma = noise * scale.

struct ShapeOptions {
  int demos = 7;
  int samples = 100;
  double duration = 2.0 * M_PI;
  double scale = 1.0;
  double noise = 0.01;
  std::uint64_t seed = 1;
};

inline void add_noise(Trajectory& tr, double sigma, std::mt19937_64& rng) {
  if (sigma <= 0.0) return;
  std::normal_distribution<double> g(0.0, sigma);
  for (Eigen::Index k = 0; k < tr.states.rows(); ++k) {
    for (Eigen::Index j = 0; j < tr.states.cols(); ++j) tr.states(k, j) += g(rng);
  }
}

inline Eigen::VectorXd uniform_times(int samples, double duration) {
  return Eigen::VectorXd::LinSpaced(samples, 0.0, duration);
}

/// r' = r (1 - r^2), theta' = 1, scaled. r(t) = 1 / sqrt(1 + (1/r0^2 - 1) e^{-2t}).
inline State limit_cycle_point(double r0, double theta0, double t, double scale) {
  const double r = 1.0 / std::sqrt(1.0 + (1.0 / (r0 * r0) - 1.0) * std::exp(-2.0 * t));
  State x(2);
  x << scale * r * std::cos(theta0 + t), scale * r * std::sin(theta0 + t);
  return x;
}

inline State limit_cycle_velocity(const State& x, double scale) {
  const State p = x / scale;
  const double r2 = p.squaredNorm();
  State v(2);
  v << p(0) * (1.0 - r2) - p(1), p(1) * (1.0 - r2) + p(0);
  return scale * v;
}

/// Demos start at radii spread over [0.6, 1.4] and evenly spaced angles.
inline DemonstrationSet limit_cycle_demos(const ShapeOptions& o) {
  std::mt19937_64 rng(o.seed);
  DemonstrationSet ds;
  ds.name = "limit_cycle";
  for (int i = 0; i < o.demos; ++i) {
    const double r0 = 0.6 + 0.8 * static_cast<double>((i * 3) % o.demos) / std::max(1, o.demos - 1);
    const double th0 = 2.0 * M_PI * static_cast<double>(i) / o.demos;
    Trajectory tr;
    tr.times = uniform_times(o.samples, o.duration);
    tr.states.resize(o.samples, 2);
    for (int k = 0; k < o.samples; ++k) tr.states.row(k) = limit_cycle_point(r0, th0, tr.times(k), o.scale).transpose();
    add_noise(tr, o.noise * o.scale, rng);
    ds.demos.push_back(std::move(tr));
  }
  return ds;
}

/// Demos on the unit cycle itself at evenly spaced phases (wiping motion).
inline DemonstrationSet circle_demos(const ShapeOptions& o) {
  std::mt19937_64 rng(o.seed);
  DemonstrationSet ds;
  ds.name = "circle";
  for (int i = 0; i < o.demos; ++i) {
    const double th0 = 2.0 * M_PI * static_cast<double>(i) / o.demos;
    Trajectory tr;
    tr.times = uniform_times(o.samples, o.duration);
    tr.states.resize(o.samples, 2);
    for (int k = 0; k < o.samples; ++k) tr.states.row(k) = limit_cycle_point(1.0, th0, tr.times(k), o.scale).transpose();
    add_noise(tr, o.noise * o.scale, rng);
    ds.demos.push_back(std::move(tr));
  }
  return ds;
}

/// z' = -diag(1, 2) z, then x = (z1, z2 + a sin(b z1)): an S-shaped approach to
/// the origin.
inline constexpr double kSCurveA = 0.35;
inline constexpr double kSCurveB = 3.0;

inline State s_curve_point(const State& z0, double t, double scale) {
  const double z1 = z0(0) * std::exp(-t);
  const double z2 = z0(1) * std::exp(-2.0 * t);
  State x(2);
  x << scale * z1, scale * (z2 + kSCurveA * std::sin(kSCurveB * z1));
  return x;
}

inline DemonstrationSet s_curve_demos(const ShapeOptions& o) {
  std::mt19937_64 rng(o.seed);
  DemonstrationSet ds;
  ds.name = "s_curve";
  for (int i = 0; i < o.demos; ++i) {
    const double f = static_cast<double>(i) / std::max(1, o.demos - 1);
    State z0(2);
    z0 << -1.0 - 0.2 * std::sin(2.0 * M_PI * f), -0.3 + 0.6 * f;
    Trajectory tr;
    tr.times = uniform_times(o.samples, o.duration);
    tr.states.resize(o.samples, 2);
    for (int k = 0; k < o.samples; ++k) tr.states.row(k) = s_curve_point(z0, tr.times(k), o.scale).transpose();
    add_noise(tr, o.noise * o.scale, rng);
    ds.demos.push_back(std::move(tr));
  }
  return ds;
}

/// (sin th, sin 2th / 2, c cos th): crosses itself in the (x, y) projection,
/// separated in z.
inline constexpr double kEightLift = 0.3;

inline State figure_eight_point(double theta, double scale) {
  State x(3);
  x << scale * std::sin(theta), scale * 0.5 * std::sin(2.0 * theta), scale * kEightLift * std::cos(theta);
  return x;
}

inline DemonstrationSet figure_eight_demos(const ShapeOptions& o) {
  std::mt19937_64 rng(o.seed);
  DemonstrationSet ds;
  ds.name = "figure_eight";
  for (int i = 0; i < o.demos; ++i) {
    const double th0 = 2.0 * M_PI * static_cast<double>(i) / o.demos;
    Trajectory tr;
    tr.times = uniform_times(o.samples, o.duration);
    tr.states.resize(o.samples, 3);
    for (int k = 0; k < o.samples; ++k) tr.states.row(k) = figure_eight_point(th0 + tr.times(k), o.scale).transpose();
    add_noise(tr, o.noise * o.scale, rng);
    ds.demos.push_back(std::move(tr));
  }
  return ds;
}

/// Uniform samples of a circle of radius `scale`, as a periodic target array
/// for the field rotating at unit angular rate.
inline TargetArray circle_target(int n, double scale) {
  TargetArray ta;
  ta.points.resize(n, 2);
  ta.velocities.resize(n, 2);
  for (int k = 0; k < n; ++k) {
    const double th = 2.0 * M_PI * k / n;
    ta.points.row(k) << scale * std::cos(th), scale * std::sin(th);
    ta.velocities.row(k) << -scale * std::sin(th), scale * std::cos(th);
  }
  ta.dt = 2.0 * M_PI / n;
  ta.periodic = true;
  return ta;
}

}  // namespace nodeplan::support
