#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace nodeplan {

/// Task-space state (positions, errors, targets). Dimension is fixed per session.
using State = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

bool all_finite(const State& x);
bool all_finite(const Matrix& m);

/// Time-stamped sequence of states. `states` holds one sample per row.
struct Trajectory {
  Eigen::VectorXd times;
  Matrix states;

  Eigen::Index length() const { return times.size(); }
  Eigen::Index dim() const { return states.cols(); }
  State at(Eigen::Index k) const { return states.row(k).transpose(); }
  double duration() const { return times(times.size() - 1) - times(0); }
};

struct DemonstrationSet {
  std::string name;
  std::vector<Trajectory> demos;

  Eigen::Index dim() const { return demos.empty() ? 0 : demos.front().dim(); }
};

/// Precomputed samples of the target trajectory x*(t_k) and the learned
/// field evaluated on them.
struct TargetArray {
  Matrix points;
  Matrix velocities;
  double dt = 0.0;
  bool periodic = false;

  Eigen::Index size() const { return points.rows(); }
  Eigen::Index dim() const { return points.cols(); }
  State point(Eigen::Index k) const { return points.row(k).transpose(); }
  State velocity(Eigen::Index k) const { return velocities.row(k).transpose(); }
};

/// Default closure tolerance for periodic target arrays, as a fraction of the
/// array diameter.
inline constexpr double kDefaultClosureFraction = 0.05;

/// Largest pairwise distance between rows of `points`.
double diameter(const Matrix& points);

/// True when the first and last rows are within `fraction` of the diameter.
/// A degenerate array (zero diameter) counts as closed.
bool closes_on_itself(const Matrix& points, double fraction = kDefaultClosureFraction);

/// Invariant violations of a single trajectory, phrased for humans.
std::vector<std::string> validate_trajectory(const Trajectory& tr);

/// Returns an empty list iff every trajectory is valid and dimensions agree.
std::vector<std::string> validate_demo_set(const DemonstrationSet& ds);

/// Throws ErrorKind::input listing every violation when the set is invalid.
void require_valid(const DemonstrationSet& ds);

/// Linear interpolation onto a uniform grid starting at times[0]. The final
/// sample is always times[T-1], so the last interval may be shorter than dt.
Trajectory resample(const Trajectory& tr, double dt);

/// Polyline length of the states.
double path_length(const Trajectory& tr);

}  // namespace nodeplan
