#include "nodeplan/core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "nodeplan/error.hpp"

namespace nodeplan {

bool all_finite(const State& x) { return x.allFinite(); }
bool all_finite(const Matrix& m) { return m.allFinite(); }

double diameter(const Matrix& points) {
  double best = 0.0;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < points.rows(); ++j) {
      best = std::max(best, (points.row(i) - points.row(j)).squaredNorm());
    }
  }
  return std::sqrt(best);
}

bool closes_on_itself(const Matrix& points, double fraction) {
  if (points.rows() < 2) return false;
  const double gap = (points.row(0) - points.row(points.rows() - 1)).norm();
  const double diam = diameter(points);
  if (diam == 0.0) return true;
  return gap <= fraction * diam;
}

std::vector<std::string> validate_trajectory(const Trajectory& tr) {
  std::vector<std::string> out;
  if (tr.times.size() < 2) out.push_back("fewer than 2 samples");
  if (tr.times.size() != tr.states.rows()) {
    std::ostringstream os;
    os << "times/states length mismatch (" << tr.times.size() << " vs " << tr.states.rows()
       << ")";
    out.push_back(os.str());
  }
  if (tr.states.cols() < 1) out.push_back("state dimension must be at least 1");
  for (Eigen::Index k = 1; k < tr.times.size(); ++k) {
    if (!(tr.times(k) > tr.times(k - 1))) {
      out.push_back("non-increasing times at index " + std::to_string(k));
      break;
    }
  }
  if (!tr.times.allFinite()) out.push_back("non-finite time stamp");
  if (!tr.states.allFinite()) out.push_back("non-finite state");
  return out;
}

std::vector<std::string> validate_demo_set(const DemonstrationSet& ds) {
  std::vector<std::string> out;
  if (ds.demos.empty()) {
    out.push_back("demonstration set is empty");
    return out;
  }
  const auto d = ds.demos.front().dim();
  for (std::size_t i = 0; i < ds.demos.size(); ++i) {
    const auto& tr = ds.demos[i];
    if (tr.dim() != d) {
      out.push_back("dimension mismatch demo " + std::to_string(i));
      continue;
    }
    for (auto& v : validate_trajectory(tr)) {
      // Keep single-demo messages bare so they read naturally.
      out.push_back(ds.demos.size() == 1 ? v : "demo " + std::to_string(i) + ": " + v);
    }
  }
  return out;
}

void require_valid(const DemonstrationSet& ds) {
  const auto violations = validate_demo_set(ds);
  if (violations.empty()) return;
  std::string msg = "invalid demonstration set '" + ds.name + "':";
  for (const auto& v : violations) msg += "\n  " + v;
  fail(ErrorKind::input, msg);
}

Trajectory resample(const Trajectory& tr, double dt) {
  if (!(dt > 0.0)) fail(ErrorKind::input, "resample: dt must be positive");
  if (!validate_trajectory(tr).empty()) fail(ErrorKind::input, "resample: invalid trajectory");
  const double t0 = tr.times(0);
  const double t1 = tr.times(tr.times.size() - 1);
  if (dt > t1 - t0) fail(ErrorKind::input, "dt exceeds trajectory duration");

  // Grid nodes closer than a hair to the end are merged into the endpoint.
  const double merge = 1e-9 * dt;
  std::vector<double> grid;
  for (long k = 0;; ++k) {
    const double t = t0 + static_cast<double>(k) * dt;
    if (t >= t1 - merge) break;
    grid.push_back(t);
  }
  grid.push_back(t1);

  Trajectory out;
  out.times = Eigen::Map<const Eigen::VectorXd>(grid.data(), static_cast<Eigen::Index>(grid.size()));
  out.states.resize(out.times.size(), tr.dim());
  Eigen::Index seg = 0;
  const auto last = tr.times.size() - 1;
  for (Eigen::Index k = 0; k < out.times.size(); ++k) {
    const double t = out.times(k);
    while (seg + 1 < last && tr.times(seg + 1) <= t) ++seg;
    const double ta = tr.times(seg);
    const double tb = tr.times(seg + 1);
    if (t == ta) {
      out.states.row(k) = tr.states.row(seg);
    } else if (t == tb) {
      out.states.row(k) = tr.states.row(seg + 1);
    } else {
      const double w = (t - ta) / (tb - ta);
      out.states.row(k) = (1.0 - w) * tr.states.row(seg) + w * tr.states.row(seg + 1);
    }
  }
  out.states.row(0) = tr.states.row(0);
  out.states.row(out.times.size() - 1) = tr.states.row(last);
  return out;
}

double path_length(const Trajectory& tr) {
  double len = 0.0;
  for (Eigen::Index k = 1; k < tr.states.rows(); ++k) {
    len += (tr.states.row(k) - tr.states.row(k - 1)).norm();
  }
  return len;
}

}  // namespace nodeplan
