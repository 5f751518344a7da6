#include "nodeplan/target_array.hpp"

#include <cmath>
#include <cstring>
#include <cstdio>

#include "nodeplan/demo_io.hpp"
#include "nodeplan/error.hpp"

namespace nodeplan {

TargetArray generate_target_array(const VectorField& model, const State& x0, double span, double dt,
                                  const TargetOptions& opts) {
  if (!(dt > 0.0)) fail(ErrorKind::input, "target array: dt must be positive");
  if (!(span >= 2.0 * dt)) fail(ErrorKind::input, "target array: span must be at least 2*dt");
  if (!x0.allFinite()) fail(ErrorKind::input, "target array: non-finite initial state");

  const long n = static_cast<long>(std::ceil(span / dt - 1e-9));
  const double step = span / static_cast<double>(n);
  Eigen::VectorXd times(n + 1);
  for (long k = 0; k <= n; ++k) times(k) = static_cast<double>(k) * step;
  times(n) = span;

  const Trajectory tr = integrate_path(model, x0, times, opts.integrator);

  TargetArray ta;
  ta.dt = step;
  ta.points = tr.states;
  if (opts.trim_to_period) {
    const Eigen::Index k = first_return_index(ta.points, opts.closure_fraction);
    if (k > 0) ta.points.conservativeResize(k + 1, Eigen::NoChange);
  }
  ta.velocities.resize(ta.points.rows(), ta.points.cols());
  for (Eigen::Index k = 0; k < ta.points.rows(); ++k) {
    ta.velocities.row(k) = model.eval(ta.points.row(k).transpose()).transpose();
  }
  if (!ta.velocities.allFinite()) fail(ErrorKind::numeric, "target array: non-finite field value");
  ta.periodic = closes_on_itself(ta.points, opts.closure_fraction);
  return ta;
}

Eigen::Index first_return_index(const Matrix& points, double closure_fraction) {
  const double tol = closure_fraction * diameter(points);
  if (tol == 0.0) return -1;
  const Eigen::RowVectorXd start = points.row(0);
  bool left = false;
  for (Eigen::Index k = 1; k < points.rows(); ++k) {
    const double dk = (points.row(k) - start).norm();
    if (!left) {
      left = dk > 2.0 * tol;
      continue;
    }
    if (dk > tol) continue;
    const bool local_min = k + 1 == points.rows() || (points.row(k + 1) - start).norm() >= dk;
    if (local_min) return k;
  }
  return -1;
}

nlohmann::json target_array_to_json(const TargetArray& ta) {
  return {{"dt", ta.dt},
          {"periodic", ta.periodic},
          {"points", matrix_to_json(ta.points)},
          {"velocities", matrix_to_json(ta.velocities)}};
}

TargetArray target_array_from_json(const nlohmann::json& j) {
  TargetArray ta;
  try {
    ta.dt = j.at("dt").get<double>();
    ta.periodic = j.at("periodic").get<bool>();
    ta.points = matrix_from_json(j.at("points"), "target points");
    ta.velocities = matrix_from_json(j.at("velocities"), "target velocities");
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::input, std::string("target array: ") + e.what());
  }
  if (ta.points.rows() < 2 || ta.points.rows() != ta.velocities.rows() ||
      ta.points.cols() != ta.velocities.cols()) {
    fail(ErrorKind::input, "target array: points and velocities must have matching shape with >= 2 rows");
  }
  return ta;
}

std::string target_array_digest(const TargetArray& ta) {
  std::uint64_t h = 1469598103934665603ULL;
  auto feed = [&h](const Matrix& m) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(m.data());
    const std::size_t n = static_cast<std::size_t>(m.size()) * sizeof(double);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= bytes[i];
      h *= 1099511628211ULL;
    }
  };
  feed(ta.points);
  feed(ta.velocities);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace nodeplan
