#pragma once

#include <cstdint>
#include <string>

#include "json.hpp"
#include "nodeplan/core.hpp"
#include "nodeplan/integrate.hpp"

namespace nodeplan {

struct TargetOptions {
  double closure_fraction = kDefaultClosureFraction;
  /// Cut the array at the first return to x0 (useful when the learned period
  /// differs from the demonstrated one).
  bool trim_to_period = false;
  IntegratorConfig integrator{};  // dopri5 by default
};

/// Integrates `model` from x0 over [0, span] on a uniform grid whose spacing is
/// the largest value <= dt that divides span. velocities[k] = model(points[k]).
/// The periodic flag is set when the array closes on itself.
TargetArray generate_target_array(const VectorField& model, const State& x0, double span, double dt,
                                  const TargetOptions& opts = {});

/// Index of the first return to the starting point, or -1.
Eigen::Index first_return_index(const Matrix& points, double closure_fraction);

nlohmann::json target_array_to_json(const TargetArray& ta);
TargetArray target_array_from_json(const nlohmann::json& j);

/// FNV-1a over the raw bytes of points and velocities, as 16 hex digits.
std::string target_array_digest(const TargetArray& ta);

}  // namespace nodeplan
