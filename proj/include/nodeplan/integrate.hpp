#pragma once

#include <functional>

#include "nodeplan/core.hpp"

namespace nodeplan {

/// Autonomous vector field x' = f(x). Evaluation must be deterministic and
/// free of side effects.
class VectorField {
 public:
  virtual ~VectorField() = default;
  virtual State eval(const State& x) const = 0;
};

/// Adapts any callable to VectorField; mostly for tests and constant fields.
class FunctionField final : public VectorField {
 public:
  explicit FunctionField(std::function<State(const State&)> fn) : fn_(std::move(fn)) {}
  State eval(const State& x) const override { return fn_(x); }

 private:
  std::function<State(const State&)> fn_;
};

enum class Method { rk4_fixed, dopri5_adaptive };

struct IntegratorConfig {
  Method method = Method::dopri5_adaptive;
  double step = 1e-3;  // rk4_fixed: maximum step; each sample interval is split evenly
  double rtol = 1e-6;
  double atol = 1e-8;
  long max_steps = 1'000'000;  // attempted steps, accepted or rejected

  void validate() const;
};

/// Accepted adaptive step, reported to an optional observer.
struct StepRecord {
  double t = 0.0;
  double h = 0.0;
  double error_inf = 0.0;  // ||local error estimate||_inf
  double tolerance = 0.0;  // atol + rtol * max(||x||_inf, ||x_new||_inf)
};
using StepObserver = std::function<void(const StepRecord&)>;

/// Integrates from x0 = x(times[0]) and samples exactly at `times`.
Trajectory integrate_path(const VectorField& f, const State& x0, const Eigen::VectorXd& times,
                          const IntegratorConfig& cfg, const StepObserver& observer = {});

/// One explicit step: the classical RK4 tableau, or the fifth-order
/// Dormand-Prince solution (no error control).
State step_once(const VectorField& f, const State& x, double dt, Method method);

/// Adaptive step-size bounds, as a function of the total integration span.
inline constexpr double kMinAdaptiveStep = 1e-6;
inline constexpr double kStepSafety = 0.9;

}  // namespace nodeplan
