#include "nodeplan/integrate.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "nodeplan/error.hpp"

namespace nodeplan {
namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

// PI controller exponents (Hairer, Norsett & Wanner, DOPRI5).
constexpr double kBeta = 0.04;
constexpr double kAlpha = 0.2 - kBeta * 0.75;

State checked(const VectorField& f, const State& x, double t) {
  State v = f.eval(x);
  if (v.size() != x.size() || !v.allFinite()) {
    std::ostringstream os;
    os << "field produced non-finite value at t=" << t;
    fail(ErrorKind::numeric, os.str());
  }
  return v;
}

State rk4(const VectorField& f, const State& x, double h, double t) {
  const State k1 = checked(f, x, t);
  const State k2 = checked(f, x + 0.5 * h * k1, t + 0.5 * h);
  const State k3 = checked(f, x + 0.5 * h * k2, t + 0.5 * h);
  const State k4 = checked(f, x + h * k3, t + h);
  return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

struct DopriStep {
  State x_new;
  State k7;  // f(x_new), reusable as the next k1
  State err;
};

DopriStep dopri(const VectorField& f, const State& x, const State& k1, double h, double t) {
  const State k2 = checked(f, x + h * (a21 * k1), t + c2 * h);
  const State k3 = checked(f, x + h * (a31 * k1 + a32 * k2), t + c3 * h);
  const State k4 = checked(f, x + h * (a41 * k1 + a42 * k2 + a43 * k3), t + c4 * h);
  const State k5 = checked(f, x + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4), t + c5 * h);
  const State k6 =
      checked(f, x + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5), t + h);
  DopriStep s;
  s.x_new = x + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
  s.k7 = checked(f, s.x_new, t + h);
  s.err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * s.k7);
  return s;
}

void budget_exceeded() { fail(ErrorKind::numeric, "integration budget exceeded"); }

void check_inputs(const State& x0, const Eigen::VectorXd& times) {
  if (times.size() < 2) fail(ErrorKind::input, "integrate_path: need at least 2 sample times");
  for (Eigen::Index k = 1; k < times.size(); ++k) {
    if (!(times(k) > times(k - 1))) {
      fail(ErrorKind::input, "integrate_path: times must be strictly increasing");
    }
  }
  if (!x0.allFinite()) fail(ErrorKind::input, "integrate_path: non-finite initial state");
}

Trajectory integrate_rk4(const VectorField& f, const State& x0, const Eigen::VectorXd& times,
                         const IntegratorConfig& cfg) {
  Trajectory out;
  out.times = times;
  out.states.resize(times.size(), x0.size());
  out.states.row(0) = x0.transpose();
  State x = x0;
  long steps = 0;
  for (Eigen::Index k = 0; k + 1 < times.size(); ++k) {
    const double span = times(k + 1) - times(k);
    const long n = std::max(1L, static_cast<long>(std::ceil(span / cfg.step - 1e-9)));
    const double h = span / static_cast<double>(n);
    for (long s = 0; s < n; ++s) {
      if (++steps > cfg.max_steps) budget_exceeded();
      x = rk4(f, x, h, times(k) + static_cast<double>(s) * h);
    }
    out.states.row(k + 1) = x.transpose();
  }
  return out;
}

double initial_step(const VectorField& f, const State& x, const State& fx, double t,
                    const IntegratorConfig& cfg, double hmax) {
  const double sc = cfg.atol + cfg.rtol * x.lpNorm<Eigen::Infinity>();
  const double d0 = x.lpNorm<Eigen::Infinity>() / sc;
  const double d1 = fx.lpNorm<Eigen::Infinity>() / sc;
  double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
  h0 = std::min(h0, hmax);
  const State x1 = x + h0 * fx;
  const State f1 = checked(f, x1, t + h0);
  const double d2 = (f1 - fx).lpNorm<Eigen::Infinity>() / sc / h0;
  const double h1 = (std::max(d1, d2) <= 1e-15) ? std::max(1e-6, h0 * 1e-3)
                                                  : std::pow(0.01 / std::max(d1, d2), 0.2);
  return std::clamp(std::min(100.0 * h0, h1), kMinAdaptiveStep, hmax);
}

Trajectory integrate_dopri(const VectorField& f, const State& x0, const Eigen::VectorXd& times,
                           const IntegratorConfig& cfg, const StepObserver& observer) {
  Trajectory out;
  out.times = times;
  out.states.resize(times.size(), x0.size());
  out.states.row(0) = x0.transpose();

  const double total = times(times.size() - 1) - times(0);
  const double hmax = total / 4.0;
  const double hmin = std::min(kMinAdaptiveStep, hmax);

  State x = x0;
  double t = times(0);
  State k1 = checked(f, x, t);
  double h = initial_step(f, x, k1, t, cfg, hmax);
  double err_prev = 1e-4;
  long attempts = 0;

  for (Eigen::Index k = 1; k < times.size(); ++k) {
    const double t_next = times(k);
    while (t < t_next) {
      double step = h;
      bool landing = false;
      // Land exactly on the sample time; a short final step is not clamped by hmin.
      if (t + step >= t_next - 1e-12 * std::max(1.0, std::abs(t_next))) {
        step = t_next - t;
        landing = true;
      }
      if (++attempts > cfg.max_steps) budget_exceeded();
      const DopriStep s = dopri(f, x, k1, step, t);
      const double sc = cfg.atol + cfg.rtol * std::max(x.lpNorm<Eigen::Infinity>(),
                                                       s.x_new.lpNorm<Eigen::Infinity>());
      const double err_inf = s.err.lpNorm<Eigen::Infinity>();
      const double err = err_inf / sc;
      if (err <= 1.0) {
        if (observer) observer(StepRecord{t, step, err_inf, sc});
        double fac = std::pow(std::max(err, 1e-10), kAlpha) / std::pow(err_prev, kBeta) / kStepSafety;
        fac = std::clamp(fac, 0.1, 5.0);
        const double proposal = std::clamp(step / fac, hmin, hmax);
        err_prev = std::max(err, 1e-4);
        t = landing ? t_next : t + step;
        x = s.x_new;
        k1 = s.k7;
        // A truncated landing step says little about the controller's own size.
        h = (landing && step < h) ? std::min(h, std::max(proposal, step)) : proposal;
      } else {
        if (step <= hmin) {
          std::ostringstream os;
          os << "step size underflow at t=" << t;
          fail(ErrorKind::numeric, os.str());
        }
        h = std::max(step * std::max(0.2, kStepSafety * std::pow(err, -0.2)), hmin);
      }
    }
    out.states.row(k) = x.transpose();
  }
  return out;
}

}  // namespace

void IntegratorConfig::validate() const {
  if (!(step > 0.0)) fail(ErrorKind::input, "integrator step must be positive");
  if (!(rtol > 0.0) || !(atol > 0.0)) fail(ErrorKind::input, "integrator tolerances must be positive");
  if (max_steps < 1) fail(ErrorKind::input, "integrator max_steps must be at least 1");
}

Trajectory integrate_path(const VectorField& f, const State& x0, const Eigen::VectorXd& times,
                          const IntegratorConfig& cfg, const StepObserver& observer) {
  cfg.validate();
  check_inputs(x0, times);
  if (cfg.method == Method::rk4_fixed) return integrate_rk4(f, x0, times, cfg);
  return integrate_dopri(f, x0, times, cfg, observer);
}

State step_once(const VectorField& f, const State& x, double dt, Method method) {
  if (!(dt > 0.0)) fail(ErrorKind::input, "step_once: dt must be positive");
  State out;
  if (method == Method::rk4_fixed) {
    out = rk4(f, x, dt, 0.0);
  } else {
    out = dopri(f, x, checked(f, x, 0.0), dt, 0.0).x_new;
  }
  if (!out.allFinite()) fail(ErrorKind::numeric, "field produced non-finite value at t=0");
  return out;
}

}  // namespace nodeplan
