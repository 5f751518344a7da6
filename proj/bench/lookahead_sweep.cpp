// Lookahead sensitivity on the circle task: N in {1, 5, 10, 20} under the same
// teleport script. Optional argument: a checkpoint to use instead of the exact
// limit-cycle field.
#include <chrono>
#include <cstdio>
#include <memory>

#include "nodeplan/checkpoint.hpp"
#include "nodeplan/sim.hpp"
#include "nodeplan/target_array.hpp"
#include "support/shapes.hpp"

using namespace nodeplan;

int main(int argc, char** argv) {
  constexpr double kScale = 0.1;
  std::unique_ptr<VectorField> model;
  if (argc > 1) {
    model = std::make_unique<MlpField>(load_checkpoint(argv[1]));
  } else {
    model = std::make_unique<FunctionField>([](const State& x) { return support::limit_cycle_velocity(x, kScale); });
  }
  State x0(2);
  x0 << kScale, 0.0;
  TargetOptions to;
  to.trim_to_period = true;
  const TargetArray ta = generate_target_array(*model, x0, 4.0 * M_PI, 1e-3, to);

  std::printf("%4s %12s %12s %14s %12s %10s\n", "N", "mean|u|", "final|e|", "settle(s)", "max dV", "us/step");
  for (int n : {1, 5, 10, 20}) {
    Scenario sc;
    sc.target_array = ta;
    sc.x0 = ta.point(0);
    sc.horizon = 10.0;
    sc.planner.lookahead_N = n;
    sc.planner.alpha_gain = 5.0;
    sc.certificates.alpha.gain = 5.0;
    for (int i = 0; i < 5; ++i) {
      State off(2);
      off << std::cos(0.7 + 1.3 * i), std::sin(0.7 + 1.3 * i);
      sc.disturbances.push_back(Teleport{1.0 + 2.0 * i, (i % 2 ? -1.0 : 1.0) * (0.1 + 0.225 * i) * kScale * off});
    }
    const auto t0 = std::chrono::steady_clock::now();
    const RolloutLog log = run(*model, sc);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    double settle = 0.0, max_rise = -INFINITY;
    for (int i = 0; i < 5; ++i) {
      const auto k0 = static_cast<std::size_t>(std::lround((1.0 + 2.0 * i) / 1e-3));
      std::size_t k = k0;
      while (k + 1 < log.records.size() && std::sqrt(log.records[k].V) >= 1e-2) ++k;
      settle += static_cast<double>(k - k0) * 1e-3 / 5.0;
    }
    for (std::size_t k = 1; k < log.records.size(); ++k) {
      const bool jump = std::lround(log.records[k].t * 1e3) % 2000 == 1000;
      if (!jump) max_rise = std::max(max_rise, log.records[k].V - log.records[k - 1].V);
    }
    std::printf("%4d %12.4g %12.4g %14.4f %12.3g %10.2f\n", n, log.summary.mean_u_norm, log.summary.final_error,
                settle, max_rise, 1e6 * secs / static_cast<double>(log.records.size()));
  }
  return 0;
}
