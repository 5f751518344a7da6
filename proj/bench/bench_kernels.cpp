// Serial reference vs OpenMP kernels, plus single plan_step latency.
#include <benchmark/benchmark.h>

#include "nodeplan/eval.hpp"
#include "nodeplan/planner.hpp"
#include "nodeplan/sim.hpp"
#include "nodeplan/target_array.hpp"
#include "nodeplan/train.hpp"
#include "support/shapes.hpp"

using namespace nodeplan;

namespace {

DemonstrationSet demos(int n) {
  support::ShapeOptions o;
  o.demos = n;
  return support::limit_cycle_demos(o);
}

MlpField model() { return MlpField::initialized({2, 64, 64, 2}, Activation::tanh, 1); }

const FunctionField kCycle([](const State& x) { return support::limit_cycle_velocity(x, 1.0); });

std::vector<Scenario> scenarios(int n) {
  TargetOptions o;
  o.trim_to_period = true;
  State x0(2);
  x0 << 1.0, 0.0;
  const TargetArray ta = generate_target_array(kCycle, x0, 7.0, 1e-3, o);
  std::vector<Scenario> out;
  for (int i = 0; i < n; ++i) {
    Scenario sc;
    sc.target_array = ta;
    sc.x0 = ta.point(0);
    sc.horizon = 1.0;
    sc.planner.alpha_gain = 5.0;
    State off(2);
    off << 0.1 * std::cos(i), 0.1 * std::sin(i);
    sc.disturbances.push_back(Teleport{0.2, off});
    out.push_back(sc);
  }
  return out;
}

void BM_LossGradParallel(benchmark::State& st) {
  const auto ds = demos(7);
  const auto m = model();
  const TrainConfig cfg;
  for (auto _ : st) benchmark::DoNotOptimize(loss_and_grad(m, ds, cfg).loss);
}

void BM_LossGradSerial(benchmark::State& st) {
  const auto ds = demos(7);
  const auto m = model();
  const TrainConfig cfg;
  for (auto _ : st) benchmark::DoNotOptimize(serial::loss_and_grad(m, ds, cfg).loss);
}

void BM_RunBatchParallel(benchmark::State& st) {
  const auto scs = scenarios(8);
  for (auto _ : st) benchmark::DoNotOptimize(run_batch(kCycle, scs).size());
}

void BM_RunBatchSerial(benchmark::State& st) {
  const auto scs = scenarios(8);
  for (auto _ : st) benchmark::DoNotOptimize(serial::run_batch(kCycle, scs).size());
}

void BM_DtwPairwiseParallel(benchmark::State& st) {
  const auto ds = demos(7);
  for (auto _ : st) benchmark::DoNotOptimize(dtw_pairwise(ds).sum());
}

void BM_DtwPairwiseSerial(benchmark::State& st) {
  const auto ds = demos(7);
  for (auto _ : st) benchmark::DoNotOptimize(serial::dtw_pairwise(ds).sum());
}

void BM_EvaluateParallel(benchmark::State& st) {
  const auto ds = demos(7);
  const auto m = model();
  const Split s = parse_split("0,1,2,3:4,5,6");
  for (auto _ : st) benchmark::DoNotOptimize(evaluate_model(m, ds, s).demos.size());
}

void BM_EvaluateSerial(benchmark::State& st) {
  const auto ds = demos(7);
  const auto m = model();
  const Split s = parse_split("0,1,2,3:4,5,6");
  for (auto _ : st) benchmark::DoNotOptimize(serial::evaluate_model(m, ds, s).demos.size());
}

void BM_PlanStep3d(benchmark::State& st) {
  const MlpField m = MlpField::initialized({3, 64, 64, 3}, Activation::tanh, 2);
  TargetArray ta;
  const int n = 2000;
  ta.points.resize(n, 3);
  ta.velocities.resize(n, 3);
  for (int k = 0; k < n; ++k) {
    const double th = 2.0 * M_PI * k / n;
    ta.points.row(k) = support::figure_eight_point(th, 1.0).transpose();
    ta.velocities.row(k) = m.eval(ta.point(k)).transpose();
  }
  ta.dt = 2.0 * M_PI / n;
  ta.periodic = true;
  CertificateSet cs;
  for (int i = 0; i < 3; ++i) {
    State c = ta.point(n * (2 * i + 1) / 6);
    c(2) += 0.12;
    cs.barriers.push_back({Barrier::circle(c, 0.08), RateFn{5.0}});
  }
  PlannerConfig cfg;
  cfg.alpha_gain = 5.0;
  Eigen::Index k = 0;
  for (auto _ : st) {
    State x = ta.point(k) * 1.02;
    k = (k + 7) % n;
    benchmark::DoNotOptimize(plan_step(x, ta, m, cs, cfg).u);
  }
}

}  // namespace

BENCHMARK(BM_LossGradParallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_LossGradSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RunBatchParallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RunBatchSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DtwPairwiseParallel)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_DtwPairwiseSerial)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_EvaluateParallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EvaluateSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PlanStep3d)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
