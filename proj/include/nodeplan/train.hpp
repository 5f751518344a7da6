#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "json.hpp"
#include "nodeplan/core.hpp"
#include "nodeplan/mlp.hpp"

namespace nodeplan {

struct TrainConfig {
  int window_len = 20;  // 0 = roll out each demo in full from its first sample
  int window_stride = 10;
  int epochs = 500;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::uint64_t seed = 0;
  double train_step = 0.0;  // max RK4 step; 0 = one step per sample interval
  std::vector<int> hidden{64, 64};
  Activation activation = Activation::tanh;
  bool standardize = true;

  void validate() const;
};

nlohmann::json to_json(const TrainConfig& cfg);

struct LossGrad {
  double loss = 0.0;
  Eigen::VectorXd grad;
};

/// One training rollout: `length` consecutive samples of demo `demo` starting
/// at `start`, integrated from the sample at `start`.
struct Window {
  int demo = 0;
  Eigen::Index start = 0;
  Eigen::Index length = 0;
};

std::vector<Window> make_windows(const DemonstrationSet& ds, int window_len, int stride);

/// Mean squared rollout error: per-demo average over every (window, sample)
/// pair, then averaged over demos. Gradient by reverse accumulation through
/// the RK4 steps. Windows are processed in fixed-size chunks on the OpenMP
/// pool; chunk results are summed in chunk order, so the result does not
/// depend on the thread count.
LossGrad loss_and_grad(const MlpField& model, const DemonstrationSet& ds, const TrainConfig& cfg);

namespace serial {
/// Window-by-window reference of loss_and_grad using single-state passes.
LossGrad loss_and_grad(const MlpField& model, const DemonstrationSet& ds, const TrainConfig& cfg);
}  // namespace serial

/// Per-coordinate mean and standard deviation over every sample of the set.
Standardization fit_standardization(const DemonstrationSet& ds);

struct TrainReport {
  std::vector<double> loss_history;       // objective at the start of each epoch
  std::vector<double> best_loss_history;  // running minimum of loss_history
  double final_loss = 0.0;                // loss of the returned model
  int best_epoch = 0;
  int retries = 0;
  double wall_time = 0.0;
  TrainConfig config;
};

nlohmann::json to_json(const TrainReport& r);

struct TrainResult {
  MlpField model;
  TrainReport report;
};

using EpochCallback = std::function<void(int epoch, double loss)>;

/// Full-batch Adam. Returns the parameters with the lowest observed loss.
/// A divergent rollout reverts the last update and retries it with half the
/// learning rate, at most three times in a row.
TrainResult train(const DemonstrationSet& ds, const TrainConfig& cfg, const EpochCallback& on_epoch = {});

/// Same, continuing from an existing model (its standardization is kept).
TrainResult train_from(MlpField model, const DemonstrationSet& ds, const TrainConfig& cfg,
                       const EpochCallback& on_epoch = {});

}  // namespace nodeplan
