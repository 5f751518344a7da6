#include "nodeplan/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <span>


#include "nodeplan/error.hpp"

namespace nodeplan {
namespace {

// Windows per parallel work item; independent of the thread count.
constexpr std::size_t kWindowsPerChunk = 16;

long substeps(double interval, double train_step) {
  if (train_step <= 0.0) return 1;
  return std::max(1L, static_cast<long>(std::ceil(interval / train_step - 1e-9)));
}

std::vector<double> demo_weights(const DemonstrationSet& ds, const std::vector<Window>& ws) {
  std::vector<double> points(ds.demos.size(), 0.0);
  for (const auto& w : ws) points[static_cast<std::size_t>(w.demo)] += static_cast<double>(w.length);
  std::vector<double> out(points.size());
  const double m = static_cast<double>(ds.demos.size());
  for (std::size_t i = 0; i < points.size(); ++i) out[i] = 1.0 / (m * points[i]);
  return out;
}

[[noreturn]] void diverged(const Window& w, Eigen::Index k) {
  fail(ErrorKind::numeric, "rollout diverged (non-finite state) in demo " + std::to_string(w.demo) +
                               " at timestep " + std::to_string(w.start + k));
}

void require_windows_fit(const DemonstrationSet& ds, const TrainConfig& cfg) {
  if (cfg.window_len == 0) return;
  for (std::size_t i = 0; i < ds.demos.size(); ++i) {
    if (ds.demos[i].length() < cfg.window_len) {
      fail(ErrorKind::input, "demo " + std::to_string(i) + " has " +
                                 std::to_string(ds.demos[i].length()) +
                                 " samples, shorter than window_len " + std::to_string(cfg.window_len));
    }
  }
}

// One RK4 substep of a batch, with a per-column step size. Columns with h = 0
// are carried through unchanged.
struct StageRecord {
  Matrix x, a2, a3, a4;
  Eigen::RowVectorXd h;
};

// Batched loss and gradient for a chunk of windows.
void chunk_kernel(const MlpField& model, const DemonstrationSet& ds, std::span<const Window> ws,
                  const std::vector<double>& weights, double train_step, double& loss_out,
                  Eigen::VectorXd& grad_out) {
  const Eigen::Index d = model.dim();
  const auto B = static_cast<Eigen::Index>(ws.size());
  Eigen::Index lmax = 0;
  for (const auto& w : ws) lmax = std::max(lmax, w.length);

  // data[j] holds sample j of every window (padded with the window's last sample).
  std::vector<Matrix> data(static_cast<std::size_t>(lmax), Matrix(d, B));
  Matrix interval = Matrix::Zero(std::max<Eigen::Index>(lmax - 1, 0), B);
  Eigen::MatrixXi nsub = Eigen::MatrixXi::Zero(std::max<Eigen::Index>(lmax - 1, 0), B);
  Eigen::RowVectorXd wcol(B);
  for (Eigen::Index c = 0; c < B; ++c) {
    const Window& w = ws[static_cast<std::size_t>(c)];
    const Trajectory& tr = ds.demos[static_cast<std::size_t>(w.demo)];
    wcol(c) = weights[static_cast<std::size_t>(w.demo)];
    for (Eigen::Index j = 0; j < lmax; ++j) {
      const Eigen::Index k = w.start + std::min(j, w.length - 1);
      data[static_cast<std::size_t>(j)].col(c) = tr.states.row(k).transpose();
      if (j + 1 < w.length) {
        interval(j, c) = tr.times(k + 1) - tr.times(k);
        nsub(j, c) = static_cast<int>(substeps(interval(j, c), train_step));
      }
    }
  }

  std::vector<std::vector<StageRecord>> tape(static_cast<std::size_t>(std::max<Eigen::Index>(lmax - 1, 0)));
  std::vector<Matrix> residual(static_cast<std::size_t>(lmax));
  Matrix x = data[0];
  double loss = 0.0;
  for (Eigen::Index j = 0; j + 1 < lmax; ++j) {
    const int smax = nsub.row(j).maxCoeff();
    auto& steps = tape[static_cast<std::size_t>(j)];
    steps.resize(static_cast<std::size_t>(smax));
    for (int s = 0; s < smax; ++s) {
      StageRecord& r = steps[static_cast<std::size_t>(s)];
      r.h.resize(B);
      for (Eigen::Index c = 0; c < B; ++c) {
        r.h(c) = s < nsub(j, c) ? interval(j, c) / nsub(j, c) : 0.0;
      }
      const auto half = (0.5 * r.h).asDiagonal();
      r.x = x;
      const Matrix k1 = model.eval_batch(x);
      r.a2 = x + k1 * half;
      const Matrix k2 = model.eval_batch(r.a2);
      r.a3 = x + k2 * half;
      const Matrix k3 = model.eval_batch(r.a3);
      r.a4 = x + k3 * r.h.asDiagonal();
      const Matrix k4 = model.eval_batch(r.a4);
      x = x + (k1 + 2.0 * k2 + 2.0 * k3 + k4) * (r.h / 6.0).asDiagonal();
    }
    Matrix& res = residual[static_cast<std::size_t>(j + 1)];
    res = x - data[static_cast<std::size_t>(j + 1)];
    for (Eigen::Index c = 0; c < B; ++c) {
      if (!x.col(c).allFinite()) diverged(ws[static_cast<std::size_t>(c)], j + 1);
      if (j + 1 >= ws[static_cast<std::size_t>(c)].length) res.col(c).setZero();
    }
    loss += (res.colwise().squaredNorm().array() * wcol.array()).sum();
  }

  Eigen::VectorXd grad = Eigen::VectorXd::Zero(model.num_params());
  Matrix xbar = Matrix::Zero(d, B);
  MlpTape mt;
  for (Eigen::Index j = lmax - 2; j >= 0; --j) {
    xbar += 2.0 * residual[static_cast<std::size_t>(j + 1)] * wcol.asDiagonal();
    const auto& steps = tape[static_cast<std::size_t>(j)];
    for (auto it = steps.rbegin(); it != steps.rend(); ++it) {
      const StageRecord& r = *it;
      const Matrix g = xbar;
      Matrix k4bar = g * (r.h / 6.0).asDiagonal();
      Matrix k3bar = g * (r.h / 3.0).asDiagonal();
      Matrix k2bar = k3bar;
      Matrix k1bar = k4bar;
      model.forward(r.a4, mt);
      const Matrix a4bar = model.backward(mt, k4bar, grad);
      xbar += a4bar;
      k3bar += a4bar * r.h.asDiagonal();
      model.forward(r.a3, mt);
      const Matrix a3bar = model.backward(mt, k3bar, grad);
      xbar += a3bar;
      k2bar += a3bar * (0.5 * r.h).asDiagonal();
      model.forward(r.a2, mt);
      const Matrix a2bar = model.backward(mt, k2bar, grad);
      xbar += a2bar;
      k1bar += a2bar * (0.5 * r.h).asDiagonal();
      model.forward(r.x, mt);
      xbar += model.backward(mt, k1bar, grad);
    }
  }
  loss_out = loss;
  grad_out = std::move(grad);
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 1) fail(ErrorKind::input, "epochs must be at least 1");
  if (!(learning_rate > 0.0)) fail(ErrorKind::input, "learning_rate must be positive");
  if (window_len != 0 && window_len < 2) fail(ErrorKind::input, "window_len must be 0 or at least 2");
  if (window_stride < 1) fail(ErrorKind::input, "window_stride must be at least 1");
  if (train_step < 0.0) fail(ErrorKind::input, "train_step must be non-negative");
  for (int h : hidden) {
    if (h < 1) fail(ErrorKind::input, "hidden widths must be positive");
  }
}

nlohmann::json to_json(const TrainConfig& cfg) {
  return {{"window_len", cfg.window_len},
          {"window_stride", cfg.window_stride},
          {"epochs", cfg.epochs},
          {"learning_rate", cfg.learning_rate},
          {"optimizer", "adam"},
          {"beta1", cfg.beta1},
          {"beta2", cfg.beta2},
          {"adam_epsilon", cfg.adam_epsilon},
          {"seed", cfg.seed},
          {"train_step", cfg.train_step},
          {"hidden", cfg.hidden},
          {"activation", to_string(cfg.activation)},
          {"standardize", cfg.standardize}};
}

nlohmann::json to_json(const TrainReport& r) {
  return {{"loss_history", r.loss_history},
          {"best_loss_history", r.best_loss_history},
          {"final_loss", r.final_loss},
          {"best_epoch", r.best_epoch},
          {"retries", r.retries},
          {"wall_time", r.wall_time},
          {"config", to_json(r.config)}};
}

std::vector<Window> make_windows(const DemonstrationSet& ds, int window_len, int stride) {
  std::vector<Window> out;
  for (std::size_t i = 0; i < ds.demos.size(); ++i) {
    const Eigen::Index T = ds.demos[i].length();
    if (window_len == 0) {
      out.push_back({static_cast<int>(i), 0, T});
      continue;
    }
    const Eigen::Index L = window_len;
    if (T < L) continue;
    Eigen::Index start = 0;
    for (; start + L <= T; start += stride) out.push_back({static_cast<int>(i), start, L});
    // Cover the tail when the stride does not land on it.
    if (out.back().start + L < T) out.push_back({static_cast<int>(i), T - L, L});
  }
  return out;
}

Standardization fit_standardization(const DemonstrationSet& ds) {
  const Eigen::Index d = ds.dim();
  State sum = State::Zero(d);
  State sq = State::Zero(d);
  double n = 0.0;
  for (const auto& tr : ds.demos) {
    sum += tr.states.colwise().sum().transpose();
    n += static_cast<double>(tr.length());
  }
  const State mean = sum / n;
  for (const auto& tr : ds.demos) {
    sq += (tr.states.rowwise() - mean.transpose()).array().square().colwise().sum().matrix().transpose();
  }
  State scale = (sq / n).cwiseSqrt();
  for (Eigen::Index i = 0; i < d; ++i) {
    if (!(scale(i) > 1e-12)) scale(i) = 1.0;
  }
  return {mean, scale};
}

LossGrad loss_and_grad(const MlpField& model, const DemonstrationSet& ds, const TrainConfig& cfg) {
  require_valid(ds);
  require_windows_fit(ds, cfg);
  if (ds.dim() != model.dim()) fail(ErrorKind::input, "loss_and_grad: model and data dimensions differ");
  const auto windows = make_windows(ds, cfg.window_len, cfg.window_stride);
  const auto weights = demo_weights(ds, windows);
  const std::size_t nchunks = (windows.size() + kWindowsPerChunk - 1) / kWindowsPerChunk;

  std::vector<double> chunk_loss(nchunks, 0.0);
  std::vector<Eigen::VectorXd> chunk_grad(nchunks);
  std::vector<std::exception_ptr> errors(nchunks);

#pragma omp parallel for schedule(dynamic, 1)
  for (long c = 0; c < static_cast<long>(nchunks); ++c) {
    const auto cu = static_cast<std::size_t>(c);
    const std::size_t lo = cu * kWindowsPerChunk;
    const std::size_t hi = std::min(windows.size(), lo + kWindowsPerChunk);
    try {
      chunk_kernel(model, ds, std::span<const Window>(windows.data() + lo, hi - lo), weights,
                   cfg.train_step, chunk_loss[cu], chunk_grad[cu]);
    } catch (...) {
      errors[cu] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  LossGrad out;
  out.grad = Eigen::VectorXd::Zero(model.num_params());
  for (std::size_t c = 0; c < nchunks; ++c) {
    out.loss += chunk_loss[c];
    out.grad += chunk_grad[c];
  }
  return out;
}

namespace serial {

LossGrad loss_and_grad(const MlpField& model, const DemonstrationSet& ds, const TrainConfig& cfg) {
  require_valid(ds);
  require_windows_fit(ds, cfg);
  if (ds.dim() != model.dim()) fail(ErrorKind::input, "loss_and_grad: model and data dimensions differ");
  const auto windows = make_windows(ds, cfg.window_len, cfg.window_stride);
  const auto weights = demo_weights(ds, windows);

  LossGrad out;
  out.grad = Eigen::VectorXd::Zero(model.num_params());
  MlpTape mt;
  auto vjp = [&](const State& at, const State& bar) -> State {
    model.forward(at, mt);
    return model.backward(mt, bar, out.grad);
  };

  for (const Window& w : windows) {
    const Trajectory& tr = ds.demos[static_cast<std::size_t>(w.demo)];
    const double wt = weights[static_cast<std::size_t>(w.demo)];
    struct Step {
      State x, a2, a3, a4;
      double h;
    };
    std::vector<std::vector<Step>> steps(static_cast<std::size_t>(w.length - 1));
    std::vector<State> res(static_cast<std::size_t>(w.length));
    State x = tr.at(w.start);
    for (Eigen::Index j = 0; j + 1 < w.length; ++j) {
      const double dt = tr.times(w.start + j + 1) - tr.times(w.start + j);
      const long n = substeps(dt, cfg.train_step);
      const double h = dt / static_cast<double>(n);
      for (long s = 0; s < n; ++s) {
        Step st{x, {}, {}, {}, h};
        const State k1 = model.eval(x);
        st.a2 = x + 0.5 * h * k1;
        const State k2 = model.eval(st.a2);
        st.a3 = x + 0.5 * h * k2;
        const State k3 = model.eval(st.a3);
        st.a4 = x + h * k3;
        const State k4 = model.eval(st.a4);
        x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        steps[static_cast<std::size_t>(j)].push_back(std::move(st));
      }
      if (!x.allFinite()) diverged(w, j + 1);
      res[static_cast<std::size_t>(j + 1)] = x - tr.at(w.start + j + 1);
      out.loss += wt * res[static_cast<std::size_t>(j + 1)].squaredNorm();
    }
    State xbar = State::Zero(x.size());
    for (Eigen::Index j = w.length - 2; j >= 0; --j) {
      xbar += 2.0 * wt * res[static_cast<std::size_t>(j + 1)];
      const auto& js = steps[static_cast<std::size_t>(j)];
      for (auto it = js.rbegin(); it != js.rend(); ++it) {
        const double h = it->h;
        const State g = xbar;
        State k3bar = (h / 3.0) * g;
        State k2bar = (h / 3.0) * g;
        State k1bar = (h / 6.0) * g;
        const State a4bar = vjp(it->a4, (h / 6.0) * g);
        xbar += a4bar;
        k3bar += h * a4bar;
        const State a3bar = vjp(it->a3, k3bar);
        xbar += a3bar;
        k2bar += 0.5 * h * a3bar;
        const State a2bar = vjp(it->a2, k2bar);
        xbar += a2bar;
        k1bar += 0.5 * h * a2bar;
        xbar += vjp(it->x, k1bar);
      }
    }
  }
  return out;
}

}  // namespace serial

TrainResult train(const DemonstrationSet& ds, const TrainConfig& cfg, const EpochCallback& on_epoch) {
  cfg.validate();
  require_valid(ds);
  const int d = static_cast<int>(ds.dim());
  std::vector<int> sizes{d};
  sizes.insert(sizes.end(), cfg.hidden.begin(), cfg.hidden.end());
  sizes.push_back(d);
  MlpField model = MlpField::initialized(sizes, cfg.activation, cfg.seed);
  if (cfg.standardize) model.set_standardization(fit_standardization(ds));
  return train_from(std::move(model), ds, cfg, on_epoch);
}

TrainResult train_from(MlpField model, const DemonstrationSet& ds, const TrainConfig& cfg,
                       const EpochCallback& on_epoch) {
  cfg.validate();
  require_valid(ds);
  require_windows_fit(ds, cfg);
  const auto t0 = std::chrono::steady_clock::now();

  TrainResult result;
  TrainReport& rep = result.report;
  rep.config = cfg;

  const Eigen::Index n = model.num_params();
  Eigen::VectorXd m = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
  long t = 0;

  // State before the most recent update, for retries.
  Eigen::VectorXd prev_params = model.params();
  Eigen::VectorXd prev_m = m, prev_v = v, prev_grad;
  bool have_prev = false;
  double lr_scale = 1.0;
  int retries_in_row = 0;

  Eigen::VectorXd best = model.params();
  double best_loss = std::numeric_limits<double>::infinity();

  auto adam_update = [&](const Eigen::VectorXd& g) {
    ++t;
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
    v = cfg.beta2 * v + (1.0 - cfg.beta2) * g.cwiseAbs2();
    const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
    const double lr = cfg.learning_rate * lr_scale;
    Eigen::VectorXd p = model.params();
    p.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + cfg.adam_epsilon);
    model.set_params(p);
  };

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    LossGrad lg;
    while (true) {
      try {
        lg = loss_and_grad(model, ds, cfg);
        if (!std::isfinite(lg.loss) || !lg.grad.allFinite()) {
          fail(ErrorKind::numeric, "non-finite loss or gradient at epoch " + std::to_string(epoch));
        }
        retries_in_row = 0;
        break;
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::numeric || !have_prev || retries_in_row >= 3) throw;
        ++retries_in_row;
        ++rep.retries;
        lr_scale *= 0.5;
        model.set_params(prev_params);
        m = prev_m;
        v = prev_v;
        --t;
        adam_update(prev_grad);
      }
    }
    rep.loss_history.push_back(lg.loss);
    if (lg.loss < best_loss) {
      best_loss = lg.loss;
      best = model.params();
      rep.best_epoch = epoch;
    }
    rep.best_loss_history.push_back(best_loss);
    if (on_epoch) on_epoch(epoch, lg.loss);
    if (epoch + 1 == cfg.epochs) break;

    prev_params = model.params();
    prev_m = m;
    prev_v = v;
    prev_grad = lg.grad;
    have_prev = true;
    adam_update(lg.grad);
  }

  model.set_params(best);
  rep.final_loss = best_loss;
  rep.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  result.model = std::move(model);
  return result;
}

}  // namespace nodeplan
