#include "nodeplan/mlp.hpp"

#include <cmath>
#include <random>

#include "nodeplan/error.hpp"

namespace nodeplan {
namespace {

double softplus(double p) { return p > 0.0 ? p + std::log1p(std::exp(-p)) : std::log1p(std::exp(p)); }
double sigmoid(double p) {
  if (p >= 0.0) return 1.0 / (1.0 + std::exp(-p));
  const double e = std::exp(p);
  return e / (1.0 + e);
}

}  // namespace

std::string to_string(Activation a) { return a == Activation::tanh ? "tanh" : "softplus"; }

Activation activation_from_string(const std::string& s) {
  if (s == "tanh") return Activation::tanh;
  if (s == "softplus") return Activation::softplus;
  fail(ErrorKind::input, "unknown activation '" + s + "'");
}

Standardization Standardization::identity(Eigen::Index d) {
  return {State::Zero(d), State::Ones(d)};
}

MlpField::MlpField(std::vector<int> layer_sizes, Activation activation)
    : layer_sizes_(std::move(layer_sizes)), activation_(activation) {
  if (layer_sizes_.size() < 2) fail(ErrorKind::input, "MlpField needs at least input and output widths");
  for (int w : layer_sizes_) {
    if (w < 1) fail(ErrorKind::input, "MlpField layer widths must be positive");
  }
  if (layer_sizes_.front() != layer_sizes_.back()) {
    fail(ErrorKind::input, "MlpField input and output widths must both equal d");
  }
  Eigen::Index n = 0;
  for (std::size_t l = 0; l + 1 < layer_sizes_.size(); ++l) {
    offsets_.push_back(n);
    n += static_cast<Eigen::Index>(layer_sizes_[l + 1]) * (layer_sizes_[l] + 1);
  }
  params_ = Eigen::VectorXd::Zero(n);
  standardization_ = Standardization::identity(layer_sizes_.front());
}

MlpField MlpField::initialized(std::vector<int> layer_sizes, Activation activation,
                               std::uint64_t seed) {
  MlpField m(std::move(layer_sizes), activation);
  m.seed_ = seed;
  std::mt19937_64 rng(seed);
  for (int l = 0; l < m.num_layers(); ++l) {
    const double fan_in = m.layer_sizes_[static_cast<std::size_t>(l)];
    const double fan_out = m.layer_sizes_[static_cast<std::size_t>(l) + 1];
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    auto w = m.weight(l);
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
      for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = dist(rng);
    }
  }
  return m;
}

void MlpField::set_params(const Eigen::VectorXd& p) {
  if (p.size() != params_.size()) fail(ErrorKind::input, "parameter vector has wrong length");
  params_ = p;
}

void MlpField::set_standardization(Standardization s) {
  if (s.mean.size() != dim() || s.scale.size() != dim()) {
    fail(ErrorKind::input, "standardization has wrong dimension");
  }
  if (!(s.scale.array() > 0.0).all()) fail(ErrorKind::input, "standardization scale must be positive");
  standardization_ = std::move(s);
}

Eigen::Map<const Matrix> MlpField::weight(int l) const {
  const auto rows = layer_sizes_[static_cast<std::size_t>(l) + 1];
  const auto cols = layer_sizes_[static_cast<std::size_t>(l)];
  return {params_.data() + weight_offset(l), rows, cols};
}

Eigen::Map<Matrix> MlpField::weight(int l) {
  const auto rows = layer_sizes_[static_cast<std::size_t>(l) + 1];
  const auto cols = layer_sizes_[static_cast<std::size_t>(l)];
  return {params_.data() + weight_offset(l), rows, cols};
}

Eigen::Map<const Eigen::VectorXd> MlpField::bias(int l) const {
  const auto rows = layer_sizes_[static_cast<std::size_t>(l) + 1];
  const auto cols = layer_sizes_[static_cast<std::size_t>(l)];
  return {params_.data() + weight_offset(l) + static_cast<Eigen::Index>(rows) * cols, rows};
}

Eigen::Map<Eigen::VectorXd> MlpField::bias(int l) {
  const auto rows = layer_sizes_[static_cast<std::size_t>(l) + 1];
  const auto cols = layer_sizes_[static_cast<std::size_t>(l)];
  return {params_.data() + weight_offset(l) + static_cast<Eigen::Index>(rows) * cols, rows};
}

Matrix MlpField::forward(const Matrix& x, MlpTape& tape) const {
  const int L = num_layers();
  tape.inputs.resize(static_cast<std::size_t>(L));
  tape.outputs.resize(static_cast<std::size_t>(L > 0 ? L - 1 : 0));
  const auto& st = standardization_;
  Matrix z = (x.colwise() - st.mean).array().colwise() / st.scale.array();
  for (int l = 0; l < L; ++l) {
    tape.inputs[static_cast<std::size_t>(l)] = z;
    Matrix p = weight(l) * z;
    p.colwise() += bias(l);
    if (l + 1 == L) {
      z = std::move(p);
      break;
    }
    if (activation_ == Activation::tanh) {
      z = p.array().tanh().matrix();
    } else {
      z = p.unaryExpr([](double v) { return softplus(v); });
    }
    // softplus' needs the pre-activation; keep it instead of the output.
    tape.outputs[static_cast<std::size_t>(l)] = activation_ == Activation::tanh ? z : p;
  }
  return z.array().colwise() * st.scale.array();
}

Matrix MlpField::backward(const MlpTape& tape, const Matrix& out_bar,
                          Eigen::Ref<Eigen::VectorXd> param_grad) const {
  const int L = num_layers();
  const auto& st = standardization_;
  Matrix g = out_bar.array().colwise() * st.scale.array();
  for (int l = L - 1; l >= 0; --l) {
    const auto rows = layer_sizes_[static_cast<std::size_t>(l) + 1];
    const auto cols = layer_sizes_[static_cast<std::size_t>(l)];
    if (l + 1 < L) {
      const Matrix& saved = tape.outputs[static_cast<std::size_t>(l)];
      if (activation_ == Activation::tanh) {
        g.array() *= 1.0 - saved.array().square();
      } else {
        g.array() *= saved.unaryExpr([](double v) { return sigmoid(v); }).array();
      }
    }
    const Matrix& in = tape.inputs[static_cast<std::size_t>(l)];
    Eigen::Map<Matrix> gw(param_grad.data() + weight_offset(l), rows, cols);
    Eigen::Map<Eigen::VectorXd> gb(param_grad.data() + weight_offset(l) + static_cast<Eigen::Index>(rows) * cols, rows);
    gw.noalias() += g * in.transpose();
    gb += g.rowwise().sum();
    g = weight(l).transpose() * g;
  }
  return g.array().colwise() / st.scale.array();
}

Matrix MlpField::eval_batch(const Matrix& x) const {
  MlpTape tape;
  return forward(x, tape);
}

State MlpField::eval(const State& x) const {
  const int L = num_layers();
  const auto& st = standardization_;
  State z = (x - st.mean).cwiseQuotient(st.scale);
  for (int l = 0; l < L; ++l) {
    State p = weight(l) * z + bias(l);
    if (l + 1 == L) {
      z = std::move(p);
    } else if (activation_ == Activation::tanh) {
      z = p.array().tanh().matrix();
    } else {
      z = p.unaryExpr([](double v) { return softplus(v); });
    }
  }
  return z.cwiseProduct(st.scale);
}

double MlpField::lipschitz_bound() const {
  double bound = 1.0;
  for (int l = 0; l < num_layers(); ++l) {
    Eigen::JacobiSVD<Matrix> svd(weight(l));
    bound *= svd.singularValues().size() > 0 ? svd.singularValues()(0) : 0.0;
  }
  const auto& st = standardization_;
  return bound * st.scale.maxCoeff() / st.scale.minCoeff();
}

State forward(const MlpField& model, const State& x) {
  if (x.size() != model.dim()) {
    fail(ErrorKind::input, "forward: state has dimension " + std::to_string(x.size()) +
                               ", model expects " + std::to_string(model.dim()));
  }
  State y = model.eval(x);
  if (!y.allFinite()) fail(ErrorKind::numeric, "forward: non-finite model output");
  return y;
}

}  // namespace nodeplan
