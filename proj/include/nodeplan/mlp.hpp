#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nodeplan/core.hpp"
#include "nodeplan/integrate.hpp"

namespace nodeplan {

enum class Activation { tanh, softplus };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& s);

/// Affine per-coordinate map between data units and network units:
/// x_net = (x - mean) / scale. Network outputs are multiplied by `scale`.
struct Standardization {
  State mean;
  State scale;

  static Standardization identity(Eigen::Index d);
};

/// Cached intermediate values of a batched forward pass.
struct MlpTape {
  std::vector<Matrix> inputs;   // input of each layer (network units)
  std::vector<Matrix> outputs;  // activation outputs of each hidden layer
};

/// Multi-layer perceptron vector field f(x) = scale * mlp((x - mean) / scale).
/// Hidden layers use `activation`, the output layer is affine.
///
/// Parameters are stored flat, layer by layer: W_l (column-major, out x in)
/// followed by b_l.
class MlpField final : public VectorField {
 public:
  MlpField() = default;
  /// Zero parameters, identity standardization.
  MlpField(std::vector<int> layer_sizes, Activation activation);

  /// Glorot-uniform weights and zero biases drawn from `seed`.
  static MlpField initialized(std::vector<int> layer_sizes, Activation activation,
                              std::uint64_t seed);

  State eval(const State& x) const override;
  /// Columns of `x` are states.
  Matrix eval_batch(const Matrix& x) const;

  /// Forward pass that records what backward() needs.
  Matrix forward(const Matrix& x, MlpTape& tape) const;
  /// Vector-Jacobian product: given d(loss)/d(output), returns d(loss)/d(input)
  /// and adds d(loss)/d(params) into `param_grad`.
  Matrix backward(const MlpTape& tape, const Matrix& out_bar,
                  Eigen::Ref<Eigen::VectorXd> param_grad) const;

  Eigen::Index dim() const { return layer_sizes_.empty() ? 0 : layer_sizes_.front(); }
  int num_layers() const { return static_cast<int>(layer_sizes_.size()) - 1; }
  Eigen::Index num_params() const { return params_.size(); }
  const std::vector<int>& layer_sizes() const { return layer_sizes_; }
  Activation activation() const { return activation_; }

  const Eigen::VectorXd& params() const { return params_; }
  void set_params(const Eigen::VectorXd& p);

  Eigen::Map<const Matrix> weight(int layer) const;
  Eigen::Map<Matrix> weight(int layer);
  Eigen::Map<const Eigen::VectorXd> bias(int layer) const;
  Eigen::Map<Eigen::VectorXd> bias(int layer);

  const Standardization& standardization() const { return standardization_; }
  void set_standardization(Standardization s);

  std::uint64_t seed() const { return seed_; }
  void set_seed(std::uint64_t s) { seed_ = s; }

  /// Upper bound on the Lipschitz constant in data units, from spectral norms
  /// of the weights (both activations have slope at most 1).
  double lipschitz_bound() const;

 private:
  Eigen::Index weight_offset(int layer) const { return offsets_[static_cast<std::size_t>(layer)]; }

  std::vector<int> layer_sizes_;
  std::vector<Eigen::Index> offsets_;
  Activation activation_ = Activation::tanh;
  Eigen::VectorXd params_;
  Standardization standardization_;
  std::uint64_t seed_ = 0;
};

/// Checked single-state evaluation: rejects mismatched dimensions.
State forward(const MlpField& model, const State& x);

}  // namespace nodeplan
