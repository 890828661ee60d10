#pragma once

#include "semidfl/rng.hpp"
#include "semidfl/types.hpp"

#include <span>
#include <string>
#include <vector>

namespace semidfl {

/// Layout of a fully connected ReLU network stored in one flat vector.
/// Layer l stores its weight matrix (fan_out x fan_in, column-major) and then
/// its bias (fan_out). The last layer has no activation.
class MlpLayout {
 public:
  MlpLayout() = default;
  explicit MlpLayout(std::vector<int> sizes);

  const std::vector<int>& sizes() const { return sizes_; }
  int layers() const { return static_cast<int>(sizes_.size()) - 1; }
  int input_dim() const { return sizes_.front(); }
  int output_dim() const { return sizes_.back(); }
  Eigen::Index param_count() const { return offsets_.back(); }

  /// e.g. "mlp:8-32-32-4"
  std::string tag(const std::string& prefix = "mlp") const;

  Eigen::Map<const Matrix> weight(const Vector& p, int l) const;
  Eigen::Map<const Vector> bias(const Vector& p, int l) const;
  Eigen::Map<Matrix> weight(Vector& p, int l) const;
  Eigen::Map<Vector> bias(Vector& p, int l) const;

  /// Uniform(-a, a) weights with a = sqrt(6 / (fan_in + fan_out)); zero biases.
  Vector init(Rng& rng) const;

 private:
  std::vector<int> sizes_;
  std::vector<Eigen::Index> offsets_{0};
};

/// Activations kept by mlp_forward for the backward pass. Column k of each
/// matrix belongs to sample k.
struct MlpTape {
  std::vector<Matrix> inputs;   // input of each layer
  std::vector<Matrix> preacts;  // pre-activation of each hidden layer
};

/// Raw output of the last layer for the batch X (input_dim x n).
Matrix mlp_forward(const MlpLayout& layout, const Vector& params, const Matrix& x,
                   MlpTape* tape = nullptr);

/// Gradient of a loss with respect to the parameters, given dLoss/dOutput.
Vector mlp_backward(const MlpLayout& layout, const Vector& params, const MlpTape& tape,
                    const Matrix& grad_output);

/// Per-client Adam moments; never exchanged during consensus.
struct AdamState {
  Vector m;
  Vector v;
  long step = 0;
};

void adam_step(Vector& params, const Vector& grad, AdamState& state, double lr,
               double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

}  // namespace semidfl
