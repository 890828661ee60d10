#include "semidfl/mlp.hpp"

#include <cmath>

namespace semidfl {

MlpLayout::MlpLayout(std::vector<int> sizes) : sizes_(std::move(sizes)) {
  if (sizes_.size() < 2) throw Error("an MLP needs at least an input and an output size");
  for (int s : sizes_) {
    if (s < 1) throw Error("MLP layer sizes must be positive");
  }
  for (int l = 0; l < layers(); ++l) {
    const Eigen::Index fan_in = sizes_[static_cast<std::size_t>(l)];
    const Eigen::Index fan_out = sizes_[static_cast<std::size_t>(l) + 1];
    offsets_.push_back(offsets_.back() + (fan_in + 1) * fan_out);
  }
}

std::string MlpLayout::tag(const std::string& prefix) const {
  std::string t = prefix + ":";
  for (std::size_t i = 0; i < sizes_.size(); ++i) {
    if (i) t += '-';
    t += std::to_string(sizes_[i]);
  }
  return t;
}

Eigen::Map<const Matrix> MlpLayout::weight(const Vector& p, int l) const {
  const auto li = static_cast<std::size_t>(l);
  return {p.data() + offsets_[li], sizes_[li + 1], sizes_[li]};
}

Eigen::Map<const Vector> MlpLayout::bias(const Vector& p, int l) const {
  const auto li = static_cast<std::size_t>(l);
  return {p.data() + offsets_[li] + Eigen::Index{sizes_[li]} * sizes_[li + 1], sizes_[li + 1]};
}

Eigen::Map<Matrix> MlpLayout::weight(Vector& p, int l) const {
  const auto li = static_cast<std::size_t>(l);
  return {p.data() + offsets_[li], sizes_[li + 1], sizes_[li]};
}

Eigen::Map<Vector> MlpLayout::bias(Vector& p, int l) const {
  const auto li = static_cast<std::size_t>(l);
  return {p.data() + offsets_[li] + Eigen::Index{sizes_[li]} * sizes_[li + 1], sizes_[li + 1]};
}

Vector MlpLayout::init(Rng& rng) const {
  Vector p = Vector::Zero(param_count());
  for (int l = 0; l < layers(); ++l) {
    const auto li = static_cast<std::size_t>(l);
    const double a = std::sqrt(6.0 / static_cast<double>(sizes_[li] + sizes_[li + 1]));
    std::uniform_real_distribution<double> u(-a, a);
    auto w = weight(p, l);
    for (Eigen::Index k = 0; k < w.size(); ++k) w.data()[k] = u(rng);
  }
  return p;
}

Matrix mlp_forward(const MlpLayout& layout, const Vector& params, const Matrix& x, MlpTape* tape) {
  if (x.rows() != layout.input_dim()) {
    throw Error("input has " + std::to_string(x.rows()) + " features, network expects " +
                std::to_string(layout.input_dim()));
  }
  if (params.size() != layout.param_count()) throw Error("parameter vector does not match layout");
  if (tape) {
    tape->inputs.clear();
    tape->preacts.clear();
  }
  Matrix h = x;
  for (int l = 0; l < layout.layers(); ++l) {
    if (tape) tape->inputs.push_back(h);
    Matrix z = layout.weight(params, l) * h;
    z.colwise() += layout.bias(params, l);
    if (l + 1 < layout.layers()) {
      if (tape) tape->preacts.push_back(z);
      h = z.cwiseMax(0.0);
    } else {
      h = std::move(z);
    }
  }
  return h;
}

Vector mlp_backward(const MlpLayout& layout, const Vector& params, const MlpTape& tape,
                    const Matrix& grad_output) {
  Vector grad = Vector::Zero(layout.param_count());
  Matrix delta = grad_output;
  for (int l = layout.layers() - 1; l >= 0; --l) {
    const auto li = static_cast<std::size_t>(l);
    layout.weight(grad, l).noalias() = delta * tape.inputs[li].transpose();
    layout.bias(grad, l) = delta.rowwise().sum();
    if (l > 0) {
      Matrix upstream = layout.weight(params, l).transpose() * delta;
      delta = upstream.cwiseProduct((tape.preacts[li - 1].array() > 0.0).cast<double>().matrix());
    }
  }
  return grad;
}

void adam_step(Vector& params, const Vector& grad, AdamState& state, double lr, double beta1,
               double beta2, double eps) {
  if (state.m.size() != params.size()) {
    state.m = Vector::Zero(params.size());
    state.v = Vector::Zero(params.size());
    state.step = 0;
  }
  ++state.step;
  state.m = beta1 * state.m + (1.0 - beta1) * grad;
  state.v = beta2 * state.v + (1.0 - beta2) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
  params.array() -= lr * (state.m.array() / c1) / ((state.v.array() / c2).sqrt() + eps);
}

}  // namespace semidfl
