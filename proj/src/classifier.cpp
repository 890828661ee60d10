#include "semidfl/classifier.hpp"

#include <algorithm>
#include <numeric>

namespace semidfl {

namespace {

ParamVector initial_params(const MlpLayout& layout, std::uint64_t seed) {
  Rng rng(derive_seed({seed, static_cast<std::uint64_t>(Purpose::init)}));
  return {layout.tag("classifier"), layout.init(rng)};
}

Matrix log_softmax(const Matrix& z) {
  Matrix out(z.rows(), z.cols());
  for (Eigen::Index k = 0; k < z.cols(); ++k) {
    const double top = z.col(k).maxCoeff();
    const double lse = top + std::log((z.col(k).array() - top).exp().sum());
    out.col(k) = z.col(k).array() - lse;
  }
  return out;
}

}  // namespace

Classifier::Classifier(std::vector<int> layer_sizes, std::uint64_t seed)
    : layout_(std::move(layer_sizes)), params_(initial_params(layout_, seed)) {}

Classifier::Classifier(std::vector<int> layer_sizes, ParamVector params)
    : layout_(std::move(layer_sizes)) {
  set_params(std::move(params));
}

void Classifier::set_params(ParamVector p) {
  if (p.size() != layout_.param_count()) {
    throw Error("classifier parameters have length " + std::to_string(p.size()) + ", layout needs " +
                std::to_string(layout_.param_count()));
  }
  if (p.layout.empty()) p.layout = layout_.tag("classifier");
  if (p.layout != layout_.tag("classifier")) throw Error("classifier layout mismatch: " + p.layout);
  params_ = std::move(p);
}

Matrix Classifier::logits(const Matrix& x, MlpTape* tape) const {
  return mlp_forward(layout_, params_.values, x, tape);
}

Matrix softmax(const Matrix& logits) {
  Matrix p(logits.rows(), logits.cols());
  for (Eigen::Index k = 0; k < logits.cols(); ++k) {
    const auto e = (logits.col(k).array() - logits.col(k).maxCoeff()).exp();
    p.col(k) = e / e.sum();
  }
  return p;
}

Matrix Classifier::forward_batch(const Matrix& x) const { return softmax(logits(x)); }

Prediction Classifier::forward(const Vector& x) const { return forward_batch(x).col(0); }

LossGrad loss_and_grad(const Classifier& m, std::span<const SoftSample> batch) {
  if (batch.empty()) throw Error("loss_and_grad: empty batch");
  const Matrix x = stack_features(batch);
  Matrix y(m.num_classes(), static_cast<Eigen::Index>(batch.size()));
  for (std::size_t k = 0; k < batch.size(); ++k) {
    if (batch[k].target.size() != m.num_classes()) throw Error("soft label has wrong class count");
    y.col(static_cast<Eigen::Index>(k)) = batch[k].target;
  }
  MlpTape tape;
  const Matrix z = m.logits(x, &tape);
  const Matrix logp = log_softmax(z);
  const double n = static_cast<double>(batch.size());

  LossGrad out;
  out.loss = -(y.array() * logp.array()).sum() / n;
  // d/dz of -sum_c y_c log p_c is p * sum(y) - y.
  Matrix dz = logp.array().exp().matrix() * y.colwise().sum().asDiagonal();
  dz -= y;
  dz /= n;
  out.grad = {m.params().layout, mlp_backward(m.layout(), m.params().values, tape, dz)};
  return out;
}

Classifier train_local(Classifier m, std::span<const SoftSample> data, const TrainConfig& cfg,
                       std::uint64_t seed) {
  if (cfg.epochs <= 0) return m;
  if (data.empty()) throw Error("train_local: no training data");
  if (cfg.batch < 1) throw Error("train_local: batch size must be positive");
  Rng rng(derive_seed({seed, static_cast<std::uint64_t>(Purpose::classifier_train)}));
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::size_t cursor = 0;
  std::vector<SoftSample> batch;
  ParamVector p = m.params();
  for (int it = 0; it < cfg.epochs; ++it) {
    batch.clear();
    for (int b = 0; b < cfg.batch; ++b) {
      if (cursor == order.size()) {
        std::shuffle(order.begin(), order.end(), rng);
        cursor = 0;
      }
      batch.push_back(data[order[cursor++]]);
    }
    const auto lg = loss_and_grad(m, batch);
    p.values -= cfg.lr * lg.grad.values;
    m.set_params(p);
  }
  return m;
}

double evaluate(const Classifier& m, std::span<const Sample> test) {
  if (test.empty()) throw Error("evaluate: empty test set");
  const Matrix probs = m.forward_batch(stack_features(test));
  int correct = 0;
  for (std::size_t k = 0; k < test.size(); ++k) {
    if (!test[k].label) throw Error("evaluate: test sample without a label");
    if (argmax(probs.col(static_cast<Eigen::Index>(k))) == *test[k].label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(test.size());
}

std::vector<SoftSample> to_soft(std::span<const Sample> labeled, int classes) {
  std::vector<SoftSample> out;
  out.reserve(labeled.size());
  for (const auto& s : labeled) {
    if (!s.label) throw Error("to_soft: sample without a label");
    out.push_back({s.features, one_hot(*s.label, classes)});
  }
  return out;
}

Matrix stack_features(std::span<const Sample> samples) {
  if (samples.empty()) return {};
  Matrix x(samples.front().features.size(), static_cast<Eigen::Index>(samples.size()));
  for (std::size_t k = 0; k < samples.size(); ++k) x.col(static_cast<Eigen::Index>(k)) = samples[k].features;
  return x;
}

Matrix stack_features(std::span<const SoftSample> samples) {
  if (samples.empty()) return {};
  Matrix x(samples.front().features.size(), static_cast<Eigen::Index>(samples.size()));
  for (std::size_t k = 0; k < samples.size(); ++k) x.col(static_cast<Eigen::Index>(k)) = samples[k].features;
  return x;
}

}  // namespace semidfl
