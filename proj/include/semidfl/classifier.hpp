#pragma once

#include "semidfl/mlp.hpp"
#include "semidfl/types.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace semidfl {

struct TrainConfig {
  int epochs = 25;  // SGD iterations per round
  int batch = 10;
  double lr = 0.05;
};

/// ReLU MLP with a softmax head over C classes.
class Classifier {
 public:
  /// Glorot-uniform initialisation from `seed`. layer_sizes = {d, hidden..., C}.
  Classifier(std::vector<int> layer_sizes, std::uint64_t seed);
  Classifier(std::vector<int> layer_sizes, ParamVector params);

  const MlpLayout& layout() const { return layout_; }
  int input_dim() const { return layout_.input_dim(); }
  int num_classes() const { return layout_.output_dim(); }

  const ParamVector& params() const { return params_; }
  void set_params(ParamVector p);

  Prediction forward(const Vector& x) const;
  /// Column k holds the class probabilities of x.col(k).
  Matrix forward_batch(const Matrix& x) const;
  Matrix logits(const Matrix& x, MlpTape* tape = nullptr) const;

 private:
  MlpLayout layout_;
  ParamVector params_;
};

/// Column-wise softmax.
Matrix softmax(const Matrix& logits);

struct LossGrad {
  double loss = 0.0;
  ParamVector grad;
};

/// Mean soft-label cross-entropy over the batch and its gradient.
LossGrad loss_and_grad(const Classifier& m, std::span<const SoftSample> batch);

/// `epochs` iterations of mini-batch SGD. Batches walk a seeded permutation of
/// `data`, reshuffled after each full pass.
Classifier train_local(Classifier m, std::span<const SoftSample> data, const TrainConfig& cfg,
                       std::uint64_t seed);

/// Fraction of argmax-correct predictions (ties go to the lowest class).
double evaluate(const Classifier& m, std::span<const Sample> test);

std::vector<SoftSample> to_soft(std::span<const Sample> labeled, int classes);

/// Stacks feature vectors as columns.
Matrix stack_features(std::span<const Sample> samples);
Matrix stack_features(std::span<const SoftSample> samples);

}  // namespace semidfl
