#pragma once

#include "semidfl/classifier.hpp"
#include "semidfl/mlp.hpp"
#include "semidfl/types.hpp"

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

namespace semidfl {

/// Linear beta schedule with cumulative products; alpha_bar(0) = 1.
class NoiseSchedule {
 public:
  static NoiseSchedule linear(int steps, double beta_start, double beta_end);

  int steps() const { return static_cast<int>(betas_.size()) - 1; }
  double beta(int h) const { return betas_.at(static_cast<std::size_t>(h)); }
  double alpha_bar(int h) const;

 private:
  std::vector<double> betas_;       // index 0 unused
  std::vector<double> alpha_bars_;  // alpha_bars_[0] = 1
};

/// x_h = sqrt(alpha_bar_h) x0 + sqrt(1 - alpha_bar_h) eps.
template <typename D1, typename D2>
Vector forward_noise(const NoiseSchedule& s, const Eigen::MatrixBase<D1>& x0, int h,
                     const Eigen::MatrixBase<D2>& eps) {
  if (x0.size() != eps.size()) throw Error("forward_noise: noise dimension mismatch");
  const double ab = s.alpha_bar(h);
  if (h == 0) return x0;
  return std::sqrt(ab) * x0 + std::sqrt(1.0 - ab) * eps;
}

enum class Optimizer { sgd, adam };
Optimizer parse_optimizer(std::string_view s);

struct DiffusionConfig {
  int steps = 200;  // H
  double beta_start = 1e-4;
  double beta_end = 0.02;
  std::vector<int> hidden{64, 64};
  int time_embed = 8;
  double p_uncond = 0.1;
  double guidance = 1.0;
  int sample_steps = 20;
  double lr = 1e-3;
  int iters = 25;
  int batch = 32;
  Optimizer optimizer = Optimizer::adam;
};

/// Class-conditional epsilon-predictor. The network sees
/// [x_h, one_hot(c; C+1), time features(h)], where class C is the null class
/// used for classifier-free guidance.
class DiffusionModel {
 public:
  DiffusionModel(int dim, int classes, const DiffusionConfig& cfg, std::uint64_t seed);

  int dim() const { return dim_; }
  int classes() const { return classes_; }
  int null_class() const { return classes_; }
  const NoiseSchedule& schedule() const { return schedule_; }
  const MlpLayout& layout() const { return layout_; }

  const ParamVector& params() const { return params_; }
  void set_params(ParamVector p);

  Matrix net_input(const Matrix& xh, std::span<const int> cls, std::span<const int> steps) const;
  Matrix predict_noise(const Matrix& xh, std::span<const int> cls, std::span<const int> steps,
                       MlpTape* tape = nullptr) const;

 private:
  int dim_;
  int classes_;
  int time_embed_;
  NoiseSchedule schedule_;
  MlpLayout layout_;
  ParamVector params_;
};

/// Random part of one objective evaluation: timesteps, noise, and the
/// effective class of each item (null with probability p_uncond).
struct NoiseDraw {
  std::vector<int> steps;
  std::vector<int> classes;
  Matrix eps;  // dim x n
};

NoiseDraw draw_noise(const DiffusionModel& m, std::span<const Sample> batch, double p_uncond,
                     Rng& rng);

using NoisePredictor =
    std::function<Matrix(const Matrix& xh, std::span<const int> cls, std::span<const int> steps)>;

/// Mean over the batch of ||predict(x_h, c, h) - eps||^2.
double diffusion_objective(const NoisePredictor& predict, const NoiseSchedule& schedule,
                           std::span<const Sample> batch, const NoiseDraw& draw);

LossGrad diffusion_loss_and_grad(const DiffusionModel& m, std::span<const Sample> batch,
                                 const NoiseDraw& draw);
LossGrad diffusion_loss_and_grad(const DiffusionModel& m, std::span<const Sample> batch,
                                 double p_uncond, std::uint64_t seed);

/// cfg.iters optimiser steps on minibatches drawn with replacement from
/// `data` (labels are the conditioning classes). No-op on empty data.
void train_diffusion(DiffusionModel& m, std::span<const Sample> data, const DiffusionConfig& cfg,
                     AdamState& opt, std::uint64_t seed);

/// Deterministic (eta = 0) reverse trajectory over `sample_steps` evenly
/// spaced timesteps from `start` (dim x n). Guided noise is
/// (1 + g) eps_cond - g eps_uncond.
Matrix sample_from(const DiffusionModel& m, Matrix start, std::span<const int> cls,
                   double guidance, int sample_steps);

/// One sample of class c; a pure function of (params, c, g, S, seed).
Vector sample(const DiffusionModel& m, int c, double guidance, int sample_steps,
              std::uint64_t seed);

/// Balanced synthetic set: per_class samples for each class, labeled with the
/// conditioning class.
std::vector<Sample> generate_dataset(const DiffusionModel& m, int per_class, double guidance,
                                     int sample_steps, std::uint64_t seed);

}  // namespace semidfl
