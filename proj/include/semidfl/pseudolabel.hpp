#pragma once

#include "semidfl/classifier.hpp"
#include "semidfl/data.hpp"
#include "semidfl/types.hpp"

#include <cmath>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace semidfl {

enum class PlMode { vanilla, apl, npl };

PlMode parse_pl_mode(std::string_view s);
std::string_view to_string(PlMode m);

struct PlConfig {
  int K = 4;         // augmentation variants
  double Z = 2.0;    // sharpening temperature
  double tau = 0.95;
  PlMode mode = PlMode::npl;
  AugmentConfig augment;
};

/// p_c^Z / sum_c' p_c'^Z, computed in log space so tiny entries cannot
/// underflow the whole vector.
template <typename Derived>
SoftLabel sharpen(const Eigen::MatrixBase<Derived>& p, double Z) {
  if (!(Z > 1.0)) throw Error("sharpen: temperature Z must exceed 1");
  const double top = p.maxCoeff();
  if (!(top > 0.0)) throw Error("sharpen: probability vector has no positive entry");
  SoftLabel out(p.size());
  for (Eigen::Index c = 0; c < p.size(); ++c) {
    out(c) = p(c) > 0.0 ? std::exp(Z * (std::log(p(c)) - std::log(top))) : 0.0;
  }
  return out / out.sum();
}

/// Mean of the own model over K augmented variants of x.
Prediction predict_avg(const Sample& x, const Classifier& own, const PlConfig& cfg,
                       std::uint64_t seed);

/// Variant 1 is scored by models[own]; variant k >= 2 by models[draws[k-2]].
Prediction predict_avg_neighborhood(const Sample& x, std::span<const Classifier* const> models,
                                    int own, std::span<const int> draws, const PlConfig& cfg,
                                    std::uint64_t seed);

/// As above with the K-1 draws made uniformly (with replacement) over
/// `models`, which holds the whole neighborhood including `own`.
Prediction predict_avg_neighborhood(const Sample& x, std::span<const Classifier* const> models,
                                    int own, const PlConfig& cfg, std::uint64_t seed);

/// Per-class counts of predictions whose maximum exceeds tau (strictly).
struct QualifiedCounts {
  std::vector<int> sigma;

  int max() const;
  int total() const;
};

QualifiedCounts count_qualified(std::span<const SoftLabel> preds, double tau, int classes);

/// tau_c = sigma_own[c] / (max over the neighborhood of max_c sigma) * tau,
/// or tau for every class when that denominator is zero.
Vector adaptive_threshold(const QualifiedCounts& own, std::span<const QualifiedCounts> neighborhood,
                          double tau);

struct PseudoLabeled {
  Vector features;
  SoftLabel target;  // sharpened
  int label;         // argmax of target
  std::size_t source;  // index into the unlabeled set
};

using PseudoLabeledSet = std::vector<PseudoLabeled>;

/// Sharpened predictions for every unlabeled sample. For npl the neighborhood
/// models vote; vanilla and apl use models[own] only.
std::vector<SoftLabel> predict_unlabeled(std::span<const Sample> unlabeled,
                                         std::span<const Classifier* const> models, int own,
                                         const PlConfig& cfg, std::uint64_t seed);

/// Keeps sample n iff max(preds[n]) > thresholds[argmax(preds[n])].
PseudoLabeledSet filter_pseudo(std::span<const Sample> unlabeled, std::span<const SoftLabel> preds,
                               const Vector& thresholds);

/// predict -> sharpen -> filter in one call.
PseudoLabeledSet build_pseudo_set(std::span<const Sample> unlabeled,
                                  std::span<const Classifier* const> models, int own,
                                  const Vector& thresholds, const PlConfig& cfg,
                                  std::uint64_t seed);

}  // namespace semidfl
