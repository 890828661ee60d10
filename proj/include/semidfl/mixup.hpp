#pragma once

#include "semidfl/pseudolabel.hpp"
#include "semidfl/rng.hpp"
#include "semidfl/types.hpp"

#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace semidfl {

enum class MixMode { l_mixup, c_mixup };
enum class Pairing { random, shuffled };

MixMode parse_mix_mode(std::string_view s);
std::string_view to_string(MixMode m);
Pairing parse_pairing(std::string_view s);

struct MixConfig {
  double beta_a = 0.5;
  double beta_b = 0.5;
  MixMode mode = MixMode::c_mixup;
  int pairs_per_round = 250;
  /// random: both partners drawn with replacement. shuffled: partner b is a
  /// shuffled alignment of the a draws.
  Pairing pairing = Pairing::random;
};

/// (lambda x_a + (1 - lambda) x_b, lambda y_a + (1 - lambda) y_b).
template <typename XA, typename YA, typename XB, typename YB>
SoftSample mix_pair(const Eigen::MatrixBase<XA>& xa, const Eigen::MatrixBase<YA>& ya,
                    const Eigen::MatrixBase<XB>& xb, const Eigen::MatrixBase<YB>& yb, double lambda) {
  if (xa.size() != xb.size() || ya.size() != yb.size()) throw Error("mix_pair: dimension mismatch");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw Error("mix_pair: lambda outside [0, 1]");
  return {lambda * xa + (1.0 - lambda) * xb, lambda * ya + (1.0 - lambda) * yb};
}

inline SoftSample mix_pair(const SoftSample& a, const SoftSample& b, double lambda) {
  return mix_pair(a.features, a.target, b.features, b.target, lambda);
}

/// Union of labeled (one-hot), pseudo-labeled (sharpened soft labels) and,
/// for c_mixup only, generated (one-hot) data.
std::vector<SoftSample> training_union(std::span<const Sample> labeled,
                                       std::span<const PseudoLabeled> pseudo,
                                       std::span<const Sample> generated, int classes, MixMode mode);

/// pairs_per_round mixed items; empty when the union is empty.
std::vector<SoftSample> build_training_set(std::span<const Sample> labeled,
                                           std::span<const PseudoLabeled> pseudo,
                                           std::span<const Sample> generated, int classes,
                                           const MixConfig& cfg, Rng& rng);

}  // namespace semidfl
