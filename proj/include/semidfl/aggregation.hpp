#pragma once

#include "semidfl/classifier.hpp"
#include "semidfl/rng.hpp"
#include "semidfl/topology.hpp"

#include <optional>
#include <span>
#include <string_view>

namespace semidfl {

enum class AggMode { constant, adagen, adatest };

AggMode parse_agg_mode(std::string_view s);
std::string_view to_string(AggMode m);

/// Softmax of (a_j - mean a) over the sub-graph, in the order given.
template <typename Derived>
Vector adaptive_weights(const Eigen::MatrixBase<Derived>& accs) {
  if (accs.size() == 0) throw Error("adaptive_weights: no accuracies");
  const Vector centered = accs.array() - accs.mean();
  const Vector e = (centered.array() - centered.maxCoeff()).exp();
  return e / e.sum();
}

/// Row i gets adaptive_weights over G_i using accs[j]. Nodes whose sub-graph
/// lacks an accuracy fall back to uniform weights.
MixingWeights adaptive_mixing(const Topology& topology, std::span<const std::optional<double>> accs);

/// a_i for the weight computation. adagen: accuracy on val_size samples drawn
/// from the client's generated set; adatest: accuracy on shared_test.
/// Returns nullopt when the required set is unavailable (e.g. before warm-up)
/// or in constant mode.
std::optional<double> evaluate_for_weights(const Classifier& model, AggMode mode,
                                           std::span<const Sample> generated,
                                           std::span<const Sample> shared_test, int val_size,
                                           Rng& rng);

}  // namespace semidfl
