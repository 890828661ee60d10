#include "semidfl/aggregation.hpp"

#include <algorithm>
#include <numeric>

namespace semidfl {

AggMode parse_agg_mode(std::string_view s) {
  if (s == "constant") return AggMode::constant;
  if (s == "adagen") return AggMode::adagen;
  if (s == "adatest") return AggMode::adatest;
  throw Error("unknown agg.mode '" + std::string(s) + "' (expected constant, adagen or adatest)");
}

std::string_view to_string(AggMode m) {
  switch (m) {
    case AggMode::constant: return "constant";
    case AggMode::adagen: return "adagen";
    case AggMode::adatest: return "adatest";
  }
  return "?";
}

MixingWeights adaptive_mixing(const Topology& topology, std::span<const std::optional<double>> accs) {
  if (static_cast<int>(accs.size()) != topology.size()) {
    throw Error("adaptive_mixing: one accuracy per node required");
  }
  const int n = topology.size();
  Matrix w = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    const auto g = topology.subgraph(i);
    const bool complete = std::all_of(g.begin(), g.end(),
                                      [&](int j) { return accs[static_cast<std::size_t>(j)].has_value(); });
    if (!complete) {
      for (int j : g) w(i, j) = 1.0 / static_cast<double>(g.size());
      continue;
    }
    Vector a(static_cast<Eigen::Index>(g.size()));
    for (std::size_t k = 0; k < g.size(); ++k) a(static_cast<Eigen::Index>(k)) = *accs[static_cast<std::size_t>(g[k])];
    const Vector row = adaptive_weights(a);
    for (std::size_t k = 0; k < g.size(); ++k) w(i, g[k]) = row(static_cast<Eigen::Index>(k));
  }
  return MixingWeights(topology, std::move(w));
}

std::optional<double> evaluate_for_weights(const Classifier& model, AggMode mode,
                                           std::span<const Sample> generated,
                                           std::span<const Sample> shared_test, int val_size,
                                           Rng& rng) {
  switch (mode) {
    case AggMode::constant:
      return std::nullopt;
    case AggMode::adatest:
      if (shared_test.empty()) return std::nullopt;
      return evaluate(model, shared_test);
    case AggMode::adagen: {
      if (generated.empty() || val_size < 1) return std::nullopt;
      std::vector<std::size_t> idx(generated.size());
      std::iota(idx.begin(), idx.end(), 0);
      const auto take = std::min(idx.size(), static_cast<std::size_t>(val_size));
      // Partial Fisher-Yates: the first `take` entries are a uniform subset.
      for (std::size_t k = 0; k < take; ++k) {
        std::uniform_int_distribution<std::size_t> pick(k, idx.size() - 1);
        std::swap(idx[k], idx[pick(rng)]);
      }
      std::vector<Sample> val;
      val.reserve(take);
      for (std::size_t k = 0; k < take; ++k) val.push_back(generated[idx[k]]);
      return evaluate(model, val);
    }
  }
  return std::nullopt;
}

}  // namespace semidfl
