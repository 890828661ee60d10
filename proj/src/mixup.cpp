#include "semidfl/mixup.hpp"

#include <algorithm>

namespace semidfl {

MixMode parse_mix_mode(std::string_view s) {
  if (s == "l_mixup") return MixMode::l_mixup;
  if (s == "c_mixup") return MixMode::c_mixup;
  throw Error("unknown mixup.mode '" + std::string(s) + "' (expected l_mixup or c_mixup)");
}

std::string_view to_string(MixMode m) { return m == MixMode::l_mixup ? "l_mixup" : "c_mixup"; }

Pairing parse_pairing(std::string_view s) {
  if (s == "random") return Pairing::random;
  if (s == "shuffled") return Pairing::shuffled;
  throw Error("unknown mixup.pairing '" + std::string(s) + "'");
}

std::vector<SoftSample> training_union(std::span<const Sample> labeled,
                                       std::span<const PseudoLabeled> pseudo,
                                       std::span<const Sample> generated, int classes, MixMode mode) {
  std::vector<SoftSample> u;
  u.reserve(labeled.size() + pseudo.size() + generated.size());
  for (const auto& s : labeled) u.push_back({s.features, one_hot(s.label.value(), classes)});
  for (const auto& p : pseudo) u.push_back({p.features, p.target});
  if (mode == MixMode::c_mixup) {
    for (const auto& s : generated) u.push_back({s.features, one_hot(s.label.value(), classes)});
  }
  return u;
}

std::vector<SoftSample> build_training_set(std::span<const Sample> labeled,
                                           std::span<const PseudoLabeled> pseudo,
                                           std::span<const Sample> generated, int classes,
                                           const MixConfig& cfg, Rng& rng) {
  if (!(cfg.beta_a > 0.0 && cfg.beta_b > 0.0)) throw Error("mixup.beta parameters must be > 0");
  const auto u = training_union(labeled, pseudo, generated, classes, cfg.mode);
  std::vector<SoftSample> out;
  if (u.empty() || cfg.pairs_per_round <= 0) return out;

  const auto n = static_cast<std::size_t>(cfg.pairs_per_round);
  std::uniform_int_distribution<std::size_t> pick(0, u.size() - 1);
  std::vector<std::size_t> first(n);
  for (auto& a : first) a = pick(rng);
  std::vector<std::size_t> second(n);
  if (cfg.pairing == Pairing::shuffled) {
    second = first;
    std::shuffle(second.begin(), second.end(), rng);
  } else {
    for (auto& b : second) b = pick(rng);
  }
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double lambda = sample_beta(rng, cfg.beta_a, cfg.beta_b);
    out.push_back(mix_pair(u[first[k]], u[second[k]], lambda));
  }
  return out;
}

}  // namespace semidfl
