#include "semidfl/pseudolabel.hpp"

#include <algorithm>

namespace semidfl {

PlMode parse_pl_mode(std::string_view s) {
  if (s == "vanilla") return PlMode::vanilla;
  if (s == "apl") return PlMode::apl;
  if (s == "npl") return PlMode::npl;
  throw Error("unknown pl.mode '" + std::string(s) + "' (expected vanilla, apl or npl)");
}

std::string_view to_string(PlMode m) {
  switch (m) {
    case PlMode::vanilla: return "vanilla";
    case PlMode::apl: return "apl";
    case PlMode::npl: return "npl";
  }
  return "?";
}

namespace {

void check_k(const PlConfig& cfg) {
  if (cfg.K < 1) throw Error("pl.K must be >= 1");
}

}  // namespace

Prediction predict_avg(const Sample& x, const Classifier& own, const PlConfig& cfg,
                       std::uint64_t seed) {
  check_k(cfg);
  Prediction sum = Prediction::Zero(own.num_classes());
  for (int k = 1; k <= cfg.K; ++k) sum += own.forward(augment(x, k, seed, cfg.augment).features);
  return sum / cfg.K;
}

Prediction predict_avg_neighborhood(const Sample& x, std::span<const Classifier* const> models,
                                    int own, std::span<const int> draws, const PlConfig& cfg,
                                    std::uint64_t seed) {
  check_k(cfg);
  if (models.empty()) throw Error("neighborhood prediction needs at least one model");
  if (static_cast<int>(draws.size()) != cfg.K - 1) throw Error("need K-1 neighbor draws");
  const auto& self = *models[static_cast<std::size_t>(own)];
  Prediction sum = self.forward(augment(x, 1, seed, cfg.augment).features);
  for (int k = 2; k <= cfg.K; ++k) {
    const auto& m = *models[static_cast<std::size_t>(draws[static_cast<std::size_t>(k - 2)])];
    sum += m.forward(augment(x, k, seed, cfg.augment).features);
  }
  return sum / cfg.K;
}

Prediction predict_avg_neighborhood(const Sample& x, std::span<const Classifier* const> models,
                                    int own, const PlConfig& cfg, std::uint64_t seed) {
  check_k(cfg);
  if (models.empty()) throw Error("neighborhood prediction needs at least one model");
  Rng rng(derive_seed({seed, static_cast<std::uint64_t>(Purpose::pseudo_label)}));
  std::uniform_int_distribution<int> pick(0, static_cast<int>(models.size()) - 1);
  std::vector<int> draws(static_cast<std::size_t>(cfg.K - 1));
  for (auto& d : draws) d = pick(rng);
  return predict_avg_neighborhood(x, models, own, draws, cfg, seed);
}

int QualifiedCounts::max() const {
  return sigma.empty() ? 0 : *std::max_element(sigma.begin(), sigma.end());
}

int QualifiedCounts::total() const {
  int t = 0;
  for (int s : sigma) t += s;
  return t;
}

QualifiedCounts count_qualified(std::span<const SoftLabel> preds, double tau, int classes) {
  if (!(tau > 0.0 && tau <= 1.0)) throw Error("tau must lie in (0, 1]");
  QualifiedCounts q{std::vector<int>(static_cast<std::size_t>(classes), 0)};
  for (const auto& p : preds) {
    const int c = argmax(p);
    if (p(c) > tau) ++q.sigma[static_cast<std::size_t>(c)];
  }
  return q;
}

Vector adaptive_threshold(const QualifiedCounts& own, std::span<const QualifiedCounts> neighborhood,
                          double tau) {
  int denom = 0;
  for (const auto& q : neighborhood) denom = std::max(denom, q.max());
  const auto classes = static_cast<Eigen::Index>(own.sigma.size());
  if (denom == 0) return Vector::Constant(classes, tau);
  Vector t(classes);
  for (Eigen::Index c = 0; c < classes; ++c) {
    t(c) = static_cast<double>(own.sigma[static_cast<std::size_t>(c)]) / denom * tau;
  }
  return t;
}

std::vector<SoftLabel> predict_unlabeled(std::span<const Sample> unlabeled,
                                         std::span<const Classifier* const> models, int own,
                                         const PlConfig& cfg, std::uint64_t seed) {
  std::vector<SoftLabel> out;
  out.reserve(unlabeled.size());
  for (std::size_t n = 0; n < unlabeled.size(); ++n) {
    const std::uint64_t s = derive_seed({seed, n});
    const Prediction p = cfg.mode == PlMode::npl
                             ? predict_avg_neighborhood(unlabeled[n], models, own, cfg, s)
                             : predict_avg(unlabeled[n], *models[static_cast<std::size_t>(own)], cfg, s);
    out.push_back(sharpen(p, cfg.Z));
  }
  return out;
}

PseudoLabeledSet filter_pseudo(std::span<const Sample> unlabeled, std::span<const SoftLabel> preds,
                               const Vector& thresholds) {
  if (unlabeled.size() != preds.size()) throw Error("filter_pseudo: prediction count mismatch");
  PseudoLabeledSet out;
  for (std::size_t n = 0; n < preds.size(); ++n) {
    const int c = argmax(preds[n]);
    if (preds[n](c) > thresholds(c)) out.push_back({unlabeled[n].features, preds[n], c, n});
  }
  return out;
}

PseudoLabeledSet build_pseudo_set(std::span<const Sample> unlabeled,
                                  std::span<const Classifier* const> models, int own,
                                  const Vector& thresholds, const PlConfig& cfg,
                                  std::uint64_t seed) {
  const auto preds = predict_unlabeled(unlabeled, models, own, cfg, seed);
  return filter_pseudo(unlabeled, preds, thresholds);
}

}  // namespace semidfl
