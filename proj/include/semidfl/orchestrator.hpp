#pragma once

#include "semidfl/aggregation.hpp"
#include "semidfl/classifier.hpp"
#include "semidfl/data.hpp"
#include "semidfl/diffusion.hpp"
#include "semidfl/mixup.hpp"
#include "semidfl/pseudolabel.hpp"
#include "semidfl/topology.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace semidfl {

/// semidfl runs the full pipeline (its ablations are expressed through
/// pl/mixup/agg modes). dfl_lb trains on labeled data only; dfl_ub treats
/// every sample as labeled.
enum class Method { semidfl, dfl_lb, dfl_ub };

Method parse_method(std::string_view s);
std::string_view to_string(Method m);

struct RunConfig {
  TopologySpec topology{"topo1", {}, {}};
  DatasetSpec dataset;
  double test_fraction = 0.2;
  double alpha = 0.1;
  double labeled_ratio = 0.01;
  AugmentConfig augment;

  std::vector<int> hidden{32, 32};
  TrainConfig train;
  DiffusionConfig diffusion;
  int warmup_rounds = 50;  // R
  int gen_per_period = 1000;
  int gen_period_rounds = 10;
  int val_size = 100;

  PlConfig pl;
  MixConfig mix{0.5, 0.5, MixMode::c_mixup, 0, Pairing::random};  // 0 pairs = epochs * batch
  AggMode agg = AggMode::adagen;

  int rounds = 500;  // T
  Method method = Method::semidfl;
  std::uint64_t seed = 0;
  int repeats = 1;
  int jobs = 1;

  int pairs_per_round() const {
    return mix.pairs_per_round > 0 ? mix.pairs_per_round : train.epochs * train.batch;
  }
};

/// Throws Error describing the first invalid field.
void validate(const RunConfig& cfg);

/// Named presets used by sweeps: the three methods plus the ablation switches
/// vanilla/apl/npl, l_mixup/c_mixup, constant/adagen/adatest (each applied on
/// top of semidfl).
void apply_variant(RunConfig& cfg, std::string_view name);
bool is_variant(std::string_view name);

struct ClientMetrics {
  int client = 0;
  double acc = 0.0;
  int pl_count = 0;
  std::optional<double> pl_precision;
  std::optional<double> a_i;
  int generated = 0;  // size of the client's current synthetic set
};

struct RoundMetrics {
  int round = 0;
  std::vector<ClientMetrics> clients;
  double mean_acc = 0.0;
  double std_acc = 0.0;  // population std over clients
  double disagreement = 0.0;
  bool regenerated = false;
};

using RoundObserver = std::function<void(const RoundMetrics&)>;

/// Executes the round loop for cfg.rounds rounds. Deterministic in cfg.seed
/// regardless of cfg.jobs.
std::vector<RoundMetrics> run(const RunConfig& cfg, const RoundObserver& observer = {});

struct SweepSpec {
  std::vector<double> alphas;
  std::vector<double> ratios;
  std::vector<std::string> methods;
  std::vector<std::uint64_t> seeds;
};

struct SweepRow {
  double alpha = 0.0;
  double labeled_ratio = 0.0;
  std::string method;
  int runs = 0;
  double mean_acc = 0.0;  // mean over seeds of the final-round client mean
  double std_acc = 0.0;   // population std of that quantity over seeds
  double mean_client_std = 0.0;
};

/// Empty axes fall back to the base config value (seeds: seed .. seed+repeats-1).
std::vector<SweepRow> run_matrix(const RunConfig& base, const SweepSpec& sweep);

}  // namespace semidfl
