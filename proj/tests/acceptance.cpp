// Acceptance harness: one PASS/FAIL line per criterion.
// Usage: acceptance [criterion numbers...]   (default: all)

#include "generators.hpp"
#include "oracles.hpp"
#include "small_config.hpp"

#include "semidfl/aggregation.hpp"
#include "semidfl/classifier.hpp"
#include "semidfl/data.hpp"
#include "semidfl/diffusion.hpp"
#include "semidfl/mixup.hpp"
#include "semidfl/orchestrator.hpp"
#include "semidfl/pseudolabel.hpp"
#include "semidfl/report.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>

using namespace semidfl;

namespace {

// Pinned tolerances and budgets.
constexpr double kSharpenTol = 1e-9;
constexpr double kWeightTol = 1e-4;
constexpr double kFdStep = 1e-4;
constexpr double kFdRelTol = 1e-3;
constexpr int kFdConfigs = 20;
constexpr int kMaxFdParams = 50;
constexpr double kConsensusReduction = 1e3;
constexpr int kConsensusIters = 100;
constexpr int kOrderingRounds = 150;
constexpr double kSemiOverLb = 0.05;
constexpr double kNplOverVanilla = 0.03;
constexpr double kAdaGenSlack = 0.005;
constexpr double kAdaGenVsTest = 0.03;
constexpr int kSkewSeeds = 10;
const std::vector<std::uint64_t> kSeeds{1, 2, 3};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string sci(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

struct Outcome {
  bool pass = true;
  std::string detail;
  double extra_seconds = 0.0;  // runtime of shared runs computed elsewhere

  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    if (!detail.empty()) detail += "; ";
    detail += (ok ? "" : "!") + what;
  }
};

// ---------------------------------------------------------------- 1

Outcome equation_oracles() {
  Outcome o;
  const auto s = sharpen(Vector{{0.8, 0.2}}, 2.0);
  o.require(std::abs(s(0) - 16.0 / 17.0) <= kSharpenTol && std::abs(s(1) - 1.0 / 17.0) <= kSharpenTol,
            "sharpen=[" + fmt(s(0), 10) + "," + fmt(s(1), 10) + "]");

  const auto w = adaptive_weights(Vector{{0.9, 0.7}});
  o.require(std::abs(w(0) - 0.5498) <= kWeightTol && std::abs(w(1) - 0.4502) <= kWeightTol,
            "weights=[" + fmt(w(0)) + "," + fmt(w(1)) + "]");

  const QualifiedCounts own{{5, 10}};
  const std::vector<QualifiedCounts> hood{own};
  const double t = adaptive_threshold(own, hood, 0.95)(0);
  o.require(t == 0.475, "threshold=" + fmt(t, 6));

  const auto m = mix_pair(SoftSample{Vector{{0.0, 0.0}}, Vector{{1.0, 0.0}}},
                          SoftSample{Vector{{2.0, 4.0}}, Vector{{0.0, 1.0}}}, 0.5);
  o.require(m.features == Vector{{1.0, 2.0}} && m.target == Vector{{0.5, 0.5}}, "midpoint exact");
  return o;
}

// ---------------------------------------------------------------- 2

Outcome gradient_checks() {
  Outcome o;
  Rng rng(20240);
  double worst_clf = 0.0;
  double worst_diff = 0.0;
  int clf_done = 0;
  int diff_done = 0;
  while (clf_done < kFdConfigs) {
    const int d = gen::uniform_int(rng, 1, 5);
    const int c = gen::uniform_int(rng, 2, 4);
    std::vector<int> sizes{d};
    for (int l = gen::uniform_int(rng, 0, 2); l > 0; --l) sizes.push_back(gen::uniform_int(rng, 1, 5));
    sizes.push_back(c);
    if (MlpLayout(sizes).param_count() > kMaxFdParams) continue;
    // Random biases too: the zero-bias init can put a pre-activation exactly
    // on a ReLU kink, where central differences see the mean of both slopes.
    Classifier m(sizes, rng());
    m.set_params({m.params().layout, gen::vector(rng, m.params().size(), 0.5)});
    std::vector<SoftSample> batch;
    for (int k = gen::uniform_int(rng, 1, 8); k > 0; --k) batch.push_back({gen::vector(rng, d), gen::simplex(rng, c)});
    const auto g = loss_and_grad(m, batch).grad.values;
    const auto fd = oracle::numeric_gradient(
        [&](const Vector& v) {
          Classifier probe = m;
          probe.set_params({m.params().layout, v});
          return loss_and_grad(probe, batch).loss;
        },
        m.params().values, kFdStep);
    worst_clf = std::max(worst_clf, oracle::relative_error(g, fd));
    ++clf_done;
  }
  while (diff_done < kFdConfigs) {
    const int d = gen::uniform_int(rng, 1, 3);
    const int c = gen::uniform_int(rng, 1, 3);
    DiffusionConfig cfg;
    cfg.steps = gen::uniform_int(rng, 5, 50);
    cfg.time_embed = 2 * gen::uniform_int(rng, 0, 2);
    cfg.hidden = {gen::uniform_int(rng, 1, 4)};
    DiffusionModel m(d, c, cfg, rng());
    if (m.params().size() > kMaxFdParams) continue;
    m.set_params({m.params().layout, gen::vector(rng, m.params().size(), 0.5)});
    std::vector<Sample> batch;
    for (int k = gen::uniform_int(rng, 1, 6); k > 0; --k) batch.push_back({gen::vector(rng, d), gen::uniform_int(rng, 0, c - 1)});
    const auto draw = draw_noise(m, batch, 0.2, rng);
    const auto g = diffusion_loss_and_grad(m, batch, draw).grad.values;
    const auto fd = oracle::numeric_gradient(
        [&](const Vector& v) {
          DiffusionModel probe = m;
          probe.set_params({m.params().layout, v});
          return diffusion_loss_and_grad(probe, batch, draw).loss;
        },
        m.params().values, kFdStep);
    worst_diff = std::max(worst_diff, oracle::relative_error(g, fd));
    ++diff_done;
  }
  o.require(worst_clf <= kFdRelTol, "classifier worst rel err " + sci(worst_clf) + " over " + std::to_string(clf_done));
  o.require(worst_diff <= kFdRelTol, "diffusion worst rel err " + sci(worst_diff) + " over " + std::to_string(diff_done));
  return o;
}

// ---------------------------------------------------------------- 3

Outcome consensus_convergence() {
  Outcome o;
  const auto t = preset_topology("fig1a");
  const auto w = uniform_weights(t);
  Rng rng(3);
  auto x = gen::params(rng, t.size(), 256);
  const double start = max_disagreement(x);
  for (int k = 0; k < kConsensusIters; ++k) x = consensus_update(x, w);
  const double end = max_disagreement(x);
  const double ratio = end > 0.0 ? start / end : INFINITY;
  o.require(ratio >= kConsensusReduction, "reduction " + fmt(ratio, 1) + "x (" + fmt(start) + " -> " + sci(end) + ")");
  return o;
}

// ---------------------------------------------------------------- 4-6

struct RunCache {
  std::map<std::pair<std::string, std::uint64_t>, double> final_acc;
  std::map<std::pair<std::string, std::uint64_t>, double> seconds;

  double get(const std::string& method, std::uint64_t seed) {
    const auto key = std::make_pair(method, seed);
    if (auto it = final_acc.find(key); it != final_acc.end()) return it->second;
    RunConfig cfg;  // gauss_mixture C=4 d=8 n=2000, topo1, alpha=0.1, r=1%
    cfg.rounds = kOrderingRounds;
    cfg.seed = seed;
    apply_variant(cfg, method);
    const auto t0 = Clock::now();
    const double acc = run(cfg).back().mean_acc;
    seconds[key] = seconds_since(t0);
    std::cerr << "  run " << method << " seed " << seed << ": final mean acc " << fmt(acc) << " ("
              << fmt(seconds[key], 1) << " s)\n";
    return final_acc[key] = acc;
  }

  std::vector<double> all(const std::string& method) {
    std::vector<double> v;
    for (auto s : kSeeds) v.push_back(get(method, s));
    return v;
  }

  double cost(const std::vector<std::string>& methods) const {
    double total = 0.0;
    for (const auto& m : methods) {
      for (auto s : kSeeds) total += seconds.at({m, s});
    }
    return total;
  }
};

double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }

double pop_std(const std::vector<double>& v) {
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / v.size());
}

std::string list(const std::vector<double>& v) {
  std::string s = "[";
  for (std::size_t k = 0; k < v.size(); ++k) s += (k ? "," : "") + fmt(v[k], 3);
  return s + "]";
}

Outcome method_ordering(RunCache& cache) {
  Outcome o;
  const auto semi = cache.all("semidfl");
  const auto lb = cache.all("dfl_lb");
  const auto vanilla = cache.all("vanilla");
  o.require(mean(semi) - mean(lb) >= kSemiOverLb,
            "SemiDFL " + fmt(mean(semi), 3) + " vs DFL-LB " + fmt(mean(lb), 3) + " (need +" + fmt(kSemiOverLb, 2) + ")");
  o.require(mean(semi) - mean(vanilla) >= kNplOverVanilla,
            "NPL " + fmt(mean(semi), 3) + " vs Vanilla " + fmt(mean(vanilla), 3) + " (need +" + fmt(kNplOverVanilla, 2) + ")");
  o.require(pop_std(semi) < pop_std(vanilla),
            "std NPL " + fmt(pop_std(semi)) + " < Vanilla " + fmt(pop_std(vanilla)));
  o.extra_seconds = cache.cost({"semidfl", "dfl_lb", "vanilla"});
  return o;
}

Outcome cmixup_ablation(RunCache& cache) {
  Outcome o;
  const auto c = cache.all("semidfl");
  const auto l = cache.all("l_mixup");
  int wins = 0;
  for (std::size_t k = 0; k < c.size(); ++k) wins += c[k] >= l[k];
  o.require(wins == static_cast<int>(c.size()),
            "C-MixUp " + list(c) + " >= L-MixUp " + list(l) + " on " + std::to_string(wins) + "/3 seeds");
  o.extra_seconds = cache.cost({"semidfl", "l_mixup"});
  return o;
}

Outcome adagen_vs_constant(RunCache& cache) {
  Outcome o;
  const auto gen_acc = cache.all("semidfl");
  const auto constant = cache.all("constant");
  const auto test = cache.all("adatest");
  int ok = 0;
  for (std::size_t k = 0; k < gen_acc.size(); ++k) ok += gen_acc[k] >= constant[k] - kAdaGenSlack;
  o.require(ok == static_cast<int>(gen_acc.size()),
            "AdaGen " + list(gen_acc) + " >= Constant " + list(constant) + " - 0.005 on " + std::to_string(ok) + "/3 seeds");
  const double gap = std::abs(mean(gen_acc) - mean(test));
  o.require(gap <= kAdaGenVsTest, "|AdaGen - AdaTest| = " + fmt(gap, 3) + " (AdaTest " + fmt(mean(test), 3) + ")");
  o.extra_seconds = cache.cost({"semidfl", "constant", "adatest"});
  return o;
}

// ---------------------------------------------------------------- 7

std::string csv_of(const std::vector<RoundMetrics>& h) {
  std::ostringstream s;
  write_metrics_csv(s, h);
  return s.str();
}

Outcome invariant_suite() {
  Outcome o;
  Rng rng(77);

  bool simplex = true;
  for (int trial = 0; trial < 200; ++trial) {
    const int c = gen::uniform_int(rng, 2, 6);
    const Classifier m({3, 6, c}, rng());
    const auto p = m.forward(gen::vector(rng, 3, 4.0));
    const auto s = sharpen(gen::simplex(rng, c), gen::uniform(rng, 1.1, 4.0));
    Vector a(c);
    for (int k = 0; k < c; ++k) a(k) = gen::uniform(rng, 0.0, 1.0);
    const auto w = adaptive_weights(a);
    const auto mixed = mix_pair(SoftSample{gen::vector(rng, 2), gen::simplex(rng, c)},
                                SoftSample{gen::vector(rng, 2), gen::simplex(rng, c)}, sample_beta(rng, 0.5, 0.5));
    for (const Vector* v : {&p, &s, &w, &mixed.target}) {
      simplex = simplex && (v->array() >= 0.0).all() && std::abs(v->sum() - 1.0) <= 1e-9;
    }
  }
  o.require(simplex, "simplex");

  bool conserved = true;
  const auto data = make_toy_dataset(DatasetSpec{}, 5);
  for (const auto& name : preset_names()) {
    for (double alpha : {100.0, 1.0, 0.1}) {
      const auto p = partition(data, preset_topology(name), {alpha, 0.01, rng()}, 4);
      std::multiset<std::pair<double, int>> before;
      std::multiset<std::pair<double, int>> after;
      for (const auto& s : data) before.insert({s.features.sum() + 7.0 * s.features(0), *s.label});
      for (const auto& c : p.clients) {
        for (const auto& s : c.labeled) after.insert({s.features.sum() + 7.0 * s.features(0), *s.label});
        for (std::size_t k = 0; k < c.unlabeled.size(); ++k) {
          after.insert({c.unlabeled[k].features.sum() + 7.0 * c.unlabeled[k].features(0), c.unlabeled_truth[k]});
        }
      }
      conserved = conserved && before == after;
    }
  }
  o.require(conserved, "partition conservation");

  bool bounded = true;
  bool sound = true;
  for (int trial = 0; trial < 200; ++trial) {
    const int c = gen::uniform_int(rng, 2, 5);
    std::vector<QualifiedCounts> hood(static_cast<std::size_t>(gen::uniform_int(rng, 1, 4)));
    for (auto& q : hood) {
      for (int k = 0; k < c; ++k) q.sigma.push_back(gen::uniform_int(rng, 0, 9));
    }
    const auto t = adaptive_threshold(hood[0], hood, 0.95);
    bounded = bounded && (t.array() >= 0.0).all() && (t.array() <= 0.95).all();
    std::vector<Sample> u;
    std::vector<SoftLabel> preds;
    for (int n = 0; n < 20; ++n) {
      u.push_back({gen::vector(rng, 2), std::nullopt});
      preds.push_back(sharpen(gen::simplex(rng, c), 2.0));
    }
    for (const auto& item : filter_pseudo(u, preds, t)) sound = sound && item.target.maxCoeff() > t(item.label);
  }
  o.require(bounded, "threshold bounds");
  o.require(sound, "filter soundness");

  auto cfg = small_semidfl_config();
  const auto first = run(cfg);
  const bool same = csv_of(first) == csv_of(run(cfg));
  cfg.jobs = 4;
  const bool parallel_same = csv_of(first) == csv_of(run(cfg));
  o.require(same && parallel_same, "byte-identical reruns");

  bool gated = true;
  for (const auto& m : first) {
    const bool due = m.round >= cfg.warmup_rounds && (m.round - cfg.warmup_rounds) % cfg.gen_period_rounds == 0;
    gated = gated && m.regenerated == due;
    for (const auto& c : m.clients) {
      if (m.round < cfg.warmup_rounds) gated = gated && c.generated == 0 && !c.a_i;
    }
  }
  o.require(gated, "warm-up gating");
  return o;
}

// ---------------------------------------------------------------- 8

Outcome noniid_monotonicity() {
  Outcome o;
  const auto t = preset_topology("topo1");
  std::vector<double> d;
  for (double alpha : {100.0, 1.0, 0.1}) {
    double total = 0.0;
    for (int seed = 0; seed < kSkewSeeds; ++seed) {
      const auto data = make_toy_dataset(DatasetSpec{}, static_cast<std::uint64_t>(seed));
      total += mean_class_distance(partition(data, t, {alpha, 0.01, static_cast<std::uint64_t>(seed)}, 4).clients, 4);
    }
    d.push_back(total / kSkewSeeds);
  }
  o.require(d[0] < d[1] && d[1] < d[2], "TV distance alpha 100/1/0.1 = " + list(d));
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  for (int k = 1; k < argc; ++k) only.insert(std::atoi(argv[k]));
  RunCache cache;

  struct Criterion {
    int id;
    const char* name;
    double budget_seconds;
    std::function<Outcome()> check;
  };
  const std::vector<Criterion> criteria{
      {1, "equation unit oracles", 1.0, equation_oracles},
      {2, "gradient checks", 10.0, gradient_checks},
      {3, "consensus convergence", 1.0, consensus_convergence},
      {4, "method ordering", 600.0, [&] { return method_ordering(cache); }},
      {5, "C-MixUp ablation", 600.0, [&] { return cmixup_ablation(cache); }},
      {6, "AdaGen vs Constant", 600.0, [&] { return adagen_vs_constant(cache); }},
      {7, "invariant suite", 30.0, invariant_suite},
      {8, "non-IID monotonicity", 5.0, noniid_monotonicity},
  };

  int failed = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && !only.count(c.id)) continue;
    const auto t0 = Clock::now();
    Outcome out;
    try {
      out = c.check();
    } catch (const std::exception& e) {
      out.pass = false;
      out.detail = std::string("exception: ") + e.what();
    }
    // Shared runs count toward every criterion that needs them.
    const double elapsed = std::max(seconds_since(t0), out.extra_seconds);
    const bool in_budget = elapsed <= c.budget_seconds;
    const bool pass = out.pass && in_budget;
    failed += !pass;
    std::cout << (pass ? "PASS" : "FAIL") << " [" << c.id << "] " << c.name << ": " << out.detail << " ("
              << fmt(elapsed, 2) << " s, budget " << fmt(c.budget_seconds, 0) << " s"
              << (in_budget ? "" : ", OVER BUDGET") << ")" << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
