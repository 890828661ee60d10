#include "semidfl/orchestrator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>

namespace semidfl {

Method parse_method(std::string_view s) {
  if (s == "semidfl") return Method::semidfl;
  if (s == "dfl_lb") return Method::dfl_lb;
  if (s == "dfl_ub") return Method::dfl_ub;
  throw Error("unknown method '" + std::string(s) + "' (expected semidfl, dfl_lb or dfl_ub)");
}

std::string_view to_string(Method m) {
  switch (m) {
    case Method::semidfl: return "semidfl";
    case Method::dfl_lb: return "dfl_lb";
    case Method::dfl_ub: return "dfl_ub";
  }
  return "?";
}

void validate(const RunConfig& cfg) {
  auto fail = [](const std::string& msg) { throw Error(msg); };
  try {
    load_topology(cfg.topology);
  } catch (const Error& e) {
    fail(std::string("topology: ") + e.what());
  }
  if (cfg.rounds < 1) fail("rounds must be >= 1");
  if (cfg.warmup_rounds < 1 || cfg.warmup_rounds > cfg.rounds) {
    fail("diffusion.warmup_R must lie in [1, rounds]");
  }
  if (cfg.dataset.kind != DatasetKind::mini_digits) {
    if (cfg.dataset.classes < 2) fail("dataset.classes must be >= 2");
    if (cfg.dataset.dim < 1) fail("dataset.dim must be >= 1");
    if (cfg.dataset.n < cfg.dataset.classes) fail("dataset.n must be >= dataset.classes");
  } else if (cfg.dataset.path.empty()) {
    fail("dataset.path is required for mini_digits");
  }
  if (!(cfg.test_fraction > 0.0 && cfg.test_fraction < 1.0)) fail("test_fraction must lie in (0, 1)");
  if (!(cfg.alpha > 0.0)) fail("partition.alpha must be > 0");
  if (!(cfg.labeled_ratio > 0.0 && cfg.labeled_ratio <= 1.0)) fail("partition.r must lie in (0, 1]");
  if (cfg.augment.sigma < 0.0) fail("augment.sigma must be >= 0");
  for (int h : cfg.hidden) {
    if (h < 1) fail("model.hidden_sizes entries must be positive");
  }
  if (cfg.train.epochs < 0 || cfg.train.batch < 1 || !(cfg.train.lr >= 0.0)) {
    fail("train.epochs >= 0, train.batch >= 1 and train.lr >= 0 required");
  }
  const auto& d = cfg.diffusion;
  if (d.steps < 1) fail("diffusion.H must be >= 1");
  if (d.sample_steps < 1 || d.sample_steps > d.steps) fail("diffusion.sample_steps must lie in [1, H]");
  if (!(d.p_uncond >= 0.0 && d.p_uncond <= 1.0)) fail("diffusion.p_uncond must lie in [0, 1]");
  if (d.iters < 0 || d.batch < 1) fail("diffusion.iters >= 0 and diffusion.batch >= 1 required");
  NoiseSchedule::linear(d.steps, d.beta_start, d.beta_end);
  if (cfg.gen_per_period < 1 || cfg.gen_period_rounds < 1) {
    fail("diffusion.gen_per_period and diffusion.gen_period_rounds must be >= 1");
  }
  if (cfg.val_size < 1) fail("diffusion.val_size must be >= 1");
  if (cfg.pl.K < 1) fail("pl.K must be >= 1");
  if (!(cfg.pl.Z > 1.0)) fail("pl.Z must be > 1");
  if (!(cfg.pl.tau > 0.0 && cfg.pl.tau <= 1.0)) fail("pl.tau must lie in (0, 1]");
  if (!(cfg.mix.beta_a > 0.0 && cfg.mix.beta_b > 0.0)) fail("mixup.beta entries must be > 0");
  if (cfg.repeats < 1) fail("repeats must be >= 1");
  if (cfg.jobs < 1) fail("jobs must be >= 1");
}

namespace {

struct Variant {
  std::string_view name;
  void (*apply)(RunConfig&);
};

constexpr Variant kVariants[] = {
    {"semidfl", [](RunConfig& c) { c.method = Method::semidfl; }},
    {"dfl_lb", [](RunConfig& c) { c.method = Method::dfl_lb; }},
    {"dfl_ub", [](RunConfig& c) { c.method = Method::dfl_ub; }},
    {"vanilla", [](RunConfig& c) { c.method = Method::semidfl; c.pl.mode = PlMode::vanilla; }},
    {"apl", [](RunConfig& c) { c.method = Method::semidfl; c.pl.mode = PlMode::apl; }},
    {"npl", [](RunConfig& c) { c.method = Method::semidfl; c.pl.mode = PlMode::npl; }},
    {"l_mixup", [](RunConfig& c) { c.method = Method::semidfl; c.mix.mode = MixMode::l_mixup; }},
    {"c_mixup", [](RunConfig& c) { c.method = Method::semidfl; c.mix.mode = MixMode::c_mixup; }},
    {"constant", [](RunConfig& c) { c.method = Method::semidfl; c.agg = AggMode::constant; }},
    {"adagen", [](RunConfig& c) { c.method = Method::semidfl; c.agg = AggMode::adagen; }},
    {"adatest", [](RunConfig& c) { c.method = Method::semidfl; c.agg = AggMode::adatest; }},
};

}  // namespace

bool is_variant(std::string_view name) {
  return std::any_of(std::begin(kVariants), std::end(kVariants),
                     [&](const Variant& v) { return v.name == name; });
}

void apply_variant(RunConfig& cfg, std::string_view name) {
  for (const auto& v : kVariants) {
    if (v.name == name) {
      v.apply(cfg);
      return;
    }
  }
  throw Error("unknown method/variant '" + std::string(name) + "'");
}

namespace {

/// Runs fn(i) for i in [0, n) on up to `jobs` threads. fn must only touch
/// state owned by index i.
template <typename Fn>
void parallel_for(int n, int jobs, Fn&& fn) {
  if (jobs <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::jthread> workers;
  const int count = std::min(jobs, n);
  for (int w = 0; w < count; ++w) {
    workers.emplace_back([&] {
      for (int i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  workers.clear();
  if (failure) std::rethrow_exception(failure);
}

struct Client {
  Role role = Role::labeled;
  ClientDataset data;
  Classifier phi;
  std::optional<DiffusionModel> psi;
  AdamState psi_opt;
  std::vector<Sample> generated;

  // Per-round scratch.
  std::vector<SoftLabel> preds;
  QualifiedCounts sigma;
  PseudoLabeledSet pseudo;
  std::optional<double> a_i;
};

std::uint64_t stream_seed(std::uint64_t master, int client, int round, Purpose p) {
  return derive_seed({master, static_cast<std::uint64_t>(client), static_cast<std::uint64_t>(round),
                      static_cast<std::uint64_t>(p)});
}

double population_std(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size()));
}

}  // namespace

std::vector<RoundMetrics> run(const RunConfig& cfg, const RoundObserver& observer) {
  validate(cfg);
  const Topology topo = load_topology(cfg.topology);
  const int n_clients = topo.size();

  int classes = cfg.dataset.classes;
  auto all = make_toy_dataset(cfg.dataset, derive_seed({cfg.seed, 0xda7aULL}));
  if (cfg.dataset.kind == DatasetKind::mini_digits) {
    classes = 0;
    for (const auto& s : all) classes = std::max(classes, *s.label + 1);
  }
  const int dim = static_cast<int>(all.front().features.size());
  const auto split = split_train_test(std::move(all), cfg.test_fraction, cfg.seed);
  auto parts = partition(split.train, topo,
                         {cfg.alpha, cfg.labeled_ratio, derive_seed({cfg.seed, 0x9a27ULL})}, classes);

  std::vector<int> sizes{dim};
  sizes.insert(sizes.end(), cfg.hidden.begin(), cfg.hidden.end());
  sizes.push_back(classes);
  const Classifier initial_phi(sizes, derive_seed({cfg.seed, 0x1a17ULL}));
  const bool semi = cfg.method == Method::semidfl;
  std::optional<DiffusionModel> initial_psi;
  if (semi) initial_psi.emplace(dim, classes, cfg.diffusion, derive_seed({cfg.seed, 0xd1ffULL}));

  std::vector<Client> clients;
  clients.reserve(static_cast<std::size_t>(n_clients));
  for (int i = 0; i < n_clients; ++i) {
    Client c{topo.role(i), std::move(parts.clients[static_cast<std::size_t>(i)]), initial_phi,
             initial_psi, {}, {}, {}, {}, {}, {}};
    if (cfg.method == Method::dfl_ub) {
      for (std::size_t k = 0; k < c.data.unlabeled.size(); ++k) {
        c.data.labeled.push_back({c.data.unlabeled[k].features, c.data.unlabeled_truth[k]});
      }
      c.data.unlabeled.clear();
      c.data.unlabeled_truth.clear();
    }
    clients.push_back(std::move(c));
  }

  PlConfig pl = cfg.pl;
  pl.augment = cfg.augment;
  MixConfig mix = cfg.mix;
  mix.pairs_per_round = cfg.pairs_per_round();
  const int per_class = std::max(1, cfg.gen_per_period / classes);

  std::vector<RoundMetrics> history;
  history.reserve(static_cast<std::size_t>(cfg.rounds));

  for (int t = 1; t <= cfg.rounds; ++t) {
    const bool regenerate = semi && t >= cfg.warmup_rounds &&
                            (t - cfg.warmup_rounds) % cfg.gen_period_rounds == 0;

    // Phase 1: predictions on Z_i and qualified counts, from round-t models.
    if (semi) {
      parallel_for(n_clients, cfg.jobs, [&](int i) {
        auto& c = clients[static_cast<std::size_t>(i)];
        c.preds.clear();
        if (!c.data.unlabeled.empty()) {
          const auto g = topo.subgraph(i);
          std::vector<const Classifier*> models;
          int own = 0;
          for (std::size_t k = 0; k < g.size(); ++k) {
            if (g[k] == i) own = static_cast<int>(k);
            models.push_back(&clients[static_cast<std::size_t>(g[k])].phi);
          }
          c.preds = predict_unlabeled(c.data.unlabeled, models, own, pl,
                                      stream_seed(cfg.seed, i, t, Purpose::pseudo_label));
        }
        c.sigma = count_qualified(c.preds, pl.tau, classes);
      });
    }

    // Phase 2: local work (pseudo set, diffusion, generation, MixUp, classifier).
    parallel_for(n_clients, cfg.jobs, [&](int i) {
      auto& c = clients[static_cast<std::size_t>(i)];
      c.pseudo.clear();
      c.a_i.reset();
      const auto& labeled = c.data.labeled;

      if (!semi) {
        if (cfg.method == Method::dfl_lb || cfg.method == Method::dfl_ub) {
          const auto soft = to_soft(labeled, classes);
          if (!soft.empty()) {
            c.phi = train_local(std::move(c.phi), soft, cfg.train,
                                stream_seed(cfg.seed, i, t, Purpose::classifier_train));
          }
        }
        return;
      }

      Vector thresholds;
      switch (pl.mode) {
        case PlMode::vanilla:
          thresholds = Vector::Constant(classes, pl.tau);
          break;
        case PlMode::apl:
          thresholds = adaptive_threshold(c.sigma, std::span(&c.sigma, 1), pl.tau);
          break;
        case PlMode::npl: {
          std::vector<QualifiedCounts> hood;
          for (int j : topo.subgraph(i)) hood.push_back(clients[static_cast<std::size_t>(j)].sigma);
          thresholds = adaptive_threshold(c.sigma, hood, pl.tau);
          break;
        }
      }
      c.pseudo = filter_pseudo(c.data.unlabeled, c.preds, thresholds);

      std::vector<Sample> diffusion_data(labeled);
      for (const auto& p : c.pseudo) diffusion_data.push_back({p.features, p.label});
      train_diffusion(*c.psi, diffusion_data, cfg.diffusion, c.psi_opt,
                      stream_seed(cfg.seed, i, t, Purpose::diffusion_train));

      if (regenerate) {
        c.generated = generate_dataset(*c.psi, per_class, cfg.diffusion.guidance,
                                       cfg.diffusion.sample_steps,
                                       stream_seed(cfg.seed, i, t, Purpose::generate));
      }

      Rng mix_rng(stream_seed(cfg.seed, i, t, Purpose::mixup));
      const auto train_set = build_training_set(labeled, c.pseudo, c.generated, classes, mix, mix_rng);
      if (!train_set.empty()) {
        c.phi = train_local(std::move(c.phi), train_set, cfg.train,
                            stream_seed(cfg.seed, i, t, Purpose::classifier_train));
      }

      Rng val_rng(stream_seed(cfg.seed, i, t, Purpose::validation));
      c.a_i = evaluate_for_weights(c.phi, cfg.agg, c.generated, split.test, cfg.val_size, val_rng);
    });

    // Phase 3: weights and simultaneous consensus.
    std::vector<std::optional<double>> accs;
    for (const auto& c : clients) accs.push_back(c.a_i);
    const MixingWeights w = (semi && cfg.agg != AggMode::constant) ? adaptive_mixing(topo, accs)
                                                                   : uniform_weights(topo);
    std::vector<ParamVector> phis;
    for (const auto& c : clients) phis.push_back(c.phi.params());
    auto next_phi = consensus_update(phis, w);
    for (int i = 0; i < n_clients; ++i) {
      clients[static_cast<std::size_t>(i)].phi.set_params(std::move(next_phi[static_cast<std::size_t>(i)]));
    }
    if (semi) {
      std::vector<ParamVector> psis;
      for (const auto& c : clients) psis.push_back(c.psi->params());
      auto next_psi = consensus_update(psis, w);
      for (int i = 0; i < n_clients; ++i) {
        clients[static_cast<std::size_t>(i)].psi->set_params(std::move(next_psi[static_cast<std::size_t>(i)]));
      }
    }

    RoundMetrics rm;
    rm.round = t;
    rm.regenerated = regenerate;
    rm.clients.resize(static_cast<std::size_t>(n_clients));
    parallel_for(n_clients, cfg.jobs, [&](int i) {
      const auto& c = clients[static_cast<std::size_t>(i)];
      auto& cm = rm.clients[static_cast<std::size_t>(i)];
      cm.client = i;
      cm.acc = evaluate(c.phi, split.test);
      cm.pl_count = static_cast<int>(c.pseudo.size());
      if (!c.pseudo.empty()) {
        int correct = 0;
        for (const auto& p : c.pseudo) {
          if (p.label == c.data.unlabeled_truth[p.source]) ++correct;
        }
        cm.pl_precision = static_cast<double>(correct) / static_cast<double>(c.pseudo.size());
      }
      cm.a_i = c.a_i;
      cm.generated = static_cast<int>(c.generated.size());
    });
    std::vector<double> accs_now;
    for (const auto& cm : rm.clients) accs_now.push_back(cm.acc);
    rm.mean_acc = std::accumulate(accs_now.begin(), accs_now.end(), 0.0) / n_clients;
    rm.std_acc = population_std(accs_now);
    std::vector<ParamVector> now;
    for (const auto& c : clients) now.push_back(c.phi.params());
    rm.disagreement = max_disagreement(now);
    if (observer) observer(rm);
    history.push_back(std::move(rm));
  }
  return history;
}

std::vector<SweepRow> run_matrix(const RunConfig& base, const SweepSpec& sweep) {
  auto alphas = sweep.alphas.empty() ? std::vector<double>{base.alpha} : sweep.alphas;
  auto ratios = sweep.ratios.empty() ? std::vector<double>{base.labeled_ratio} : sweep.ratios;
  auto methods = sweep.methods.empty() ? std::vector<std::string>{std::string(to_string(base.method))}
                                       : sweep.methods;
  auto seeds = sweep.seeds;
  if (seeds.empty()) {
    for (int k = 0; k < base.repeats; ++k) seeds.push_back(base.seed + static_cast<std::uint64_t>(k));
  }
  for (const auto& m : methods) {
    if (!is_variant(m)) throw Error("unknown method/variant '" + m + "' in sweep");
  }

  std::vector<SweepRow> rows;
  for (double alpha : alphas) {
    for (double r : ratios) {
      for (const auto& m : methods) {
        std::vector<double> finals;
        std::vector<double> client_stds;
        for (auto s : seeds) {
          RunConfig cfg = base;
          cfg.alpha = alpha;
          cfg.labeled_ratio = r;
          cfg.seed = s;
          apply_variant(cfg, m);
          const auto hist = run(cfg);
          finals.push_back(hist.back().mean_acc);
          client_stds.push_back(hist.back().std_acc);
        }
        SweepRow row;
        row.alpha = alpha;
        row.labeled_ratio = r;
        row.method = m;
        row.runs = static_cast<int>(finals.size());
        row.mean_acc = std::accumulate(finals.begin(), finals.end(), 0.0) / row.runs;
        row.std_acc = population_std(finals);
        row.mean_client_std = std::accumulate(client_stds.begin(), client_stds.end(), 0.0) / row.runs;
        rows.push_back(std::move(row));
      }
    }
  }
  return rows;
}

}  // namespace semidfl
