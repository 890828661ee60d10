#include "doctest.h"
#include "generators.hpp"

#include "semidfl/aggregation.hpp"
#include "semidfl/data.hpp"
#include "semidfl/diffusion.hpp"

#include <cmath>

using namespace semidfl;

TEST_CASE("adaptive weight examples") {
  const auto eq = adaptive_weights(Vector{{0.6, 0.6, 0.6}});
  for (int k = 0; k < 3; ++k) CHECK(eq(k) == doctest::Approx(1.0 / 3.0));
  const auto w = adaptive_weights(Vector{{0.9, 0.7}});
  const double e = std::exp(0.1) / (std::exp(0.1) + std::exp(-0.1));
  CHECK(std::abs(w(0) - e) < 1e-12);
  CHECK(std::abs(w(0) - 0.5498) < 1e-4);
  CHECK(std::abs(w(1) - 0.4502) < 1e-4);
  CHECK_THROWS_AS(adaptive_weights(Vector(0)), Error);
}

TEST_CASE("property: adaptive weights are a positive, shift-invariant, monotone simplex") {
  Rng rng(1);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = gen::uniform_int(rng, 1, 8);
    Vector a(n);
    for (int k = 0; k < n; ++k) a(k) = gen::uniform(rng, 0.0, 1.0);
    const auto w = adaptive_weights(a);
    CHECK(std::abs(w.sum() - 1.0) < 1e-9);
    CHECK((w.array() > 0.0).all());
    const double delta = gen::uniform(rng, -0.5, 0.5);
    CHECK((adaptive_weights(Vector(a.array() + delta)) - w).cwiseAbs().maxCoeff() < 1e-12);
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < n; ++k) {
        if (a(j) > a(k)) CHECK(w(j) > w(k));
      }
    }
  }
}

TEST_CASE("adaptive mixing rows follow each sub-graph") {
  const auto t = preset_topology("topo1");
  std::vector<std::optional<double>> accs;
  for (int i = 0; i < t.size(); ++i) accs.push_back(0.5 + 0.05 * i);
  const auto w = adaptive_mixing(t, accs);
  for (int i = 0; i < t.size(); ++i) {
    const auto g = t.subgraph(i);
    Vector a(static_cast<Eigen::Index>(g.size()));
    for (std::size_t k = 0; k < g.size(); ++k) a(static_cast<Eigen::Index>(k)) = *accs[static_cast<std::size_t>(g[k])];
    const auto row = adaptive_weights(a);
    for (std::size_t k = 0; k < g.size(); ++k) CHECK(w(i, g[k]) == doctest::Approx(row(static_cast<Eigen::Index>(k))));
    CHECK(w.matrix().row(i).sum() == doctest::Approx(1.0));
  }
}

TEST_CASE("missing accuracies fall back to uniform rows") {
  const auto t = preset_topology("topo3");
  std::vector<std::optional<double>> accs(10, 0.7);
  accs[4].reset();
  const auto w = adaptive_mixing(t, accs);
  const auto u = uniform_weights(t);
  for (int i : {3, 4, 5}) CHECK(w.matrix().row(i) == u.matrix().row(i));
  std::vector<std::optional<double>> none(10);
  CHECK(adaptive_mixing(t, none).matrix() == u.matrix());
  CHECK_THROWS_AS(adaptive_mixing(t, std::vector<std::optional<double>>(3, 0.5)), Error);
}

TEST_CASE("equal accuracies reproduce uniform weights") {
  for (const auto& name : preset_names()) {
    const auto t = preset_topology(name);
    std::vector<std::optional<double>> accs(static_cast<std::size_t>(t.size()), 0.42);
    CHECK((adaptive_mixing(t, accs).matrix() - uniform_weights(t).matrix()).cwiseAbs().maxCoeff() < 1e-15);
  }
}

TEST_CASE("evaluate_for_weights") {
  DatasetSpec spec;
  spec.n = 60;
  spec.classes = 3;
  spec.separation = 8.0;
  const auto data = make_toy_dataset(spec, 2);
  const auto model = train_local(Classifier({8, 32, 3}, 2), to_soft(data, 3), {1500, 20, 0.1}, 2);
  REQUIRE(evaluate(model, data) == 1.0);
  Rng rng(3);
  CHECK(evaluate_for_weights(model, AggMode::constant, data, data, 100, rng) == std::nullopt);
  CHECK(evaluate_for_weights(model, AggMode::adagen, {}, data, 100, rng) == std::nullopt);
  CHECK(evaluate_for_weights(model, AggMode::adatest, data, {}, 100, rng) == std::nullopt);
  CHECK(*evaluate_for_weights(model, AggMode::adagen, data, {}, 100, rng) == 1.0);
  CHECK(*evaluate_for_weights(model, AggMode::adagen, data, {}, 10, rng) == 1.0);
  CHECK(*evaluate_for_weights(model, AggMode::adatest, {}, data, 100, rng) == 1.0);
}

TEST_CASE("validation subset of size val_size") {
  // A model that is right on exactly half of a balanced 2-class set: the
  // adagen estimate must be a multiple of 1/val_size.
  Classifier constant({1, 2}, 1);
  Vector v = Vector::Zero(constant.params().size());
  constant.layout().bias(v, 0)(0) = 1.0;
  constant.set_params({constant.params().layout, v});
  std::vector<Sample> gen_set;
  for (int k = 0; k < 200; ++k) gen_set.push_back({Vector{{0.0}}, k % 2});
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const double a = *evaluate_for_weights(constant, AggMode::adagen, gen_set, {}, 7, rng);
    CHECK(std::abs(a * 7.0 - std::round(a * 7.0)) < 1e-12);
  }
}

TEST_CASE("adagen and adatest agree on a well-trained model") {
  double gap = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    DatasetSpec spec;
    spec.n = 800;
    const auto split = split_train_test(make_toy_dataset(spec, seed), 0.25, seed);
    const auto model = train_local(Classifier({8, 32, 32, 4}, seed), to_soft(split.train, 4), {600, 10, 0.05}, seed);
    DiffusionConfig cfg;
    cfg.iters = 2000;
    DiffusionModel psi(8, 4, cfg, seed);
    AdamState opt;
    train_diffusion(psi, split.train, cfg, opt, seed);
    const auto generated = generate_dataset(psi, 250, cfg.guidance, cfg.sample_steps, seed);
    Rng rng(seed);
    const double gen_acc = *evaluate_for_weights(model, AggMode::adagen, generated, split.test, 100, rng);
    const double test_acc = *evaluate_for_weights(model, AggMode::adatest, generated, split.test, 100, rng);
    gap += std::abs(gen_acc - test_acc) / 5.0;
  }
  MESSAGE("mean |adagen - adatest| " << gap);
  CHECK(gap < 0.15);
}

TEST_CASE("aggregation mode names") {
  CHECK(parse_agg_mode("adagen") == AggMode::adagen);
  CHECK(to_string(AggMode::adatest) == "adatest");
  CHECK_THROWS_AS(parse_agg_mode("median"), Error);
}
