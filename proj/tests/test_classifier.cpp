#include "doctest.h"
#include "generators.hpp"
#include "oracles.hpp"

#include "semidfl/classifier.hpp"
#include "semidfl/data.hpp"

#include <cmath>
#include <numeric>

using namespace semidfl;

namespace {

Classifier with_values(Classifier m, const Vector& v) {
  m.set_params({m.params().layout, v});
  return m;
}

std::vector<SoftSample> random_batch(Rng& rng, int n, int dim, int classes) {
  std::vector<SoftSample> out;
  for (int k = 0; k < n; ++k) out.push_back({gen::vector(rng, dim), gen::simplex(rng, classes)});
  return out;
}

double loss_at(const Classifier& base, const Vector& v, std::span<const SoftSample> batch) {
  return loss_and_grad(with_values(base, v), batch).loss;
}

}  // namespace

TEST_CASE("default training hyper-parameters") {
  const TrainConfig cfg;
  CHECK(cfg.batch == 10);
  CHECK(cfg.lr == 0.05);
  CHECK(cfg.epochs == 25);
}

TEST_CASE("zero final layer gives a uniform prediction") {
  Classifier m({5, 7, 3}, 1);
  Vector v = m.params().values;
  m.layout().weight(v, 1).setZero();
  m.layout().bias(v, 1).setZero();
  m = with_values(m, v);
  Rng rng(1);
  const auto p = m.forward(gen::vector(rng, 5));
  for (int c = 0; c < 3; ++c) CHECK(p(c) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("single linear layer reproduces the logistic function") {
  Classifier m({2, 2}, 1);
  Vector v = m.params().values;
  m.layout().weight(v, 0).setIdentity();
  m.layout().bias(v, 0).setZero();
  m = with_values(m, v);
  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const Vector x = gen::vector(rng, 2, 3.0);
    const auto p = m.forward(x);
    CHECK(p(0) == doctest::Approx(oracle::logistic(x(0) - x(1))).epsilon(1e-12));
    CHECK(p(1) == doctest::Approx(oracle::logistic(x(1) - x(0))).epsilon(1e-12));
  }
}

TEST_CASE("forward rejects wrong dimensions") {
  Classifier m({3, 4, 2}, 1);
  CHECK_THROWS_AS(m.forward(Vector::Zero(2)), Error);
  CHECK_THROWS_AS(m.set_params({m.params().layout, Vector::Zero(3)}), Error);
  CHECK_THROWS_AS(m.set_params({"other", m.params().values}), Error);
}

TEST_CASE("property: predictions lie on the simplex") {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const int d = gen::uniform_int(rng, 1, 6);
    const int c = gen::uniform_int(rng, 2, 6);
    Classifier m({d, gen::uniform_int(rng, 1, 8), c}, rng());
    const auto p = m.forward(gen::vector(rng, d, 5.0));
    CHECK((p.array() >= 0.0).all());
    CHECK(p.sum() == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("loss examples") {
  Classifier uniform({4, 10}, 1);
  uniform = with_values(uniform, Vector::Zero(uniform.params().size()));
  std::vector<SoftSample> batch{{Vector{{0.3, -1.0, 2.0, 0.0}}, one_hot(3, 10)}};
  CHECK(loss_and_grad(uniform, batch).loss == doctest::Approx(std::log(10.0)).epsilon(1e-12));

  Classifier sure({2, 2}, 1);
  Vector v = sure.params().values;
  sure.layout().weight(v, 0) = 1000.0 * Matrix::Identity(2, 2);
  sure.layout().bias(v, 0).setZero();
  sure = with_values(sure, v);
  std::vector<SoftSample> hit{{Vector{{1.0, 0.0}}, one_hot(0, 2)}};
  const auto lg = loss_and_grad(sure, hit);
  CHECK(lg.loss < 1e-12);
  CHECK(lg.grad.values.cwiseAbs().maxCoeff() < 1e-12);

  CHECK_THROWS_AS(loss_and_grad(sure, std::vector<SoftSample>{}), Error);
}

TEST_CASE("gradient matches central differences on a 10-parameter model") {
  Classifier m({4, 2}, 4);
  REQUIRE(m.params().size() == 10);
  Rng rng(4);
  const auto batch = random_batch(rng, 6, 4, 2);
  const auto g = loss_and_grad(m, batch).grad.values;
  const auto fd = oracle::numeric_gradient(
      [&](const Vector& v) { return loss_at(m, v, batch); }, m.params().values);
  CHECK(oracle::relative_error(g, fd) < 1e-3);
}

TEST_CASE("gradient check on the default architecture") {
  // With ~1500 parameters a 1e-4 probe steps across some ReLU kinks, so the
  // finite-difference oracle uses a smaller step here.
  Classifier m({8, 32, 32, 4}, 5);
  Rng rng(5);
  const auto batch = random_batch(rng, 10, 8, 4);
  const auto g = loss_and_grad(m, batch).grad.values;
  const auto fd = oracle::numeric_gradient(
      [&](const Vector& v) { return loss_at(m, v, batch); }, m.params().values, 1e-5);
  CHECK(oracle::relative_error(g, fd) < 1e-3);
}

TEST_CASE("train_local identities") {
  Rng rng(6);
  Classifier m({4, 5, 3}, 6);
  const auto data = random_batch(rng, 20, 4, 3);
  TrainConfig none{0, 10, 0.05};
  CHECK(train_local(m, data, none, 1).params().values == m.params().values);
  TrainConfig frozen{10, 5, 0.0};
  CHECK(train_local(m, data, frozen, 1).params().values == m.params().values);
  TrainConfig some{10, 5, 0.05};
  CHECK(train_local(m, data, some, 1).params().values == train_local(m, data, some, 1).params().values);
  CHECK(train_local(m, data, some, 1).params().values != train_local(m, data, some, 2).params().values);
  CHECK_THROWS_AS(train_local(m, std::vector<SoftSample>{}, some, 1), Error);
}

TEST_CASE("50 SGD iterations halve the loss on a separable mixture") {
  DatasetSpec spec;
  spec.n = 400;
  spec.separation = 6.0;
  const auto soft = to_soft(make_toy_dataset(spec, 7), 4);
  Classifier m({8, 32, 32, 4}, 7);
  const double before = loss_and_grad(m, soft).loss;
  const auto trained = train_local(m, soft, {50, 10, 0.05}, 7);
  const double after = loss_and_grad(trained, soft).loss;
  MESSAGE("loss " << before << " -> " << after);
  CHECK(after <= 0.5 * before);
}

TEST_CASE("evaluate examples") {
  Classifier uniform({2, 2}, 1);
  uniform = with_values(uniform, Vector::Zero(uniform.params().size()));
  std::vector<Sample> balanced;
  for (int k = 0; k < 10; ++k) balanced.push_back({Vector{{0.1 * k, 1.0}}, k % 2});
  CHECK(evaluate(uniform, balanced) == 0.5);

  // Constant predictor of class 0 scored on class-1 samples.
  Classifier constant({2, 2}, 1);
  Vector v = Vector::Zero(constant.params().size());
  constant.layout().bias(v, 0)(0) = 5.0;
  constant = with_values(constant, v);
  std::vector<Sample> ones;
  for (int k = 0; k < 5; ++k) ones.push_back({Vector{{1.0 * k, -1.0}}, 1});
  CHECK(evaluate(constant, ones) == 0.0);
  CHECK_THROWS_AS(evaluate(constant, std::vector<Sample>{}), Error);
}

TEST_CASE("an over-fitted model memorizes its tiny training set") {
  DatasetSpec spec;
  spec.n = 12;
  spec.classes = 3;
  const auto tiny = make_toy_dataset(spec, 8);
  const auto trained = train_local(Classifier({8, 32, 32, 3}, 8), to_soft(tiny, 3), {2000, 12, 0.1}, 8);
  CHECK(evaluate(trained, tiny) == 1.0);
}

TEST_CASE("property: forward is batching-order invariant and evaluate permutation invariant") {
  Rng rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    Classifier m({4, 6, 3}, rng());
    std::vector<Sample> s;
    for (int k = 0; k < 15; ++k) s.push_back({gen::vector(rng, 4), gen::uniform_int(rng, 0, 2)});
    std::vector<std::size_t> perm(s.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<Sample> shuffled;
    for (auto k : perm) shuffled.push_back(s[k]);
    const Matrix a = m.forward_batch(stack_features(s));
    const Matrix b = m.forward_batch(stack_features(shuffled));
    for (std::size_t k = 0; k < perm.size(); ++k) {
      CHECK((a.col(static_cast<Eigen::Index>(perm[k])) - b.col(static_cast<Eigen::Index>(k))).cwiseAbs().maxCoeff() < 1e-15);
      CHECK((m.forward(s[perm[k]].features) - b.col(static_cast<Eigen::Index>(k))).cwiseAbs().maxCoeff() < 1e-12);
    }
    CHECK(evaluate(m, s) == evaluate(m, shuffled));
  }
}
