#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace semidfl {

using Rng = std::mt19937_64;

/// What a random stream is used for. Part of the stream key so that two
/// consumers in the same client/round never share draws.
enum class Purpose : std::uint64_t {
  init = 1,
  dataset,
  partition,
  pseudo_label,
  diffusion_train,
  generate,
  mixup,
  classifier_train,
  validation,
  test_split,
};

std::uint64_t splitmix64(std::uint64_t x);

/// Order-sensitive hash of a key sequence.
std::uint64_t derive_seed(std::initializer_list<std::uint64_t> keys);

/// Independent stream keyed by (master, client, round, purpose).
Rng make_stream(std::uint64_t master, std::uint64_t client, std::uint64_t round,
                Purpose purpose);

double sample_beta(Rng& rng, double a, double b);

/// One Dirichlet(alpha, ..., alpha) draw of length k.
std::vector<double> sample_dirichlet(Rng& rng, double alpha, int k);

}  // namespace semidfl
