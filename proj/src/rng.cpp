#include "semidfl/rng.hpp"

#include <numeric>

namespace semidfl {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::initializer_list<std::uint64_t> keys) {
  std::uint64_t h = 0x5bd1e9955bd1e995ULL;
  for (auto k : keys) h = splitmix64(h ^ splitmix64(k));
  return h;
}

Rng make_stream(std::uint64_t master, std::uint64_t client, std::uint64_t round,
                Purpose purpose) {
  return Rng(derive_seed({master, client, round, static_cast<std::uint64_t>(purpose)}));
}

double sample_beta(Rng& rng, double a, double b) {
  std::gamma_distribution<double> ga(a, 1.0);
  std::gamma_distribution<double> gb(b, 1.0);
  const double x = ga(rng);
  const double y = gb(rng);
  if (x + y <= 0.0) return 0.5;
  return x / (x + y);
}

std::vector<double> sample_dirichlet(Rng& rng, double alpha, int k) {
  std::gamma_distribution<double> g(alpha, 1.0);
  std::vector<double> p(static_cast<std::size_t>(k));
  for (auto& v : p) v = g(rng);
  const double total = std::accumulate(p.begin(), p.end(), 0.0);
  if (total <= 0.0) {
    // Every gamma draw underflowed (tiny alpha): all mass on one category.
    std::uniform_int_distribution<int> pick(0, k - 1);
    std::fill(p.begin(), p.end(), 0.0);
    p[static_cast<std::size_t>(pick(rng))] = 1.0;
    return p;
  }
  for (auto& v : p) v /= total;
  return p;
}

}  // namespace semidfl
