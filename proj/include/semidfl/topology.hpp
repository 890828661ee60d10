#pragma once

#include "semidfl/types.hpp"

#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace semidfl {

/// L: labeled only, U: unlabeled only, M: both.
enum class Role { labeled, unlabeled, mixed };

char role_letter(Role r);
Role parse_role(std::string_view s);

using Edge = std::pair<int, int>;

/// Undirected, connected communication graph. Immutable once built.
class Topology {
 public:
  Topology(std::vector<Role> roles, const std::vector<Edge>& edges);

  int size() const { return static_cast<int>(roles_.size()); }
  Role role(int i) const { return roles_.at(static_cast<std::size_t>(i)); }
  const std::vector<Role>& roles() const { return roles_; }

  /// Neighbors of i, ascending, excluding i.
  std::span<const int> neighbors(int i) const;
  /// G_i = {i} ∪ neighbors(i), ascending.
  std::span<const int> subgraph(int i) const;

  bool adjacent(int i, int j) const;
  int degree(int i) const { return static_cast<int>(neighbors(i).size()); }
  int count(Role r) const;
  std::vector<Edge> edges() const;

 private:
  std::vector<Role> roles_;
  std::vector<std::vector<int>> neighbors_;
  std::vector<std::vector<int>> subgraphs_;
};

/// Topology section of the run config.
struct TopologySpec {
  std::string preset;            // non-empty selects a built-in graph
  std::vector<Role> roles;       // used when preset is empty
  std::vector<Edge> edges;
};

Topology load_topology(const TopologySpec& spec);
Topology preset_topology(std::string_view name);
std::vector<std::string> preset_names();
std::string preset_description(std::string_view name);

/// Row-stochastic weights supported on each node's sub-graph.
class MixingWeights {
 public:
  /// Validates support (zero outside G_i), non-negativity and row sums.
  MixingWeights(const Topology& topology, Matrix weights);

  int size() const { return static_cast<int>(weights_.rows()); }
  double operator()(int i, int j) const { return weights_(i, j); }
  const Matrix& matrix() const { return weights_; }
  /// Non-zero support of row i, ascending.
  std::span<const int> support(int i) const;

 private:
  Matrix weights_;
  std::vector<std::vector<int>> support_;
};

/// w_ij = 1/|G_i| for j in G_i.
MixingWeights uniform_weights(const Topology& topology);

/// output_i = sum_j w_ij locals_j, evaluated against the unmodified inputs
/// (synchronous exchange). Summation runs over ascending j.
std::vector<ParamVector> consensus_update(std::span<const ParamVector> locals,
                                          const MixingWeights& w);

/// max over pairs (i, j) of ||locals_i - locals_j||_inf.
double max_disagreement(std::span<const ParamVector> locals);

}  // namespace semidfl
