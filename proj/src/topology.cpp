#include "semidfl/topology.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

namespace semidfl {

char role_letter(Role r) {
  switch (r) {
    case Role::labeled: return 'L';
    case Role::unlabeled: return 'U';
    case Role::mixed: return 'M';
  }
  return '?';
}

Role parse_role(std::string_view s) {
  if (s == "L" || s == "l") return Role::labeled;
  if (s == "U" || s == "u") return Role::unlabeled;
  if (s == "M" || s == "m") return Role::mixed;
  throw Error("unknown role label '" + std::string(s) + "' (expected L, U or M)");
}

Topology::Topology(std::vector<Role> roles, const std::vector<Edge>& edges)
    : roles_(std::move(roles)) {
  const int n = size();
  if (n < 1) throw Error("topology needs at least one node");
  neighbors_.resize(static_cast<std::size_t>(n));
  for (auto [a, b] : edges) {
    if (a < 0 || b < 0 || a >= n || b >= n) {
      throw Error("edge (" + std::to_string(a) + "," + std::to_string(b) +
                  ") references an unknown node");
    }
    if (a == b) throw Error("self-loop on node " + std::to_string(a));
    neighbors_[static_cast<std::size_t>(a)].push_back(b);
    neighbors_[static_cast<std::size_t>(b)].push_back(a);
  }
  for (auto& nb : neighbors_) {
    std::sort(nb.begin(), nb.end());
    nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
  }

  std::vector<bool> seen(static_cast<std::size_t>(n), false);
  std::queue<int> frontier;
  frontier.push(0);
  seen[0] = true;
  int reached = 1;
  while (!frontier.empty()) {
    const int u = frontier.front();
    frontier.pop();
    for (int v : neighbors_[static_cast<std::size_t>(u)]) {
      if (!seen[static_cast<std::size_t>(v)]) {
        seen[static_cast<std::size_t>(v)] = true;
        ++reached;
        frontier.push(v);
      }
    }
  }
  if (reached != n) throw Error("topology is disconnected");

  subgraphs_.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    auto& g = subgraphs_[static_cast<std::size_t>(i)];
    g = neighbors_[static_cast<std::size_t>(i)];
    g.insert(std::lower_bound(g.begin(), g.end(), i), i);
  }
}

std::span<const int> Topology::neighbors(int i) const {
  return neighbors_.at(static_cast<std::size_t>(i));
}

std::span<const int> Topology::subgraph(int i) const {
  return subgraphs_.at(static_cast<std::size_t>(i));
}

bool Topology::adjacent(int i, int j) const {
  auto nb = neighbors(i);
  return std::binary_search(nb.begin(), nb.end(), j);
}

int Topology::count(Role r) const {
  return static_cast<int>(std::count(roles_.begin(), roles_.end(), r));
}

std::vector<Edge> Topology::edges() const {
  std::vector<Edge> out;
  for (int i = 0; i < size(); ++i) {
    for (int j : neighbors(i)) {
      if (i < j) out.emplace_back(i, j);
    }
  }
  return out;
}

namespace {

constexpr Role L = Role::labeled;
constexpr Role U = Role::unlabeled;
constexpr Role M = Role::mixed;

struct Preset {
  std::string_view name;
  std::string_view description;
  std::vector<Role> roles;
  std::vector<Edge> edges;
};

const std::vector<Preset>& presets() {
  static const std::vector<Preset> table = {
      {"fig1a",
       "10 clients (2 L, 3 M, 5 U), meshed; labeled clients reach unlabeled ones "
       "through mixed clients and direct links",
       {L, L, M, M, M, U, U, U, U, U},
       {{0, 2}, {0, 5}, {0, 6}, {1, 3}, {1, 7}, {1, 8}, {2, 3}, {3, 4},
        {4, 9}, {2, 5}, {4, 8}, {6, 9}, {5, 6}, {7, 8}}},
      {"topo1",
       "10 clients: one labeled hub, three mixed clients, six unlabeled leaves",
       {L, M, M, M, U, U, U, U, U, U},
       {{0, 1}, {0, 2}, {0, 3}, {1, 4}, {1, 5}, {2, 6}, {2, 7}, {3, 8},
        {3, 9}, {4, 5}, {6, 7}, {8, 9}, {5, 6}, {7, 8}}},
      {"topo2",
       "10 clients: two connected labeled clients, each linked to three "
       "unlabeled clients and one mixed client",
       {L, L, U, U, U, M, U, U, U, M},
       {{0, 1}, {0, 2}, {0, 3}, {0, 4}, {0, 5}, {1, 6}, {1, 7}, {1, 8}, {1, 9}}},
      {"topo3",
       "10-client ring: 3 L, 4 U, 3 M, labeled clients separated by unlabeled "
       "and mixed clients",
       {L, U, M, L, U, M, L, U, M, U},
       {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {5, 6}, {6, 7}, {7, 8},
        {8, 9}, {9, 0}}},
  };
  return table;
}

const Preset& find_preset(std::string_view name) {
  for (const auto& p : presets()) {
    if (p.name == name) return p;
  }
  throw Error("unknown topology preset '" + std::string(name) + "'");
}

}  // namespace

Topology preset_topology(std::string_view name) {
  const auto& p = find_preset(name);
  return Topology(p.roles, p.edges);
}

std::vector<std::string> preset_names() {
  std::vector<std::string> names;
  for (const auto& p : presets()) names.emplace_back(p.name);
  return names;
}

std::string preset_description(std::string_view name) {
  return std::string(find_preset(name).description);
}

Topology load_topology(const TopologySpec& spec) {
  if (!spec.preset.empty()) return preset_topology(spec.preset);
  return Topology(spec.roles, spec.edges);
}

MixingWeights::MixingWeights(const Topology& topology, Matrix weights)
    : weights_(std::move(weights)) {
  const int n = topology.size();
  if (weights_.rows() != n || weights_.cols() != n) {
    throw Error("mixing weights do not match the topology size");
  }
  support_.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    double sum = 0.0;
    for (int j = 0; j < n; ++j) {
      const double w = weights_(i, j);
      if (!(w >= 0.0) || w > 1.0 + 1e-12) {
        throw Error("mixing weight w(" + std::to_string(i) + "," + std::to_string(j) +
                    ") outside [0,1]");
      }
      if (w == 0.0) continue;
      if (i != j && !topology.adjacent(i, j)) {
        throw Error("mixing weight outside the sub-graph of node " + std::to_string(i));
      }
      support_[static_cast<std::size_t>(i)].push_back(j);
      sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      throw Error("mixing weights of node " + std::to_string(i) + " are not row-stochastic");
    }
  }
}

std::span<const int> MixingWeights::support(int i) const {
  return support_.at(static_cast<std::size_t>(i));
}

MixingWeights uniform_weights(const Topology& topology) {
  const int n = topology.size();
  Matrix w = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    auto g = topology.subgraph(i);
    const double v = 1.0 / static_cast<double>(g.size());
    for (int j : g) w(i, j) = v;
  }
  return MixingWeights(topology, std::move(w));
}

std::vector<ParamVector> consensus_update(std::span<const ParamVector> locals,
                                          const MixingWeights& w) {
  if (static_cast<int>(locals.size()) != w.size()) {
    throw Error("consensus: " + std::to_string(locals.size()) + " parameter vectors for " +
                std::to_string(w.size()) + " weight rows");
  }
  for (const auto& p : locals) {
    if (!p.combinable_with(locals.front())) {
      throw Error("consensus: layout mismatch ('" + p.layout + "' vs '" +
                  locals.front().layout + "')");
    }
  }
  std::vector<ParamVector> out;
  out.reserve(locals.size());
  for (int i = 0; i < w.size(); ++i) {
    ParamVector next{locals.front().layout, Vector::Zero(locals.front().size())};
    for (int j : w.support(i)) next.values += w(i, j) * locals[static_cast<std::size_t>(j)].values;
    out.push_back(std::move(next));
  }
  return out;
}

double max_disagreement(std::span<const ParamVector> locals) {
  double worst = 0.0;
  for (std::size_t i = 0; i < locals.size(); ++i) {
    for (std::size_t j = i + 1; j < locals.size(); ++j) {
      worst = std::max(worst, (locals[i].values - locals[j].values).lpNorm<Eigen::Infinity>());
    }
  }
  return worst;
}

}  // namespace semidfl
