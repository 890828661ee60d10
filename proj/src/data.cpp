#include "semidfl/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace semidfl {

DatasetKind parse_dataset_kind(std::string_view s) {
  if (s == "gauss_mixture") return DatasetKind::gauss_mixture;
  if (s == "rings") return DatasetKind::rings;
  if (s == "mini_digits") return DatasetKind::mini_digits;
  throw Error("unknown dataset kind '" + std::string(s) + "'");
}

std::string_view to_string(DatasetKind k) {
  switch (k) {
    case DatasetKind::gauss_mixture: return "gauss_mixture";
    case DatasetKind::rings: return "rings";
    case DatasetKind::mini_digits: return "mini_digits";
  }
  return "?";
}

namespace {

std::vector<int> balanced_labels(int n, int classes) {
  std::vector<int> labels;
  labels.reserve(static_cast<std::size_t>(n));
  for (int c = 0; c < classes; ++c) {
    const int count = n / classes + (c < n % classes ? 1 : 0);
    labels.insert(labels.end(), static_cast<std::size_t>(count), c);
  }
  return labels;
}

Vector standard_normal(Rng& rng, int dim) {
  std::normal_distribution<double> normal;
  Vector v(dim);
  for (int i = 0; i < dim; ++i) v(i) = normal(rng);
  return v;
}

/// Class means with all pairwise distances >= separation (exactly equal when
/// classes <= dim, via a random orthonormal frame).
/// Centers the features and divides by one global scale so the mean squared
/// coordinate is 1. A single scalar keeps every distance ratio intact.
void standardize(std::vector<Sample>& samples) {
  Vector mean = Vector::Zero(samples.front().features.size());
  for (const auto& s : samples) mean += s.features;
  mean /= static_cast<double>(samples.size());
  double ss = 0.0;
  for (auto& s : samples) {
    s.features -= mean;
    ss += s.features.squaredNorm();
  }
  const double rms = std::sqrt(ss / static_cast<double>(samples.size() * mean.size()));
  if (rms > 0.0) {
    for (auto& s : samples) s.features /= rms;
  }
}

Matrix class_means(Rng& rng, int classes, int dim, double separation) {
  Matrix means(dim, classes);
  if (classes <= dim) {
    Matrix g(dim, dim);
    for (int j = 0; j < dim; ++j) g.col(j) = standard_normal(rng, dim);
    const Matrix q = Eigen::HouseholderQR<Matrix>(g).householderQ();
    means = q.leftCols(classes) * (separation / std::sqrt(2.0));
  } else {
    for (int c = 0; c < classes; ++c) means.col(c) = standard_normal(rng, dim);
    double closest = std::numeric_limits<double>::infinity();
    for (int a = 0; a < classes; ++a) {
      for (int b = a + 1; b < classes; ++b) {
        closest = std::min(closest, (means.col(a) - means.col(b)).norm());
      }
    }
    means *= separation / closest;
  }
  return means;
}

}  // namespace

std::vector<Sample> make_toy_dataset(const DatasetSpec& spec, std::uint64_t seed) {
  if (spec.kind == DatasetKind::mini_digits) {
    if (spec.path.empty()) throw Error("mini_digits requires dataset.path");
    int classes = 0;
    auto samples = read_dataset_file(spec.path, &classes);
    if (spec.classes > 0 && classes != spec.classes) {
      throw Error("dataset file declares C=" + std::to_string(classes) + " but config asks for " +
                  std::to_string(spec.classes));
    }
    Rng rng(derive_seed({seed, static_cast<std::uint64_t>(Purpose::dataset)}));
    std::shuffle(samples.begin(), samples.end(), rng);
    if (spec.n > 0 && static_cast<std::size_t>(spec.n) < samples.size()) {
      samples.resize(static_cast<std::size_t>(spec.n));
    }
    return samples;
  }

  if (spec.classes < 1 || spec.dim < 1) throw Error("dataset needs classes >= 1 and dim >= 1");
  if (spec.n < spec.classes) throw Error("dataset.n must be at least dataset.classes");

  Rng rng(derive_seed({seed, static_cast<std::uint64_t>(Purpose::dataset)}));
  auto labels = balanced_labels(spec.n, spec.classes);
  std::vector<Sample> out;
  out.reserve(labels.size());

  if (spec.kind == DatasetKind::gauss_mixture) {
    const Matrix means = class_means(rng, spec.classes, spec.dim, spec.separation);
    for (int c : labels) out.push_back({means.col(c) + standard_normal(rng, spec.dim), c});
  } else {
    if (spec.dim < 2) throw Error("rings needs dim >= 2");
    std::uniform_real_distribution<double> angle(0.0, 2.0 * M_PI);
    std::normal_distribution<double> normal;
    for (int c : labels) {
      const double theta = angle(rng);
      const double radius = (c + 1) + spec.noise * normal(rng);
      Vector x(spec.dim);
      x(0) = radius * std::cos(theta);
      x(1) = radius * std::sin(theta);
      for (int i = 2; i < spec.dim; ++i) x(i) = spec.noise * normal(rng);
      out.push_back({std::move(x), c});
    }
  }
  standardize(out);
  std::shuffle(out.begin(), out.end(), rng);
  return out;
}

std::vector<Sample> read_dataset_file(const std::filesystem::path& path, int* classes_out) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open dataset file " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw Error(path.string() + ": empty dataset file");
  int dim = 0;
  int classes = 0;
  if (std::sscanf(line.c_str(), "d=%d,C=%d", &dim, &classes) != 2 || dim < 1 || classes < 1) {
    throw Error(path.string() + ":1: expected header 'd=<dim>,C=<classes>'");
  }
  std::vector<Sample> samples;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<double> fields;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        fields.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw Error(path.string() + ":" + std::to_string(lineno) + ": bad number '" + cell + "'");
      }
    }
    if (static_cast<int>(fields.size()) != dim + 1) {
      throw Error(path.string() + ":" + std::to_string(lineno) + ": expected " +
                  std::to_string(dim + 1) + " fields");
    }
    const int label = static_cast<int>(fields.back());
    if (label < 0 || label >= classes || label != fields.back()) {
      throw Error(path.string() + ":" + std::to_string(lineno) + ": label out of range");
    }
    samples.push_back({Eigen::Map<const Vector>(fields.data(), dim), label});
  }
  if (classes_out) *classes_out = classes;
  return samples;
}

void write_dataset_file(const std::filesystem::path& path, std::span<const Sample> samples,
                        int classes) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write dataset file " + path.string());
  const auto dim = samples.empty() ? 0 : samples.front().features.size();
  out << "d=" << dim << ",C=" << classes << '\n';
  out.precision(17);
  for (const auto& s : samples) {
    for (Eigen::Index i = 0; i < s.features.size(); ++i) out << s.features(i) << ',';
    out << s.label.value_or(-1) << '\n';
  }
}

TrainTestSplit split_train_test(std::vector<Sample> samples, double test_fraction,
                                std::uint64_t seed) {
  Rng rng(derive_seed({seed, static_cast<std::uint64_t>(Purpose::test_split)}));
  std::shuffle(samples.begin(), samples.end(), rng);
  const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(samples.size())));
  TrainTestSplit split;
  split.test.assign(samples.begin(), samples.begin() + static_cast<std::ptrdiff_t>(n_test));
  split.train.assign(samples.begin() + static_cast<std::ptrdiff_t>(n_test), samples.end());
  return split;
}

namespace {

/// Splits `items` over `owners` with per-owner shares `p` using cumulative cut
/// points, so counts always sum to items.size().
void scatter(std::span<const int> items, std::span<const int> owners, const std::vector<double>& p,
             std::vector<std::vector<int>>& buckets) {
  const double m = static_cast<double>(items.size());
  double cumulative = 0.0;
  std::size_t begin = 0;
  for (std::size_t k = 0; k < owners.size(); ++k) {
    cumulative += p[k];
    std::size_t end = k + 1 == owners.size()
                          ? items.size()
                          : std::min(items.size(), static_cast<std::size_t>(std::llround(cumulative * m)));
    end = std::max(end, begin);
    auto& bucket = buckets[static_cast<std::size_t>(owners[k])];
    bucket.insert(bucket.end(), items.begin() + static_cast<std::ptrdiff_t>(begin),
                  items.begin() + static_cast<std::ptrdiff_t>(end));
    begin = end;
  }
}

}  // namespace

Partition partition(std::span<const Sample> dataset, const Topology& topology,
                    const PartitionSpec& spec, int classes) {
  if (!(spec.alpha > 0.0)) throw Error("partition.alpha must be > 0");
  if (!(spec.labeled_ratio > 0.0 && spec.labeled_ratio <= 1.0)) {
    throw Error("partition.r must lie in (0, 1]");
  }
  const int n = static_cast<int>(dataset.size());
  std::vector<std::vector<int>> by_class(static_cast<std::size_t>(classes));
  for (int idx = 0; idx < n; ++idx) {
    const auto& s = dataset[static_cast<std::size_t>(idx)];
    if (!s.label || *s.label < 0 || *s.label >= classes) {
      throw Error("partition needs every sample labeled within [0, C)");
    }
    by_class[static_cast<std::size_t>(*s.label)].push_back(idx);
  }
  for (int c = 0; c < classes; ++c) {
    if (by_class[static_cast<std::size_t>(c)].empty()) {
      throw Error("dataset does not cover class " + std::to_string(c));
    }
  }

  Rng rng(derive_seed({spec.seed, static_cast<std::uint64_t>(Purpose::partition)}));
  for (auto& idxs : by_class) std::shuffle(idxs.begin(), idxs.end(), rng);

  // Stratified labeled quota, largest remainder to reach exactly round(r * n).
  const auto total_labeled = static_cast<int>(std::llround(spec.labeled_ratio * n));
  std::vector<int> quota(static_cast<std::size_t>(classes));
  std::vector<std::pair<double, int>> remainders;
  int assigned = 0;
  for (int c = 0; c < classes; ++c) {
    const double exact = spec.labeled_ratio * static_cast<double>(by_class[static_cast<std::size_t>(c)].size());
    quota[static_cast<std::size_t>(c)] = static_cast<int>(std::floor(exact));
    assigned += quota[static_cast<std::size_t>(c)];
    remainders.emplace_back(-(exact - std::floor(exact)), c);
  }
  std::sort(remainders.begin(), remainders.end());
  for (int k = 0; assigned < total_labeled; ++k, ++assigned) {
    ++quota[static_cast<std::size_t>(remainders[static_cast<std::size_t>(k) % remainders.size()].second)];
  }

  std::vector<int> labeled_owners;
  std::vector<int> unlabeled_owners;
  for (int i = 0; i < topology.size(); ++i) {
    if (topology.role(i) != Role::unlabeled) labeled_owners.push_back(i);
    if (topology.role(i) != Role::labeled) unlabeled_owners.push_back(i);
  }

  Partition result;
  const auto clients = static_cast<std::size_t>(topology.size());
  std::vector<std::vector<int>> labeled_idx(clients);
  std::vector<std::vector<int>> unlabeled_idx(clients);
  std::vector<int> orphan_unlabeled;

  for (int c = 0; c < classes; ++c) {
    const auto& idxs = by_class[static_cast<std::size_t>(c)];
    const auto q = static_cast<std::size_t>(quota[static_cast<std::size_t>(c)]);
    std::span<const int> lab(idxs.data(), q);
    std::span<const int> unl(idxs.data() + q, idxs.size() - q);
    if (!labeled_owners.empty()) {
      scatter(lab, labeled_owners, sample_dirichlet(rng, spec.alpha, static_cast<int>(labeled_owners.size())),
              labeled_idx);
    }
    if (!unlabeled_owners.empty()) {
      scatter(unl, unlabeled_owners,
              sample_dirichlet(rng, spec.alpha, static_cast<int>(unlabeled_owners.size())), unlabeled_idx);
    } else {
      orphan_unlabeled.insert(orphan_unlabeled.end(), unl.begin(), unl.end());
    }
  }
  if (!orphan_unlabeled.empty()) {
    // Only L clients: leftover samples keep their labels.
    result.warnings.push_back("no U/M clients; " + std::to_string(orphan_unlabeled.size()) +
                              " samples beyond the labeled quota assigned as labeled data");
    std::vector<int> owners(labeled_owners);
    scatter(orphan_unlabeled, owners,
            std::vector<double>(owners.size(), 1.0 / static_cast<double>(owners.size())), labeled_idx);
  }

  // Every L/M client holds at least one labeled sample.
  for (int i : labeled_owners) {
    auto& mine = labeled_idx[static_cast<std::size_t>(i)];
    if (!mine.empty()) continue;
    int donor = -1;
    for (int j : labeled_owners) {
      if (labeled_idx[static_cast<std::size_t>(j)].size() >= 2 &&
          (donor < 0 || labeled_idx[static_cast<std::size_t>(j)].size() >
                            labeled_idx[static_cast<std::size_t>(donor)].size())) {
        donor = j;
      }
    }
    if (donor >= 0) {
      mine.push_back(labeled_idx[static_cast<std::size_t>(donor)].back());
      labeled_idx[static_cast<std::size_t>(donor)].pop_back();
      result.warnings.push_back("client " + std::to_string(i) +
                                " drew no labeled samples; moved one from client " +
                                std::to_string(donor));
      continue;
    }
    for (int j : unlabeled_owners) {
      auto& pool = unlabeled_idx[static_cast<std::size_t>(j)];
      if (pool.empty()) continue;
      mine.push_back(pool.back());
      pool.pop_back();
      break;
    }
    result.warnings.push_back("labeled ratio too small: client " + std::to_string(i) +
                              " given one extra labeled sample");
  }

  result.clients.resize(clients);
  for (std::size_t i = 0; i < clients; ++i) {
    auto& cd = result.clients[i];
    for (int idx : labeled_idx[i]) cd.labeled.push_back(dataset[static_cast<std::size_t>(idx)]);
    for (int idx : unlabeled_idx[i]) {
      const auto& s = dataset[static_cast<std::size_t>(idx)];
      cd.unlabeled.push_back({s.features, std::nullopt});
      cd.unlabeled_truth.push_back(*s.label);
    }
  }
  return result;
}

double mean_class_distance(std::span<const ClientDataset> clients, int classes) {
  Vector global = Vector::Zero(classes);
  std::vector<Vector> local;
  for (const auto& cd : clients) {
    Vector h = Vector::Zero(classes);
    for (const auto& s : cd.labeled) h(*s.label) += 1.0;
    for (int c : cd.unlabeled_truth) h(c) += 1.0;
    global += h;
    if (h.sum() > 0.0) local.push_back(h / h.sum());
  }
  global /= global.sum();
  double total = 0.0;
  for (const auto& h : local) total += 0.5 * (h - global).cwiseAbs().sum();
  return local.empty() ? 0.0 : total / static_cast<double>(local.size());
}

Sample augment(const Sample& s, int k, std::uint64_t seed, const AugmentConfig& cfg) {
  Sample out = s;
  Rng rng(derive_seed({seed, static_cast<std::uint64_t>(k)}));
  if (cfg.image_side > 0 && cfg.max_shift > 0 &&
      s.features.size() == static_cast<Eigen::Index>(cfg.image_side) * cfg.image_side) {
    std::uniform_int_distribution<int> shift(-cfg.max_shift, cfg.max_shift);
    const int dx = shift(rng);
    const int dy = shift(rng);
    const int side = cfg.image_side;
    for (int r = 0; r < side; ++r) {
      for (int c = 0; c < side; ++c) {
        const int sr = r - dy;
        const int sc = c - dx;
        out.features(r * side + c) =
            (sr >= 0 && sr < side && sc >= 0 && sc < side) ? s.features(sr * side + sc) : 0.0;
      }
    }
  }
  if (cfg.sigma > 0.0) {
    std::normal_distribution<double> normal(0.0, cfg.sigma);
    for (Eigen::Index i = 0; i < out.features.size(); ++i) out.features(i) += normal(rng);
  }
  return out;
}

}  // namespace semidfl
