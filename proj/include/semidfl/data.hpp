#pragma once

#include "semidfl/rng.hpp"
#include "semidfl/topology.hpp"
#include "semidfl/types.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace semidfl {

enum class DatasetKind { gauss_mixture, rings, mini_digits };

DatasetKind parse_dataset_kind(std::string_view s);
std::string_view to_string(DatasetKind k);

struct DatasetSpec {
  DatasetKind kind = DatasetKind::gauss_mixture;
  int n = 2000;
  int classes = 4;
  int dim = 8;
  /// gauss_mixture: distance between any two class means, in units of the
  /// per-coordinate noise standard deviation. Generated features are then
  /// centered and rescaled by one global factor to unit mean square.
  double separation = 4.0;
  /// rings: radial and off-plane noise.
  double noise = 0.25;
  /// mini_digits: dataset file in the text format below.
  std::string path;
};

/// Balanced labeled samples (n/C per class, remainder to the lowest classes),
/// shuffled. Deterministic for a fixed seed.
std::vector<Sample> make_toy_dataset(const DatasetSpec& spec, std::uint64_t seed);

/// Text format: header "d=<dim>,C=<classes>", then one sample per line as
/// comma-separated features followed by an integer label.
std::vector<Sample> read_dataset_file(const std::filesystem::path& path, int* classes_out = nullptr);
void write_dataset_file(const std::filesystem::path& path, std::span<const Sample> samples,
                        int classes);

struct TrainTestSplit {
  std::vector<Sample> train;
  std::vector<Sample> test;
};

TrainTestSplit split_train_test(std::vector<Sample> samples, double test_fraction,
                                std::uint64_t seed);

struct PartitionSpec {
  double alpha = 0.1;
  double labeled_ratio = 0.01;
  std::uint64_t seed = 0;
};

struct ClientDataset {
  std::vector<Sample> labeled;
  std::vector<Sample> unlabeled;
  /// Ground truth of `unlabeled`, kept only for pseudo-label metrics.
  std::vector<int> unlabeled_truth;

  std::size_t size() const { return labeled.size() + unlabeled.size(); }
};

struct Partition {
  std::vector<ClientDataset> clients;
  std::vector<std::string> warnings;
};

/// Non-IID split. round(r * n) samples (stratified by class) form the labeled
/// pool, spread over L and M clients; the rest form the unlabeled pool over U
/// and M clients. Each pool is split per class by a Dirichlet(alpha) draw over
/// the eligible clients. Every L/M client ends with at least one labeled sample.
Partition partition(std::span<const Sample> dataset, const Topology& topology,
                    const PartitionSpec& spec, int classes);

/// Mean over non-empty clients of the total-variation distance between the
/// client's class histogram and the global one (labeled plus hidden truth).
double mean_class_distance(std::span<const ClientDataset> clients, int classes);

struct AugmentConfig {
  double sigma = 0.1;
  /// >0 treats features as a side x side image and shifts by up to max_shift.
  int image_side = 0;
  int max_shift = 1;
};

/// Label-invariant perturbation. Variant k under `seed` is reproducible and
/// independent of every other variant.
Sample augment(const Sample& s, int k, std::uint64_t seed, const AugmentConfig& cfg);

}  // namespace semidfl
