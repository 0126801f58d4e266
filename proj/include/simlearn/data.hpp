#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "simlearn/matrix.hpp"

namespace simlearn {

// Labeled points, given as feature vectors, a precomputed n x n similarity
// (or distance) matrix, or both.
//
// Labels are canonical: a two-class dataset uses {-1, +1}; a dataset with
// k > 2 classes uses class ids 0..k-1. original_labels maps class ids back
// to the labels found in the input (ascending).
struct Dataset {
  std::vector<int> labels;
  std::vector<int> original_labels;
  std::optional<Matrix> features;
  std::optional<Matrix> similarity;
  int num_classes = 0;

  std::size_t size() const noexcept { return labels.size(); }
  bool is_binary() const noexcept { return num_classes == 2; }

  // Class id in [0, num_classes) for point i (binary: -1 -> 0, +1 -> 1).
  int class_of(std::size_t i) const noexcept {
    return is_binary() ? (labels[i] > 0 ? 1 : 0) : labels[i];
  }
};

// Validates the inputs and remaps raw labels to canonical form. For binary
// data the larger original label becomes +1.
Dataset make_dataset(std::span<const int> raw_labels, std::optional<Matrix> features,
                     std::optional<Matrix> similarity);

struct DatasetPaths {
  std::optional<std::filesystem::path> features;
  std::optional<std::filesystem::path> similarity;
  std::filesystem::path labels;
};

Dataset load_dataset(const DatasetPaths& paths);

Matrix read_csv_matrix(const std::filesystem::path& path);
std::vector<int> read_labels(const std::filesystem::path& path);
void write_csv_matrix(const std::filesystem::path& path, const Matrix& m);
void write_labels(const std::filesystem::path& path, std::span<const int> labels);

// Mean Euclidean distance over all unordered pairs of the given points.
double gaussian_width(const Dataset& dataset, std::span<const std::size_t> ids);
double gaussian_width(const Dataset& dataset);

struct KernelSpec {
  enum class Kind { precomputed, gaussian };
  Kind kind = Kind::precomputed;
  std::optional<double> width;  // gaussian sigma
  bool distance = false;        // precomputed matrix holds distances; K = -d / max|d|
};

// Similarity evaluator bound to one dataset. Normalization constants
// (the max-abs scale of a precomputed matrix, the gaussian width when the
// spec leaves it open) are fitted on fit_ids only, so held-out points never
// influence them. Values are clamped to [-1, 1].
//
// The dataset must outlive the kernel.
class Kernel {
 public:
  Kernel(const Dataset& dataset, const KernelSpec& spec,
         std::span<const std::size_t> fit_ids = {});

  double operator()(std::size_t i, std::size_t j) const;

  const Dataset& dataset() const noexcept { return *dataset_; }
  const KernelSpec& spec() const noexcept { return spec_; }
  double scale() const noexcept { return scale_; }
  double width() const noexcept { return width_; }

  // Dense block K(rows[a], cols[b]).
  Matrix block(std::span<const std::size_t> rows, std::span<const std::size_t> cols) const;

 private:
  const Dataset* dataset_;
  KernelSpec spec_;
  double scale_ = 1.0;
  double width_ = 0.0;
};

// Normalized kernel value with constants fitted on the whole dataset.
double kernel_eval(const KernelSpec& spec, const Dataset& dataset, std::size_t i, std::size_t j);

struct SplitSpec {
  double train_frac = 0.7;
  double valid_frac = 0.1;
  double test_frac = 0.2;
  std::uint64_t seed = 0;
};

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> valid;
  std::vector<std::size_t> test;
};

// (train, valid, test) sizes: valid and test floored and forced >= 1,
// remainder to train.
std::array<std::size_t, 3> split_sizes(std::size_t n, const SplitSpec& spec);

// Seeded random split; redraws (up to 100 times) until every class appears
// in the training part. Each part is returned in ascending id order.
Split split(const Dataset& dataset, const SplitSpec& spec);

// Binary view over a subset of points: labels aligned with ids, in {-1, +1}.
struct BinarySubset {
  std::vector<std::size_t> ids;
  std::vector<int> labels;

  std::size_t size() const noexcept { return ids.size(); }
};

// Requires a binary dataset.
BinarySubset binary_subset(const Dataset& dataset, std::span<const std::size_t> ids);

// Class `positive_class` -> +1, every other class -> -1.
BinarySubset one_vs_all_subset(const Dataset& dataset, std::span<const std::size_t> ids,
                               int positive_class);

// Isotropic gaussian clusters in the plane. Cluster centers are laid out on a
// grid with neighbouring clusters belonging to different classes.
Dataset make_gaussian_clusters(int num_classes, int clusters_per_class,
                               std::size_t points_per_cluster, double spread,
                               std::uint64_t seed);

// Same layout with cluster_sizes[j] points in the j-th cluster of every class
// (clusters of a class are numbered in row-major grid order).
Dataset make_multimodal_clusters(int num_classes, std::span<const std::size_t> cluster_sizes,
                                 double spread, std::uint64_t seed);

}  // namespace simlearn
