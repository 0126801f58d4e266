#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "simlearn/data.hpp"
#include "simlearn/landmark.hpp"
#include "simlearn/matrix.hpp"
#include "simlearn/transfer.hpp"

namespace simlearn {

// Points mapped into the landmarked space. Row i belongs to ids[i].
// `transfer` is empty for the singleton (raw similarity) embedding.
struct EmbeddedDataset {
  Matrix values;
  std::vector<std::size_t> ids;
  std::vector<int> labels;  // may be empty when the caller has no labels
  std::optional<TransferFunction> transfer;

  std::size_t size() const noexcept { return values.rows(); }
  std::size_t dim() const noexcept { return values.cols(); }
};

// Entry (i, j) = f(K(x_i, pos_j) - K(x_i, neg_j)).
EmbeddedDataset embed_pairs(const Kernel& kernel, const LandmarkPairSet& pairs,
                            const TransferFunction& f, const BinarySubset& points);
EmbeddedDataset embed_pairs(const Kernel& kernel, const LandmarkPairSet& pairs,
                            const TransferFunction& f, std::span<const std::size_t> point_ids);

// Entry (i, j) = K(x_i, landmark_j).
EmbeddedDataset embed_singletons(const Kernel& kernel, const LandmarkSet& landmarks,
                                 const BinarySubset& points);
EmbeddedDataset embed_singletons(const Kernel& kernel, const LandmarkSet& landmarks,
                                 std::span<const std::size_t> point_ids);

void write_embedding_csv(const std::filesystem::path& path, const EmbeddedDataset& embedded);

enum class LossKind { hinge, logistic };

// Linear classifier over the landmarked space:
//   g(z) = (1/d) <weights, z> + bias
struct LinearModel {
  std::vector<double> weights;
  double bias = 0.0;
  LossKind loss_kind = LossKind::hinge;
  double c_penalty = 1.0;

  std::size_t dim() const noexcept { return weights.size(); }
};

double decision_value(const LinearModel& model, std::span<const double> embedded_row);

// sign of the decision value; 0 maps to +1.
int classify(const LinearModel& model, std::span<const double> embedded_row);

// Fraction of (value, label) entries with label * value < margin.
double margin_error(std::span<const std::pair<double, int>> values, double margin);

}  // namespace simlearn
