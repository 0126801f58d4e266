#include "simlearn/embedding.hpp"

#include <fstream>

namespace simlearn {

namespace {

EmbeddedDataset pair_embedding(const Kernel& kernel, const LandmarkPairSet& pairs,
                               const TransferFunction& f, std::span<const std::size_t> ids) {
  if (pairs.size() == 0) throw Error(Errc::argument, "empty landmark pair set");
  EmbeddedDataset out;
  out.values = Matrix(ids.size(), pairs.size());
  out.ids.assign(ids.begin(), ids.end());
  out.transfer = f;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    auto row = out.values.row(i);
    for (std::size_t j = 0; j < pairs.size(); ++j) {
      const auto& p = pairs.pairs[j];
      row[j] = apply(f, kernel(ids[i], p.pos) - kernel(ids[i], p.neg));
    }
  }
  return out;
}

EmbeddedDataset singleton_embedding(const Kernel& kernel, const LandmarkSet& landmarks,
                                    std::span<const std::size_t> ids) {
  if (landmarks.size() == 0) throw Error(Errc::argument, "empty landmark set");
  EmbeddedDataset out;
  out.values = Matrix(ids.size(), landmarks.size());
  out.ids.assign(ids.begin(), ids.end());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    auto row = out.values.row(i);
    for (std::size_t j = 0; j < landmarks.size(); ++j) row[j] = kernel(ids[i], landmarks.ids[j]);
  }
  return out;
}

}  // namespace

EmbeddedDataset embed_pairs(const Kernel& kernel, const LandmarkPairSet& pairs,
                            const TransferFunction& f, const BinarySubset& points) {
  auto out = pair_embedding(kernel, pairs, f, points.ids);
  out.labels = points.labels;
  return out;
}

EmbeddedDataset embed_pairs(const Kernel& kernel, const LandmarkPairSet& pairs,
                            const TransferFunction& f, std::span<const std::size_t> point_ids) {
  return pair_embedding(kernel, pairs, f, point_ids);
}

EmbeddedDataset embed_singletons(const Kernel& kernel, const LandmarkSet& landmarks,
                                 const BinarySubset& points) {
  auto out = singleton_embedding(kernel, landmarks, points.ids);
  out.labels = points.labels;
  return out;
}

EmbeddedDataset embed_singletons(const Kernel& kernel, const LandmarkSet& landmarks,
                                 std::span<const std::size_t> point_ids) {
  return singleton_embedding(kernel, landmarks, point_ids);
}

void write_embedding_csv(const std::filesystem::path& path, const EmbeddedDataset& embedded) {
  write_csv_matrix(path, embedded.values);
}

double decision_value(const LinearModel& model, std::span<const double> embedded_row) {
  if (embedded_row.size() != model.weights.size()) {
    throw Error(Errc::shape, "row has " + std::to_string(embedded_row.size()) +
                                 " coordinates, model expects " +
                                 std::to_string(model.weights.size()));
  }
  const double d = static_cast<double>(model.weights.size());
  return dot(model.weights, embedded_row) / d + model.bias;
}

int classify(const LinearModel& model, std::span<const double> embedded_row) {
  return decision_value(model, embedded_row) >= 0.0 ? 1 : -1;
}

double margin_error(std::span<const std::pair<double, int>> values, double margin) {
  if (margin < 0.0) throw Error(Errc::argument, "margin must be non-negative");
  if (values.empty()) return 0.0;
  std::size_t errors = 0;
  for (const auto& [value, label] : values) {
    if (static_cast<double>(label) * value < margin) ++errors;
  }
  return static_cast<double>(errors) / static_cast<double>(values.size());
}

}  // namespace simlearn
