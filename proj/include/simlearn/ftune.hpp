#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "simlearn/data.hpp"
#include "simlearn/embedding.hpp"
#include "simlearn/landmark.hpp"
#include "simlearn/trainer.hpp"
#include "simlearn/transfer.hpp"

namespace simlearn {

// Validation outcome of one family member.
struct CandidateScore {
  TransferFunction transfer;
  double validation_accuracy = 0.0;
  double validation_loss = 0.0;
  double c = 0.0;
  bool failed = false;
  std::string error;
};

// Index of the winning candidate: highest validation accuracy, then lowest
// validation loss, then smallest slope. Failed candidates never win.
std::size_t best_candidate(std::span<const CandidateScore> scores);

// One binary subproblem of a (possibly one-vs-all) classifier.
// positive_class is -1 for a plain binary problem.
struct BinaryProblemModel {
  int positive_class = -1;
  LandmarkPairSet pairs;
  TransferFunction transfer;
  LinearModel model;
};

enum class FtuneVariant { single, multiple };

struct FtuneResult {
  FtuneVariant variant = FtuneVariant::single;
  std::vector<BinaryProblemModel> problems;
  // single: one table. multiple: one table per class problem.
  std::vector<std::vector<CandidateScore>> validation_scores;
  double validation_accuracy = 0.0;

  const TransferFunction& chosen() const { return problems.front().transfer; }
};

// Embed both splits with a fixed transfer and pick C on validation.
struct FixedTransferFit {
  LinearModel model;
  double c = 0.0;
  double validation_accuracy = 0.0;
  double validation_loss = 0.0;
};

FixedTransferFit fit_fixed_transfer(const Kernel& kernel, const BinarySubset& train,
                                    const BinarySubset& valid, const LandmarkPairSet& pairs,
                                    const TransferFunction& f, const LossFunction& loss,
                                    std::span<const double> c_grid, std::uint64_t seed,
                                    const TrainOptions& options = {});

// Exhaustive search over the family on a binary problem with fixed pairs.
FtuneResult ftune_s(const Kernel& kernel, const BinarySubset& train, const BinarySubset& valid,
                    const LandmarkPairSet& pairs, const TransferFamily& family,
                    const LossFunction& loss, std::span<const double> c_grid,
                    std::uint64_t seed, const TrainOptions& options = {});

// Where one-vs-all problems get their landmark pairs.
//   random:  fresh random pairs per relabelled problem
//   pool:    pairs sampled from a shared landmark pool (e.g. diverse selection)
struct LandmarkSource {
  enum class Kind { random, pool };
  Kind kind = Kind::random;
  std::size_t d = 0;
  LandmarkSet pool;
  std::uint64_t seed = 0;
};

LandmarkPairSet pairs_for_problem(const LandmarkSource& source, const BinarySubset& train,
                                  int positive_class);

// One transfer per one-vs-all problem, each chosen by ftune_s on its own
// binary validation accuracy.
FtuneResult ftune_m(const Kernel& kernel, std::span<const std::size_t> train_ids,
                    std::span<const std::size_t> valid_ids, const LandmarkSource& source,
                    const TransferFamily& family, const LossFunction& loss,
                    std::span<const double> c_grid, std::uint64_t seed,
                    const TrainOptions& options = {});

// One transfer shared by all one-vs-all problems, chosen by multiclass
// validation accuracy.
FtuneResult ftune_s_multiclass(const Kernel& kernel, std::span<const std::size_t> train_ids,
                               std::span<const std::size_t> valid_ids,
                               const LandmarkSource& source, const TransferFamily& family,
                               const LossFunction& loss, std::span<const double> c_grid,
                               std::uint64_t seed, const TrainOptions& options = {});

// Argmax over class scores; ties go to the smallest class id.
int argmax_class(std::span<const double> scores);

// Per-problem decision values for each point (rows: points, cols: problems).
Matrix decision_values(const Kernel& kernel, const FtuneResult& result,
                       std::span<const std::size_t> point_ids);

// Class ids in [0, num_classes). A plain binary result maps +1 -> 1, -1 -> 0.
std::vector<int> predict_multiclass(const Kernel& kernel, const FtuneResult& result,
                                    std::span<const std::size_t> point_ids);

// Fraction of points whose predicted class matches dataset.class_of.
double multiclass_accuracy(const Kernel& kernel, const FtuneResult& result,
                           std::span<const std::size_t> point_ids);

nlohmann::json to_json(const FtuneResult& result);

}  // namespace simlearn
