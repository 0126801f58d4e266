#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "simlearn/data.hpp"

namespace simlearn {

struct LandmarkPair {
  std::size_t pos;
  std::size_t neg;

  friend bool operator==(const LandmarkPair&, const LandmarkPair&) = default;
};

// Ordered (positive, negative) landmark pairs; duplicates are legal.
struct LandmarkPairSet {
  std::vector<LandmarkPair> pairs;

  std::size_t size() const noexcept { return pairs.size(); }
  friend bool operator==(const LandmarkPairSet&, const LandmarkPairSet&) = default;
};

// Ordered, duplicate-free landmark points (selection order is preserved).
struct LandmarkSet {
  std::vector<std::size_t> ids;

  std::size_t size() const noexcept { return ids.size(); }
  friend bool operator==(const LandmarkSet&, const LandmarkSet&) = default;
};

// similarity: greedily minimize total similarity to the chosen set.
// distance:   the kernel returns distances; greedily maximize total distance.
enum class SelectionObjective { similarity, distance };

// d pairs, each an independent uniform draw of one positive and one
// negative training point (with replacement).
LandmarkPairSet random_pairs(const BinarySubset& train, std::size_t d, std::uint64_t seed);

// d distinct points drawn uniformly without replacement.
LandmarkSet random_landmarks(std::span<const std::size_t> ids, std::size_t d,
                             std::uint64_t seed);

// Greedy diversity selection starting from `first`: each step adds the
// remaining candidate with the smallest total similarity to the chosen set
// (ties go to the smallest point id).
LandmarkSet diverse_landmarks(const Kernel& kernel, std::span<const std::size_t> candidates,
                              std::size_t d, std::size_t first,
                              SelectionObjective objective = SelectionObjective::similarity);

// diverse_landmarks with a uniformly random first point.
LandmarkSet dselect_landmarks(const Kernel& kernel, std::span<const std::size_t> candidates,
                              std::size_t d, std::uint64_t seed,
                              SelectionObjective objective = SelectionObjective::similarity);

// d pairs drawn with replacement from the pool: the positive member uniformly
// among pool points labelled +1, the negative among those labelled -1.
// `labels` is aligned with `pool`.
LandmarkPairSet pairs_from_pool(std::span<const std::size_t> pool, std::span<const int> labels,
                                std::size_t d, std::uint64_t seed);

struct DselectResult {
  LandmarkSet landmarks;
  LandmarkPairSet pairs;
};

// Diverse landmark selection followed by pair sampling from the selected set.
// Throws diversity_degenerate when the selected set holds only one label.
DselectResult dselect(const Kernel& kernel, const BinarySubset& train, std::size_t d,
                      std::uint64_t seed,
                      SelectionObjective objective = SelectionObjective::similarity);

// Per-class landmark quotas for dselect_multiclass: ceil(d / k) each, capped by
// class size with the shortfall handed round-robin to classes with spare
// points, then trimmed back to d by repeatedly dropping one landmark from the
// currently largest allocation (ties: highest class id).
std::vector<std::size_t> multiclass_quotas(std::span<const std::size_t> class_sizes,
                                           std::size_t d);

// Diverse selection run independently inside each class; the result is the
// concatenation in class order.
LandmarkSet dselect_multiclass(const Kernel& kernel, std::span<const std::size_t> train_ids,
                               std::size_t d, std::uint64_t seed,
                               SelectionObjective objective = SelectionObjective::similarity);

// Mean K(x, y) over ordered pairs x != y of the set.
double mean_pairwise_similarity(const Kernel& kernel, std::span<const std::size_t> ids);

}  // namespace simlearn
