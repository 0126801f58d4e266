#include "simlearn/landmark.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <unordered_map>

#include "simlearn/random.hpp"

namespace simlearn {

LandmarkPairSet random_pairs(const BinarySubset& train, std::size_t d, std::uint64_t seed) {
  if (d == 0) throw Error(Errc::argument, "need at least one landmark pair");
  std::vector<std::size_t> pos;
  std::vector<std::size_t> neg;
  for (std::size_t k = 0; k < train.size(); ++k) {
    (train.labels[k] > 0 ? pos : neg).push_back(train.ids[k]);
  }
  if (pos.empty() || neg.empty()) {
    throw Error(Errc::class_coverage, "training data lacks a positive or a negative point");
  }
  Rng rng(seed);
  LandmarkPairSet out;
  out.pairs.reserve(d);
  for (std::size_t j = 0; j < d; ++j) {
    const std::size_t p = pos[rng.index(pos.size())];
    const std::size_t q = neg[rng.index(neg.size())];
    out.pairs.push_back({p, q});
  }
  return out;
}

LandmarkSet random_landmarks(std::span<const std::size_t> ids, std::size_t d,
                             std::uint64_t seed) {
  if (d == 0) throw Error(Errc::argument, "need at least one landmark");
  if (d > ids.size()) throw Error(Errc::size, "more landmarks requested than points");
  std::vector<std::size_t> pool(ids.begin(), ids.end());
  std::sort(pool.begin(), pool.end());
  Rng rng(seed);
  // Partial Fisher-Yates.
  for (std::size_t k = 0; k < d; ++k) {
    std::swap(pool[k], pool[k + rng.index(pool.size() - k)]);
  }
  pool.resize(d);
  return {std::move(pool)};
}

LandmarkSet diverse_landmarks(const Kernel& kernel, std::span<const std::size_t> candidates,
                              std::size_t d, std::size_t first, SelectionObjective objective) {
  if (d == 0) throw Error(Errc::argument, "need at least one landmark");
  std::vector<std::size_t> remaining(candidates.begin(), candidates.end());
  std::sort(remaining.begin(), remaining.end());
  remaining.erase(std::unique(remaining.begin(), remaining.end()), remaining.end());
  if (d > remaining.size()) throw Error(Errc::size, "more landmarks requested than points");
  const auto it = std::lower_bound(remaining.begin(), remaining.end(), first);
  if (it == remaining.end() || *it != first) {
    throw Error(Errc::argument, "first landmark is not a candidate");
  }
  remaining.erase(it);

  LandmarkSet chosen;
  chosen.ids.push_back(first);
  // total[k] = sum over chosen x' of K(remaining[k], x')
  std::vector<double> total(remaining.size());
  for (std::size_t k = 0; k < remaining.size(); ++k) total[k] = kernel(remaining[k], first);

  const double sense = objective == SelectionObjective::similarity ? 1.0 : -1.0;
  while (chosen.size() < d) {
    std::size_t best = 0;
    double best_value = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < remaining.size(); ++k) {
      const double v = sense * total[k];
      if (v < best_value) {  // strict: ties keep the smaller id
        best_value = v;
        best = k;
      }
    }
    const std::size_t z = remaining[best];
    chosen.ids.push_back(z);
    remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(best));
    total.erase(total.begin() + static_cast<std::ptrdiff_t>(best));
    for (std::size_t k = 0; k < remaining.size(); ++k) total[k] += kernel(remaining[k], z);
  }
  return chosen;
}

LandmarkSet dselect_landmarks(const Kernel& kernel, std::span<const std::size_t> candidates,
                              std::size_t d, std::uint64_t seed, SelectionObjective objective) {
  if (candidates.empty()) throw Error(Errc::size, "no candidate points");
  std::vector<std::size_t> sorted(candidates.begin(), candidates.end());
  std::sort(sorted.begin(), sorted.end());
  Rng rng(seed);
  const std::size_t first = sorted[rng.index(sorted.size())];
  return diverse_landmarks(kernel, sorted, d, first, objective);
}

LandmarkPairSet pairs_from_pool(std::span<const std::size_t> pool, std::span<const int> labels,
                                std::size_t d, std::uint64_t seed) {
  if (pool.size() != labels.size()) throw Error(Errc::shape, "pool and labels differ in size");
  BinarySubset subset{{pool.begin(), pool.end()}, {labels.begin(), labels.end()}};
  try {
    return random_pairs(subset, d, seed);
  } catch (const Error& e) {
    if (e.code() == Errc::class_coverage) {
      throw Error(Errc::diversity_degenerate, "selected landmarks carry a single label");
    }
    throw;
  }
}

DselectResult dselect(const Kernel& kernel, const BinarySubset& train, std::size_t d,
                      std::uint64_t seed, SelectionObjective objective) {
  DselectResult out;
  out.landmarks = dselect_landmarks(kernel, train.ids, d, derive_seed(seed, {1}), objective);
  std::unordered_map<std::size_t, int> label_of;
  for (std::size_t k = 0; k < train.size(); ++k) label_of.emplace(train.ids[k], train.labels[k]);
  std::vector<int> labels;
  labels.reserve(out.landmarks.size());
  for (auto id : out.landmarks.ids) labels.push_back(label_of.at(id));
  out.pairs = pairs_from_pool(out.landmarks.ids, labels, d, derive_seed(seed, {2}));
  return out;
}

std::vector<std::size_t> multiclass_quotas(std::span<const std::size_t> class_sizes,
                                           std::size_t d) {
  const std::size_t k = class_sizes.size();
  if (k == 0) throw Error(Errc::argument, "no classes");
  if (d < k) throw Error(Errc::argument, "need at least one landmark per class");
  const std::size_t quota = (d + k - 1) / k;
  std::vector<std::size_t> alloc(k);
  std::size_t deficit = 0;
  for (std::size_t c = 0; c < k; ++c) {
    alloc[c] = std::min(quota, class_sizes[c]);
    deficit += quota - alloc[c];
  }
  while (deficit > 0) {
    bool gave = false;
    for (std::size_t c = 0; c < k && deficit > 0; ++c) {
      if (alloc[c] < class_sizes[c]) {
        ++alloc[c];
        --deficit;
        gave = true;
      }
    }
    if (!gave) break;
  }
  const std::size_t total = std::accumulate(alloc.begin(), alloc.end(), std::size_t{0});
  if (total < d) {
    throw Error(Errc::size, "classes hold only " + std::to_string(total) + " points, need " +
                                std::to_string(d));
  }
  for (std::size_t excess = total - d; excess > 0; --excess) {
    std::size_t largest = 0;
    for (std::size_t c = 0; c < k; ++c) {
      if (alloc[c] >= alloc[largest]) largest = c;
    }
    --alloc[largest];
  }
  return alloc;
}

LandmarkSet dselect_multiclass(const Kernel& kernel, std::span<const std::size_t> train_ids,
                               std::size_t d, std::uint64_t seed, SelectionObjective objective) {
  const Dataset& ds = kernel.dataset();
  const auto k = static_cast<std::size_t>(ds.num_classes);
  if (d < k) throw Error(Errc::argument, "need at least one landmark per class");
  std::vector<std::vector<std::size_t>> members(k);
  for (auto id : train_ids) {
    if (id >= ds.size()) throw Error(Errc::index, "point id out of range");
    members[static_cast<std::size_t>(ds.class_of(id))].push_back(id);
  }
  std::vector<std::size_t> sizes(k);
  for (std::size_t c = 0; c < k; ++c) sizes[c] = members[c].size();
  const auto quotas = multiclass_quotas(sizes, d);

  LandmarkSet out;
  for (std::size_t c = 0; c < k; ++c) {
    if (quotas[c] == 0) continue;
    const auto part = dselect_landmarks(kernel, members[c], quotas[c], derive_seed(seed, {c}),
                                        objective);
    out.ids.insert(out.ids.end(), part.ids.begin(), part.ids.end());
  }
  return out;
}

double mean_pairwise_similarity(const Kernel& kernel, std::span<const std::size_t> ids) {
  if (ids.size() < 2) throw Error(Errc::argument, "need at least two points");
  double total = 0.0;
  for (std::size_t a = 0; a < ids.size(); ++a) {
    for (std::size_t b = 0; b < ids.size(); ++b) {
      if (a != b) total += kernel(ids[a], ids[b]);
    }
  }
  const double n = static_cast<double>(ids.size());
  return total / (n * (n - 1.0));
}

}  // namespace simlearn
