#include "simlearn/ftune.hpp"

#include <limits>
#include <unordered_map>

#include "simlearn/random.hpp"

namespace simlearn {

std::size_t best_candidate(std::span<const CandidateScore> scores) {
  std::size_t best = scores.size();
  for (std::size_t k = 0; k < scores.size(); ++k) {
    const auto& s = scores[k];
    if (s.failed) continue;
    if (best == scores.size()) {
      best = k;
      continue;
    }
    const auto& b = scores[best];
    if (s.validation_accuracy != b.validation_accuracy) {
      if (s.validation_accuracy > b.validation_accuracy) best = k;
    } else if (s.validation_loss != b.validation_loss) {
      if (s.validation_loss < b.validation_loss) best = k;
    } else if (s.transfer.effective_slope() < b.transfer.effective_slope()) {
      best = k;
    }
  }
  if (best == scores.size()) {
    std::string what = "every transfer candidate failed";
    for (const auto& s : scores) what += "; " + s.transfer.name() + ": " + s.error;
    throw Error(Errc::aggregate, what);
  }
  return best;
}

FixedTransferFit fit_fixed_transfer(const Kernel& kernel, const BinarySubset& train,
                                    const BinarySubset& valid, const LandmarkPairSet& pairs,
                                    const TransferFunction& f, const LossFunction& loss,
                                    std::span<const double> c_grid, std::uint64_t seed,
                                    const TrainOptions& options) {
  const auto train_emb = embed_pairs(kernel, pairs, f, train);
  const auto valid_emb = embed_pairs(kernel, pairs, f, valid);
  auto sel = select_c(train_emb, valid_emb, loss, c_grid, seed, options);
  FixedTransferFit fit;
  fit.validation_loss = eval_loss(sel.model, valid_emb, loss);
  fit.model = std::move(sel.model);
  fit.c = sel.c;
  fit.validation_accuracy = sel.validation_accuracy;
  return fit;
}

FtuneResult ftune_s(const Kernel& kernel, const BinarySubset& train, const BinarySubset& valid,
                    const LandmarkPairSet& pairs, const TransferFamily& family,
                    const LossFunction& loss, std::span<const double> c_grid,
                    std::uint64_t seed, const TrainOptions& options) {
  if (family.members.empty()) throw Error(Errc::argument, "empty transfer family");
  std::vector<CandidateScore> scores;
  std::vector<LinearModel> models;
  for (const auto& f : family.members) {
    CandidateScore score;
    score.transfer = f;
    try {
      auto fit = fit_fixed_transfer(kernel, train, valid, pairs, f, loss, c_grid, seed, options);
      score.validation_accuracy = fit.validation_accuracy;
      score.validation_loss = fit.validation_loss;
      score.c = fit.c;
      models.push_back(std::move(fit.model));
    } catch (const Error& e) {
      score.failed = true;
      score.error = e.what();
      models.emplace_back();
    }
    scores.push_back(std::move(score));
  }
  const std::size_t best = best_candidate(scores);

  FtuneResult out;
  out.variant = FtuneVariant::single;
  out.problems.push_back({-1, pairs, scores[best].transfer, std::move(models[best])});
  out.validation_accuracy = scores[best].validation_accuracy;
  out.validation_scores.push_back(std::move(scores));
  return out;
}

LandmarkPairSet pairs_for_problem(const LandmarkSource& source, const BinarySubset& train,
                                  int positive_class) {
  const auto seed = derive_seed(source.seed, {static_cast<std::uint64_t>(positive_class + 1)});
  if (source.kind == LandmarkSource::Kind::random) return random_pairs(train, source.d, seed);

  std::unordered_map<std::size_t, int> label_of;
  for (std::size_t k = 0; k < train.size(); ++k) label_of.emplace(train.ids[k], train.labels[k]);
  std::vector<int> labels;
  labels.reserve(source.pool.size());
  for (auto id : source.pool.ids) {
    const auto it = label_of.find(id);
    if (it == label_of.end()) throw Error(Errc::argument, "landmark pool point is not in train");
    labels.push_back(it->second);
  }
  return pairs_from_pool(source.pool.ids, labels, source.d, seed);
}

namespace {

void require_all_classes(const Dataset& ds, std::span<const std::size_t> train_ids) {
  std::vector<bool> seen(static_cast<std::size_t>(ds.num_classes), false);
  for (auto id : train_ids) seen[static_cast<std::size_t>(ds.class_of(id))] = true;
  for (std::size_t c = 0; c < seen.size(); ++c) {
    if (!seen[c]) {
      throw Error(Errc::stratification, "class " + std::to_string(c) + " is absent from train");
    }
  }
}

}  // namespace

FtuneResult ftune_m(const Kernel& kernel, std::span<const std::size_t> train_ids,
                    std::span<const std::size_t> valid_ids, const LandmarkSource& source,
                    const TransferFamily& family, const LossFunction& loss,
                    std::span<const double> c_grid, std::uint64_t seed,
                    const TrainOptions& options) {
  const Dataset& ds = kernel.dataset();
  require_all_classes(ds, train_ids);
  FtuneResult out;
  out.variant = FtuneVariant::multiple;
  for (int k = 0; k < ds.num_classes; ++k) {
    const auto train = one_vs_all_subset(ds, train_ids, k);
    const auto valid = one_vs_all_subset(ds, valid_ids, k);
    const auto pairs = pairs_for_problem(source, train, k);
    auto sub = ftune_s(kernel, train, valid, pairs, family, loss, c_grid,
                       derive_seed(seed, {static_cast<std::uint64_t>(k)}), options);
    auto problem = std::move(sub.problems.front());
    problem.positive_class = k;
    out.problems.push_back(std::move(problem));
    out.validation_scores.push_back(std::move(sub.validation_scores.front()));
  }
  out.validation_accuracy = multiclass_accuracy(kernel, out, valid_ids);
  return out;
}

FtuneResult ftune_s_multiclass(const Kernel& kernel, std::span<const std::size_t> train_ids,
                               std::span<const std::size_t> valid_ids,
                               const LandmarkSource& source, const TransferFamily& family,
                               const LossFunction& loss, std::span<const double> c_grid,
                               std::uint64_t seed, const TrainOptions& options) {
  const Dataset& ds = kernel.dataset();
  require_all_classes(ds, train_ids);
  if (family.members.empty()) throw Error(Errc::argument, "empty transfer family");

  std::vector<BinarySubset> trains;
  std::vector<BinarySubset> valids;
  std::vector<LandmarkPairSet> pairs;
  for (int k = 0; k < ds.num_classes; ++k) {
    trains.push_back(one_vs_all_subset(ds, train_ids, k));
    valids.push_back(one_vs_all_subset(ds, valid_ids, k));
    pairs.push_back(pairs_for_problem(source, trains.back(), k));
  }

  std::vector<CandidateScore> scores;
  std::vector<FtuneResult> candidates;
  for (const auto& f : family.members) {
    CandidateScore score;
    score.transfer = f;
    FtuneResult cand;
    cand.variant = FtuneVariant::single;
    try {
      double loss_sum = 0.0;
      for (int k = 0; k < ds.num_classes; ++k) {
        const auto uk = static_cast<std::size_t>(k);
        auto fit = fit_fixed_transfer(kernel, trains[uk], valids[uk], pairs[uk], f, loss, c_grid,
                                      derive_seed(seed, {uk}), options);
        loss_sum += fit.validation_loss;
        cand.problems.push_back({k, pairs[uk], f, std::move(fit.model)});
      }
      score.validation_accuracy = multiclass_accuracy(kernel, cand, valid_ids);
      score.validation_loss = loss_sum / ds.num_classes;
    } catch (const Error& e) {
      score.failed = true;
      score.error = e.what();
    }
    scores.push_back(std::move(score));
    candidates.push_back(std::move(cand));
  }
  const std::size_t best = best_candidate(scores);
  FtuneResult out = std::move(candidates[best]);
  out.validation_accuracy = scores[best].validation_accuracy;
  out.validation_scores.push_back(std::move(scores));
  return out;
}

int argmax_class(std::span<const double> scores) {
  if (scores.empty()) throw Error(Errc::shape, "no class scores");
  std::size_t best = 0;
  for (std::size_t k = 1; k < scores.size(); ++k) {
    if (scores[k] > scores[best]) best = k;
  }
  return static_cast<int>(best);
}

Matrix decision_values(const Kernel& kernel, const FtuneResult& result,
                       std::span<const std::size_t> point_ids) {
  Matrix out(point_ids.size(), result.problems.size());
  for (std::size_t p = 0; p < result.problems.size(); ++p) {
    const auto& prob = result.problems[p];
    const auto emb = embed_pairs(kernel, prob.pairs, prob.transfer, point_ids);
    for (std::size_t i = 0; i < point_ids.size(); ++i) {
      out(i, p) = decision_value(prob.model, emb.values.row(i));
    }
  }
  return out;
}

std::vector<int> predict_multiclass(const Kernel& kernel, const FtuneResult& result,
                                    std::span<const std::size_t> point_ids) {
  if (result.problems.empty()) throw Error(Errc::argument, "result holds no models");
  const auto values = decision_values(kernel, result, point_ids);
  std::vector<int> out;
  out.reserve(point_ids.size());
  const bool plain_binary = result.problems.size() == 1 && result.problems[0].positive_class < 0;
  for (std::size_t i = 0; i < point_ids.size(); ++i) {
    if (plain_binary) {
      out.push_back(values(i, 0) >= 0.0 ? 1 : 0);
    } else {
      out.push_back(result.problems[static_cast<std::size_t>(argmax_class(values.row(i)))]
                        .positive_class);
    }
  }
  return out;
}

double multiclass_accuracy(const Kernel& kernel, const FtuneResult& result,
                           std::span<const std::size_t> point_ids) {
  if (point_ids.empty()) return 0.0;
  const auto predicted = predict_multiclass(kernel, result, point_ids);
  const Dataset& ds = kernel.dataset();
  std::size_t correct = 0;
  for (std::size_t i = 0; i < point_ids.size(); ++i) {
    if (predicted[i] == ds.class_of(point_ids[i])) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(point_ids.size());
}

nlohmann::json to_json(const FtuneResult& result) {
  nlohmann::json j;
  j["variant"] = result.variant == FtuneVariant::single ? "S" : "M";
  j["validation_accuracy"] = result.validation_accuracy;
  auto& problems = j["problems"] = nlohmann::json::array();
  for (const auto& p : result.problems) {
    nlohmann::json pairs = nlohmann::json::array();
    for (const auto& pr : p.pairs.pairs) pairs.push_back({pr.pos, pr.neg});
    problems.push_back({{"positive_class", p.positive_class},
                        {"transfer", p.transfer.name()},
                        {"model", to_json(p.model)},
                        {"pairs", std::move(pairs)}});
  }
  auto& tables = j["validation_scores"] = nlohmann::json::array();
  for (const auto& table : result.validation_scores) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& s : table) {
      nlohmann::json row = {{"transfer", s.transfer.name()},
                            {"validation_accuracy", s.validation_accuracy},
                            {"validation_loss", s.validation_loss},
                            {"c", s.c}};
      if (s.failed) row["error"] = s.error;
      rows.push_back(std::move(row));
    }
    tables.push_back(std::move(rows));
  }
  return j;
}

}  // namespace simlearn
