#include "simlearn/goodness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "simlearn/embedding.hpp"
#include "simlearn/landmark.hpp"
#include "simlearn/random.hpp"

namespace simlearn {

void GoodnessParams::validate() const {
  for (double v : {epsilon, gamma, b_bound, epsilon_one, delta}) {
    if (!std::isfinite(v)) throw Error(Errc::argument, "goodness parameters must be finite");
  }
  if (epsilon < 0.0 || epsilon > 1.0) throw Error(Errc::argument, "epsilon must lie in [0, 1]");
  if (!(gamma > 0.0) || gamma > 1.0) throw Error(Errc::argument, "gamma must lie in (0, 1]");
  if (!(b_bound > 0.0)) throw Error(Errc::argument, "B must be positive");
  if (!(epsilon_one > 0.0)) throw Error(Errc::argument, "epsilon_1 must be positive");
  if (!(delta > 0.0 && delta < 1.0)) throw Error(Errc::argument, "delta must lie in (0, 1)");
}

WeightFunction WeightFunction::constant(double value, double bound) {
  if (!(bound > 0.0) || std::abs(value) > bound) {
    throw Error(Errc::argument, "constant weight exceeds its bound");
  }
  WeightFunction w;
  w.value_ = value;
  w.bound_ = bound;
  return w;
}

WeightFunction WeightFunction::table(Matrix values, double bound) {
  if (!(bound > 0.0)) throw Error(Errc::argument, "weight bound must be positive");
  for (double v : values.data()) {
    if (!(std::abs(v) <= bound)) throw Error(Errc::argument, "weight table exceeds its bound");
  }
  WeightFunction w;
  w.bound_ = bound;
  w.table_ = std::move(values);
  return w;
}

WeightFunction WeightFunction::product(std::span<const double> point_weights) {
  const std::size_t n = point_weights.size();
  Matrix t(n, n);
  double m = 0.0;
  for (double a : point_weights) m = std::max(m, std::abs(a));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) t(i, j) = point_weights[i] * point_weights[j];
  }
  return table(std::move(t), m > 0.0 ? m * m : 1.0);
}

WeightFunction WeightFunction::scaled(double factor) const {
  WeightFunction w = *this;
  w.value_ *= factor;
  w.bound_ *= std::abs(factor);
  if (w.table_) {
    for (double& v : w.table_->data()) v *= factor;
  }
  if (!(w.bound_ > 0.0)) w.bound_ = bound_;
  return w;
}

namespace {

struct ClassSplit {
  std::vector<std::size_t> pos;
  std::vector<std::size_t> neg;
};

ClassSplit split_classes(std::size_t n, std::span<const int> labels) {
  if (labels.size() != n) throw Error(Errc::shape, "labels do not match the matrix side");
  ClassSplit s;
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] == 1) {
      s.pos.push_back(i);
    } else if (labels[i] == -1) {
      s.neg.push_back(i);
    } else {
      throw Error(Errc::argument, "goodness labels must be -1 or +1");
    }
  }
  if (s.pos.empty() || s.neg.empty()) {
    throw Error(Errc::degenerate, "goodness needs at least one point of each class");
  }
  return s;
}

void check_square(const Matrix& m) {
  if (m.rows() != m.cols()) throw Error(Errc::shape, "kernel matrix is not square");
}

// Mean of term(a, b) over a in same, b in other; sampled when too many pairs.
template <class Term>
double pair_mean(std::span<const std::size_t> same, std::span<const std::size_t> other,
                 std::size_t max_pairs, std::uint64_t seed, bool& sampled, Term term) {
  const std::size_t total = same.size() * other.size();
  double sum = 0.0;
  if (total <= max_pairs) {
    for (auto a : same) {
      for (auto b : other) sum += term(a, b);
    }
    return sum / static_cast<double>(total);
  }
  sampled = true;
  Rng rng(seed);
  for (std::size_t k = 0; k < max_pairs; ++k) {
    const auto a = same[rng.index(same.size())];
    const auto b = other[rng.index(other.size())];
    sum += term(a, b);
  }
  return sum / static_cast<double>(max_pairs);
}

double fraction_below(std::span<const double> values, double threshold) {
  std::size_t below = 0;
  for (double v : values) {
    if (v < threshold) ++below;
  }
  return static_cast<double>(below) / static_cast<double>(values.size());
}

}  // namespace

std::vector<double> conditional_means(const Matrix& kernel, std::span<const int> labels,
                                      const TransferFunction& f, const WeightFunction& w,
                                      std::uint64_t seed, std::size_t max_pairs, bool* sampled) {
  check_square(kernel);
  const std::size_t n = kernel.rows();
  const auto cls = split_classes(n, labels);
  bool any_sampled = false;
  std::vector<double> out(n);
  for (std::size_t x = 0; x < n; ++x) {
    const bool positive = labels[x] == 1;
    const auto& same = positive ? cls.pos : cls.neg;
    const auto& other = positive ? cls.neg : cls.pos;
    out[x] = pair_mean(same, other, max_pairs, derive_seed(seed, {x}), any_sampled,
                       [&](std::size_t a, std::size_t b) {
                         return w(a, b) * apply(f, kernel(x, a) - kernel(x, b));
                       });
  }
  if (sampled) *sampled = any_sampled;
  return out;
}

GoodnessEstimate estimate_goodness_pairs(const Matrix& kernel, std::span<const int> labels,
                                         const TransferFunction& f, const WeightFunction& w,
                                         const GoodnessParams& params, std::uint64_t seed,
                                         std::size_t max_pairs) {
  params.validate();
  if (kernel.rows() < 3) throw Error(Errc::degenerate, "need at least 3 points");
  GoodnessEstimate est;
  est.values = conditional_means(kernel, labels, f, w, seed, max_pairs, &est.sampled);
  est.c_f = c_f(f, kernel.data());
  est.threshold = est.c_f * params.gamma;
  est.violation_fraction = fraction_below(est.values, est.threshold);
  return est;
}

GoodnessEstimate estimate_goodness_pairs(const Dataset& dataset, const KernelSpec& spec,
                                         const TransferFunction& f, const WeightFunction& w,
                                         const GoodnessParams& params, std::uint64_t seed) {
  if (!dataset.is_binary()) throw Error(Errc::argument, "goodness needs a binary dataset");
  const Kernel kernel(dataset, spec);
  std::vector<std::size_t> ids(dataset.size());
  std::iota(ids.begin(), ids.end(), std::size_t{0});
  return estimate_goodness_pairs(kernel.block(ids, ids), dataset.labels, f, w, params, seed);
}

GoodnessEstimate estimate_goodness_bbs(const Matrix& kernel, std::span<const int> labels,
                                       std::span<const double> point_weights,
                                       const GoodnessParams& params) {
  params.validate();
  check_square(kernel);
  const std::size_t n = kernel.rows();
  if (point_weights.size() != n) throw Error(Errc::shape, "one weight per point expected");
  const auto cls = split_classes(n, labels);
  GoodnessEstimate est;
  est.values.resize(n);
  const auto weighted_mean = [&](std::size_t x, std::span<const std::size_t> ids) {
    double s = 0.0;
    for (auto a : ids) s += point_weights[a] * kernel(x, a);
    return s / static_cast<double>(ids.size());
  };
  for (std::size_t x = 0; x < n; ++x) {
    const bool positive = labels[x] == 1;
    est.values[x] = weighted_mean(x, positive ? cls.pos : cls.neg) -
                    weighted_mean(x, positive ? cls.neg : cls.pos);
  }
  est.c_f = 1.0;
  est.threshold = params.gamma;
  est.violation_fraction = fraction_below(est.values, est.threshold);
  return est;
}

GoodnessEstimate estimate_goodness_sign(const Matrix& distance, std::span<const int> labels,
                                        std::span<const double> point_weights,
                                        const GoodnessParams& params, std::uint64_t seed,
                                        std::size_t max_pairs) {
  params.validate();
  check_square(distance);
  const std::size_t n = distance.rows();
  if (point_weights.size() != n) throw Error(Errc::shape, "one weight per point expected");
  const auto cls = split_classes(n, labels);
  const auto sgn = [](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); };

  GoodnessEstimate est;
  est.values.resize(n);
  for (std::size_t x = 0; x < n; ++x) {
    const bool positive = labels[x] == 1;
    est.values[x] = pair_mean(positive ? cls.pos : cls.neg, positive ? cls.neg : cls.pos,
                              max_pairs, derive_seed(seed, {x}), est.sampled,
                              [&](std::size_t a, std::size_t b) {
                                return point_weights[a] * point_weights[b] *
                                       sgn(distance(x, b) - distance(x, a));
                              });
  }
  double lo = 1.0;
  double hi = -1.0;
  for (double d : distance.data()) {
    const double s = sgn(-d);
    lo = std::min(lo, s);
    hi = std::max(hi, s);
  }
  est.c_f = hi - lo;
  est.threshold = est.c_f * params.gamma;
  est.violation_fraction = fraction_below(est.values, est.threshold);
  return est;
}

double estimate_surrogate_goodness(const Matrix& kernel, std::span<const int> labels,
                                   const TransferFunction& f, const WeightFunction& w,
                                   const LossFunction& loss, std::uint64_t seed,
                                   std::size_t max_pairs) {
  if (!loss.is_lipschitz()) throw Error(Errc::argument, "surrogate goodness needs a Lipschitz loss");
  const auto g = conditional_means(kernel, labels, f, w, seed, max_pairs);
  double total = 0.0;
  for (double v : g) total += loss(v);
  return total / static_cast<double>(g.size());
}

double planted_noise_budget(double gamma) { return 0.5 * (1.0 - gamma); }

PlantedInstance plant_good_similarity(std::size_t n, const GoodnessParams& params, double noise,
                                      std::uint64_t seed) {
  params.validate();
  if (n < 4 || n % 2 != 0) throw Error(Errc::argument, "planted instances need an even n >= 4");
  if (!(noise >= 0.0)) throw Error(Errc::construction, "noise must be non-negative");
  if (params.b_bound < 1.0) throw Error(Errc::construction, "the unit witness weight needs B >= 1");
  const double within = 1.0 - noise;
  const double cross = -within;
  // Noise budget: (within - cross) / 2 - gamma.
  if (noise > within - params.gamma) {
    throw Error(Errc::construction, "noise " + std::to_string(noise) +
                                        " exceeds the budget for gamma " +
                                        std::to_string(params.gamma));
  }

  Rng rng(seed);
  std::vector<int> raw(n);
  for (std::size_t i = 0; i < n; ++i) raw[i] = i < n / 2 ? 1 : 0;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(std::span(order));
  const auto reversed_count = static_cast<std::size_t>(std::floor(params.epsilon * static_cast<double>(n)));
  std::vector<bool> reversed(n, false);
  std::vector<std::size_t> reversed_points(order.begin(), order.begin() + reversed_count);
  std::sort(reversed_points.begin(), reversed_points.end());
  for (auto i : reversed_points) reversed[i] = true;

  Matrix k(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) {
        k(i, j) = 1.0;
        continue;
      }
      const bool same = raw[i] == raw[j];
      const double base = (same != reversed[i]) ? within : cross;
      k(i, j) = base + (noise > 0.0 ? rng.uniform(-noise, noise) : 0.0);
    }
  }

  PlantedInstance inst{make_dataset(raw, std::nullopt, std::move(k)),
                       WeightFunction::constant(1.0, params.b_bound),
                       TransferFunction::ramp(0.5),
                       within,
                       cross,
                       noise,
                       std::move(reversed_points)};
  return inst;
}

namespace {

// K(x, y) = l(x) V(x, y) for positive y, 0 for negative y, unit diagonal.
template <class Draw>
Dataset plant_signed_differences(std::size_t n, std::uint64_t seed, Draw draw) {
  if (n < 4) throw Error(Errc::argument, "need at least 4 points");
  Rng rng(seed);
  std::vector<int> raw(n);
  for (std::size_t i = 0; i < n; ++i) raw[i] = static_cast<int>(i % 2);
  Matrix k(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const double li = raw[i] == 1 ? 1.0 : -1.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) {
        k(i, j) = 1.0;
      } else if (raw[j] == 1) {
        k(i, j) = li * draw(rng);
      }
    }
  }
  return make_dataset(raw, std::nullopt, std::move(k));
}

}  // namespace

Dataset plant_sign_favoring(std::size_t n, std::uint64_t seed) {
  return plant_signed_differences(n, seed, [](Rng& rng) {
    const double sign = rng.uniform() < 0.7 ? 1.0 : -1.0;
    return sign * std::pow(10.0, -3.0 * rng.uniform());
  });
}

Dataset plant_linear_margin(std::size_t n, std::uint64_t seed) {
  return plant_signed_differences(n, seed, [](Rng& rng) {
    const double a = rng.uniform(0.05, 0.1);
    return rng.uniform() < 0.5 ? a : -0.25 * a;
  });
}

std::size_t theorem2_landmarks(const GoodnessParams& params) {
  params.validate();
  const double d = 8.0 / (params.gamma * params.gamma) *
                   std::log(2.0 / (params.delta * params.epsilon_one));
  return static_cast<std::size_t>(std::ceil(d));
}

std::size_t theorem7_landmarks(const GoodnessParams& params, double lipschitz) {
  params.validate();
  if (!(lipschitz > 0.0)) throw Error(Errc::argument, "Lipschitz constant must be positive");
  const double b = params.b_bound;
  const double e1 = params.epsilon_one;
  const double d = 16.0 * b * b * lipschitz * lipschitz / (e1 * e1) *
                   std::log(4.0 * b / (params.delta * e1));
  return static_cast<std::size_t>(std::ceil(std::max(d, 1.0)));
}

namespace {

// g(x) = (1/d) sum_j w(p_j, q_j) f(K(x, p_j) - K(x, q_j)) for every point.
std::vector<double> landmark_scores(const Matrix& k, const LandmarkPairSet& pairs,
                                    const TransferFunction& f, const WeightFunction& w) {
  std::vector<double> g(k.rows(), 0.0);
  const double d = static_cast<double>(pairs.size());
  for (std::size_t x = 0; x < k.rows(); ++x) {
    double s = 0.0;
    for (const auto& p : pairs.pairs) s += w(p.pos, p.neg) * apply(f, k(x, p.pos) - k(x, p.neg));
    g[x] = s / d;
  }
  return g;
}

struct PlantedTrial {
  PlantedInstance instance;
  Matrix k;
  LandmarkPairSet pairs;
};

PlantedTrial planted_trial(const GoodnessParams& params, const VerifyOptions& options,
                           std::size_t d, std::uint64_t seed) {
  const double noise = options.noise.value_or(0.5 * planted_noise_budget(params.gamma));
  auto inst = plant_good_similarity(options.n, params, noise, derive_seed(seed, {0}));
  const Kernel kernel(inst.dataset, KernelSpec{});
  std::vector<std::size_t> ids(inst.dataset.size());
  std::iota(ids.begin(), ids.end(), std::size_t{0});
  Matrix k = kernel.block(ids, ids);
  auto pairs = random_pairs(binary_subset(inst.dataset, ids), d, derive_seed(seed, {1}));
  return {std::move(inst), std::move(k), std::move(pairs)};
}

void finish(TheoremReport& report, double delta) {
  report.failure_fraction =
      static_cast<double>(report.failures) / static_cast<double>(report.trials);
  report.allowed_failure_fraction = 2.0 * delta;
  report.pass = report.failure_fraction <= report.allowed_failure_fraction;
}

}  // namespace

TheoremReport verify_theorem2(const GoodnessParams& params, std::size_t trials,
                              std::uint64_t master_seed, const VerifyOptions& options) {
  params.validate();
  if (trials == 0) throw Error(Errc::argument, "need at least one trial");
  TheoremReport report;
  report.theorem = "margin";
  report.landmarks = options.landmarks.value_or(theorem2_landmarks(params));
  report.trials = trials;
  report.allowed_excess = params.epsilon_one;
  for (std::size_t t = 0; t < trials; ++t) {
    auto trial = planted_trial(params, options, report.landmarks, derive_seed(master_seed, {t}));
    const auto& labels = trial.instance.dataset.labels;
    const auto g = landmark_scores(trial.k, trial.pairs, trial.instance.transfer,
                                   trial.instance.weights);
    std::vector<std::pair<double, int>> scored;
    scored.reserve(g.size());
    for (std::size_t x = 0; x < g.size(); ++x) scored.emplace_back(g[x], labels[x]);
    const double error = margin_error(scored, params.gamma / 2.0);
    const auto est = estimate_goodness_pairs(trial.k, labels, trial.instance.transfer,
                                             trial.instance.weights, params);
    report.trial_errors.push_back(error);
    report.trial_epsilons.push_back(est.violation_fraction);
    if (error > params.epsilon + params.epsilon_one) ++report.failures;
  }
  finish(report, params.delta);
  return report;
}

TheoremReport verify_theorem7(const GoodnessParams& params, const LossFunction& loss,
                              std::size_t trials, std::uint64_t master_seed,
                              const VerifyOptions& options) {
  params.validate();
  if (!loss.is_lipschitz()) throw Error(Errc::argument, "surrogate check needs a Lipschitz loss");
  if (trials == 0) throw Error(Errc::argument, "need at least one trial");
  TheoremReport report;
  report.theorem = "surrogate";
  report.landmarks =
      options.landmarks.value_or(theorem7_landmarks(params, loss.lipschitz_constant()));
  report.trials = trials;
  report.allowed_excess = params.epsilon_one;
  for (std::size_t t = 0; t < trials; ++t) {
    auto trial = planted_trial(params, options, report.landmarks, derive_seed(master_seed, {t}));
    const auto& labels = trial.instance.dataset.labels;
    const auto g = landmark_scores(trial.k, trial.pairs, trial.instance.transfer,
                                   trial.instance.weights);
    double total = 0.0;
    for (std::size_t x = 0; x < g.size(); ++x) total += loss(labels[x] * g[x]);
    const double mean_loss = total / static_cast<double>(g.size());
    const double eps = estimate_surrogate_goodness(trial.k, labels, trial.instance.transfer,
                                                   trial.instance.weights, loss);
    report.trial_errors.push_back(mean_loss);
    report.trial_epsilons.push_back(eps);
    if (mean_loss > eps + params.epsilon_one) ++report.failures;
  }
  finish(report, params.delta);
  return report;
}

LipschitzReport verify_lipschitz_perturbation(const Matrix& kernel, std::span<const int> labels,
                                              const TransferFunction& f,
                                              const TransferFunction& f_prime,
                                              const WeightFunction& w, const LossFunction& loss) {
  if (!loss.is_lipschitz()) throw Error(Errc::argument, "perturbation bound needs a Lipschitz loss");
  check_square(kernel);
  const std::size_t n = kernel.rows();
  const auto cls = split_classes(n, labels);
  constexpr auto kNoSampling = static_cast<std::size_t>(-1);

  LipschitzReport rep;
  for (std::size_t x = 0; x < n; ++x) {
    const bool positive = labels[x] == 1;
    for (auto a : positive ? cls.pos : cls.neg) {
      for (auto b : positive ? cls.neg : cls.pos) {
        const double v = kernel(x, a) - kernel(x, b);
        rep.r = std::max(rep.r, std::abs(apply(f, v) - apply(f_prime, v)));
      }
    }
  }
  rep.bound = rep.r * w.bound();
  rep.loss_bound = loss.lipschitz_constant() * rep.bound;

  const auto g = conditional_means(kernel, labels, f, w, 0, kNoSampling);
  const auto g_prime = conditional_means(kernel, labels, f_prime, w, 0, kNoSampling);
  double loss_f = 0.0;
  double loss_fp = 0.0;
  for (std::size_t x = 0; x < n; ++x) {
    const double gap = std::abs(g[x] - g_prime[x]);
    rep.max_pointwise_gap = std::max(rep.max_pointwise_gap, gap);
    if (gap > rep.bound) ++rep.pointwise_violations;
    loss_f += loss(g[x]);
    loss_fp += loss(g_prime[x]);
  }
  rep.loss_gap = std::abs(loss_f / static_cast<double>(n) - loss_fp / static_cast<double>(n));
  rep.loss_violation = rep.loss_gap > rep.loss_bound;
  rep.pointwise_slack = rep.bound - rep.max_pointwise_gap;
  rep.loss_slack = rep.loss_bound - rep.loss_gap;
  rep.pass = rep.pointwise_violations == 0 && !rep.loss_violation;
  return rep;
}

namespace {

TransferFunction random_transfer(Rng& rng) {
  const double u = rng.uniform();
  if (u < 0.15) return TransferFunction::sign();
  if (u < 0.3) return TransferFunction::identity();
  return TransferFunction::ramp(std::pow(10.0, rng.uniform(-1.0, 3.0)));
}

}  // namespace

LipschitzSuiteReport verify_lipschitz_suite(std::size_t configurations, std::uint64_t seed,
                                            const LossFunction& loss, std::size_t max_n) {
  if (max_n < 3) throw Error(Errc::argument, "max_n must be at least 3");
  LipschitzSuiteReport suite;
  suite.configurations = configurations;
  suite.min_pointwise_slack = std::numeric_limits<double>::infinity();
  suite.min_loss_slack = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < configurations; ++c) {
    Rng rng(derive_seed(seed, {c}));
    const std::size_t n = 3 + rng.index(max_n - 2);
    std::vector<int> labels(n);
    for (auto& l : labels) l = rng.uniform() < 0.5 ? 1 : -1;
    labels[0] = 1;
    labels[1] = -1;
    Matrix k(n, n);
    for (double& v : k.data()) v = rng.uniform(-1.0, 1.0);
    const double b = rng.uniform(0.5, 3.0);
    WeightFunction w = WeightFunction::constant(b, b);
    if (rng.uniform() < 0.7) {
      Matrix t(n, n);
      for (double& v : t.data()) v = rng.uniform(-b, b);
      w = WeightFunction::table(std::move(t), b);
    }
    const auto f = random_transfer(rng);
    const auto f_prime = random_transfer(rng);
    const auto rep = verify_lipschitz_perturbation(k, labels, f, f_prime, w, loss);
    suite.pointwise_violations += rep.pointwise_violations;
    if (rep.loss_violation) ++suite.loss_violations;
    suite.min_pointwise_slack = std::min(suite.min_pointwise_slack, rep.pointwise_slack);
    suite.min_loss_slack = std::min(suite.min_loss_slack, rep.loss_slack);
  }
  suite.pass = suite.pointwise_violations == 0 && suite.loss_violations == 0;
  return suite;
}

nlohmann::json to_json(const LipschitzSuiteReport& report) {
  return {{"configurations", report.configurations},
          {"pointwise_violations", report.pointwise_violations},
          {"loss_violations", report.loss_violations},
          {"min_pointwise_slack", report.min_pointwise_slack},
          {"min_loss_slack", report.min_loss_slack},
          {"pass", report.pass}};
}

nlohmann::json to_json(const TheoremReport& report) {
  return {{"theorem", report.theorem},
          {"prescribed_d", report.landmarks},
          {"trials", report.trials},
          {"trial_errors", report.trial_errors},
          {"trial_epsilons", report.trial_epsilons},
          {"allowed_excess", report.allowed_excess},
          {"failures", report.failures},
          {"failure_fraction", report.failure_fraction},
          {"allowed_failure_fraction", report.allowed_failure_fraction},
          {"pass", report.pass}};
}

nlohmann::json to_json(const LipschitzReport& report) {
  return {{"r", report.r},
          {"bound", report.bound},
          {"max_pointwise_gap", report.max_pointwise_gap},
          {"pointwise_violations", report.pointwise_violations},
          {"loss_gap", report.loss_gap},
          {"loss_bound", report.loss_bound},
          {"loss_violation", report.loss_violation},
          {"pointwise_slack", report.pointwise_slack},
          {"loss_slack", report.loss_slack},
          {"pass", report.pass}};
}

}  // namespace simlearn
