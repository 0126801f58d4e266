#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "simlearn/data.hpp"
#include "simlearn/matrix.hpp"
#include "simlearn/trainer.hpp"
#include "simlearn/transfer.hpp"

namespace simlearn {

struct GoodnessParams {
  double epsilon = 0.0;
  double gamma = 0.1;
  double b_bound = 1.0;
  double epsilon_one = 0.05;
  double delta = 0.1;

  void validate() const;
};

// Pair weighting w(x', x'') bounded by B in absolute value.
class WeightFunction {
 public:
  static WeightFunction constant(double value, double bound);
  static WeightFunction table(Matrix values, double bound);
  // w(x', x'') = a(x') * a(x''); bound = max|a|^2.
  static WeightFunction product(std::span<const double> point_weights);

  double operator()(std::size_t a, std::size_t b) const noexcept {
    return table_ ? (*table_)(a, b) : value_;
  }
  double bound() const noexcept { return bound_; }
  bool is_constant() const noexcept { return !table_; }

  WeightFunction scaled(double factor) const;

 private:
  double value_ = 0.0;
  double bound_ = 0.0;
  std::optional<Matrix> table_;
};

struct GoodnessEstimate {
  double violation_fraction = 0.0;
  std::vector<double> values;  // per point
  double c_f = 0.0;
  double threshold = 0.0;  // a point violates when its value < threshold
  bool sampled = false;    // some conditional means were estimated by sampling
};

// Cap on (same-class, other-class) pairs enumerated per point before the
// conditional mean is estimated from a seeded sample of that many pairs.
inline constexpr std::size_t kMaxEnumeratedPairs = 1'000'000;

// G(x) = mean over x' with l(x') = l(x), x'' with l(x'') != l(x) of
//        w(x', x'') f(K(x, x') - K(x, x'')).
// x itself takes part as an x' candidate. Labels are -1/+1; K is n x n.
std::vector<double> conditional_means(const Matrix& kernel, std::span<const int> labels,
                                      const TransferFunction& f, const WeightFunction& w,
                                      std::uint64_t seed = 0,
                                      std::size_t max_pairs = kMaxEnumeratedPairs,
                                      bool* sampled = nullptr);

// Fraction of points with G(x) < C_f * gamma; C_f from the observed entries of K.
GoodnessEstimate estimate_goodness_pairs(const Matrix& kernel, std::span<const int> labels,
                                         const TransferFunction& f, const WeightFunction& w,
                                         const GoodnessParams& params, std::uint64_t seed = 0,
                                         std::size_t max_pairs = kMaxEnumeratedPairs);

// Same, with K evaluated through a normalized kernel on a binary dataset.
GoodnessEstimate estimate_goodness_pairs(const Dataset& dataset, const KernelSpec& spec,
                                         const TransferFunction& f, const WeightFunction& w,
                                         const GoodnessParams& params, std::uint64_t seed = 0);

// Singleton model: gap(x) = mean_{same}(a(x') K(x, x')) - mean_{other}(a(x') K(x, x'));
// violation when gap < gamma.
GoodnessEstimate estimate_goodness_bbs(const Matrix& kernel, std::span<const int> labels,
                                       std::span<const double> point_weights,
                                       const GoodnessParams& params);

// Distance model: value(x) = mean a(x') a(x'') sgn(d(x, x'') - d(x, x')); violation
// when value < C_f * gamma with C_f taken over sgn(-d).
GoodnessEstimate estimate_goodness_sign(const Matrix& distance, std::span<const int> labels,
                                        std::span<const double> point_weights,
                                        const GoodnessParams& params, std::uint64_t seed = 0,
                                        std::size_t max_pairs = kMaxEnumeratedPairs);

// Mean L(G(x)) over all points. Requires a Lipschitz loss.
double estimate_surrogate_goodness(const Matrix& kernel, std::span<const int> labels,
                                   const TransferFunction& f, const WeightFunction& w,
                                   const LossFunction& loss, std::uint64_t seed = 0,
                                   std::size_t max_pairs = kMaxEnumeratedPairs);

// Two-cluster similarity with within-class level s_w = 1 - noise, cross-class
// level s_c = -s_w, entries perturbed uniformly by at most `noise`, unit
// diagonal. floor(epsilon * n) points get reversed rows. The witness is w = 1
// with the slope-1/2 ramp, which never clips a difference. Feasible when
// noise <= (s_w - s_c) / 2 - gamma.
struct PlantedInstance {
  Dataset dataset;
  WeightFunction weights;
  TransferFunction transfer;
  double within = 0.0;
  double cross = 0.0;
  double noise = 0.0;
  std::vector<std::size_t> reversed_points;
};

PlantedInstance plant_good_similarity(std::size_t n, const GoodnessParams& params, double noise,
                                      std::uint64_t seed);

// Largest noise level plant_good_similarity accepts for this gamma.
double planted_noise_budget(double gamma);

// Similarity whose landmark differences carry the label only in their sign;
// magnitudes are log-uniform over three decades.
Dataset plant_sign_favoring(std::size_t n, std::uint64_t seed);

// Similarity whose landmark differences have a label-independent sign
// distribution but a label-dependent mean, so magnitudes carry the signal.
Dataset plant_linear_margin(std::size_t n, std::uint64_t seed);

// ceil((8 / gamma^2) ln(2 / (delta eps1)))
std::size_t theorem2_landmarks(const GoodnessParams& params);
// ceil((16 B^2 C_L^2 / eps1^2) ln(4B / (delta eps1)))
std::size_t theorem7_landmarks(const GoodnessParams& params, double lipschitz);

struct VerifyOptions {
  std::size_t n = 200;
  std::optional<double> noise;       // default: half the planted noise budget
  std::optional<std::size_t> landmarks;  // default: the prescribed count
};

struct TheoremReport {
  std::string theorem;
  std::size_t landmarks = 0;
  std::size_t trials = 0;
  std::vector<double> trial_errors;
  std::vector<double> trial_epsilons;  // goodness level of each planted instance
  double allowed_excess = 0.0;         // eps1
  std::size_t failures = 0;
  double failure_fraction = 0.0;
  double allowed_failure_fraction = 0.0;
  bool pass = false;
};

// Margin-gamma/2 error of the landmark classifier built with the planted
// weights; a trial fails when error > epsilon + eps1. Passes when at most
// 2 delta of trials fail.
TheoremReport verify_theorem2(const GoodnessParams& params, std::size_t trials,
                              std::uint64_t master_seed, const VerifyOptions& options = {});

// Mean L(l(x) g(x)) with planted weights; a trial fails when it exceeds the
// instance's surrogate goodness plus eps1.
TheoremReport verify_theorem7(const GoodnessParams& params, const LossFunction& loss,
                              std::size_t trials, std::uint64_t master_seed,
                              const VerifyOptions& options = {});

struct LipschitzReport {
  double r = 0.0;                  // max |f(v) - f'(v)| over the differences used
  double bound = 0.0;              // r * B
  double max_pointwise_gap = 0.0;  // max_x |G_f(x) - G_f'(x)|
  std::size_t pointwise_violations = 0;
  double loss_gap = 0.0;   // |mean L(G_f) - mean L(G_f')|
  double loss_bound = 0.0;  // C_L * r * B
  bool loss_violation = false;
  double pointwise_slack = 0.0;  // bound - max_pointwise_gap
  double loss_slack = 0.0;
  bool pass = false;
};

LipschitzReport verify_lipschitz_perturbation(const Matrix& kernel, std::span<const int> labels,
                                              const TransferFunction& f,
                                              const TransferFunction& f_prime,
                                              const WeightFunction& w, const LossFunction& loss);

struct LipschitzSuiteReport {
  std::size_t configurations = 0;
  std::size_t pointwise_violations = 0;
  std::size_t loss_violations = 0;
  double min_pointwise_slack = 0.0;
  double min_loss_slack = 0.0;
  bool pass = false;
};

// Random kernels (n <= max_n), labels, transfer pairs and bounded weight
// tables, each checked with verify_lipschitz_perturbation.
LipschitzSuiteReport verify_lipschitz_suite(std::size_t configurations, std::uint64_t seed,
                                            const LossFunction& loss, std::size_t max_n = 30);

nlohmann::json to_json(const TheoremReport& report);
nlohmann::json to_json(const LipschitzSuiteReport& report);
nlohmann::json to_json(const LipschitzReport& report);

}  // namespace simlearn
