#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "simlearn/embedding.hpp"
#include "simlearn/matrix.hpp"

namespace simlearn {

// Loss evaluated on the signed margin t = y * g(x).
struct LossFunction {
  enum class Kind { hinge, logistic, zero_one, margin_indicator };
  Kind kind = Kind::hinge;
  double margin = 1.0;  // hinge margin gamma, or the indicator threshold

  static LossFunction hinge(double margin = 1.0);
  static LossFunction logistic() { return {Kind::logistic, 1.0}; }
  static LossFunction zero_one() { return {Kind::zero_one, 0.0}; }
  static LossFunction margin_indicator(double margin) { return {Kind::margin_indicator, margin}; }

  // C_L; 0 for the non-Lipschitz indicator losses.
  double lipschitz_constant() const noexcept;
  bool is_lipschitz() const noexcept { return kind == Kind::hinge || kind == Kind::logistic; }

  double operator()(double t) const noexcept;
};

LossFunction parse_loss(std::string_view text);

struct TrainOptions {
  bool bias = true;         // append a constant-1 coordinate (regularized)
  double kkt_tol = 1e-3;    // hinge: max projected-gradient magnitude
  int max_epochs = 1000;    // hinge
  double grad_tol = 1e-4;   // logistic: gradient norm
  int max_iterations = 20000;  // logistic
};

struct TrainStats {
  int iterations = 0;
  bool converged = false;
  double kkt_residual = 0.0;           // hinge only
  std::vector<double> dual_objective;  // hinge: value after every epoch
  double gradient_norm = 0.0;          // logistic only
};

// Raw primal solution over the unscaled embedding: g(z) = <w, z> + b.
struct LinearSolution {
  std::vector<double> w;
  double b = 0.0;
  TrainStats stats;
};

// 1/2 (|w|^2 + b^2) + C sum_i max(0, 1 - y_i (<w, x_i> + b)).
double hinge_primal_objective(const Matrix& x, std::span<const int> labels,
                              std::span<const double> w, double b, double c);

// L2-regularized L1-hinge SVM by dual coordinate descent. Coordinates are
// visited in a seeded random order each epoch.
LinearSolution solve_hinge_dual(const Matrix& x, std::span<const int> labels, double c,
                                std::uint64_t seed, const TrainOptions& options = {});

// 1/2 |v|^2 + C sum_i log(1 + exp(-y_i <v, x~_i>)), v = (w, b) when bias is on.
double logistic_objective(const Matrix& x, std::span<const int> labels,
                          std::span<const double> v, double c, bool bias);
std::vector<double> logistic_gradient(const Matrix& x, std::span<const int> labels,
                                      std::span<const double> v, double c, bool bias);

// Gradient descent with backtracking line search.
LinearSolution solve_logistic(const Matrix& x, std::span<const int> labels, double c,
                              const TrainOptions& options = {});

// Trains on the embedded rows and stores weights as d * w so that
// decision_value's 1/d factor reproduces <w, z> + b.
LinearModel train(const EmbeddedDataset& embedded, const LossFunction& loss, double c_penalty,
                  std::uint64_t seed, const TrainOptions& options = {});

std::vector<double> default_c_grid();

struct CSelection {
  LinearModel model;
  double c = 0.0;
  double validation_accuracy = 0.0;
};

// One model per C; keeps the best validation accuracy, ties to the smaller C.
CSelection select_c(const EmbeddedDataset& train_embedded, const EmbeddedDataset& valid_embedded,
                    const LossFunction& loss, std::span<const double> grid, std::uint64_t seed,
                    const TrainOptions& options = {});

double eval_loss(const LinearModel& model, const EmbeddedDataset& embedded,
                 const LossFunction& loss);
double accuracy(const LinearModel& model, const EmbeddedDataset& embedded);

nlohmann::json to_json(const LinearModel& model);
LinearModel model_from_json(const nlohmann::json& j);

}  // namespace simlearn
