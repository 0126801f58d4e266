#include "simlearn/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "simlearn/random.hpp"

namespace simlearn {

LossFunction LossFunction::hinge(double margin) {
  if (!(margin > 0.0)) throw Error(Errc::argument, "hinge margin must be positive");
  return {Kind::hinge, margin};
}

double LossFunction::lipschitz_constant() const noexcept {
  switch (kind) {
    case Kind::hinge: return 1.0 / margin;
    case Kind::logistic: return 1.0;
    default: return 0.0;
  }
}

double LossFunction::operator()(double t) const noexcept {
  switch (kind) {
    case Kind::hinge: return std::max(0.0, 1.0 - t / margin);
    case Kind::logistic:
      // log(1 + exp(-t)), stable for both signs
      return t > 0.0 ? std::log1p(std::exp(-t)) : -t + std::log1p(std::exp(t));
    case Kind::zero_one: return t <= 0.0 ? 1.0 : 0.0;
    case Kind::margin_indicator: return t < margin ? 1.0 : 0.0;
  }
  return 0.0;
}

LossFunction parse_loss(std::string_view text) {
  if (text == "hinge") return LossFunction::hinge();
  if (text == "logistic") return LossFunction::logistic();
  throw Error(Errc::config, "unknown loss '" + std::string(text) + "' (hinge|logistic)");
}

namespace {

void check_problem(const Matrix& x, std::span<const int> labels) {
  if (x.rows() != labels.size()) throw Error(Errc::shape, "rows and labels differ in count");
  bool pos = false;
  bool neg = false;
  for (int y : labels) {
    if (y == 1) {
      pos = true;
    } else if (y == -1) {
      neg = true;
    } else {
      throw Error(Errc::argument, "training labels must be -1 or +1");
    }
  }
  if (!pos || !neg) throw Error(Errc::degenerate, "training data holds a single class");
}

double softplus_neg(double m) {  // log(1 + exp(-m))
  return m > 0.0 ? std::log1p(std::exp(-m)) : -m + std::log1p(std::exp(m));
}

double sigmoid_neg(double m) {  // 1 / (1 + exp(m))
  if (m >= 0.0) {
    const double e = std::exp(-m);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(m));
}

double margin_of(const Matrix& x, std::size_t i, std::span<const double> v, bool bias) {
  double m = dot(x.row(i), v.first(x.cols()));
  if (bias) m += v[x.cols()];
  return m;
}

}  // namespace

double hinge_primal_objective(const Matrix& x, std::span<const int> labels,
                              std::span<const double> w, double b, double c) {
  if (w.size() != x.cols()) throw Error(Errc::shape, "weight length mismatch");
  double reg = dot(w, w) + b * b;
  double loss = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    loss += std::max(0.0, 1.0 - labels[i] * (dot(w, x.row(i)) + b));
  }
  return 0.5 * reg + c * loss;
}

LinearSolution solve_hinge_dual(const Matrix& x, std::span<const int> labels, double c,
                                std::uint64_t seed, const TrainOptions& options) {
  check_problem(x, labels);
  if (!(c > 0.0)) throw Error(Errc::argument, "penalty C must be positive");
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  const double bias_feature = options.bias ? 1.0 : 0.0;

  std::vector<double> alpha(n, 0.0);
  std::vector<double> w(d, 0.0);
  double b = 0.0;
  std::vector<double> q_diag(n);
  for (std::size_t i = 0; i < n; ++i) q_diag[i] = dot(x.row(i), x.row(i)) + bias_feature;

  // Projected gradient of the (minimization form) dual at coordinate i.
  const auto projected = [&](std::size_t i, double g) {
    if (alpha[i] <= 0.0) return std::min(g, 0.0);
    if (alpha[i] >= c) return std::max(g, 0.0);
    return g;
  };
  const auto gradient = [&](std::size_t i) {
    return labels[i] * (dot(w, x.row(i)) + b * bias_feature) - 1.0;
  };
  const auto dual_value = [&] {
    return std::accumulate(alpha.begin(), alpha.end(), 0.0) - 0.5 * (dot(w, w) + b * b);
  };

  Rng rng(seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});

  LinearSolution out;
  for (int epoch = 0; epoch < options.max_epochs; ++epoch) {
    rng.shuffle(std::span(order));
    for (auto i : order) {
      const double g = gradient(i);
      const double pg = projected(i, g);
      if (std::abs(pg) <= 1e-12) continue;
      const double old = alpha[i];
      const double next =
          q_diag[i] > 0.0 ? std::clamp(old - g / q_diag[i], 0.0, c) : (g < 0.0 ? c : 0.0);
      const double step = (next - old) * labels[i];
      if (step == 0.0) continue;
      alpha[i] = next;
      auto row = x.row(i);
      for (std::size_t k = 0; k < d; ++k) w[k] += step * row[k];
      b += step * bias_feature;
    }
    out.stats.iterations = epoch + 1;
    const double dual = dual_value();
    if (!std::isfinite(dual)) throw Error(Errc::numeric, "dual objective is not finite");
    out.stats.dual_objective.push_back(dual);

    double residual = 0.0;
    for (std::size_t i = 0; i < n; ++i) residual = std::max(residual, std::abs(projected(i, gradient(i))));
    out.stats.kkt_residual = residual;
    if (residual <= options.kkt_tol) {
      out.stats.converged = true;
      break;
    }
  }
  out.w = std::move(w);
  out.b = b;
  return out;
}

double logistic_objective(const Matrix& x, std::span<const int> labels,
                          std::span<const double> v, double c, bool bias) {
  if (v.size() != x.cols() + (bias ? 1 : 0)) throw Error(Errc::shape, "parameter length mismatch");
  double loss = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) loss += softplus_neg(labels[i] * margin_of(x, i, v, bias));
  return 0.5 * dot(v, v) + c * loss;
}

std::vector<double> logistic_gradient(const Matrix& x, std::span<const int> labels,
                                      std::span<const double> v, double c, bool bias) {
  if (v.size() != x.cols() + (bias ? 1 : 0)) throw Error(Errc::shape, "parameter length mismatch");
  std::vector<double> g(v.begin(), v.end());
  const std::size_t d = x.cols();
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const double y = labels[i];
    const double coef = -c * y * sigmoid_neg(y * margin_of(x, i, v, bias));
    auto row = x.row(i);
    for (std::size_t k = 0; k < d; ++k) g[k] += coef * row[k];
    if (bias) g[d] += coef;
  }
  return g;
}

LinearSolution solve_logistic(const Matrix& x, std::span<const int> labels, double c,
                              const TrainOptions& options) {
  check_problem(x, labels);
  if (!(c > 0.0)) throw Error(Errc::argument, "penalty C must be positive");
  const std::size_t dim = x.cols() + (options.bias ? 1 : 0);
  std::vector<double> v(dim, 0.0);
  std::vector<double> trial(dim);
  double value = logistic_objective(x, labels, v, c, options.bias);
  double step = 1.0;

  LinearSolution out;
  for (int it = 0; it < options.max_iterations; ++it) {
    const auto g = logistic_gradient(x, labels, v, c, options.bias);
    const double gnorm2 = dot(g, g);
    out.stats.gradient_norm = std::sqrt(gnorm2);
    out.stats.iterations = it;
    if (out.stats.gradient_norm <= options.grad_tol) {
      out.stats.converged = true;
      break;
    }
    step *= 2.0;
    double next_value;
    while (true) {
      for (std::size_t k = 0; k < dim; ++k) trial[k] = v[k] - step * g[k];
      next_value = logistic_objective(x, labels, trial, c, options.bias);
      if (next_value <= value - 1e-4 * step * gnorm2) break;
      step *= 0.5;
      if (step < 1e-300) break;
    }
    if (!std::isfinite(next_value)) throw Error(Errc::numeric, "logistic objective is not finite");
    if (next_value >= value) break;  // line search stalled at machine precision
    v.swap(trial);
    value = next_value;
  }
  out.b = options.bias ? v[x.cols()] : 0.0;
  v.resize(x.cols());
  out.w = std::move(v);
  return out;
}

LinearModel train(const EmbeddedDataset& embedded, const LossFunction& loss, double c_penalty,
                  std::uint64_t seed, const TrainOptions& options) {
  if (embedded.labels.size() != embedded.size()) {
    throw Error(Errc::shape, "embedded data carries no labels");
  }
  LinearSolution sol;
  LinearModel model;
  model.c_penalty = c_penalty;
  switch (loss.kind) {
    case LossFunction::Kind::hinge:
      sol = solve_hinge_dual(embedded.values, embedded.labels, c_penalty, seed, options);
      model.loss_kind = LossKind::hinge;
      break;
    case LossFunction::Kind::logistic:
      sol = solve_logistic(embedded.values, embedded.labels, c_penalty, options);
      model.loss_kind = LossKind::logistic;
      break;
    default: throw Error(Errc::argument, "train supports hinge and logistic losses only");
  }
  const double d = static_cast<double>(embedded.dim());
  model.weights.resize(sol.w.size());
  for (std::size_t k = 0; k < sol.w.size(); ++k) {
    model.weights[k] = d * sol.w[k];
    if (!std::isfinite(model.weights[k])) throw Error(Errc::numeric, "non-finite weight");
  }
  model.bias = sol.b;
  return model;
}

std::vector<double> default_c_grid() { return {1.0, 10.0, 100.0, 1000.0}; }

CSelection select_c(const EmbeddedDataset& train_embedded, const EmbeddedDataset& valid_embedded,
                    const LossFunction& loss, std::span<const double> grid, std::uint64_t seed,
                    const TrainOptions& options) {
  if (grid.empty()) throw Error(Errc::argument, "empty C grid");
  CSelection best;
  bool have = false;
  for (double c : grid) {
    auto model = train(train_embedded, loss, c, seed, options);
    const double acc = accuracy(model, valid_embedded);
    if (!have || acc > best.validation_accuracy ||
        (acc == best.validation_accuracy && c < best.c)) {
      best = {std::move(model), c, acc};
      have = true;
    }
  }
  return best;
}

double eval_loss(const LinearModel& model, const EmbeddedDataset& embedded,
                 const LossFunction& loss) {
  if (embedded.labels.size() != embedded.size()) throw Error(Errc::shape, "no labels");
  if (embedded.size() == 0) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < embedded.size(); ++i) {
    total += loss(embedded.labels[i] * decision_value(model, embedded.values.row(i)));
  }
  return total / static_cast<double>(embedded.size());
}

double accuracy(const LinearModel& model, const EmbeddedDataset& embedded) {
  if (embedded.labels.size() != embedded.size()) throw Error(Errc::shape, "no labels");
  if (embedded.size() == 0) return 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < embedded.size(); ++i) {
    if (classify(model, embedded.values.row(i)) == embedded.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(embedded.size());
}

nlohmann::json to_json(const LinearModel& model) {
  return {
      {"weights", model.weights},
      {"bias", model.bias},
      {"loss_kind", model.loss_kind == LossKind::hinge ? "hinge" : "logistic"},
      {"c_penalty", model.c_penalty},
      {"d", model.weights.size()},
  };
}

LinearModel model_from_json(const nlohmann::json& j) {
  try {
    LinearModel m;
    m.weights = j.at("weights").get<std::vector<double>>();
    m.bias = j.at("bias").get<double>();
    const auto kind = j.at("loss_kind").get<std::string>();
    if (kind == "hinge") {
      m.loss_kind = LossKind::hinge;
    } else if (kind == "logistic") {
      m.loss_kind = LossKind::logistic;
    } else {
      throw Error(Errc::format, "unknown loss_kind '" + kind + "'");
    }
    m.c_penalty = j.at("c_penalty").get<double>();
    if (j.at("d").get<std::size_t>() != m.weights.size()) {
      throw Error(Errc::format, "model d does not match weight count");
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::format, std::string("bad model record: ") + e.what());
  }
}

}  // namespace simlearn
