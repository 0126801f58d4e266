#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "simlearn/error.hpp"
#include "simlearn/trainer.hpp"
#include "test_util.hpp"

using namespace simlearn;

namespace {

Errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return Errc::aggregate;
}

EmbeddedDataset embedded(Matrix values, std::vector<int> labels) {
  EmbeddedDataset e;
  e.values = std::move(values);
  e.labels = std::move(labels);
  e.ids.resize(e.labels.size());
  for (std::size_t i = 0; i < e.ids.size(); ++i) e.ids[i] = i;
  return e;
}

double own_objective(const Matrix& x, const std::vector<int>& y, const LinearSolution& s,
                     double c, bool bias) {
  double obj = 0.5 * (bias ? s.b * s.b : 0.0);
  for (double w : s.w) obj += 0.5 * w * w;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    double g = bias ? s.b : 0.0;
    for (std::size_t k = 0; k < x.cols(); ++k) g += s.w[k] * x(r, k);
    obj += c * std::max(0.0, 1.0 - y[r] * g);
  }
  return obj;
}

}  // namespace

TEST_CASE("one-dimensional closed form") {
  const Matrix x(2, 1, {-1.0, 1.0});
  const std::vector<int> y = {-1, 1};
  TrainOptions opt;
  opt.bias = false;
  const auto sol = solve_hinge_dual(x, y, 1.0, 0, opt);
  CHECK(sol.w[0] == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(hinge_primal_objective(x, y, sol.w, 0.0, 1.0) == doctest::Approx(0.5).epsilon(1e-3));

  // Line search over [-3, 3] at step 1e-3.
  double best = 1e300, arg = 0.0;
  for (int i = -3000; i <= 3000; ++i) {
    const double w = i * 1e-3;
    const double obj = 0.5 * w * w + std::max(0.0, 1.0 - w) + std::max(0.0, 1.0 - w);
    if (obj < best) {
      best = obj;
      arg = w;
    }
  }
  CHECK(arg == doctest::Approx(1.0));
  CHECK(best == doctest::Approx(0.5));
}

TEST_CASE("training input errors") {
  const auto e = embedded(Matrix(3, 1, {0.1, 0.2, 0.3}), {1, 1, 1});
  CHECK(code_of([&] { train(e, LossFunction::hinge(), 1.0, 0); }) == Errc::degenerate);
  CHECK(code_of([&] { train(e, LossFunction::logistic(), 1.0, 0); }) == Errc::degenerate);
  const auto ok = embedded(Matrix(2, 1, {0.1, -0.2}), {1, -1});
  CHECK(code_of([&] { train(ok, LossFunction::zero_one(), 1.0, 0); }) == Errc::argument);
  CHECK(code_of([&] { train(ok, LossFunction::hinge(), 0.0, 0); }) == Errc::argument);
}

TEST_CASE("separable blobs are fit without training errors") {
  std::mt19937_64 gen(17);
  std::normal_distribution<double> noise(0.0, 0.1);
  const std::size_t n = 60;
  Matrix x(n, 2);
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = i % 2 ? 1 : -1;
    x(i, 0) = 0.5 * y[i] + noise(gen);
    x(i, 1) = -0.3 * y[i] + noise(gen);
  }
  const auto e = embedded(x, y);
  for (auto loss : {LossFunction::hinge(), LossFunction::logistic()}) {
    const auto m = train(e, loss, 100.0, 3);
    CHECK(accuracy(m, e) == 1.0);
  }
}

TEST_CASE("hinge solution matches the grid oracle") {
  std::mt19937_64 gen(99);
  std::uniform_real_distribution<double> cdist(0.05, 1.0);
  for (int trial = 0; trial < 6; ++trial) {
    const std::size_t n = 4 + gen() % 17;
    const bool two_d = trial % 2 == 0;
    auto x = testutil::random_matrix(n, two_d ? 2 : 1, gen);
    const auto y = testutil::random_binary_labels(n, gen);
    const double c = cdist(gen);
    TrainOptions opt;
    opt.bias = !two_d;
    const auto sol = solve_hinge_dual(x, y, c, gen(), opt);
    CHECK(sol.stats.converged);
    CHECK(sol.stats.kkt_residual <= 1e-3);
    const double obj = own_objective(x, y, sol, c, opt.bias);
    CHECK(obj <= oracle::hinge_grid_min(x, y, c) + 1e-2);
    CHECK(hinge_primal_objective(x, y, sol.w, sol.b, c) == doctest::Approx(obj));
  }
}

TEST_CASE("dual objective never decreases across epochs") {
  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 10 + gen() % 80;
    const std::size_t d = 1 + gen() % 10;
    const auto x = testutil::random_matrix(n, d, gen);
    const auto y = testutil::random_binary_labels(n, gen);
    const double c = std::pow(10.0, static_cast<double>(gen() % 4));
    const auto sol = solve_hinge_dual(x, y, c, gen());
    const auto& dual = sol.stats.dual_objective;
    REQUIRE_FALSE(dual.empty());
    CHECK(dual.front() >= 0.0);
    for (std::size_t k = 1; k < dual.size(); ++k) CHECK(dual[k] >= dual[k - 1] - 1e-12 * std::abs(dual[k - 1]));
    if (sol.stats.converged) CHECK(sol.stats.kkt_residual <= 1e-3);
  }
}

TEST_CASE("logistic gradient agrees with central differences") {
  std::mt19937_64 gen(71);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  int checked = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 5 + gen() % 20;
    const std::size_t d = 1 + gen() % 5;
    const bool bias = trial % 2 == 0;
    const auto x = testutil::random_matrix(n, d, gen);
    const auto y = testutil::random_binary_labels(n, gen);
    const double c = 0.5 + u(gen) * u(gen);
    std::vector<double> v(d + (bias ? 1 : 0));
    for (double& t : v) t = u(gen);
    const auto g = logistic_gradient(x, y, v, std::abs(c), bias);
    for (std::size_t k = 0; k < v.size(); ++k) {
      const double h = 1e-5;
      auto plus = v;
      auto minus = v;
      plus[k] += h;
      minus[k] -= h;
      const double fd = (logistic_objective(x, y, plus, std::abs(c), bias) -
                         logistic_objective(x, y, minus, std::abs(c), bias)) /
                        (2 * h);
      const double scale = std::max(1.0, std::abs(g[k]));
      CHECK(std::abs(fd - g[k]) / scale <= 1e-5);
      ++checked;
    }
  }
  CHECK(checked >= 100);
}

TEST_CASE("logistic training reaches a small gradient") {
  std::mt19937_64 gen(8);
  const auto x = testutil::random_matrix(40, 3, gen);
  const auto y = testutil::random_binary_labels(40, gen);
  const auto sol = solve_logistic(x, y, 10.0);
  CHECK(sol.stats.converged);
  CHECK(sol.stats.gradient_norm <= 1e-4);
}

TEST_CASE("C selection") {
  std::mt19937_64 gen(3);
  const auto x = testutil::random_matrix(30, 2, gen);
  const auto y = testutil::random_binary_labels(30, gen);
  const auto tr = embedded(x, y);
  const std::vector<double> one = {10.0};
  CHECK(select_c(tr, tr, LossFunction::hinge(), one, 1).c == 10.0);
  // Validation set of one point on which every C agrees, so the smallest C wins.
  const auto va = embedded(Matrix(1, 2, {0.0, 0.0}), {1});
  const std::vector<double> grid = {100.0, 1.0, 10.0};
  const auto sel = select_c(tr, va, LossFunction::hinge(), grid, 1);
  const auto acc1 = accuracy(train(tr, LossFunction::hinge(), 1.0, 1), va);
  const auto acc10 = accuracy(train(tr, LossFunction::hinge(), 10.0, 1), va);
  const auto acc100 = accuracy(train(tr, LossFunction::hinge(), 100.0, 1), va);
  const double top = std::max({acc1, acc10, acc100});
  CHECK(sel.validation_accuracy == top);
  const double expected_c = acc1 == top ? 1.0 : acc10 == top ? 10.0 : 100.0;
  CHECK(sel.c == expected_c);
  CHECK(default_c_grid() == std::vector<double>{1.0, 10.0, 100.0, 1000.0});
  const std::vector<double> empty;
  CHECK(code_of([&] { select_c(tr, tr, LossFunction::hinge(), empty, 1); }) == Errc::argument);
}

TEST_CASE("loss evaluation and accuracy") {
  LinearModel perfect;
  perfect.weights = {1.0};
  const auto e = embedded(Matrix(2, 1, {0.5, -0.5}), {1, -1});
  CHECK(eval_loss(perfect, e, LossFunction::zero_one()) == 0.0);
  CHECK(accuracy(perfect, e) == 1.0);

  LinearModel zero;
  zero.weights = {0.0};
  CHECK(eval_loss(zero, e, LossFunction::hinge(1.0)) == 1.0);

  LinearModel half;
  half.weights = {1.0};
  const auto one = embedded(Matrix(1, 1, {0.5}), {1});
  CHECK(eval_loss(half, one, LossFunction::margin_indicator(0.6)) == 1.0);

  LinearModel wrong;
  wrong.weights = {-1.0};
  CHECK(accuracy(wrong, e) == 0.0);
  const auto mixed = embedded(Matrix(2, 1, {0.5, 0.5}), {1, -1});
  CHECK(accuracy(perfect, mixed) == 0.5);

  CHECK(LossFunction::hinge(0.25).lipschitz_constant() == 4.0);
  CHECK_FALSE(LossFunction::zero_one().is_lipschitz());
  CHECK_FALSE(LossFunction::margin_indicator(0.3).is_lipschitz());
  CHECK(LossFunction::zero_one().lipschitz_constant() == 0.0);
  CHECK(code_of([&] { parse_loss("squared"); }) == Errc::config);

  LinearModel shaped;
  shaped.weights = {1.0, 2.0};
  CHECK(code_of([&] { eval_loss(shaped, e, LossFunction::hinge()); }) == Errc::shape);
}

TEST_CASE("stored weights reproduce the raw decision function") {
  std::mt19937_64 gen(12);
  const auto x = testutil::random_matrix(25, 4, gen);
  const auto y = testutil::random_binary_labels(25, gen);
  const auto e = embedded(x, y);
  const auto sol = solve_hinge_dual(x, y, 10.0, 4);
  const auto m = train(e, LossFunction::hinge(), 10.0, 4);
  for (std::size_t i = 0; i < 25; ++i) {
    double raw = sol.b;
    for (std::size_t k = 0; k < 4; ++k) raw += sol.w[k] * x(i, k);
    CHECK(decision_value(m, x.row(i)) == doctest::Approx(raw));
  }
}

TEST_CASE("determinism and serialization") {
  std::mt19937_64 gen(44);
  const auto x = testutil::random_matrix(40, 5, gen);
  const auto y = testutil::random_binary_labels(40, gen);
  const auto e = embedded(x, y);
  const auto a = train(e, LossFunction::hinge(), 100.0, 9);
  const auto b = train(e, LossFunction::hinge(), 100.0, 9);
  CHECK(a.weights == b.weights);
  CHECK(a.bias == b.bias);

  const auto j = to_json(a);
  CHECK(j.at("d") == 5);
  CHECK(j.at("loss_kind") == "hinge");
  const auto back = model_from_json(nlohmann::json::parse(j.dump()));
  CHECK(back.weights == a.weights);
  CHECK(back.bias == a.bias);
  CHECK(back.c_penalty == 100.0);
  auto broken = j;
  broken["d"] = 4;
  CHECK(code_of([&] { model_from_json(broken); }) == Errc::format);
}
