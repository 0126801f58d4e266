#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "simlearn/error.hpp"
#include "simlearn/goodness.hpp"
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

GoodnessParams params(double gamma, double eps = 0.0) {
  GoodnessParams p;
  p.gamma = gamma;
  p.epsilon = eps;
  return p;
}

// K = 1 within a class, 0 across; labels alternate.
struct Block {
  Matrix k;
  std::vector<int> y;
};

Block block(std::size_t n) {
  Block b{Matrix(n, n), std::vector<int>(n)};
  for (std::size_t i = 0; i < n; ++i) b.y[i] = i % 2 ? 1 : -1;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) b.k(i, j) = b.y[i] == b.y[j] ? 1.0 : 0.0;
  }
  return b;
}

void check_close(const std::vector<double>& a, const std::vector<double>& b) {
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) <= 1e-12);
}

TransferFunction random_transfer(std::mt19937_64& gen) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double r = u(gen);
  if (r < 0.2) return TransferFunction::sign();
  if (r < 0.4) return TransferFunction::identity();
  return TransferFunction::ramp(std::pow(10.0, -1.0 + 4.0 * u(gen)));
}

}  // namespace

TEST_CASE("parameter and weight validation") {
  CHECK_NOTHROW(params(1.0).validate());
  CHECK(code_of([] { params(0.0).validate(); }) == Errc::argument);
  CHECK(code_of([] { params(1.5).validate(); }) == Errc::argument);
  CHECK(code_of([] { params(0.2, -0.1).validate(); }) == Errc::argument);
  auto p = params(0.2);
  p.delta = 1.0;
  CHECK(code_of([&] { p.validate(); }) == Errc::argument);
  CHECK(code_of([] { WeightFunction::constant(2.0, 1.0); }) == Errc::argument);
  CHECK(code_of([] { WeightFunction::table(Matrix(1, 1, {1.5}), 1.0); }) == Errc::argument);
  const std::vector<double> a = {0.5, -2.0};
  const auto w = WeightFunction::product(a);
  CHECK(w.bound() == 4.0);
  CHECK(w(0, 1) == -1.0);
  const auto h = WeightFunction::constant(1.0, 1.0).scaled(0.5);
  CHECK(h(3, 4) == 0.5);
  CHECK(h.bound() == 0.5);
}

TEST_CASE("pair goodness examples") {
  const auto b = block(6);
  const auto est = estimate_goodness_pairs(b.k, b.y, TransferFunction::sign(),
                                           WeightFunction::constant(1.0, 1.0), params(1.0));
  for (double v : est.values) CHECK(v == 1.0);
  CHECK(est.c_f == 1.0);
  CHECK(est.violation_fraction == 0.0);

  const auto zero = estimate_goodness_pairs(b.k, b.y, TransferFunction::sign(),
                                            WeightFunction::constant(0.0, 1.0), params(0.1));
  for (double v : zero.values) CHECK(v == 0.0);
  CHECK(zero.violation_fraction == 1.0);

  const std::vector<int> one_class = {1, 1, 1};
  CHECK(code_of([&] {
          estimate_goodness_pairs(Matrix(3, 3, 0.5), one_class, TransferFunction::sign(),
                                  WeightFunction::constant(1.0, 1.0), params(0.1));
        }) == Errc::degenerate);
  const std::vector<int> two = {1, -1};
  CHECK(code_of([&] {
          estimate_goodness_pairs(Matrix(2, 2, 0.5), two, TransferFunction::sign(),
                                  WeightFunction::constant(1.0, 1.0), params(0.1));
        }) == Errc::degenerate);

  // Six points by hand against the triple loop.
  Matrix k(6, 6, {1.0, 0.8, 0.6, 0.1, -0.2, 0.0,  //
                  0.8, 1.0, 0.5, 0.3, 0.1, -0.4,  //
                  0.6, 0.5, 1.0, 0.7, 0.2, 0.1,  //
                  0.1, 0.3, 0.7, 1.0, 0.9, 0.6,  //
                  -0.2, 0.1, 0.2, 0.9, 1.0, 0.5,  //
                  0.0, -0.4, 0.1, 0.6, 0.5, 1.0});
  const std::vector<int> y = {1, 1, 1, -1, -1, -1};
  const auto f = TransferFunction::ramp(5);
  const auto w = WeightFunction::constant(1.0, 1.0);
  const auto hand = estimate_goodness_pairs(k, y, f, w, params(0.1));
  check_close(hand.values, oracle::pair_goodness(k, y, f, [](auto, auto) { return 1.0; }));
  CHECK(hand.c_f == oracle::spread(f, k));
}

TEST_CASE("dataset overload normalizes through the kernel") {
  const auto b = block(8);
  const auto ds = make_dataset(testutil::to_raw(b.y), std::nullopt, b.k);
  const auto est = estimate_goodness_pairs(ds, KernelSpec{}, TransferFunction::sign(),
                                           WeightFunction::constant(1.0, 1.0), params(0.5));
  CHECK(est.violation_fraction == 0.0);
}

TEST_CASE("singleton goodness examples") {
  const auto b = block(6);
  const std::vector<double> ones(6, 1.0), zeros(6, 0.0);
  const auto est = estimate_goodness_bbs(b.k, b.y, ones, params(0.5));
  for (double v : est.values) CHECK(v == 1.0);
  CHECK(est.violation_fraction == 0.0);
  const auto z = estimate_goodness_bbs(b.k, b.y, zeros, params(0.5));
  for (double v : z.values) CHECK(v == 0.0);
  CHECK(z.violation_fraction == 1.0);

  std::mt19937_64 gen(8);
  const auto k = testutil::random_matrix(8, 8, gen);
  const auto y = testutil::random_binary_labels(8, gen);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> a(8);
  for (double& v : a) v = u(gen);
  check_close(estimate_goodness_bbs(k, y, a, params(0.1)).values, oracle::bbs_gap(k, y, a));
}

TEST_CASE("sign goodness examples") {
  const std::size_t n = 6;
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = i % 2 ? 1 : -1;
  Matrix dist(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) dist(i, j) = y[i] == y[j] ? 0.0 : 1.0;
  }
  const std::vector<double> ones(n, 1.0), zeros(n, 0.0);
  const auto est = estimate_goodness_sign(dist, y, ones, params(0.2));
  for (double v : est.values) CHECK(v == 1.0);
  for (double v : estimate_goodness_sign(dist, y, zeros, params(0.2)).values) CHECK(v == 0.0);

  // Symmetric coin-flip distances carry no signal.
  std::mt19937_64 gen(3);
  std::bernoulli_distribution coin(0.5);
  const std::size_t m = 200;
  Matrix flips(m, m);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) flips(i, j) = flips(j, i) = coin(gen) ? 1.0 : 0.0;
  }
  const auto labels = testutil::random_binary_labels(m, gen);
  const std::vector<double> w(m, 1.0);
  const auto noise = estimate_goodness_sign(flips, labels, w, params(0.2));
  double mean = 0.0;
  for (double v : noise.values) mean += v;
  CHECK(std::abs(mean / m) < 0.05);
}

TEST_CASE("surrogate goodness examples") {
  const auto b = block(6);
  CHECK(estimate_surrogate_goodness(b.k, b.y, TransferFunction::sign(),
                                    WeightFunction::constant(1.0, 1.0), LossFunction::hinge()) ==
        0.0);
  CHECK(estimate_surrogate_goodness(b.k, b.y, TransferFunction::sign(),
                                    WeightFunction::constant(0.0, 1.0), LossFunction::hinge()) ==
        1.0);
  CHECK(code_of([&] {
          estimate_surrogate_goodness(b.k, b.y, TransferFunction::sign(),
                                      WeightFunction::constant(1.0, 1.0), LossFunction::zero_one());
        }) == Errc::argument);
}

TEST_CASE("estimators equal brute-force enumeration") {
  std::mt19937_64 gen(2718);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t n = 3 + gen() % 28;
    const auto k = testutil::random_matrix(n, n, gen);
    const auto y = testutil::random_binary_labels(n, gen);
    const auto f = random_transfer(gen);
    Matrix table(n, n);
    for (double& v : table.data()) v = 2.0 * u(gen);
    const auto w = WeightFunction::table(table, 2.0);
    const auto wf = [&](std::size_t a, std::size_t b) { return table(a, b); };
    std::vector<double> a(n);
    for (double& v : a) v = u(gen);

    const auto p = params(0.1);
    const auto pairs = estimate_goodness_pairs(k, y, f, w, p);
    const auto expect = oracle::pair_goodness(k, y, f, wf);
    check_close(pairs.values, expect);
    CHECK(pairs.c_f == oracle::spread(f, k));
    CHECK_FALSE(pairs.sampled);

    check_close(estimate_goodness_bbs(k, y, a, p).values, oracle::bbs_gap(k, y, a));

    Matrix dist(n, n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) dist(i, j) = std::abs(k(i, j)) * 3.0;
    }
    check_close(estimate_goodness_sign(dist, y, a, p).values, oracle::sign_goodness(dist, y, a));

    const auto loss = trial % 2 ? LossFunction::hinge(0.5) : LossFunction::logistic();
    double expected_loss = 0.0;
    for (double g : expect) {
      expected_loss += trial % 2 ? oracle::hinge(g, 0.5) : std::log1p(std::exp(-g));
    }
    CHECK(std::abs(estimate_surrogate_goodness(k, y, f, w, loss) - expected_loss / n) <= 1e-12);
  }
}

TEST_CASE("sign model is the pair model on negated distances") {
  std::mt19937_64 gen(99);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 4 + gen() % 26;
    Matrix dist(n, n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) dist(i, j) = i == j ? 0.0 : std::abs(u(gen));
    }
    Matrix neg = dist;
    for (double& v : neg.data()) v = -v;
    const auto y = testutil::random_binary_labels(n, gen);
    std::vector<double> a(n);
    for (double& v : a) v = u(gen);
    const auto s = estimate_goodness_sign(dist, y, a, params(0.1));
    const auto p = estimate_goodness_pairs(neg, y, TransferFunction::sign(),
                                           WeightFunction::product(a), params(0.1));
    check_close(s.values, p.values);
    CHECK(s.c_f == p.c_f);
    CHECK(s.violation_fraction == p.violation_fraction);
  }
}

TEST_CASE("large classes fall back to seeded sampling") {
  std::mt19937_64 gen(4);
  const std::size_t n = 60;
  const auto k = testutil::random_matrix(n, n, gen);
  const auto y = testutil::random_binary_labels(n, gen);
  const auto w = WeightFunction::constant(1.0, 1.0);
  const auto f = TransferFunction::ramp(2);
  const auto exact = estimate_goodness_pairs(k, y, f, w, params(0.1), 0);
  const auto a = estimate_goodness_pairs(k, y, f, w, params(0.1), 5, 400);
  const auto b = estimate_goodness_pairs(k, y, f, w, params(0.1), 5, 400);
  CHECK(a.sampled);
  CHECK(a.values == b.values);
  for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(a.values[i] - exact.values[i]) < 0.25);
}

TEST_CASE("planted instances") {
  auto p = params(0.2);
  const auto clean = plant_good_similarity(20, p, 0.0, 1);
  const auto est = estimate_goodness_pairs(*clean.dataset.similarity, clean.dataset.labels,
                                           clean.transfer, clean.weights, p);
  CHECK(est.violation_fraction == 0.0);
  CHECK(clean.reversed_points.empty());
  CHECK(planted_noise_budget(0.6) == doctest::Approx(0.2));
  CHECK(code_of([] { plant_good_similarity(20, params(0.6), 0.5, 1); }) == Errc::construction);
  CHECK(code_of([] { plant_good_similarity(7, params(0.2), 0.0, 1); }) == Errc::argument);
  auto small_b = params(0.2);
  small_b.b_bound = 0.5;
  CHECK(code_of([&] { plant_good_similarity(20, small_b, 0.0, 1); }) == Errc::construction);

  std::mt19937_64 gen(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 40; ++trial) {
    const auto q = params(0.05 + 0.9 * u(gen), 0.3 * u(gen));
    const double noise = planted_noise_budget(q.gamma) * u(gen);
    const std::size_t n = 2 * (2 + gen() % 30);
    const auto inst = plant_good_similarity(n, q, noise, gen());
    CHECK(inst.reversed_points.size() == static_cast<std::size_t>(std::floor(q.epsilon * n)));
    const auto e = estimate_goodness_pairs(*inst.dataset.similarity, inst.dataset.labels,
                                           inst.transfer, inst.weights, q);
    CHECK(e.violation_fraction <= q.epsilon);
    for (double v : inst.dataset.similarity->data()) CHECK(std::abs(v) <= 1.0);
  }
}

TEST_CASE("prescribed landmark counts") {
  GoodnessParams p;
  p.gamma = 0.2;
  p.delta = 0.1;
  p.epsilon_one = 0.05;
  CHECK(theorem2_landmarks(p) == 1199);
  GoodnessParams q;
  q.b_bound = 1.0;
  q.epsilon_one = 0.5;
  q.delta = 0.2;
  CHECK(theorem7_landmarks(q, 1.0) == 237);
  CHECK(theorem7_landmarks(q, LossFunction::hinge(1.0).lipschitz_constant()) == 237);
}

TEST_CASE("theorem verifiers on clean instances") {
  GoodnessParams p;
  p.gamma = 0.2;
  p.delta = 0.1;
  p.epsilon_one = 0.05;
  VerifyOptions clean;
  clean.n = 40;
  clean.noise = 0.0;
  clean.landmarks = 3;
  const auto r = verify_theorem2(p, 5, 1, clean);
  for (double e : r.trial_errors) CHECK(e == 0.0);
  CHECK(r.pass);

  VerifyOptions big;
  big.n = 60;
  big.landmarks = 10 * theorem2_landmarks(p);
  const auto r10 = verify_theorem2(p, 50, 2, big);
  CHECK(r10.failures == 0);
  CHECK(r10.landmarks == 11990);

  GoodnessParams q;
  q.epsilon_one = 0.5;
  q.delta = 0.2;
  q.gamma = 0.2;
  const auto r7 = verify_theorem7(q, LossFunction::hinge(), 5, 3, clean);
  for (std::size_t t = 0; t < r7.trials; ++t) CHECK(r7.trial_errors[t] == r7.trial_epsilons[t]);
  CHECK(r7.pass);
  const auto j = to_json(r7);
  CHECK(j.at("pass") == true);
}

TEST_CASE("Lipschitz perturbation examples") {
  std::mt19937_64 gen(20);
  const std::size_t n = 20;
  const auto k = testutil::random_matrix(n, n, gen);
  const auto y = testutil::random_binary_labels(n, gen);
  const auto w = WeightFunction::constant(1.0, 1.0);
  const auto same = verify_lipschitz_perturbation(k, y, TransferFunction::ramp(50),
                                                  TransferFunction::ramp(50), w,
                                                  LossFunction::hinge());
  CHECK(same.r == 0.0);
  CHECK(same.max_pointwise_gap == 0.0);
  CHECK(same.loss_gap == 0.0);
  CHECK(same.pass);

  const auto f = TransferFunction::ramp(50);
  const auto g = TransferFunction::ramp(100);
  const auto full = verify_lipschitz_perturbation(k, y, f, g, w, LossFunction::hinge());
  CHECK(full.pass);
  CHECK(full.r > 0.0);
  CHECK(full.pointwise_slack > 0.0);
  CHECK(full.loss_slack >= 0.0);

  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Matrix table(n, n);
  for (double& v : table.data()) v = u(gen);
  const auto wt = WeightFunction::table(table, 1.0);
  const auto a = verify_lipschitz_perturbation(k, y, f, g, wt, LossFunction::hinge());
  const auto b = verify_lipschitz_perturbation(k, y, f, g, wt.scaled(0.5), LossFunction::hinge());
  CHECK(b.max_pointwise_gap == 0.5 * a.max_pointwise_gap);
  CHECK(b.bound == 0.5 * a.bound);
}

TEST_CASE("Lipschitz suite") {
  const auto rep = verify_lipschitz_suite(200, 7, LossFunction::hinge());
  CHECK(rep.configurations == 200);
  CHECK(rep.pointwise_violations == 0);
  CHECK(rep.loss_violations == 0);
  CHECK(rep.pass);
  const auto logistic = verify_lipschitz_suite(100, 8, LossFunction::logistic());
  CHECK(logistic.pass);
}

TEST_CASE("planted transfer-recovery datasets") {
  const auto s = plant_sign_favoring(40, 1);
  const auto l = plant_linear_margin(40, 1);
  CHECK(s.size() == 40);
  CHECK(s.is_binary());
  CHECK(l.is_binary());
  CHECK(code_of([] { plant_sign_favoring(3, 1); }) == Errc::argument);
  for (double v : s.similarity->data()) CHECK(std::abs(v) <= 1.0);
}
