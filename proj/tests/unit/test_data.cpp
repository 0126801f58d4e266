#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "simlearn/data.hpp"
#include "simlearn/error.hpp"
#include "test_util.hpp"

using namespace simlearn;
using testutil::TempDir;

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

Matrix rows(std::initializer_list<std::initializer_list<double>> r) {
  Matrix m(r.size(), r.begin()->size());
  std::size_t i = 0;
  for (const auto& row : r) {
    std::size_t j = 0;
    for (double v : row) m(i, j++) = v;
    ++i;
  }
  return m;
}

}  // namespace

TEST_CASE("load identity similarity with binary labels") {
  TempDir dir;
  testutil::write_text(dir / "s.csv", "1,0,0\n0,1,0\n0,0,1\n");
  testutil::write_text(dir / "y.csv", "0\n0\n1\n");
  const auto ds = load_dataset({std::nullopt, dir / "s.csv", dir / "y.csv"});
  CHECK(ds.size() == 3);
  CHECK(ds.num_classes == 2);
  CHECK(ds.labels == std::vector<int>{-1, -1, 1});
  CHECK(ds.similarity.has_value());
  CHECK_FALSE(ds.features.has_value());
}

TEST_CASE("larger original label maps to +1") {
  const auto ds = make_dataset(std::vector<int>{7, 3, 7}, rows({{0}, {1}, {2}}), std::nullopt);
  CHECK(ds.labels == std::vector<int>{1, -1, 1});
  CHECK(ds.original_labels == std::vector<int>{3, 7});
}

TEST_CASE("label count mismatch is a format error") {
  TempDir dir;
  testutil::write_text(dir / "s.csv", "1,0,0\n0,1,0\n0,0,1\n");
  testutil::write_text(dir / "y.csv", "0\n1\n");
  CHECK(code_of([&] { load_dataset({std::nullopt, dir / "s.csv", dir / "y.csv"}); }) ==
        Errc::format);
}

TEST_CASE("features file without similarity") {
  TempDir dir;
  testutil::write_text(dir / "x.csv", "0,0\n1,0\n0,1\n1,1\n");
  testutil::write_text(dir / "y.csv", "0\n0\n1\n1\n");
  const auto ds = load_dataset({dir / "x.csv", std::nullopt, dir / "y.csv"});
  CHECK(ds.features.has_value());
  CHECK(ds.features->rows() == 4);
  CHECK(ds.features->cols() == 2);
  CHECK_FALSE(ds.similarity.has_value());
}

TEST_CASE("ingestion errors") {
  TempDir dir;
  testutil::write_text(dir / "y.csv", "0\n1\n");
  SUBCASE("non-finite entry") {
    testutil::write_text(dir / "s.csv", "1,nan\n0,1\n");
    CHECK(code_of([&] { load_dataset({std::nullopt, dir / "s.csv", dir / "y.csv"}); }) ==
          Errc::parse);
  }
  SUBCASE("garbage entry") {
    testutil::write_text(dir / "s.csv", "1,abc\n0,1\n");
    CHECK(code_of([&] { load_dataset({std::nullopt, dir / "s.csv", dir / "y.csv"}); }) ==
          Errc::parse);
  }
  SUBCASE("ragged rows") {
    testutil::write_text(dir / "s.csv", "1,0\n0\n");
    CHECK(code_of([&] { load_dataset({std::nullopt, dir / "s.csv", dir / "y.csv"}); }) ==
          Errc::format);
  }
  SUBCASE("non-square similarity") {
    testutil::write_text(dir / "s.csv", "1,0,0\n0,1,0\n");
    CHECK(code_of([&] { load_dataset({std::nullopt, dir / "s.csv", dir / "y.csv"}); }) ==
          Errc::format);
  }
  SUBCASE("single class") {
    testutil::write_text(dir / "s.csv", "1,0\n0,1\n");
    testutil::write_text(dir / "y1.csv", "1\n1\n");
    CHECK(code_of([&] { load_dataset({std::nullopt, dir / "s.csv", dir / "y1.csv"}); }) ==
          Errc::degenerate);
  }
  SUBCASE("missing file") {
    CHECK(code_of([&] { load_dataset({std::nullopt, dir / "nope.csv", dir / "y.csv"}); }) ==
          Errc::io);
  }
}

TEST_CASE("multiclass labels become class ids") {
  const auto ds = make_dataset(std::vector<int>{5, 2, 9, 2}, rows({{0}, {1}, {2}, {3}}), std::nullopt);
  CHECK(ds.num_classes == 3);
  CHECK(ds.labels == std::vector<int>{1, 0, 2, 0});
  CHECK(ds.class_of(2) == 2);
}

TEST_CASE("csv round trip is exact") {
  TempDir dir;
  std::mt19937_64 gen(3);
  const auto m = testutil::random_matrix(5, 4, gen);
  write_csv_matrix(dir / "m.csv", m);
  CHECK(read_csv_matrix(dir / "m.csv") == m);
  write_labels(dir / "l.csv", std::vector<int>{3, -1, 0});
  CHECK(read_labels(dir / "l.csv") == std::vector<int>{3, -1, 0});
}

TEST_CASE("gaussian width examples") {
  const auto two = make_dataset(std::vector<int>{0, 1}, rows({{0, 0}, {3, 4}}), std::nullopt);
  CHECK(gaussian_width(two) == doctest::Approx(5.0).epsilon(1e-15));
  const auto three =
      make_dataset(std::vector<int>{0, 1, 1}, rows({{0, 0}, {1, 0}, {2, 0}}), std::nullopt);
  CHECK(gaussian_width(three) == doctest::Approx(4.0 / 3.0).epsilon(1e-15));
  const auto dup = make_dataset(std::vector<int>{0, 1}, rows({{1, 1}, {1, 1}}), std::nullopt);
  CHECK(code_of([&] { gaussian_width(dup); }) == Errc::degenerate);
  const std::vector<std::size_t> one = {0};
  CHECK(code_of([&] { gaussian_width(two, one); }) == Errc::degenerate);
}

TEST_CASE("gaussian width matches brute force") {
  std::mt19937_64 gen(11);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 2 + gen() % 49;
    const std::size_t dim = 1 + gen() % 5;
    auto x = testutil::random_matrix(n, dim, gen, -3.0, 3.0);
    std::vector<int> raw(n);
    for (std::size_t i = 0; i < n; ++i) raw[i] = static_cast<int>(i % 2);
    const auto ds = make_dataset(raw, x, std::nullopt);
    long double total = 0.0L;
    std::size_t count = 0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        long double s = 0.0L;
        for (std::size_t k = 0; k < dim; ++k) {
          const long double d = x(i, k) - x(j, k);
          s += d * d;
        }
        total += std::sqrt(s);
        ++count;
      }
    }
    CHECK(gaussian_width(ds) == doctest::Approx(static_cast<double>(total / count)).epsilon(1e-12));
  }
}

TEST_CASE("kernel evaluation examples") {
  const auto ds = make_dataset(std::vector<int>{0, 1}, rows({{0, 0}, {3, 4}}), std::nullopt);
  KernelSpec g{KernelSpec::Kind::gaussian, 5.0, false};
  CHECK(kernel_eval(g, ds, 0, 1) == doctest::Approx(std::exp(-0.5)).epsilon(1e-15));
  CHECK(kernel_eval(g, ds, 1, 1) == 1.0);
  CHECK(code_of([&] { kernel_eval(g, ds, 0, 2); }) == Errc::index);

  const auto pre = make_dataset(std::vector<int>{0, 1}, rows({{2, 1}, {1, -0.5}}), std::nullopt);
  (void)pre;
  const auto sim = make_dataset(std::vector<int>{0, 1}, std::nullopt, rows({{2, 1}, {1, -0.5}}));
  KernelSpec p;
  CHECK(kernel_eval(p, sim, 0, 1) == 0.5);
  CHECK(kernel_eval(p, sim, 0, 0) == 1.0);
  CHECK(kernel_eval(p, sim, 1, 1) == -0.25);
}

TEST_CASE("distance matrices are negated after scaling") {
  const auto ds = make_dataset(std::vector<int>{0, 1}, std::nullopt, rows({{0, 4}, {4, 0}}));
  KernelSpec p{KernelSpec::Kind::precomputed, std::nullopt, true};
  CHECK(kernel_eval(p, ds, 0, 1) == -1.0);
  CHECK(kernel_eval(p, ds, 0, 0) == 0.0);
}

TEST_CASE("normalized kernel is bounded and symmetric") {
  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = 3 + gen() % 20;
    auto m = testutil::random_matrix(n, n, gen, -7.0, 7.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < i; ++j) m(i, j) = m(j, i);
    }
    std::vector<int> raw(n);
    for (std::size_t i = 0; i < n; ++i) raw[i] = static_cast<int>(i % 2);
    const auto ds = make_dataset(raw, testutil::random_matrix(n, 3, gen), m);
    for (const auto& spec : {KernelSpec{}, KernelSpec{KernelSpec::Kind::gaussian, std::nullopt, false}}) {
      const Kernel k(ds, spec);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          CHECK(std::abs(k(i, j)) <= 1.0);
          CHECK(k(i, j) == k(j, i));
        }
      }
    }
  }
}

TEST_CASE("normalization is fitted on the given points only") {
  const auto ds = make_dataset(std::vector<int>{0, 1, 0}, std::nullopt,
                               rows({{1, 0.5, 4}, {0.5, 1, 0}, {4, 0, 1}}));
  const std::vector<std::size_t> fit = {0, 1};
  const Kernel k(ds, KernelSpec{}, fit);
  CHECK(k.scale() == 1.0);
  CHECK(k(0, 1) == 0.5);
  CHECK(k(0, 2) == 1.0);  // clamped
}

TEST_CASE("split sizes") {
  using A = std::array<std::size_t, 3>;
  CHECK(split_sizes(10, {0.7, 0.1, 0.2, 0}) == A{7, 1, 2});
  CHECK(split_sizes(3, {0.7, 0.1, 0.2, 0}) == A{1, 1, 1});
  CHECK(split_sizes(100, {0.5, 0.2, 0.3, 0}) == A{50, 20, 30});
  CHECK(code_of([] { split_sizes(2, {0.7, 0.1, 0.2, 0}); }) == Errc::size);
  CHECK(code_of([] { split_sizes(10, {0.7, 0.2, 0.2, 0}); }) == Errc::argument);
}

TEST_CASE("split is a deterministic partition with every class in train") {
  std::mt19937_64 gen(9);
  std::vector<int> raw(40);
  for (std::size_t i = 0; i < raw.size(); ++i) raw[i] = static_cast<int>(i % 3);
  const auto ds = make_dataset(raw, testutil::random_matrix(40, 2, gen), std::nullopt);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const SplitSpec spec{0.7, 0.1, 0.2, seed};
    const auto a = split(ds, spec);
    const auto b = split(ds, spec);
    CHECK(a.train == b.train);
    CHECK(a.valid == b.valid);
    CHECK(a.test == b.test);
    std::set<std::size_t> all;
    all.insert(a.train.begin(), a.train.end());
    all.insert(a.valid.begin(), a.valid.end());
    all.insert(a.test.begin(), a.test.end());
    CHECK(all.size() == 40);
    CHECK(a.train.size() + a.valid.size() + a.test.size() == 40);
    std::set<int> classes;
    for (auto i : a.train) classes.insert(ds.class_of(i));
    CHECK(classes.size() == 3);
  }
}

TEST_CASE("split fails when a class cannot reach train") {
  std::vector<int> raw = {0, 0, 0, 0, 0, 0, 0, 0, 0, 1};
  std::mt19937_64 gen(1);
  const auto ds = make_dataset(raw, testutil::random_matrix(10, 2, gen), std::nullopt);
  // Train holds one point, so both classes can never be present.
  CHECK(code_of([&] { split(ds, {0.1, 0.5, 0.4, 3}); }) == Errc::stratification);
}

TEST_CASE("binary and one-vs-all views") {
  const auto ds = make_dataset(std::vector<int>{0, 1, 2, 1}, rows({{0}, {1}, {2}, {3}}), std::nullopt);
  const std::vector<std::size_t> ids = {3, 0, 2};
  const auto v = one_vs_all_subset(ds, ids, 1);
  CHECK(v.ids == ids);
  CHECK(v.labels == std::vector<int>{1, -1, -1});
  CHECK(code_of([&] { binary_subset(ds, ids); }) == Errc::argument);
  CHECK(code_of([&] { one_vs_all_subset(ds, ids, 3); }) == Errc::argument);
}

TEST_CASE("gaussian clusters layout") {
  const auto ds = make_gaussian_clusters(2, 4, 25, 0.3, 7);
  CHECK(ds.size() == 200);
  CHECK(ds.num_classes == 2);
  CHECK(ds.features->cols() == 2);
  std::size_t pos = 0;
  for (int l : ds.labels) pos += l > 0 ? 1 : 0;
  CHECK(pos == 100);
  CHECK(make_gaussian_clusters(2, 4, 25, 0.3, 7).features == ds.features);
}

TEST_CASE("multimodal clusters sizes") {
  const std::vector<std::size_t> sizes = {40, 5, 5, 5};
  const auto ds = make_multimodal_clusters(2, sizes, 0.1, 11);
  CHECK(ds.size() == 110);
  std::size_t pos = 0;
  for (int l : ds.labels) pos += l > 0 ? 1 : 0;
  CHECK(pos == 55);
  CHECK(make_multimodal_clusters(2, sizes, 0.1, 11).features == ds.features);

  const std::vector<std::size_t> equal = {25, 25, 25, 25};
  CHECK(make_multimodal_clusters(2, equal, 0.3, 7).features ==
        make_gaussian_clusters(2, 4, 25, 0.3, 7).features);

  const std::vector<std::size_t> with_zero = {3, 0};
  CHECK(code_of([&] { make_multimodal_clusters(2, with_zero, 0.1, 1); }) == Errc::argument);
  CHECK(code_of([&] { make_multimodal_clusters(2, {}, 0.1, 1); }) == Errc::argument);
}
