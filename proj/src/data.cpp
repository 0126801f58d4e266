#include "simlearn/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <string>

#include "simlearn/random.hpp"

namespace simlearn {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

template <class T>
T parse_number(std::string_view token, const std::filesystem::path& path, std::size_t line) {
  token = trim(token);
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  T value{};
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size()) {
    throw Error(Errc::parse, path.string() + ":" + std::to_string(line) + ": cannot parse '" +
                                 std::string(token) + "'");
  }
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(value)) {
      throw Error(Errc::parse,
                  path.string() + ":" + std::to_string(line) + ": non-finite entry");
    }
  }
  return value;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io, "cannot open " + path.string());
  return in;
}

}  // namespace

Matrix read_csv_matrix(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::vector<double> values;
  std::size_t cols = 0;
  std::size_t rows = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::size_t count = 0;
    std::string_view rest(line);
    while (true) {
      const auto comma = rest.find(',');
      values.push_back(parse_number<double>(rest.substr(0, comma), path, line_no));
      ++count;
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (rows == 0) {
      cols = count;
    } else if (count != cols) {
      throw Error(Errc::format, path.string() + ":" + std::to_string(line_no) + ": expected " +
                                    std::to_string(cols) + " columns, found " +
                                    std::to_string(count));
    }
    ++rows;
  }
  if (rows == 0) throw Error(Errc::format, path.string() + ": empty matrix");
  return Matrix(rows, cols, std::move(values));
}

std::vector<int> read_labels(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::vector<int> labels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    labels.push_back(parse_number<int>(line, path, line_no));
  }
  return labels;
}

void write_csv_matrix(const std::filesystem::path& path, const Matrix& m) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::io, "cannot write " + path.string());
  out.precision(17);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) {
      if (c) out << ',';
      out << m(r, c);
    }
    out << '\n';
  }
  if (!out) throw Error(Errc::io, "write failed: " + path.string());
}

void write_labels(const std::filesystem::path& path, std::span<const int> labels) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::io, "cannot write " + path.string());
  for (int l : labels) out << l << '\n';
  if (!out) throw Error(Errc::io, "write failed: " + path.string());
}

Dataset make_dataset(std::span<const int> raw_labels, std::optional<Matrix> features,
                     std::optional<Matrix> similarity) {
  const std::size_t n = raw_labels.size();
  if (!features && !similarity) {
    throw Error(Errc::argument, "dataset needs features or a similarity matrix");
  }
  if (features && features->rows() != n) {
    throw Error(Errc::format, "features have " + std::to_string(features->rows()) +
                                  " rows but there are " + std::to_string(n) + " labels");
  }
  if (similarity) {
    if (similarity->rows() != similarity->cols()) {
      throw Error(Errc::format, "similarity matrix is not square");
    }
    if (similarity->rows() != n) {
      throw Error(Errc::format, "similarity matrix has side " +
                                    std::to_string(similarity->rows()) + " but there are " +
                                    std::to_string(n) + " labels");
    }
  }
  for (const auto* m : {features ? &*features : nullptr, similarity ? &*similarity : nullptr}) {
    if (!m) continue;
    for (double v : m->data()) {
      if (!std::isfinite(v)) throw Error(Errc::parse, "non-finite matrix entry");
    }
  }

  std::vector<int> distinct(raw_labels.begin(), raw_labels.end());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.size() < 2) {
    throw Error(Errc::degenerate, "dataset needs at least two classes");
  }

  Dataset ds;
  ds.num_classes = static_cast<int>(distinct.size());
  ds.original_labels = distinct;
  ds.labels.reserve(n);
  for (int raw : raw_labels) {
    const int cls =
        static_cast<int>(std::lower_bound(distinct.begin(), distinct.end(), raw) - distinct.begin());
    ds.labels.push_back(ds.is_binary() ? (cls == 1 ? 1 : -1) : cls);
  }
  ds.features = std::move(features);
  ds.similarity = std::move(similarity);
  return ds;
}

Dataset load_dataset(const DatasetPaths& paths) {
  if (!paths.features && !paths.similarity) {
    throw Error(Errc::argument, "need a features or a similarity file");
  }
  std::optional<Matrix> features;
  std::optional<Matrix> similarity;
  if (paths.features) features = read_csv_matrix(*paths.features);
  if (paths.similarity) similarity = read_csv_matrix(*paths.similarity);
  const auto labels = read_labels(paths.labels);
  return make_dataset(labels, std::move(features), std::move(similarity));
}

namespace {

double euclidean(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    s += d * d;
  }
  return std::sqrt(s);
}

std::vector<std::size_t> all_ids(std::size_t n) {
  std::vector<std::size_t> ids(n);
  std::iota(ids.begin(), ids.end(), std::size_t{0});
  return ids;
}

}  // namespace

double gaussian_width(const Dataset& dataset, std::span<const std::size_t> ids) {
  if (!dataset.features) throw Error(Errc::argument, "gaussian width needs features");
  if (ids.size() < 2) throw Error(Errc::degenerate, "gaussian width needs at least 2 points");
  const Matrix& x = *dataset.features;
  double total = 0.0;
  for (std::size_t a = 0; a < ids.size(); ++a) {
    for (std::size_t b = a + 1; b < ids.size(); ++b) {
      total += euclidean(x.row(ids[a]), x.row(ids[b]));
    }
  }
  const double pairs = 0.5 * static_cast<double>(ids.size()) * static_cast<double>(ids.size() - 1);
  const double mean = total / pairs;
  if (!(mean > 0.0)) throw Error(Errc::degenerate, "all points coincide; width is zero");
  return mean;
}

double gaussian_width(const Dataset& dataset) {
  const auto ids = all_ids(dataset.size());
  return gaussian_width(dataset, ids);
}

Kernel::Kernel(const Dataset& dataset, const KernelSpec& spec,
               std::span<const std::size_t> fit_ids)
    : dataset_(&dataset), spec_(spec) {
  std::vector<std::size_t> everything;
  if (fit_ids.empty()) {
    everything = all_ids(dataset.size());
    fit_ids = everything;
  }
  if (spec.kind == KernelSpec::Kind::gaussian) {
    if (!dataset.features) throw Error(Errc::argument, "gaussian kernel needs features");
    if (spec.width) {
      if (!(*spec.width > 0.0)) throw Error(Errc::argument, "gaussian width must be positive");
      width_ = *spec.width;
    } else {
      width_ = gaussian_width(dataset, fit_ids);
    }
    return;
  }
  if (!dataset.similarity) throw Error(Errc::argument, "precomputed kernel needs a matrix");
  const Matrix& s = *dataset.similarity;
  double m = 0.0;
  for (auto i : fit_ids) {
    for (auto j : fit_ids) m = std::max(m, std::abs(s(i, j)));
  }
  if (!(m > 0.0)) throw Error(Errc::degenerate, "similarity matrix is identically zero");
  scale_ = m;
}

double Kernel::operator()(std::size_t i, std::size_t j) const {
  const std::size_t n = dataset_->size();
  if (i >= n || j >= n) {
    throw Error(Errc::index, "point id out of range (" + std::to_string(std::max(i, j)) +
                                 " >= " + std::to_string(n) + ")");
  }
  if (spec_.kind == KernelSpec::Kind::gaussian) {
    const Matrix& x = *dataset_->features;
    double sq = 0.0;
    auto a = x.row(i);
    auto b = x.row(j);
    for (std::size_t k = 0; k < a.size(); ++k) {
      const double d = a[k] - b[k];
      sq += d * d;
    }
    return std::exp(-sq / (2.0 * width_ * width_));
  }
  double v = (*dataset_->similarity)(i, j) / scale_;
  if (spec_.distance) v = -v;
  return std::clamp(v, -1.0, 1.0);
}

Matrix Kernel::block(std::span<const std::size_t> rows, std::span<const std::size_t> cols) const {
  Matrix out(rows.size(), cols.size());
  for (std::size_t a = 0; a < rows.size(); ++a) {
    for (std::size_t b = 0; b < cols.size(); ++b) out(a, b) = (*this)(rows[a], cols[b]);
  }
  return out;
}

double kernel_eval(const KernelSpec& spec, const Dataset& dataset, std::size_t i, std::size_t j) {
  return Kernel(dataset, spec)(i, j);
}

std::array<std::size_t, 3> split_sizes(std::size_t n, const SplitSpec& spec) {
  for (double f : {spec.train_frac, spec.valid_frac, spec.test_frac}) {
    if (!(f > 0.0 && f < 1.0)) throw Error(Errc::argument, "split fractions must lie in (0, 1)");
  }
  if (std::abs(spec.train_frac + spec.valid_frac + spec.test_frac - 1.0) > 1e-9) {
    throw Error(Errc::argument, "split fractions must sum to 1");
  }
  const auto part = [n](double frac) {
    const auto k = static_cast<std::size_t>(std::floor(static_cast<double>(n) * frac + 1e-9));
    return std::max<std::size_t>(k, 1);
  };
  const std::size_t valid = part(spec.valid_frac);
  const std::size_t test = part(spec.test_frac);
  if (valid + test >= n) {
    throw Error(Errc::size, "too few points (" + std::to_string(n) + ") for a three-way split");
  }
  return {n - valid - test, valid, test};
}

Split split(const Dataset& dataset, const SplitSpec& spec) {
  const std::size_t n = dataset.size();
  const auto [n_train, n_valid, n_test] = split_sizes(n, spec);
  constexpr int kMaxDraws = 100;

  Rng rng(spec.seed);
  auto order = all_ids(n);
  for (int attempt = 0; attempt < kMaxDraws; ++attempt) {
    rng.shuffle(std::span(order));
    std::vector<bool> seen(static_cast<std::size_t>(dataset.num_classes), false);
    for (std::size_t k = 0; k < n_train; ++k) seen[dataset.class_of(order[k])] = true;
    if (std::find(seen.begin(), seen.end(), false) != seen.end()) continue;

    Split out;
    out.train.assign(order.begin(), order.begin() + n_train);
    out.valid.assign(order.begin() + n_train, order.begin() + n_train + n_valid);
    out.test.assign(order.begin() + n_train + n_valid, order.end());
    for (auto* part : {&out.train, &out.valid, &out.test}) std::sort(part->begin(), part->end());
    return out;
  }
  throw Error(Errc::stratification, "could not place every class in the training split after " +
                                        std::to_string(kMaxDraws) + " draws");
}

BinarySubset binary_subset(const Dataset& dataset, std::span<const std::size_t> ids) {
  if (!dataset.is_binary()) throw Error(Errc::argument, "dataset is not binary");
  BinarySubset out;
  out.ids.assign(ids.begin(), ids.end());
  out.labels.reserve(ids.size());
  for (auto i : ids) {
    if (i >= dataset.size()) throw Error(Errc::index, "point id out of range");
    out.labels.push_back(dataset.labels[i]);
  }
  return out;
}

BinarySubset one_vs_all_subset(const Dataset& dataset, std::span<const std::size_t> ids,
                               int positive_class) {
  if (positive_class < 0 || positive_class >= dataset.num_classes) {
    throw Error(Errc::argument, "class id out of range");
  }
  BinarySubset out;
  out.ids.assign(ids.begin(), ids.end());
  out.labels.reserve(ids.size());
  for (auto i : ids) {
    if (i >= dataset.size()) throw Error(Errc::index, "point id out of range");
    out.labels.push_back(dataset.class_of(i) == positive_class ? 1 : -1);
  }
  return out;
}

Dataset make_gaussian_clusters(int num_classes, int clusters_per_class,
                               std::size_t points_per_cluster, double spread,
                               std::uint64_t seed) {
  if (clusters_per_class < 1 || points_per_cluster < 1) {
    throw Error(Errc::argument, "invalid cluster layout");
  }
  const std::vector<std::size_t> sizes(static_cast<std::size_t>(clusters_per_class),
                                       points_per_cluster);
  return make_multimodal_clusters(num_classes, sizes, spread, seed);
}

Dataset make_multimodal_clusters(int num_classes, std::span<const std::size_t> cluster_sizes,
                                 double spread, std::uint64_t seed) {
  const int per_class = static_cast<int>(cluster_sizes.size());
  if (num_classes < 2 || per_class < 1 || !(spread > 0.0) ||
      std::find(cluster_sizes.begin(), cluster_sizes.end(), std::size_t{0}) !=
          cluster_sizes.end()) {
    throw Error(Errc::argument, "invalid cluster layout");
  }
  Rng rng(seed);
  std::vector<double> coords;
  std::vector<int> labels;
  std::vector<std::size_t> seen(static_cast<std::size_t>(num_classes), 0);
  // Row r, column c of a num_classes x per_class grid; the class shifts by
  // one along both axes, so adjacent clusters never share a class.
  for (int r = 0; r < num_classes; ++r) {
    for (int c = 0; c < per_class; ++c) {
      const int cls = (r + c) % num_classes;
      const std::size_t count = cluster_sizes[seen[static_cast<std::size_t>(cls)]++];
      for (std::size_t p = 0; p < count; ++p) {
        coords.push_back(c + spread * rng.normal());
        coords.push_back(r + spread * rng.normal());
        labels.push_back(cls);
      }
    }
  }
  Matrix features(labels.size(), 2, std::move(coords));
  return make_dataset(labels, std::move(features), std::nullopt);
}

}  // namespace simlearn
