#include "simlearn/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>

#include <boost/math/distributions/students_t.hpp>

#include "simlearn/embedding.hpp"
#include "simlearn/error.hpp"
#include "simlearn/ftune.hpp"
#include "simlearn/landmark.hpp"
#include "simlearn/random.hpp"
#include "simlearn/trainer.hpp"
#include "simlearn/transfer.hpp"

namespace simlearn {

namespace {

constexpr std::pair<Method, std::string_view> kMethodNames[] = {
    {Method::bbs, "bbs"},
    {Method::bbs_d, "bbs+d"},
    {Method::bbs_pairs, "bbs-pairs"},
    {Method::sign_baseline, "sign-baseline"},
    {Method::ftune_s, "ftune-s"},
    {Method::ftune_s_d, "ftune-s+d"},
    {Method::ftune_m, "ftune-m"},
    {Method::ftune_m_d, "ftune-m+d"},
};

}  // namespace

std::string method_name(Method m) {
  for (const auto& [k, name] : kMethodNames) {
    if (k == m) return std::string(name);
  }
  return "unknown";
}

Method parse_method(std::string_view text) {
  for (const auto& [k, name] : kMethodNames) {
    if (name == text) return k;
  }
  throw Error(Errc::config, "unknown method '" + std::string(text) + "'");
}

// ---- configuration -------------------------------------------------------

void ExperimentConfig::validate() const {
  if (labels_path.empty()) throw Error(Errc::config, "labels_path is required");
  if (!features_path && !similarity_path) {
    throw Error(Errc::config, "one of features_path, similarity_path is required");
  }
  if (kernel.kind == KernelSpec::Kind::gaussian && !features_path) {
    throw Error(Errc::config, "gaussian kernel needs features_path");
  }
  if (kernel.kind == KernelSpec::Kind::precomputed && !similarity_path) {
    throw Error(Errc::config, "precomputed kernel needs similarity_path");
  }
  validate_protocol();
}

void ExperimentConfig::validate_protocol() const {
  if (kernel.width && !(*kernel.width > 0.0 && std::isfinite(*kernel.width))) {
    throw Error(Errc::config, "kernel width must be positive");
  }
  if (methods.empty()) throw Error(Errc::config, "methods must be non-empty");
  std::set<std::string> seen;
  for (const auto& m : methods) {
    parse_method(m);
    if (!seen.insert(m).second) throw Error(Errc::config, "duplicate method '" + m + "'");
  }
  if (landmarks.empty()) throw Error(Errc::config, "landmarks must be non-empty");
  std::set<std::size_t> seen_d;
  for (auto d : landmarks) {
    if (d == 0) throw Error(Errc::config, "landmark counts must be positive");
    if (!seen_d.insert(d).second) throw Error(Errc::config, "duplicate landmark count");
  }
  if (runs == 0) throw Error(Errc::config, "runs must be >= 1");
  for (double f : {train_frac, valid_frac, test_frac}) {
    if (!(f > 0.0 && f < 1.0)) throw Error(Errc::config, "split fractions must lie in (0, 1)");
  }
  if (std::abs(train_frac + valid_frac + test_frac - 1.0) > 1e-9) {
    throw Error(Errc::config, "split fractions must sum to 1");
  }
  if (c_grid.empty()) throw Error(Errc::config, "c_grid must be non-empty");
  for (double c : c_grid) {
    if (!(c > 0.0 && std::isfinite(c))) throw Error(Errc::config, "C values must be positive");
  }
  parse_family(family);
  parse_loss(loss);
}

namespace {

const std::set<std::string> kConfigKeys = {
    "features_path", "similarity_path", "labels_path", "kernel", "methods", "landmarks",
    "runs", "split", "c_grid", "family", "master_seed", "loss", "bias", "threads"};

template <class T>
T get_field(const nlohmann::json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::config, std::string("field '") + key + "': " + e.what());
  }
}

}  // namespace

ExperimentConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(Errc::config, "config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!kConfigKeys.count(key)) throw Error(Errc::config, "unknown config field '" + key + "'");
  }
  ExperimentConfig c;
  if (j.contains("features_path")) c.features_path = get_field<std::string>(j, "features_path");
  if (j.contains("similarity_path")) {
    c.similarity_path = get_field<std::string>(j, "similarity_path");
  }
  if (j.contains("labels_path")) c.labels_path = get_field<std::string>(j, "labels_path");
  if (j.contains("kernel")) {
    const auto& k = j.at("kernel");
    if (!k.is_object()) throw Error(Errc::config, "kernel must be an object");
    const auto kind = k.contains("kind") ? get_field<std::string>(k, "kind") : "precomputed";
    if (kind == "gaussian") {
      c.kernel.kind = KernelSpec::Kind::gaussian;
    } else if (kind == "precomputed") {
      c.kernel.kind = KernelSpec::Kind::precomputed;
    } else {
      throw Error(Errc::config, "unknown kernel kind '" + kind + "'");
    }
    if (k.contains("width") && !k.at("width").is_null()) c.kernel.width = get_field<double>(k, "width");
    if (k.contains("distance")) c.kernel.distance = get_field<bool>(k, "distance");
  } else if (c.features_path && !c.similarity_path) {
    c.kernel.kind = KernelSpec::Kind::gaussian;
  }
  if (j.contains("methods")) c.methods = get_field<std::vector<std::string>>(j, "methods");
  if (j.contains("landmarks")) c.landmarks = get_field<std::vector<std::size_t>>(j, "landmarks");
  if (j.contains("runs")) c.runs = get_field<std::size_t>(j, "runs");
  if (j.contains("split")) {
    const auto& s = j.at("split");
    if (s.is_array()) {
      const auto v = get_field<std::vector<double>>(j, "split");
      if (v.size() != 3) throw Error(Errc::config, "split needs three fractions");
      c.train_frac = v[0];
      c.valid_frac = v[1];
      c.test_frac = v[2];
    } else {
      c.train_frac = get_field<double>(s, "train");
      c.valid_frac = get_field<double>(s, "valid");
      c.test_frac = get_field<double>(s, "test");
    }
  }
  if (j.contains("c_grid")) c.c_grid = get_field<std::vector<double>>(j, "c_grid");
  if (j.contains("family")) c.family = get_field<std::string>(j, "family");
  if (j.contains("master_seed")) c.master_seed = get_field<std::uint64_t>(j, "master_seed");
  if (j.contains("loss")) c.loss = get_field<std::string>(j, "loss");
  if (j.contains("bias")) c.bias = get_field<bool>(j, "bias");
  if (j.contains("threads")) c.threads = get_field<std::size_t>(j, "threads");
  c.validate();
  return c;
}

nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json j;
  if (c.features_path) j["features_path"] = c.features_path->generic_string();
  if (c.similarity_path) j["similarity_path"] = c.similarity_path->generic_string();
  j["labels_path"] = c.labels_path.generic_string();
  nlohmann::json k = {{"kind", c.kernel.kind == KernelSpec::Kind::gaussian ? "gaussian"
                                                                           : "precomputed"},
                      {"distance", c.kernel.distance}};
  k["width"] = c.kernel.width ? nlohmann::json(*c.kernel.width) : nlohmann::json(nullptr);
  j["kernel"] = std::move(k);
  j["methods"] = c.methods;
  j["landmarks"] = c.landmarks;
  j["runs"] = c.runs;
  j["split"] = {{"train", c.train_frac}, {"valid", c.valid_frac}, {"test", c.test_frac}};
  j["c_grid"] = c.c_grid;
  j["family"] = c.family;
  j["master_seed"] = c.master_seed;
  j["loss"] = c.loss;
  j["bias"] = c.bias;
  j["threads"] = c.threads;
  return j;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::config, "cannot open config " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::config, std::string("malformed config: ") + e.what());
  }
  auto c = config_from_json(j);
  c.base_dir = path.parent_path();
  return c;
}

// ---- per-cell evaluation -------------------------------------------------

namespace {

enum SeedKind : std::uint64_t { random_pair_seed, dselect_seed, random_single_seed, dselect_single_seed };

std::uint64_t landmark_seed(std::uint64_t run_seed, std::size_t d, SeedKind kind) {
  return derive_seed(run_seed, {1, d, kind});
}

std::uint64_t train_seed(std::uint64_t run_seed, std::size_t d) {
  return derive_seed(run_seed, {2, d});
}

struct CellContext {
  const Kernel& kernel;
  const Dataset& ds;
  const Split& split;
  std::size_t d;
  std::uint64_t run_seed;
  LossFunction loss;
  TrainOptions options;
  std::span<const double> grid;
};

MethodOutcome singleton_outcome(const CellContext& cx, const LandmarkSet& landmarks) {
  const auto& ds = cx.ds;
  const auto seed = train_seed(cx.run_seed, cx.d);
  MethodOutcome out;
  out.details["landmarks"] = landmarks.ids;
  auto& models = out.details["models"] = nlohmann::json::array();
  if (ds.is_binary()) {
    const auto train = embed_singletons(cx.kernel, landmarks, binary_subset(ds, cx.split.train));
    const auto valid = embed_singletons(cx.kernel, landmarks, binary_subset(ds, cx.split.valid));
    const auto test = embed_singletons(cx.kernel, landmarks, binary_subset(ds, cx.split.test));
    const auto sel = select_c(train, valid, cx.loss, cx.grid, seed, cx.options);
    models.push_back({{"positive_class", -1},
                      {"validation_accuracy", sel.validation_accuracy},
                      {"model", to_json(sel.model)}});
    out.test_accuracy = accuracy(sel.model, test);
    return out;
  }
  const auto test = embed_singletons(cx.kernel, landmarks, cx.split.test);
  Matrix scores(cx.split.test.size(), static_cast<std::size_t>(ds.num_classes));
  for (int k = 0; k < ds.num_classes; ++k) {
    const auto uk = static_cast<std::size_t>(k);
    const auto train =
        embed_singletons(cx.kernel, landmarks, one_vs_all_subset(ds, cx.split.train, k));
    const auto valid =
        embed_singletons(cx.kernel, landmarks, one_vs_all_subset(ds, cx.split.valid, k));
    const auto sel = select_c(train, valid, cx.loss, cx.grid, derive_seed(seed, {uk}), cx.options);
    models.push_back({{"positive_class", k},
                      {"validation_accuracy", sel.validation_accuracy},
                      {"model", to_json(sel.model)}});
    for (std::size_t i = 0; i < test.size(); ++i) {
      scores(i, uk) = decision_value(sel.model, test.values.row(i));
    }
  }
  std::size_t correct = 0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    if (argmax_class(scores.row(i)) == ds.class_of(cx.split.test[i])) ++correct;
  }
  out.test_accuracy = static_cast<double>(correct) / static_cast<double>(test.size());
  return out;
}

FtuneResult fixed_transfer(const CellContext& cx, const TransferFunction& f) {
  const auto& ds = cx.ds;
  const auto seed = train_seed(cx.run_seed, cx.d);
  FtuneResult out;
  if (ds.is_binary()) {
    const auto train = binary_subset(ds, cx.split.train);
    const auto valid = binary_subset(ds, cx.split.valid);
    auto pairs = random_pairs(train, cx.d, landmark_seed(cx.run_seed, cx.d, random_pair_seed));
    auto fit = fit_fixed_transfer(cx.kernel, train, valid, pairs, f, cx.loss, cx.grid, seed,
                                  cx.options);
    out.problems.push_back({-1, std::move(pairs), f, std::move(fit.model)});
    return out;
  }
  const LandmarkSource source{LandmarkSource::Kind::random, cx.d, {},
                              landmark_seed(cx.run_seed, cx.d, random_pair_seed)};
  for (int k = 0; k < ds.num_classes; ++k) {
    const auto uk = static_cast<std::size_t>(k);
    const auto train = one_vs_all_subset(ds, cx.split.train, k);
    const auto valid = one_vs_all_subset(ds, cx.split.valid, k);
    auto pairs = pairs_for_problem(source, train, k);
    auto fit = fit_fixed_transfer(cx.kernel, train, valid, pairs, f, cx.loss, cx.grid,
                                  derive_seed(seed, {uk}), cx.options);
    out.problems.push_back({k, std::move(pairs), f, std::move(fit.model)});
  }
  return out;
}

LandmarkSource pool_source(const CellContext& cx, bool diverse) {
  if (!diverse) {
    return {LandmarkSource::Kind::random, cx.d, {},
            landmark_seed(cx.run_seed, cx.d, random_pair_seed)};
  }
  const auto seed = landmark_seed(cx.run_seed, cx.d, dselect_seed);
  return {LandmarkSource::Kind::pool, cx.d, dselect_multiclass(cx.kernel, cx.split.train, cx.d, seed),
          derive_seed(seed, {2})};
}

FtuneResult ftune_single(const CellContext& cx, const TransferFamily& family, bool diverse) {
  const auto& ds = cx.ds;
  const auto seed = train_seed(cx.run_seed, cx.d);
  if (ds.is_binary()) {
    const auto train = binary_subset(ds, cx.split.train);
    const auto valid = binary_subset(ds, cx.split.valid);
    const auto pairs =
        diverse ? dselect(cx.kernel, train, cx.d, landmark_seed(cx.run_seed, cx.d, dselect_seed)).pairs
                : random_pairs(train, cx.d, landmark_seed(cx.run_seed, cx.d, random_pair_seed));
    return ftune_s(cx.kernel, train, valid, pairs, family, cx.loss, cx.grid, seed, cx.options);
  }
  return ftune_s_multiclass(cx.kernel, cx.split.train, cx.split.valid, pool_source(cx, diverse),
                            family, cx.loss, cx.grid, seed, cx.options);
}

}  // namespace

MethodOutcome evaluate_method(const Dataset& dataset, const KernelSpec& spec, const Split& split,
                              Method method, std::size_t d, const ExperimentConfig& config,
                              std::uint64_t run_seed) {
  const Kernel kernel(dataset, spec, split.train);
  TrainOptions options;
  options.bias = config.bias;
  const CellContext cx{kernel, dataset, split, d, run_seed, parse_loss(config.loss), options,
                       config.c_grid};
  const auto family = parse_family(config.family);
  const auto scored = [&](const FtuneResult& result) {
    return MethodOutcome{multiclass_accuracy(kernel, result, split.test), to_json(result)};
  };

  switch (method) {
    case Method::bbs:
      return singleton_outcome(
          cx, random_landmarks(split.train, d, landmark_seed(run_seed, d, random_single_seed)));
    case Method::bbs_d: {
      const auto seed = landmark_seed(run_seed, d, dselect_single_seed);
      return singleton_outcome(cx, dataset.is_binary()
                                       ? dselect_landmarks(kernel, split.train, d, seed)
                                       : dselect_multiclass(kernel, split.train, d, seed));
    }
    case Method::bbs_pairs:
      return scored(fixed_transfer(cx, TransferFunction::identity()));
    case Method::sign_baseline:
      return scored(fixed_transfer(cx, TransferFunction::sign()));
    case Method::ftune_s:
    case Method::ftune_s_d:
      return scored(ftune_single(cx, family, method == Method::ftune_s_d));
    case Method::ftune_m:
    case Method::ftune_m_d:
      return scored(ftune_m(kernel, split.train, split.valid,
                            pool_source(cx, method == Method::ftune_m_d), family, cx.loss, cx.grid,
                            train_seed(run_seed, d), options));
  }
  throw Error(Errc::argument, "unhandled method");
}

double run_cell(const Dataset& dataset, const KernelSpec& spec, const Split& split, Method method,
                std::size_t d, const ExperimentConfig& config, std::uint64_t run_seed) {
  return evaluate_method(dataset, spec, split, method, d, config, run_seed).test_accuracy;
}

// ---- experiment ----------------------------------------------------------

namespace {

std::filesystem::path resolve(const ExperimentConfig& c, const std::filesystem::path& p) {
  return p.is_absolute() || c.base_dir.empty() ? p : c.base_dir / p;
}

double mean_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_variance(std::span<const double> v, double mean) {
  if (v.size() < 2) return 0.0;
  double s = 0.0;
  for (double x : v) s += (x - mean) * (x - mean);
  return s / static_cast<double>(v.size() - 1);
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& config) {
  config.validate();
  DatasetPaths paths;
  if (config.features_path) paths.features = resolve(config, *config.features_path);
  if (config.similarity_path) paths.similarity = resolve(config, *config.similarity_path);
  paths.labels = resolve(config, config.labels_path);
  const Dataset ds = load_dataset(paths);
  return run_experiment(config, ds);
}

ExperimentReport run_experiment(const ExperimentConfig& config, const Dataset& dataset) {
  config.validate_protocol();
  if (config.kernel.kind == KernelSpec::Kind::gaussian && !dataset.features) {
    throw Error(Errc::config, "gaussian kernel needs features");
  }
  if (config.kernel.kind == KernelSpec::Kind::precomputed && !dataset.similarity) {
    throw Error(Errc::config, "precomputed kernel needs a similarity matrix");
  }
  std::vector<Method> methods;
  for (const auto& m : config.methods) methods.push_back(parse_method(m));

  const std::size_t runs = config.runs;
  std::vector<std::uint64_t> run_seeds(runs);
  std::vector<std::optional<Split>> splits(runs);
  std::vector<std::string> split_errors(runs);
  for (std::size_t r = 0; r < runs; ++r) {
    run_seeds[r] = derive_seed(config.master_seed, {r});
    try {
      splits[r] = split(dataset, SplitSpec{config.train_frac, config.valid_frac, config.test_frac,
                                           derive_seed(run_seeds[r], {0})});
    } catch (const Error& e) {
      split_errors[r] = e.what();
    }
  }

  const std::size_t nm = methods.size();
  const std::size_t nd = config.landmarks.size();
  const std::size_t tasks = runs * nm * nd;
  std::vector<double> acc(tasks, 0.0);
  std::vector<std::string> errors(tasks);
  std::vector<bool> ok(tasks, false);

  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t t = next++; t < tasks; t = next++) {
      const std::size_t r = t / (nm * nd);
      const std::size_t m = (t / nd) % nm;
      const std::size_t di = t % nd;
      if (!splits[r]) {
        errors[t] = split_errors[r];
        continue;
      }
      try {
        acc[t] = run_cell(dataset, config.kernel, *splits[r], methods[m], config.landmarks[di],
                          config, run_seeds[r]);
        ok[t] = true;
      } catch (const std::exception& e) {
        errors[t] = e.what();
      }
    }
  };
  std::size_t threads = config.threads ? config.threads : std::thread::hardware_concurrency();
  threads = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(tasks, 1));
  {
    std::vector<std::jthread> pool;
    for (std::size_t i = 1; i < threads; ++i) pool.emplace_back(worker);
    worker();
  }

  ExperimentReport report;
  report.config = to_json(config);
  for (std::size_t m = 0; m < nm; ++m) {
    for (std::size_t di = 0; di < nd; ++di) {
      CellReport cell;
      cell.method = config.methods[m];
      cell.landmarks = config.landmarks[di];
      for (std::size_t r = 0; r < runs; ++r) {
        const std::size_t t = (r * nm + m) * nd + di;
        if (ok[t]) {
          cell.accuracies.push_back(acc[t]);
          cell.runs.push_back(r);
        } else {
          cell.failures.push_back({r, errors[t]});
        }
      }
      if (cell.accuracies.empty()) {
        report.degraded = true;
      } else {
        cell.mean = mean_of(cell.accuracies);
        cell.std = std::sqrt(sample_variance(cell.accuracies, cell.mean));
      }
      report.cells.push_back(std::move(cell));
    }
  }
  for (std::size_t di = 0; di < nd; ++di) {
    for (std::size_t a = 0; a < nm; ++a) {
      for (std::size_t b = a + 1; b < nm; ++b) {
        const auto& ca = report.cells[a * nd + di];
        const auto& cb = report.cells[b * nd + di];
        if (ca.accuracies.size() < 2 || cb.accuracies.size() < 2) continue;
        report.ttests.push_back({ca.method, cb.method, config.landmarks[di],
                                 welch_t_test(ca.accuracies, cb.accuracies)});
      }
    }
  }
  return report;
}

TTestResult welch_t_test(std::span<const double> a, std::span<const double> b, double alpha) {
  if (a.size() < 2 || b.size() < 2) {
    throw Error(Errc::argument, "t-test needs at least 2 samples per group");
  }
  const double ma = mean_of(a);
  const double mb = mean_of(b);
  const double sa = sample_variance(a, ma) / static_cast<double>(a.size());
  const double sb = sample_variance(b, mb) / static_cast<double>(b.size());
  TTestResult res;
  if (sa + sb == 0.0) {
    if (ma == mb) {
      res.statistic = 0.0;
      res.p = 1.0;
    } else {
      res.statistic = ma > mb ? std::numeric_limits<double>::infinity()
                              : -std::numeric_limits<double>::infinity();
      res.p = 0.0;
    }
  } else {
    res.statistic = (ma - mb) / std::sqrt(sa + sb);
    const double df = (sa + sb) * (sa + sb) /
                      (sa * sa / static_cast<double>(a.size() - 1) +
                       sb * sb / static_cast<double>(b.size() - 1));
    const boost::math::students_t dist(df);
    res.p = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(res.statistic))));
  }
  res.significant = res.p < alpha;
  return res;
}

// ---- serialization -------------------------------------------------------

bool operator==(const TTestEntry& a, const TTestEntry& b) {
  const auto same = [](double x, double y) { return x == y || (std::isnan(x) && std::isnan(y)); };
  return a.method_a == b.method_a && a.method_b == b.method_b && a.landmarks == b.landmarks &&
         same(a.result.statistic, b.result.statistic) && same(a.result.p, b.result.p) &&
         a.result.significant == b.result.significant;
}

bool operator==(const ExperimentReport& a, const ExperimentReport& b) {
  return a.version == b.version && a.config == b.config && a.cells == b.cells &&
         a.ttests == b.ttests && a.degraded == b.degraded;
}

namespace {

nlohmann::json real_to_json(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

double real_from_json(const nlohmann::json& j) {
  if (j.is_number()) return j.get<double>();
  const auto s = j.get<std::string>();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  throw Error(Errc::format, "bad real '" + s + "'");
}

}  // namespace

nlohmann::json to_json(const ExperimentReport& report) {
  nlohmann::json j;
  j["version"] = report.version;
  j["config"] = report.config;
  auto& cells = j["cells"] = nlohmann::json::array();
  for (const auto& c : report.cells) {
    nlohmann::json failures = nlohmann::json::array();
    for (const auto& f : c.failures) failures.push_back({{"run", f.run}, {"error", f.error}});
    cells.push_back({{"method", c.method},
                     {"landmarks", c.landmarks},
                     {"accuracies", c.accuracies},
                     {"runs", c.runs},
                     {"mean", c.accuracies.empty() ? nlohmann::json(nullptr) : nlohmann::json(c.mean)},
                     {"std", c.accuracies.empty() ? nlohmann::json(nullptr) : nlohmann::json(c.std)},
                     {"failures", std::move(failures)}});
  }
  auto& tt = j["ttests"] = nlohmann::json::array();
  for (const auto& t : report.ttests) {
    tt.push_back({{"method_a", t.method_a},
                  {"method_b", t.method_b},
                  {"landmarks", t.landmarks},
                  {"statistic", real_to_json(t.result.statistic)},
                  {"p", real_to_json(t.result.p)},
                  {"significant", t.result.significant}});
  }
  j["degraded"] = report.degraded;
  return j;
}

ExperimentReport report_from_json(const nlohmann::json& j) {
  try {
    ExperimentReport r;
    r.version = j.at("version").get<std::string>();
    if (r.version != "v1") throw Error(Errc::format, "unsupported report version " + r.version);
    r.config = j.at("config");
    for (const auto& c : j.at("cells")) {
      CellReport cell;
      cell.method = c.at("method").get<std::string>();
      cell.landmarks = c.at("landmarks").get<std::size_t>();
      cell.accuracies = c.at("accuracies").get<std::vector<double>>();
      if (c.contains("runs")) {
        cell.runs = c.at("runs").get<std::vector<std::size_t>>();
      } else {
        cell.runs.resize(cell.accuracies.size());
        std::iota(cell.runs.begin(), cell.runs.end(), std::size_t{0});
      }
      if (!c.at("mean").is_null()) cell.mean = c.at("mean").get<double>();
      if (!c.at("std").is_null()) cell.std = c.at("std").get<double>();
      if (c.contains("failures")) {
        for (const auto& f : c.at("failures")) {
          cell.failures.push_back({f.at("run").get<std::size_t>(), f.at("error").get<std::string>()});
        }
      }
      r.cells.push_back(std::move(cell));
    }
    for (const auto& t : j.at("ttests")) {
      TTestEntry e;
      e.method_a = t.at("method_a").get<std::string>();
      e.method_b = t.at("method_b").get<std::string>();
      e.landmarks = t.at("landmarks").get<std::size_t>();
      e.result.statistic = real_from_json(t.at("statistic"));
      e.result.p = real_from_json(t.at("p"));
      e.result.significant = t.at("significant").get<bool>();
      r.ttests.push_back(std::move(e));
    }
    r.degraded = j.value("degraded", false);
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::format, std::string("malformed report: ") + e.what());
  }
}

std::filesystem::path csv_path_for(const std::filesystem::path& json_path) {
  auto p = json_path;
  return p.replace_extension(".csv");
}

namespace {

std::string format_real(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::string csv_quote(const std::string& s) {
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch == '\n' ? ' ' : ch;
  }
  return out + "\"";
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::io, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(Errc::io, "write failed: " + path.string());
}

}  // namespace

void emit_report(const ExperimentReport& report, const std::filesystem::path& path) {
  write_text(path, to_json(report).dump(2) + "\n");
  std::string csv = "method,landmarks,run,accuracy,error\n";
  for (const auto& c : report.cells) {
    std::map<std::size_t, std::string> rows;
    for (std::size_t k = 0; k < c.accuracies.size(); ++k) {
      rows[c.runs[k]] = format_real(c.accuracies[k]) + ",";
    }
    for (const auto& f : c.failures) rows[f.run] = "," + csv_quote(f.error);
    for (const auto& [run, tail] : rows) {
      csv += c.method + "," + std::to_string(c.landmarks) + "," + std::to_string(run) + "," + tail +
             "\n";
    }
  }
  write_text(csv_path_for(path), csv);
}

ExperimentReport read_report(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io, "cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::format, std::string("malformed report: ") + e.what());
  }
  return report_from_json(j);
}

std::vector<CurveRow> curve_data(const ExperimentReport& report) {
  std::set<std::size_t> counts;
  for (const auto& c : report.cells) counts.insert(c.landmarks);
  if (counts.size() < 2) throw Error(Errc::argument, "curves need at least 2 landmark counts");
  std::vector<CurveRow> rows;
  for (const auto& c : report.cells) {
    if (c.accuracies.empty()) continue;
    rows.push_back({c.method, c.landmarks, c.mean, c.std});
  }
  std::sort(rows.begin(), rows.end(), [](const CurveRow& a, const CurveRow& b) {
    return std::tie(a.method, a.landmarks) < std::tie(b.method, b.landmarks);
  });
  return rows;
}

void write_curve_csv(const std::filesystem::path& path, std::span<const CurveRow> rows) {
  std::string csv = "method,landmarks,mean,std\n";
  for (const auto& r : rows) {
    csv += r.method + "," + std::to_string(r.landmarks) + "," + format_real(r.mean) + "," +
           format_real(r.std) + "\n";
  }
  write_text(path, csv);
}

}  // namespace simlearn
