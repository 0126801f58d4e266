#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "simlearn/data.hpp"

namespace simlearn {

//   bbs            singleton landmarks, raw similarities, random landmarks
//   bbs+d          same with diverse landmarks
//   bbs-pairs      pair differences with the clipped identity transfer
//   sign-baseline  pair differences with the sign transfer
//   ftune-s(+d)    one transfer learned from the family
//   ftune-m(+d)    one transfer per one-vs-all problem
enum class Method { bbs, bbs_d, bbs_pairs, sign_baseline, ftune_s, ftune_s_d, ftune_m, ftune_m_d };

std::string method_name(Method m);
Method parse_method(std::string_view text);

struct ExperimentConfig {
  std::optional<std::filesystem::path> features_path;
  std::optional<std::filesystem::path> similarity_path;
  std::filesystem::path labels_path;
  KernelSpec kernel;
  std::vector<std::string> methods;
  std::vector<std::size_t> landmarks;
  std::size_t runs = 20;
  double train_frac = 0.7;
  double valid_frac = 0.1;
  double test_frac = 0.2;
  std::vector<double> c_grid = {1.0, 10.0, 100.0, 1000.0};
  std::string family = "default";
  std::uint64_t master_seed = 0;
  std::string loss = "hinge";
  bool bias = true;
  std::size_t threads = 0;  // 0: hardware concurrency

  // Relative dataset paths resolve against this directory (not serialized).
  std::filesystem::path base_dir;

  // Throws a config error describing the first problem found.
  void validate() const;
  // Everything except the dataset paths.
  void validate_protocol() const;
};

ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentConfig& config);
ExperimentConfig load_config(const std::filesystem::path& path);

struct RunFailure {
  std::size_t run = 0;
  std::string error;
  friend bool operator==(const RunFailure&, const RunFailure&) = default;
};

struct CellReport {
  std::string method;
  std::size_t landmarks = 0;
  std::vector<double> accuracies;  // successful runs, in run order
  std::vector<std::size_t> runs;   // run index of each accuracy
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation; 0 for a single run
  std::vector<RunFailure> failures;
  friend bool operator==(const CellReport&, const CellReport&) = default;
};

struct TTestResult {
  double statistic = 0.0;
  double p = 1.0;
  bool significant = false;
};

struct TTestEntry {
  std::string method_a;
  std::string method_b;
  std::size_t landmarks = 0;
  TTestResult result;
};

struct ExperimentReport {
  std::string version = "v1";
  nlohmann::json config;
  std::vector<CellReport> cells;
  std::vector<TTestEntry> ttests;
  bool degraded = false;
};

bool operator==(const TTestEntry& a, const TTestEntry& b);
bool operator==(const ExperimentReport& a, const ExperimentReport& b);

struct MethodOutcome {
  double test_accuracy = 0.0;
  nlohmann::json details;  // chosen transfers, landmarks, models, validation scores
};

// Trains one method at one landmark count on one split and scores the test part.
MethodOutcome evaluate_method(const Dataset& dataset, const KernelSpec& spec, const Split& split,
                              Method method, std::size_t d, const ExperimentConfig& config,
                              std::uint64_t run_seed);

// evaluate_method's test accuracy.
double run_cell(const Dataset& dataset, const KernelSpec& spec, const Split& split, Method method,
                std::size_t d, const ExperimentConfig& config, std::uint64_t run_seed);

ExperimentReport run_experiment(const ExperimentConfig& config);
// Same, on an already loaded dataset (the config's paths are ignored).
ExperimentReport run_experiment(const ExperimentConfig& config, const Dataset& dataset);

// Welch's unequal-variance two-sample t-test, two-sided. With both variances
// zero, p = 1 when the means agree and 0 otherwise.
TTestResult welch_t_test(std::span<const double> a, std::span<const double> b,
                         double alpha = 0.05);

nlohmann::json to_json(const ExperimentReport& report);
ExperimentReport report_from_json(const nlohmann::json& j);

// Writes <path> (JSON) and <path stem>.csv with one row per (method, d, run).
void emit_report(const ExperimentReport& report, const std::filesystem::path& path);
ExperimentReport read_report(const std::filesystem::path& path);
std::filesystem::path csv_path_for(const std::filesystem::path& json_path);

struct CurveRow {
  std::string method;
  std::size_t landmarks = 0;
  double mean = 0.0;
  double std = 0.0;
};

// Accuracy-vs-landmarks rows sorted by (method, d). Needs >= 2 landmark counts.
std::vector<CurveRow> curve_data(const ExperimentReport& report);
void write_curve_csv(const std::filesystem::path& path, std::span<const CurveRow> rows);

}  // namespace simlearn
