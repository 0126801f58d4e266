// simlearn command line front end.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "simlearn/data.hpp"
#include "simlearn/embedding.hpp"
#include "simlearn/error.hpp"
#include "simlearn/ftune.hpp"
#include "simlearn/goodness.hpp"
#include "simlearn/harness.hpp"
#include "simlearn/landmark.hpp"
#include "simlearn/random.hpp"
#include "simlearn/trainer.hpp"
#include "simlearn/transfer.hpp"

namespace fs = std::filesystem;
using namespace simlearn;

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kDataError = 3;
constexpr int kDegraded = 4;

int exit_code(Errc code) {
  switch (code) {
    case Errc::config:
    case Errc::argument:
    case Errc::construction:
      return kConfigError;
    default:
      return kDataError;
  }
}

struct DataOptions {
  std::string features;
  std::string similarity;
  std::string labels;
  std::string kernel;
  double width = 0.0;
  bool distance = false;

  void add(CLI::App* app) {
    app->add_option("--features", features, "features CSV (one row per point)");
    app->add_option("--similarity", similarity, "n x n similarity CSV");
    app->add_option("--labels", labels, "labels file, one integer per line")->required();
    app->add_option("--kernel", kernel, "precomputed|gaussian (default: by input)")
        ->check(CLI::IsMember({"precomputed", "gaussian"}));
    app->add_option("--width", width, "gaussian width sigma (default: mean training distance)");
    app->add_flag("--distance", distance, "the precomputed matrix holds distances");
  }

  Dataset load() const {
    DatasetPaths paths;
    if (!features.empty()) paths.features = features;
    if (!similarity.empty()) paths.similarity = similarity;
    if (!paths.features && !paths.similarity) {
      throw Error(Errc::config, "one of --features, --similarity is required");
    }
    paths.labels = labels;
    return load_dataset(paths);
  }

  KernelSpec spec() const {
    KernelSpec s;
    const std::string kind =
        !kernel.empty() ? kernel : (similarity.empty() ? "gaussian" : "precomputed");
    s.kind = kind == "gaussian" ? KernelSpec::Kind::gaussian : KernelSpec::Kind::precomputed;
    if (width > 0.0) s.width = width;
    s.distance = distance;
    return s;
  }
};

struct LandmarkOptions {
  std::size_t landmarks = 10;
  std::string select = "random";
  std::uint64_t seed = 0;

  void add(CLI::App* app) {
    app->add_option("--landmarks", landmarks, "number of landmarks d")->check(CLI::PositiveNumber);
    app->add_option("--select", select, "random|dselect")
        ->check(CLI::IsMember({"random", "dselect"}));
    app->add_option("--seed", seed, "random seed");
  }
};

void write_json(const std::string& path, const nlohmann::json& j) {
  if (path.empty() || path == "-") {
    std::cout << j.dump(2) << "\n";
    return;
  }
  std::ofstream out(path);
  if (!out) throw Error(Errc::io, "cannot write " + path);
  out << j.dump(2) << "\n";
}

std::vector<std::size_t> all_ids(const Dataset& ds) {
  std::vector<std::size_t> ids(ds.size());
  std::iota(ids.begin(), ids.end(), std::size_t{0});
  return ids;
}

// ---- experiment ----------------------------------------------------------

struct ExperimentCmd {
  std::string config;
  std::string out = "report.json";
  std::string curves;

  int run() const {
    const auto cfg = load_config(config);
    const auto report = run_experiment(cfg);
    emit_report(report, out);
    std::set<std::size_t> counts(cfg.landmarks.begin(), cfg.landmarks.end());
    if (!curves.empty() && counts.size() >= 2) {
      const auto rows = curve_data(report);
      write_curve_csv(curves, rows);
    }
    for (const auto& c : report.cells) {
      std::cout << c.method << " d=" << c.landmarks << " mean=" << c.mean << " std=" << c.std
                << " runs=" << c.accuracies.size();
      if (!c.failures.empty()) std::cout << " failed=" << c.failures.size();
      std::cout << "\n";
    }
    return report.degraded ? kDegraded : kOk;
  }
};

// ---- ftune ---------------------------------------------------------------

struct FtuneCmd {
  DataOptions data;
  LandmarkOptions lm;
  std::string method = "ftune-s";
  std::string family = "default";
  std::string transfer;
  std::vector<double> split = {0.7, 0.1, 0.2};
  std::vector<double> c_grid = default_c_grid();
  std::string loss = "hinge";
  bool no_bias = false;
  std::string out;

  int run() const {
    std::string name = method;
    if (lm.select == "dselect") {
      if (method == "sign-baseline" || method == "bbs-pairs") {
        throw Error(Errc::config, method + " uses random pairs only");
      }
      name += "+d";
    }
    const Method m = parse_method(name);
    if (split.size() != 3) throw Error(Errc::config, "--split needs three fractions");

    ExperimentConfig cfg;
    cfg.methods = {name};
    cfg.landmarks = {lm.landmarks};
    cfg.runs = 1;
    cfg.train_frac = split[0];
    cfg.valid_frac = split[1];
    cfg.test_frac = split[2];
    cfg.c_grid = c_grid;
    cfg.family = transfer.empty() ? family : transfer;
    cfg.master_seed = lm.seed;
    cfg.loss = loss;
    cfg.bias = !no_bias;
    cfg.kernel = data.spec();
    cfg.validate_protocol();

    const Dataset ds = data.load();
    const SplitSpec sp{cfg.train_frac, cfg.valid_frac, cfg.test_frac, derive_seed(lm.seed, {0})};
    const Split parts = simlearn::split(ds, sp);
    const auto outcome = evaluate_method(ds, cfg.kernel, parts, m, lm.landmarks, cfg, lm.seed);

    nlohmann::json j = outcome.details;
    j["method"] = name;
    j["landmarks"] = lm.landmarks;
    j["seed"] = lm.seed;
    j["family"] = cfg.family;
    j["split_sizes"] = {parts.train.size(), parts.valid.size(), parts.test.size()};
    j["test_accuracy"] = outcome.test_accuracy;
    write_json(out, j);
    return kOk;
  }
};

// ---- embed ---------------------------------------------------------------

struct EmbedCmd {
  DataOptions data;
  LandmarkOptions lm;
  std::string transfer = "identity";
  bool singletons = false;
  int positive_class = -1;
  std::string out;
  std::string pairs_out;

  int run() const {
    const Dataset ds = data.load();
    const auto f = parse_transfer(transfer);
    const auto ids = all_ids(ds);
    const Kernel kernel(ds, data.spec());
    EmbeddedDataset emb;
    nlohmann::json record;
    if (singletons) {
      const LandmarkSet set = lm.select == "dselect"
                                  ? dselect_landmarks(kernel, ids, lm.landmarks, lm.seed)
                                  : random_landmarks(ids, lm.landmarks, lm.seed);
      emb = embed_singletons(kernel, set, ids);
      record["landmarks"] = set.ids;
    } else {
      BinarySubset view;
      if (ds.is_binary() && positive_class < 0) {
        view = binary_subset(ds, ids);
      } else if (positive_class >= 0 && positive_class < ds.num_classes) {
        view = one_vs_all_subset(ds, ids, positive_class);
      } else {
        throw Error(Errc::config, "multiclass data needs --positive-class in [0, k)");
      }
      const LandmarkPairSet pairs = lm.select == "dselect"
                                        ? dselect(kernel, view, lm.landmarks, lm.seed).pairs
                                        : random_pairs(view, lm.landmarks, lm.seed);
      emb = embed_pairs(kernel, pairs, f, ids);
      nlohmann::json jp = nlohmann::json::array();
      for (const auto& p : pairs.pairs) jp.push_back({p.pos, p.neg});
      record["pairs"] = std::move(jp);
      record["transfer"] = f.name();
    }
    if (out.empty()) {
      for (std::size_t i = 0; i < emb.size(); ++i) {
        const auto row = emb.values.row(i);
        for (std::size_t k = 0; k < row.size(); ++k) std::cout << (k ? "," : "") << row[k];
        std::cout << "\n";
      }
    } else {
      write_embedding_csv(out, emb);
    }
    if (!pairs_out.empty()) write_json(pairs_out, record);
    return kOk;
  }
};

// ---- dselect -------------------------------------------------------------

struct DselectCmd {
  DataOptions data;
  LandmarkOptions lm;
  std::string objective = "similarity";
  std::string out;

  int run() const {
    const Dataset ds = data.load();
    const Kernel kernel(ds, data.spec());
    const auto ids = all_ids(ds);
    const auto obj =
        objective == "distance" ? SelectionObjective::distance : SelectionObjective::similarity;
    nlohmann::json j;
    LandmarkSet set;
    if (lm.select == "random") {
      set = random_landmarks(ids, lm.landmarks, lm.seed);
    } else if (ds.is_binary()) {
      const auto res = dselect(kernel, binary_subset(ds, ids), lm.landmarks, lm.seed, obj);
      set = res.landmarks;
      nlohmann::json jp = nlohmann::json::array();
      for (const auto& p : res.pairs.pairs) jp.push_back({p.pos, p.neg});
      j["pairs"] = std::move(jp);
    } else {
      set = dselect_multiclass(kernel, ids, lm.landmarks, lm.seed, obj);
    }
    j["select"] = lm.select;
    j["seed"] = lm.seed;
    j["landmarks"] = set.ids;
    if (set.size() >= 2) j["mean_pairwise_similarity"] = mean_pairwise_similarity(kernel, set.ids);
    write_json(out, j);
    return kOk;
  }
};

// ---- verify-theory -------------------------------------------------------

struct VerifyCmd {
  std::string theorem = "margin";
  GoodnessParams params;
  std::size_t trials = 50;
  std::size_t configurations = 1000;
  std::uint64_t seed = 0;
  std::size_t n = 200;
  double noise = -1.0;
  std::size_t landmarks = 0;
  std::string loss = "hinge";
  double hinge_margin = 1.0;
  std::string out;

  int run() const {
    const LossFunction l =
        loss == "hinge" ? LossFunction::hinge(hinge_margin) : parse_loss(loss);
    VerifyOptions opts;
    opts.n = n;
    if (noise >= 0.0) opts.noise = noise;
    if (landmarks > 0) opts.landmarks = landmarks;
    nlohmann::json j;
    bool pass = false;
    if (theorem == "margin") {
      const auto rep = verify_theorem2(params, trials, seed, opts);
      j = to_json(rep);
      pass = rep.pass;
    } else if (theorem == "surrogate") {
      const auto rep = verify_theorem7(params, l, trials, seed, opts);
      j = to_json(rep);
      pass = rep.pass;
    } else {
      const auto rep = verify_lipschitz_suite(configurations, seed, l);
      j = to_json(rep);
      pass = rep.pass;
    }
    j["params"] = {{"epsilon", params.epsilon},   {"gamma", params.gamma},
                   {"B", params.b_bound},         {"epsilon_one", params.epsilon_one},
                   {"delta", params.delta},       {"seed", seed}};
    write_json(out, j);
    return pass ? kOk : kDegraded;
  }
};

// ---- generate ------------------------------------------------------------

struct GenerateCmd {
  std::string kind = "clusters";
  std::size_t n = 400;
  int classes = 2;
  int clusters_per_class = 4;
  std::size_t points_per_cluster = 100;
  std::vector<std::size_t> cluster_sizes;
  double spread = 1.0;
  double gamma = 0.2;
  double epsilon = 0.0;
  double noise = 0.1;
  std::uint64_t seed = 0;
  std::string out_dir = ".";

  int run() const {
    Dataset ds;
    if (kind == "clusters") {
      ds = cluster_sizes.empty() ? make_gaussian_clusters(classes, clusters_per_class,
                                                          points_per_cluster, spread, seed)
                                 : make_multimodal_clusters(classes, cluster_sizes, spread, seed);
    } else if (kind == "sign-favoring") {
      ds = plant_sign_favoring(n, seed);
    } else if (kind == "linear-margin") {
      ds = plant_linear_margin(n, seed);
    } else {
      GoodnessParams p;
      p.gamma = gamma;
      p.epsilon = epsilon;
      ds = plant_good_similarity(n, p, noise, seed).dataset;
    }
    const fs::path dir(out_dir);
    fs::create_directories(dir);
    std::vector<int> raw(ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) raw[i] = ds.original_labels[ds.class_of(i)];
    write_labels(dir / "labels.csv", raw);
    if (ds.features) write_csv_matrix(dir / "features.csv", *ds.features);
    if (ds.similarity) write_csv_matrix(dir / "similarity.csv", *ds.similarity);
    std::cout << "wrote " << ds.size() << " points to " << dir.string() << "\n";
    return kOk;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Similarity-based classification with learned transfer functions"};
  app.require_subcommand(1);

  ExperimentCmd experiment;
  auto* exp_app = app.add_subcommand("experiment", "run a repeated-split method comparison");
  exp_app->add_option("--config", experiment.config, "experiment JSON")->required();
  exp_app->add_option("--out", experiment.out, "report JSON path (CSV written alongside)");
  exp_app->add_option("--curves", experiment.curves, "accuracy-vs-landmarks CSV");

  FtuneCmd ftune;
  auto* ftune_app = app.add_subcommand("ftune", "train one method on one split");
  ftune.data.add(ftune_app);
  ftune.lm.add(ftune_app);
  ftune_app->add_option("--method", ftune.method, "ftune-s|ftune-m|bbs|sign-baseline|bbs-pairs")
      ->check(CLI::IsMember({"ftune-s", "ftune-m", "bbs", "sign-baseline", "bbs-pairs"}));
  ftune_app->add_option("--family", ftune.family, "default|ramp:<s1,s2,...>");
  ftune_app->add_option("--transfer", ftune.transfer, "fix the transfer: ramp:<s>|sign|identity");
  ftune_app->add_option("--split", ftune.split, "train,valid,test fractions")->delimiter(',');
  ftune_app->add_option("--c-grid", ftune.c_grid, "C values")->delimiter(',');
  ftune_app->add_option("--loss", ftune.loss, "hinge|logistic");
  ftune_app->add_flag("--no-bias", ftune.no_bias, "train without a bias term");
  ftune_app->add_option("--out", ftune.out, "result JSON (default stdout)");

  EmbedCmd embed;
  auto* embed_app = app.add_subcommand("embed", "map every point into the landmarked space");
  embed.data.add(embed_app);
  embed.lm.add(embed_app);
  embed_app->add_option("--transfer", embed.transfer, "ramp:<s>|sign|identity");
  embed_app->add_flag("--singletons", embed.singletons, "raw similarities to single landmarks");
  embed_app->add_option("--positive-class", embed.positive_class, "one-vs-all class for pairs");
  embed_app->add_option("--out", embed.out, "embedding CSV (default stdout)");
  embed_app->add_option("--pairs-out", embed.pairs_out, "landmark JSON");

  DselectCmd dsel;
  auto* dsel_app = app.add_subcommand("dselect", "select landmarks");
  dsel.data.add(dsel_app);
  dsel.lm.select = "dselect";
  dsel.lm.add(dsel_app);
  dsel_app->add_option("--objective", dsel.objective, "similarity|distance")
      ->check(CLI::IsMember({"similarity", "distance"}));
  dsel_app->add_option("--out", dsel.out, "result JSON (default stdout)");

  VerifyCmd verify;
  auto* ver_app = app.add_subcommand("verify-theory", "Monte-Carlo checks on planted instances");
  ver_app->add_option("--theorem", verify.theorem, "margin|surrogate|lipschitz")
      ->check(CLI::IsMember({"margin", "surrogate", "lipschitz"}));
  ver_app->add_option("--epsilon", verify.params.epsilon);
  ver_app->add_option("--gamma", verify.params.gamma);
  ver_app->add_option("--B", verify.params.b_bound);
  ver_app->add_option("--eps1", verify.params.epsilon_one);
  ver_app->add_option("--delta", verify.params.delta);
  ver_app->add_option("--trials", verify.trials)->check(CLI::PositiveNumber);
  ver_app->add_option("--configurations", verify.configurations, "lipschitz configurations");
  ver_app->add_option("--seed", verify.seed);
  ver_app->add_option("--n", verify.n, "points per planted instance");
  ver_app->add_option("--noise", verify.noise, "planted noise level");
  ver_app->add_option("--landmarks", verify.landmarks, "override the prescribed d");
  ver_app->add_option("--loss", verify.loss, "hinge|logistic");
  ver_app->add_option("--hinge-margin", verify.hinge_margin);
  ver_app->add_option("--out", verify.out, "report JSON (default stdout)");

  GenerateCmd gen;
  auto* gen_app = app.add_subcommand("generate", "write a synthetic dataset");
  gen_app->add_option("--kind", gen.kind, "clusters|sign-favoring|linear-margin|planted")
      ->check(CLI::IsMember({"clusters", "sign-favoring", "linear-margin", "planted"}));
  gen_app->add_option("--n", gen.n);
  gen_app->add_option("--classes", gen.classes);
  gen_app->add_option("--clusters-per-class", gen.clusters_per_class);
  gen_app->add_option("--points-per-cluster", gen.points_per_cluster);
  gen_app->add_option("--cluster-sizes", gen.cluster_sizes,
                      "points in each cluster of a class (overrides the two above)")
      ->delimiter(',');
  gen_app->add_option("--spread", gen.spread);
  gen_app->add_option("--gamma", gen.gamma);
  gen_app->add_option("--epsilon", gen.epsilon);
  gen_app->add_option("--noise", gen.noise);
  gen_app->add_option("--seed", gen.seed);
  gen_app->add_option("--out-dir", gen.out_dir);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfigError;
  }

  try {
    if (*exp_app) return experiment.run();
    if (*ftune_app) return ftune.run();
    if (*embed_app) return embed.run();
    if (*dsel_app) return dsel.run();
    if (*ver_app) return verify.run();
    if (*gen_app) return gen.run();
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDataError;
  }
  return kOk;
}
