#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <numeric>
#include <optional>
#include <string>
#include <vector>

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

namespace py = pybind11;
using namespace simlearn;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Matrix to_matrix(const Array& a) {
  if (a.ndim() != 2) throw Error(Errc::shape, "expected a 2-D array");
  Matrix m(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)));
  std::copy(a.data(), a.data() + a.size(), m.data().begin());
  return m;
}

Array to_array(const Matrix& m) {
  Array a({m.rows(), m.cols()});
  std::copy(m.data().begin(), m.data().end(), a.mutable_data());
  return a;
}

KernelSpec kernel_spec(const std::string& kind, std::optional<double> width, bool distance) {
  KernelSpec s;
  if (kind == "gaussian") {
    s.kind = KernelSpec::Kind::gaussian;
  } else if (kind == "precomputed") {
    s.kind = KernelSpec::Kind::precomputed;
  } else {
    throw Error(Errc::config, "unknown kernel kind '" + kind + "'");
  }
  s.width = width;
  s.distance = distance;
  return s;
}

std::vector<std::size_t> all_ids(const Dataset& ds) {
  std::vector<std::size_t> ids(ds.size());
  std::iota(ids.begin(), ids.end(), std::size_t{0});
  return ids;
}

std::vector<std::pair<std::size_t, std::size_t>> pair_list(const LandmarkPairSet& p) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (const auto& x : p.pairs) out.emplace_back(x.pos, x.neg);
  return out;
}

LandmarkPairSet pair_set(const std::vector<std::pair<std::size_t, std::size_t>>& v) {
  LandmarkPairSet p;
  for (const auto& [a, b] : v) p.pairs.push_back({a, b});
  return p;
}

}  // namespace

PYBIND11_MODULE(_simlearn, m) {
  m.doc() = "Similarity-based classification with landmark embeddings";

  static py::exception<Error> exc(m, "SimlearnError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::set_error(exc, e.what());
    }
  });

  py::class_<Dataset>(m, "Dataset")
      .def_property_readonly("labels", [](const Dataset& d) { return d.labels; })
      .def_property_readonly("num_classes", [](const Dataset& d) { return d.num_classes; })
      .def_property_readonly("original_labels", [](const Dataset& d) { return d.original_labels; })
      .def_property_readonly("has_features", [](const Dataset& d) { return d.features.has_value(); })
      .def_property_readonly("has_similarity",
                             [](const Dataset& d) { return d.similarity.has_value(); })
      .def("__len__", &Dataset::size);

  m.def(
      "make_dataset",
      [](const std::vector<int>& labels, std::optional<Array> features,
         std::optional<Array> similarity) {
        std::optional<Matrix> f;
        std::optional<Matrix> s;
        if (features) f = to_matrix(*features);
        if (similarity) s = to_matrix(*similarity);
        return make_dataset(labels, std::move(f), std::move(s));
      },
      py::arg("labels"), py::arg("features") = py::none(), py::arg("similarity") = py::none());

  m.def(
      "load_dataset",
      [](const std::string& labels, std::optional<std::string> features,
         std::optional<std::string> similarity) {
        DatasetPaths p;
        p.labels = labels;
        if (features) p.features = *features;
        if (similarity) p.similarity = *similarity;
        return load_dataset(p);
      },
      py::arg("labels"), py::arg("features") = py::none(), py::arg("similarity") = py::none());

  m.def("gaussian_width", [](const Dataset& d) { return gaussian_width(d); });

  m.def(
      "kernel_matrix",
      [](const Dataset& d, const std::string& kind, std::optional<double> width, bool distance) {
        const Kernel k(d, kernel_spec(kind, width, distance));
        const auto ids = all_ids(d);
        return to_array(k.block(ids, ids));
      },
      py::arg("dataset"), py::arg("kind") = "precomputed", py::arg("width") = py::none(),
      py::arg("distance") = false);

  m.def(
      "split",
      [](const Dataset& d, double train, double valid, double test, std::uint64_t seed) {
        const auto s = split(d, SplitSpec{train, valid, test, seed});
        return py::make_tuple(s.train, s.valid, s.test);
      },
      py::arg("dataset"), py::arg("train") = 0.7, py::arg("valid") = 0.1, py::arg("test") = 0.2,
      py::arg("seed") = 0);

  m.def(
      "apply_transfer",
      [](const std::string& f, const std::vector<double>& xs) {
        const auto t = parse_transfer(f);
        std::vector<double> out;
        out.reserve(xs.size());
        for (double x : xs) out.push_back(apply(t, x));
        return out;
      },
      py::arg("transfer"), py::arg("values"));
  m.def("c_f", [](const std::string& f, const std::vector<double>& xs) {
    return c_f(parse_transfer(f), xs);
  });
  m.def("family", [](const std::string& text) {
    std::vector<std::string> names;
    for (const auto& f : parse_family(text).members) names.push_back(f.name());
    return names;
  }, py::arg("text") = "default");

  m.def(
      "random_pairs",
      [](const Dataset& d, std::size_t n, std::uint64_t seed) {
        return pair_list(random_pairs(binary_subset(d, all_ids(d)), n, seed));
      },
      py::arg("dataset"), py::arg("d"), py::arg("seed") = 0);

  m.def(
      "dselect",
      [](const Dataset& d, std::size_t n, std::uint64_t seed, const std::string& kind,
         std::optional<double> width) -> py::tuple {
        const Kernel k(d, kernel_spec(kind, width, false));
        const auto ids = all_ids(d);
        if (!d.is_binary()) {
          return py::make_tuple(dselect_multiclass(k, ids, n, seed).ids, py::none());
        }
        const auto res = dselect(k, binary_subset(d, ids), n, seed);
        return py::make_tuple(res.landmarks.ids, pair_list(res.pairs));
      },
      py::arg("dataset"), py::arg("d"), py::arg("seed") = 0, py::arg("kind") = "precomputed",
      py::arg("width") = py::none());

  m.def(
      "embed_pairs",
      [](const Dataset& d, const std::vector<std::pair<std::size_t, std::size_t>>& pairs,
         const std::string& transfer, const std::string& kind, std::optional<double> width) {
        const Kernel k(d, kernel_spec(kind, width, false));
        return to_array(embed_pairs(k, pair_set(pairs), parse_transfer(transfer), all_ids(d)).values);
      },
      py::arg("dataset"), py::arg("pairs"), py::arg("transfer") = "identity",
      py::arg("kind") = "precomputed", py::arg("width") = py::none());

  m.def(
      "train",
      [](const Array& x, const std::vector<int>& labels, const std::string& loss, double c,
         std::uint64_t seed) {
        EmbeddedDataset e;
        e.values = to_matrix(x);
        e.labels = labels;
        e.ids = std::vector<std::size_t>(labels.size());
        return to_json(train(e, parse_loss(loss), c, seed)).dump();
      },
      py::arg("x"), py::arg("labels"), py::arg("loss") = "hinge", py::arg("c") = 1.0,
      py::arg("seed") = 0);

  m.def(
      "evaluate_method",
      [](const Dataset& d, const std::string& method, std::size_t landmarks,
         const std::string& config_json, std::uint64_t seed) {
        auto j = nlohmann::json::parse(config_json);
        j["methods"] = {method};
        j["landmarks"] = {landmarks};
        if (!j.contains("labels_path")) j["labels_path"] = "-";
        if (!j.contains("similarity_path") && !j.contains("features_path")) {
          j[d.similarity ? "similarity_path" : "features_path"] = "-";
        }
        const auto cfg = config_from_json(j);
        const Split s = split(d, SplitSpec{cfg.train_frac, cfg.valid_frac, cfg.test_frac,
                                           derive_seed(seed, {0})});
        const auto out = evaluate_method(d, cfg.kernel, s, parse_method(method), landmarks, cfg, seed);
        return py::make_tuple(out.test_accuracy, out.details.dump());
      },
      py::arg("dataset"), py::arg("method"), py::arg("landmarks"), py::arg("config") = "{}",
      py::arg("seed") = 0);

  m.def(
      "run_experiment",
      [](const std::string& config_json, std::optional<const Dataset*> dataset) {
        auto j = nlohmann::json::parse(config_json);
        if (dataset) {
          if (!j.contains("labels_path")) j["labels_path"] = "-";
          if (!j.contains("similarity_path") && !j.contains("features_path")) {
            j[(*dataset)->similarity ? "similarity_path" : "features_path"] = "-";
          }
        }
        const auto cfg = config_from_json(j);
        py::gil_scoped_release release;
        const auto report = dataset ? run_experiment(cfg, **dataset) : run_experiment(cfg);
        return to_json(report).dump();
      },
      py::arg("config"), py::arg("dataset") = py::none());

  m.def(
      "welch_t_test",
      [](const std::vector<double>& a, const std::vector<double>& b) {
        const auto r = welch_t_test(a, b);
        return py::make_tuple(r.statistic, r.p, r.significant);
      },
      py::arg("a"), py::arg("b"));

  m.def(
      "estimate_goodness_pairs",
      [](const Array& k, const std::vector<int>& labels, const std::string& transfer,
         double weight, double gamma) {
        GoodnessParams p;
        p.gamma = gamma;
        p.b_bound = std::max(1.0, std::abs(weight));
        const auto est = estimate_goodness_pairs(to_matrix(k), labels, parse_transfer(transfer),
                                                 WeightFunction::constant(weight, p.b_bound), p);
        return py::make_tuple(est.violation_fraction, est.values, est.c_f);
      },
      py::arg("kernel"), py::arg("labels"), py::arg("transfer") = "identity",
      py::arg("weight") = 1.0, py::arg("gamma") = 0.1);

  m.def(
      "theorem_landmarks",
      [](const std::string& which, double gamma, double delta, double eps1, double b,
         double lipschitz) {
        GoodnessParams p;
        p.gamma = gamma;
        p.delta = delta;
        p.epsilon_one = eps1;
        p.b_bound = b;
        return which == "margin" ? theorem2_landmarks(p) : theorem7_landmarks(p, lipschitz);
      },
      py::arg("which"), py::arg("gamma") = 0.1, py::arg("delta") = 0.1, py::arg("eps1") = 0.05,
      py::arg("B") = 1.0, py::arg("lipschitz") = 1.0);

  m.def(
      "verify_theorem",
      [](const std::string& which, double gamma, double delta, double eps1, double epsilon,
         std::size_t trials, std::uint64_t seed, std::size_t n) {
        GoodnessParams p;
        p.gamma = gamma;
        p.delta = delta;
        p.epsilon_one = eps1;
        p.epsilon = epsilon;
        VerifyOptions o;
        o.n = n;
        py::gil_scoped_release release;
        const auto rep = which == "margin"
                             ? verify_theorem2(p, trials, seed, o)
                             : verify_theorem7(p, LossFunction::hinge(), trials, seed, o);
        return to_json(rep).dump();
      },
      py::arg("which"), py::arg("gamma") = 0.2, py::arg("delta") = 0.1, py::arg("eps1") = 0.05,
      py::arg("epsilon") = 0.0, py::arg("trials") = 10, py::arg("seed") = 0, py::arg("n") = 200);
}
