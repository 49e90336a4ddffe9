#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "cmcm/cone.hpp"
#include "cmcm/data.hpp"
#include "cmcm/error.hpp"
#include "cmcm/metrics.hpp"
#include "cmcm/nnopt.hpp"
#include "cmcm/parallel.hpp"
#include "cmcm/pipeline.hpp"
#include "cmcm/subspace.hpp"

namespace py = pybind11;
using namespace cmcm;

namespace {

std::vector<TrainingSet> to_training_sets(const std::vector<std::pair<Matrix, std::string>>& sets) {
  std::vector<TrainingSet> out;
  out.reserve(sets.size());
  for (std::size_t i = 0; i < sets.size(); ++i) {
    out.push_back({FeatureSet{sets[i].first, "set" + std::to_string(i)}, sets[i].second});
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Convex cone and subspace models for image-set classification";

  auto error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  auto invalid = py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
  py::register_exception<DimensionMismatch>(m, "DimensionMismatch", invalid.ptr());
  py::register_exception<NumericError>(m, "NumericError", error.ptr());
  py::register_exception<DataError>(m, "DataError", error.ptr());

  m.def("set_max_threads", &set_max_threads, py::arg("n"));
  m.def("max_threads", &max_threads);

  py::class_<nnopt::NnlsSolution>(m, "NnlsSolution")
      .def_readonly("weights", &nnopt::NnlsSolution::weights)
      .def_readonly("residual_norm", &nnopt::NnlsSolution::residual_norm);
  m.def("nnls", &nnopt::nnls_solve, py::arg("basis"), py::arg("x"), py::arg("tol") = nnopt::kNnlsTol,
        "min ||x - B w|| subject to w >= 0.");

  py::class_<nnopt::NmfResult>(m, "NmfResult")
      .def_readonly("basis", &nnopt::NmfResult::basis)
      .def_readonly("coeffs", &nnopt::NmfResult::coeffs)
      .def_readonly("objective_history", &nnopt::NmfResult::objective_history);
  m.def(
      "nmf",
      [](const Matrix& f, int rank, int max_iter, double rel_tol, std::uint64_t seed) {
        py::gil_scoped_release release;
        return nnopt::nmf(f, rank, {.max_iter = max_iter, .rel_tol = rel_tol, .seed = seed});
      },
      py::arg("f"), py::arg("rank"), py::arg("max_iter") = 200, py::arg("rel_tol") = 1e-5, py::arg("seed") = 0);

  py::class_<ConvexCone>(m, "ConvexCone")
      .def_static("from_basis", &ConvexCone::from_basis, py::arg("basis"), py::arg("drop_tol") = 1e-10)
      .def_property_readonly("basis", &ConvexCone::basis)
      .def_property_readonly("n_basis", &ConvexCone::n_basis)
      .def_property_readonly("dim_ambient", &ConvexCone::dim_ambient)
      .def_property_readonly("empty", &ConvexCone::empty)
      .def("__eq__", [](const ConvexCone& a, const ConvexCone& b) { return a == b; });
  m.def(
      "cone_from_features",
      [](const Matrix& f, int rank, int max_iter, double rel_tol, std::uint64_t seed) {
        py::gil_scoped_release release;
        return cone_from_features(f, rank, {.max_iter = max_iter, .rel_tol = rel_tol, .seed = seed});
      },
      py::arg("features"), py::arg("rank"), py::arg("max_iter") = 200, py::arg("rel_tol") = 1e-5,
      py::arg("seed") = 0);
  m.def(
      "project_to_cone",
      [](const ConvexCone& cone, const Vector& x) {
        ConeProjection p = project_to_cone(cone, x);
        return py::make_tuple(p.projected, p.weights);
      },
      py::arg("cone"), py::arg("x"), "Returns (projection, weights).");

  py::class_<AngleSpectrum>(m, "AngleSpectrum")
      .def_readonly("cosines", &AngleSpectrum::cosines)
      .def_readonly("p_vectors", &AngleSpectrum::p_vectors)
      .def_readonly("q_vectors", &AngleSpectrum::q_vectors)
      .def_readonly("converged", &AngleSpectrum::converged)
      .def("__len__", &AngleSpectrum::size);
  m.def(
      "cone_angles",
      [](const ConvexCone& a, const ConvexCone& b, int count, double tol, int max_iter, int restarts,
         std::uint64_t seed) {
        AlsOptions opts;
        opts.tol = tol;
        opts.max_iter = max_iter;
        opts.restarts = restarts;
        opts.seed = seed;
        py::gil_scoped_release release;
        return cone_angles(a, b, count, opts);
      },
      py::arg("c1"), py::arg("c2"), py::arg("count"), py::arg("tol") = 1e-6, py::arg("max_iter") = 1000,
      py::arg("restarts") = 5, py::arg("seed") = 0);
  m.def("cone_similarity", py::overload_cast<const std::vector<double>&, int>(&cone_similarity),
        py::arg("cosines"), py::arg("count"));

  py::class_<Subspace>(m, "Subspace")
      .def(py::init([](Matrix basis) { return Subspace{std::move(basis)}; }), py::arg("basis"))
      .def_readonly("basis", &Subspace::basis)
      .def_property_readonly("dim", &Subspace::dim);
  m.def("subspace_from_features", &subspace_from_features, py::arg("features"), py::arg("k"));
  m.def("canonical_angles", &canonical_angles, py::arg("s1"), py::arg("s2"), "Descending canonical cosines.");

  py::enum_<Method>(m, "Method")
      .value("MSM", Method::kMsm)
      .value("CMSM", Method::kCmsm)
      .value("MCM", Method::kMcm)
      .value("CMCM", Method::kCmcm);
  m.def("parse_method", &parse_method, py::arg("name"));

  py::class_<ModelConfig>(m, "ModelConfig")
      .def(py::init<>())
      .def_readwrite("method", &ModelConfig::method)
      .def_readwrite("ref_dim", &ModelConfig::ref_dim)
      .def_readwrite("in_dim", &ModelConfig::in_dim)
      .def_readwrite("n_angles", &ModelConfig::n_angles)
      .def_readwrite("disc_dim", &ModelConfig::disc_dim)
      .def_readwrite("n_gaps", &ModelConfig::n_gaps)
      .def_readwrite("eps_rel", &ModelConfig::eps_rel)
      .def_readwrite("seed", &ModelConfig::seed);

  py::class_<Prediction>(m, "Prediction")
      .def_readonly("label_index", &Prediction::label_index)
      .def_readonly("label", &Prediction::label)
      .def_readonly("scores", &Prediction::scores);

  py::class_<TrainedModel>(m, "TrainedModel")
      .def_readonly("config", &TrainedModel::config)
      .def_readonly("feature_dim", &TrainedModel::feature_dim)
      .def_readonly("class_labels", &TrainedModel::class_labels)
      .def_readonly("cones", &TrainedModel::cones)
      .def_readonly("subspaces", &TrainedModel::subspaces)
      .def(
          "predict",
          [](const TrainedModel& model, const Matrix& features) {
            py::gil_scoped_release release;
            return predict(model, FeatureSet{features, "query"});
          },
          py::arg("features"))
      .def(
          "save", [](const TrainedModel& model, const std::filesystem::path& dir) { save_model(model, dir); },
          py::arg("dir"))
      .def_static("load", &load_model, py::arg("dir"))
      .def("__eq__", [](const TrainedModel& a, const TrainedModel& b) { return a == b; });

  m.def(
      "train",
      [](const ModelConfig& config, const std::vector<std::pair<Matrix, std::string>>& sets) {
        const auto training = to_training_sets(sets);
        py::gil_scoped_release release;
        return train(config, training);
      },
      py::arg("config"), py::arg("sets"), "sets: list of (d x N feature matrix, label).");

  py::enum_<Split>(m, "Split").value("TRAIN", Split::kTrain).value("TEST", Split::kTest);
  py::class_<LabeledSet>(m, "LabeledSet")
      .def_property_readonly("features", [](const LabeledSet& s) { return s.set.features; })
      .def_property_readonly("set_id", [](const LabeledSet& s) { return s.set.set_id; })
      .def_readonly("label", &LabeledSet::label)
      .def_readonly("split", &LabeledSet::split);
  py::class_<Dataset>(m, "Dataset")
      .def_readonly("feature_dim", &Dataset::feature_dim)
      .def_readonly("sets", &Dataset::sets)
      .def("labels", &Dataset::labels)
      .def("save", [](const Dataset& ds, const std::filesystem::path& dir) { save_dataset(ds, dir); }, py::arg("dir"));
  m.def("load_dataset", &load_dataset, py::arg("manifest"));
  m.def(
      "train_dataset",
      [](const ModelConfig& config, const Dataset& ds) {
        py::gil_scoped_release release;
        return train(config, ds);
      },
      py::arg("config"), py::arg("dataset"), "Trains on the sets marked as training.");

  py::class_<SynthSpec>(m, "SynthSpec")
      .def(py::init<>())
      .def_readwrite("n_classes", &SynthSpec::n_classes)
      .def_readwrite("sets_per_class", &SynthSpec::sets_per_class)
      .def_readwrite("images_per_set", &SynthSpec::images_per_set)
      .def_readwrite("feature_dim", &SynthSpec::feature_dim)
      .def_readwrite("cone_rank", &SynthSpec::cone_rank)
      .def_readwrite("noise_sigma", &SynthSpec::noise_sigma)
      .def_readwrite("class_separation", &SynthSpec::class_separation)
      .def_readwrite("seed", &SynthSpec::seed)
      .def_readwrite("train_fraction", &SynthSpec::train_fraction);
  m.def("generate_synthetic", &generate_synthetic, py::arg("spec"));

  py::class_<Roc>(m, "Roc")
      .def_property_readonly("points",
                             [](const Roc& r) {
                               std::vector<std::pair<double, double>> out;
                               for (const RocPoint& p : r.points) out.emplace_back(p.fpr, p.tpr);
                               return out;
                             })
      .def_readonly("auc", &Roc::auc)
      .def_readonly("eer", &Roc::eer);
  m.def(
      "roc", [](const std::vector<double>& genuine, const std::vector<double>& impostor) { return roc(genuine, impostor); },
      py::arg("genuine"), py::arg("impostor"));
  m.def(
      "otsu_threshold", [](const std::vector<std::uint8_t>& values) { return otsu_threshold(values); },
      py::arg("values"));
}
