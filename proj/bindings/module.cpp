// Python bindings for the supervector toolkit core. Matrices cross the
// boundary as numpy arrays via pybind11's Eigen support.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "lagkit/classify.hpp"
#include "lagkit/evaluate.hpp"
#include "lagkit/gmm.hpp"
#include "lagkit/image.hpp"
#include "lagkit/io.hpp"
#include "lagkit/lie.hpp"
#include "lagkit/pipeline.hpp"
#include "lagkit/synthetic.hpp"
#include "lagkit/vectorize.hpp"

namespace py = pybind11;
using namespace lagkit;

namespace {

UtdatDiag make_utdat(Eigen::VectorXd means, Eigen::VectorXd stds) {
  return to_utdat(means, stds);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Gaussian-mixture supervector toolkit (LAG / RLAG / KLVEC)";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);

  py::enum_<Method>(m, "Method")
      .value("LAG", Method::kLag)
      .value("RLAG", Method::kRlag)
      .value("KLVEC", Method::kKlvec);
  m.def("method_from_name", &method_from_name, py::arg("name"));

  py::class_<DiagonalGmm>(m, "DiagonalGmm")
      .def(py::init([](Eigen::VectorXd weights, Eigen::MatrixXd means, Eigen::MatrixXd stds) {
             DiagonalGmm g{std::move(weights), std::move(means), std::move(stds)};
             g.validate();
             return g;
           }),
           py::arg("weights"), py::arg("means"), py::arg("stds"))
      .def_readonly("weights", &DiagonalGmm::weights)
      .def_readonly("means", &DiagonalGmm::means)
      .def_readonly("stds", &DiagonalGmm::stds)
      .def_property_readonly("components", &DiagonalGmm::components)
      .def_property_readonly("dim", &DiagonalGmm::dim)
      .def("validate", &DiagonalGmm::validate, py::arg("variance_floor") = 0.0);

  py::class_<SufficientStats>(m, "SufficientStats")
      .def_readonly("counts", &SufficientStats::counts)
      .def_readonly("mean_acc", &SufficientStats::mean_acc)
      .def_readonly("sqmean_acc", &SufficientStats::sqmean_acc)
      .def_readonly("total_patches", &SufficientStats::total_patches);

  py::class_<AdaptationConfig>(m, "AdaptationConfig")
      .def(py::init<>())
      .def_readwrite("relevance", &AdaptationConfig::relevance)
      .def_readwrite("adapt_weights", &AdaptationConfig::adapt_weights)
      .def_readwrite("adapt_means", &AdaptationConfig::adapt_means)
      .def_readwrite("adapt_stds", &AdaptationConfig::adapt_stds)
      .def_readwrite("variance_floor", &AdaptationConfig::variance_floor);

  py::class_<EmConfig>(m, "EmConfig")
      .def(py::init<>())
      .def_readwrite("max_iterations", &EmConfig::max_iterations)
      .def_readwrite("ll_tolerance", &EmConfig::ll_tolerance)
      .def_readwrite("seed", &EmConfig::seed)
      .def_readwrite("variance_floor", &EmConfig::variance_floor);

  m.def("component_posteriors", &component_posteriors, py::arg("model"), py::arg("patch"));
  m.def("accumulate_stats", &accumulate_stats, py::arg("model"), py::arg("patches"));
  m.def("merge_stats", &merge_stats, py::arg("model"), py::arg("a"), py::arg("b"));
  m.def(
      "map_adapt",
      [](const DiagonalGmm& ubm, const SufficientStats& stats, const AdaptationConfig& cfg) {
        AdaptDiagnostics diag;
        DiagonalGmm adapted = map_adapt(ubm, stats, cfg, &diag);
        return py::make_tuple(adapted, diag.alphas, diag.gamma);
      },
      py::arg("ubm"), py::arg("stats"), py::arg("cfg") = AdaptationConfig{},
      "Returns (adapted_model, alphas, gamma)");
  m.def(
      "train_ubm_em",
      [](const Eigen::MatrixXd& patches, int components, const EmConfig& cfg) {
        EmResult r = train_ubm_em(patches, components, cfg);
        return py::make_tuple(r.model, r.ll_trace);
      },
      py::arg("patches"), py::arg("components"), py::arg("cfg") = EmConfig{},
      "Returns (model, ll_trace)");
  m.def("log_likelihood", &log_likelihood, py::arg("model"), py::arg("patches"));

  py::class_<UtdatDiag>(m, "UtdatDiag")
      .def(py::init(&make_utdat), py::arg("means"), py::arg("stds"))
      .def_readonly("scale", &UtdatDiag::scale)
      .def_readonly("shift", &UtdatDiag::shift);

  py::class_<TangentVector>(m, "TangentVector")
      .def_readonly("log_scale", &TangentVector::log_scale)
      .def_readonly("translation", &TangentVector::translation);

  m.def("log_utdat_scalar", &log_utdat_scalar, py::arg("anchor"), py::arg("point"));
  m.def("reduced_tangent", &reduced_tangent, py::arg("anchor"), py::arg("point"));

  py::class_<SupervectorBundle>(m, "SupervectorBundle")
      .def_readonly("method", &SupervectorBundle::method)
      .def_readonly("components", &SupervectorBundle::components)
      .def_readonly("dim", &SupervectorBundle::dim)
      .def_readonly("regions", &SupervectorBundle::regions)
      .def_readonly("values", &SupervectorBundle::values);

  m.def("lag_vector", &lag_vector, py::arg("ubm"), py::arg("adapted"));
  m.def("rlag_vector", &rlag_vector, py::arg("ubm"), py::arg("adapted"));
  m.def("klvec_vector", &klvec_vector, py::arg("ubm"), py::arg("adapted"));
  m.def("vectorize_gmm", &vectorize_gmm, py::arg("ubm"), py::arg("adapted"), py::arg("method"));
  m.def("gmm_product_kernel", &gmm_product_kernel, py::arg("ubm"), py::arg("a"), py::arg("b"),
        py::arg("method"));

  py::class_<PatchSet>(m, "PatchSet")
      .def(py::init([](Eigen::MatrixXd features, Eigen::MatrixXd coords) {
             PatchSet ps;
             ps.features = std::move(features);
             ps.coords = coords;
             return ps;
           }),
           py::arg("features"), py::arg("coords"))
      .def_readonly("features", &PatchSet::features)
      .def_readonly("coords", &PatchSet::coords)
      .def_property_readonly("count", &PatchSet::count)
      .def_property_readonly("dim", &PatchSet::dim);

  py::class_<PcaModel>(m, "PcaModel")
      .def_readonly("mean", &PcaModel::mean)
      .def_readonly("basis", &PcaModel::basis)
      .def_property_readonly("input_dim", &PcaModel::input_dim)
      .def_property_readonly("output_dim", &PcaModel::output_dim);

  py::class_<PyramidLayout>(m, "PyramidLayout")
      .def(py::init([](std::vector<int> levels) { return PyramidLayout{std::move(levels)}; }),
           py::arg("levels") = std::vector<int>{1, 2})
      .def_readwrite("levels", &PyramidLayout::levels)
      .def_property_readonly("region_count", &PyramidLayout::region_count);

  m.def("fit_pca", &fit_pca, py::arg("features"), py::arg("output_dim"));
  m.def("pca_transform", &pca_transform, py::arg("model"), py::arg("features"));
  m.def("apply_pca", &apply_pca, py::arg("model"), py::arg("patches"));
  m.def("append_coords", &append_coords, py::arg("patches"));
  m.def("pyramid_partition", &pyramid_partition, py::arg("patches"), py::arg("layout"));
  m.def("image_to_supervector", &image_to_supervector, py::arg("patches"), py::arg("ubm"),
        py::arg("layout") = PyramidLayout{}, py::arg("cfg") = AdaptationConfig{},
        py::arg("method") = Method::kLag);

  py::class_<NapModel>(m, "NapModel")
      .def_readonly("mean", &NapModel::mean)
      .def_readonly("basis", &NapModel::basis)
      .def_readonly("nuisance_rank", &NapModel::nuisance_rank)
      .def_property_readonly("dim", &NapModel::dim)
      .def_property_readonly("removed_rank", &NapModel::removed_rank);

  py::class_<CentroidModel>(m, "CentroidModel")
      .def_readonly("classes", &CentroidModel::classes)
      .def_readonly("centroids", &CentroidModel::centroids);

  m.def("train_nap", &train_nap, py::arg("vectors"), py::arg("labels"), py::arg("rank"));
  m.def("nap_project", &nap_project, py::arg("model"), py::arg("vector"));
  m.def("nap_project_rows", &nap_project_rows, py::arg("model"), py::arg("vectors"));
  m.def("train_nc", &train_nc, py::arg("projected"), py::arg("labels"), py::arg("classes"));
  m.def("nc_predict", &nc_predict, py::arg("model"), py::arg("vector"));
  m.def("l2_normalized", &l2_normalized, py::arg("vector"));

  // Persistence
  m.def("save_gmm", &save_gmm, py::arg("model"), py::arg("path"));
  m.def("load_gmm", &load_gmm, py::arg("path"));
  m.def("save_supervector", &save_supervector, py::arg("bundle"), py::arg("path"));
  m.def("load_supervector", &load_supervector, py::arg("path"));
  m.def("save_patchset", &save_patchset, py::arg("patches"), py::arg("path"));
  m.def("load_patchset", &load_patchset, py::arg("path"));
  m.def("save_pca", &save_pca, py::arg("model"), py::arg("path"));
  m.def("load_pca", &load_pca, py::arg("path"));
  m.def("save_nap", &save_nap, py::arg("model"), py::arg("path"));
  m.def("load_nap", &load_nap, py::arg("path"));

  // Dataset protocol
  py::class_<SyntheticSpec>(m, "SyntheticSpec")
      .def(py::init<>())
      .def_readwrite("classes", &SyntheticSpec::classes)
      .def_readwrite("dim", &SyntheticSpec::dim)
      .def_readwrite("components", &SyntheticSpec::components)
      .def_readwrite("patches_per_item", &SyntheticSpec::patches_per_item)
      .def_readwrite("items_per_class", &SyntheticSpec::items_per_class)
      .def_readwrite("separation", &SyntheticSpec::separation)
      .def_readwrite("seed", &SyntheticSpec::seed);

  m.def(
      "generate_synthetic",
      [](const SyntheticSpec& spec, const std::filesystem::path& out_dir) {
        generate_synthetic(spec, out_dir);
        return (out_dir / "manifest.json").string();
      },
      py::arg("spec"), py::arg("out_dir"), "Returns the manifest path");

  py::class_<EvalReport>(m, "EvalReport")
      .def_readonly("method", &EvalReport::method)
      .def_readonly("components", &EvalReport::components)
      .def_readonly("seed", &EvalReport::seed)
      .def_readonly("train_per_class", &EvalReport::train_per_class)
      .def_readonly("accuracies", &EvalReport::accuracies)
      .def_readonly("mean_accuracy", &EvalReport::mean_accuracy)
      .def_readonly("std_accuracy", &EvalReport::std_accuracy)
      .def_readonly("classes", &EvalReport::classes)
      .def_readonly("confusion", &EvalReport::confusion);

  m.def(
      "evaluate_manifest",
      [](const std::filesystem::path& manifest_path, const std::string& config_json) {
        const DatasetManifest manifest = load_manifest(manifest_path);
        const RunConfig cfg =
            config_json.empty() ? RunConfig{} : run_config_from_json(config_json, "<config>");
        return evaluate(manifest, cfg, nullptr);
      },
      py::arg("manifest_path"), py::arg("config_json") = std::string(),
      "Full split/train/score protocol on a dataset manifest");
  m.def("eval_report_to_json", &eval_report_to_json, py::arg("report"));
  m.def("default_run_config_json", [] { return run_config_to_json(RunConfig{}); });
}
