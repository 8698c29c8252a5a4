// Command line front end: dataset synthesis, background model training,
// feature extraction, vectorization, projection training, classification,
// and the evaluation/sweep protocols. All artifacts go through the binary
// containers and JSON formats documented in the README.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "lagkit/check.hpp"
#include "lagkit/classify.hpp"
#include "lagkit/evaluate.hpp"
#include "lagkit/gmm.hpp"
#include "lagkit/io.hpp"
#include "lagkit/parallel.hpp"
#include "lagkit/pipeline.hpp"
#include "lagkit/rng.hpp"
#include "lagkit/synthetic.hpp"
#include "lagkit/vectorize.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace lagkit;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitBadConfig = 2;
constexpr int kExitMissingFile = 3;
constexpr int kExitBadContainer = 4;

struct ConfigOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> method;
  std::optional<int> components;
  std::optional<double> relevance;
  std::optional<int> nap_rank;
  std::optional<int> trials;
  std::optional<int> train_per_class;
  std::optional<int> workers;
  bool scale_split = false;
};

void add_override_flags(CLI::App* cmd, ConfigOverrides* ov) {
  cmd->add_option("--seed", ov->seed, "Override the run seed");
  cmd->add_option("--method", ov->method, "Override the method (LAG|RLAG|KLVEC)");
  cmd->add_option("-k,--components", ov->components, "Override the mixture size");
  cmd->add_option("--relevance", ov->relevance, "Override the adaptation relevance factor");
  cmd->add_option("--nap-rank", ov->nap_rank, "Override the projection rank");
  cmd->add_option("--trials", ov->trials, "Override the trial count");
  cmd->add_option("--train-per-class", ov->train_per_class, "Override the split size");
  cmd->add_option("--workers", ov->workers, "Override the worker budget");
  cmd->add_flag("--scale-split", ov->scale_split,
                "Scale train_per_class down for small datasets instead of failing");
}

RunConfig resolve_config(const std::string& config_path, const ConfigOverrides& ov) {
  RunConfig cfg = config_path.empty() ? RunConfig{} : load_run_config(config_path);
  if (ov.seed) cfg.seed = *ov.seed;
  if (ov.method) cfg.method = method_from_name(*ov.method);
  if (ov.components) cfg.gmm.components = *ov.components;
  if (ov.relevance) cfg.adaptation.relevance = *ov.relevance;
  if (ov.nap_rank) cfg.nap_rank = *ov.nap_rank;
  if (ov.trials) cfg.split.trials = *ov.trials;
  if (ov.train_per_class) cfg.split.train_per_class = *ov.train_per_class;
  if (ov.workers) cfg.workers = *ov.workers;
  if (ov.scale_split) cfg.split.allow_scale_down = true;
  return cfg;
}

void print_warnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
}

// Loads per-item supervectors listed in a vectors manifest.
void load_vector_matrix(const DatasetManifest& manifest, Eigen::MatrixXd* matrix,
                        std::vector<int>* labels) {
  check(!manifest.items.empty(), "vectors manifest has no items");
  labels->clear();
  for (std::size_t i = 0; i < manifest.items.size(); ++i) {
    const auto& item = manifest.items[i];
    check(item.kind == ManifestItem::Kind::kVectors,
          "item '" + item.id + "' is not a supervector file");
    const SupervectorBundle bundle = load_supervector(manifest.resolve(item));
    if (i == 0) matrix->resize(manifest.items.size(), bundle.values.size());
    check(matrix->cols() == bundle.values.size(),
          "item '" + item.id + "' has a different supervector length");
    matrix->row(static_cast<Eigen::Index>(i)) = bundle.values.transpose();
    labels->push_back(manifest.label_index(item.label));
  }
}

// ---------------------------------------------------------------------------
// Subcommand bodies

int run_synth(const std::string& spec_path, const std::string& out_dir) {
  SyntheticSpec spec;
  if (!spec_path.empty()) {
    spec = synthetic_spec_from_json(read_text(spec_path), spec_path);
  }
  const DatasetManifest manifest = generate_synthetic(spec, out_dir);
  std::cout << "wrote " << manifest.items.size() << " items over " << manifest.classes.size()
            << " classes to " << out_dir << "\n";
  return kExitOk;
}

int run_train_ubm(const std::string& manifest_path, const std::string& config_path,
                  const ConfigOverrides& ov, const std::string& out_path) {
  const RunConfig cfg = resolve_config(config_path, ov);
  const DatasetManifest manifest = load_manifest(manifest_path);
  const ItemFeatureCache cache = load_item_features(manifest, cfg);

  Eigen::Index rows = 0;
  for (const auto& ps : cache.patches) rows += ps.count();
  check(rows > 0, "manifest provides no patches");

  std::optional<PcaModel> pca;
  Eigen::Index dim = cache.patches.front().dim();
  if (cache.image_pipeline) {
    Eigen::MatrixXd descriptors(rows, dim);
    Eigen::Index at = 0;
    for (const auto& ps : cache.patches) {
      descriptors.middleRows(at, ps.count()) = ps.features;
      at += ps.count();
    }
    pca = fit_pca(descriptors, cfg.descriptor.pca_dim);
    dim = cfg.descriptor.pca_dim + 2;
  }
  Eigen::MatrixXd pool(rows, dim);
  Eigen::Index at = 0;
  for (const auto& ps : cache.patches) {
    const PatchSet features = pca ? append_coords(apply_pca(*pca, ps)) : ps;
    pool.middleRows(at, features.count()) = features.features;
    at += features.count();
  }

  EmConfig em;
  em.max_iterations = cfg.gmm.em_max_iterations;
  em.ll_tolerance = cfg.gmm.em_tolerance;
  em.variance_floor = cfg.gmm.variance_floor;
  em.seed = Rng::derive(cfg.seed, 0x75626D);
  const EmResult result = train_ubm_em(pool, cfg.gmm.components, em);
  save_gmm(result.model, out_path);
  if (pca) save_pca(*pca, out_path + ".pca");

  json sidecar{{"seed", cfg.seed},
               {"relevance", cfg.adaptation.relevance},
               {"variance_floor", cfg.gmm.variance_floor},
               {"iterations", result.ll_trace.size()},
               {"final_log_likelihood", result.ll_trace.empty() ? 0.0 : result.ll_trace.back()},
               {"training_patches", rows}};
  write_text_atomic(out_path + ".json", sidecar.dump(2) + "\n");
  std::cout << "trained " << cfg.gmm.components << "-component model on " << rows
            << " patches (" << result.ll_trace.size() << " iterations) -> " << out_path << "\n";
  return kExitOk;
}

int run_extract(const std::string& manifest_path, const std::string& config_path,
                const ConfigOverrides& ov, const std::string& out_dir,
                const std::string& pca_in, const std::string& pca_out) {
  const RunConfig cfg = resolve_config(config_path, ov);
  const DatasetManifest manifest = load_manifest(manifest_path);
  for (const auto& item : manifest.items) {
    check(item.kind == ManifestItem::Kind::kImage,
          "extract expects image items; got '" + item.id + "'");
  }
  const ItemFeatureCache cache = load_item_features(manifest, cfg);

  PcaModel pca;
  if (!pca_in.empty()) {
    pca = load_pca(pca_in);
  } else {
    Eigen::Index rows = 0;
    for (const auto& ps : cache.patches) rows += ps.count();
    Eigen::MatrixXd descriptors(rows, cache.patches.front().dim());
    Eigen::Index at = 0;
    for (const auto& ps : cache.patches) {
      descriptors.middleRows(at, ps.count()) = ps.features;
      at += ps.count();
    }
    pca = fit_pca(descriptors, cfg.descriptor.pca_dim);
  }
  if (!pca_out.empty()) save_pca(pca, pca_out);

  DatasetManifest out = manifest;
  out.base_dir = out_dir;
  out.root = ".";
  fs::create_directories(fs::path(out_dir) / "patches");
  for (std::size_t i = 0; i < manifest.items.size(); ++i) {
    out.items[i].path = "patches/" + manifest.items[i].id + ".lagp";
    out.items[i].kind = ManifestItem::Kind::kPatches;
    save_patchset(append_coords(apply_pca(pca, cache.patches[i])), out.resolve(out.items[i]));
  }
  save_manifest(out, fs::path(out_dir) / "manifest.json");
  std::cout << "extracted " << out.items.size() << " patch sets -> " << out_dir << "\n";
  return kExitOk;
}

int run_vectorize(const std::string& manifest_path, const std::string& config_path,
                  const ConfigOverrides& ov, const std::string& ubm_path,
                  const std::string& out_dir) {
  const RunConfig cfg = resolve_config(config_path, ov);
  const DatasetManifest manifest = load_manifest(manifest_path);
  const DiagonalGmm ubm = load_gmm(ubm_path);
  const ItemFeatureCache cache = load_item_features(manifest, cfg);
  check(!cache.image_pipeline || fs::exists(ubm_path + ".pca"),
        "image manifest needs the projection saved next to the model (" + ubm_path + ".pca)");
  std::optional<PcaModel> pca;
  if (cache.image_pipeline) pca = load_pca(ubm_path + ".pca");

  DatasetManifest out = manifest;
  out.base_dir = out_dir;
  out.root = ".";
  fs::create_directories(fs::path(out_dir) / "vectors");
  std::vector<SupervectorBundle> bundles(manifest.items.size());
  parallel_for(manifest.items.size(), effective_workers(cfg), [&](std::size_t i) {
    const PatchSet features =
        pca ? append_coords(apply_pca(*pca, cache.patches[i])) : cache.patches[i];
    bundles[i] = image_to_supervector(features, ubm, cfg.pyramid, cfg.adaptation, cfg.method);
  });
  for (std::size_t i = 0; i < manifest.items.size(); ++i) {
    out.items[i].path = "vectors/" + manifest.items[i].id + ".lagv";
    out.items[i].kind = ManifestItem::Kind::kVectors;
    save_supervector(bundles[i], out.resolve(out.items[i]));
  }
  save_manifest(out, fs::path(out_dir) / "manifest.json");
  std::cout << "vectorized " << out.items.size() << " items (" << method_name(cfg.method)
            << ", length " << bundles.front().values.size() << ") -> " << out_dir << "\n";
  return kExitOk;
}

int run_nap_train(const std::string& manifest_path, int rank, const std::string& out_path) {
  const DatasetManifest manifest = load_manifest(manifest_path);
  Eigen::MatrixXd vectors;
  std::vector<int> labels;
  load_vector_matrix(manifest, &vectors, &labels);
  const NapModel nap = train_nap(vectors, labels, rank);
  save_nap(nap, out_path);
  std::cout << "projection over " << vectors.rows() << " vectors: removed rank "
            << nap.removed_rank() << " (" << nap.nuisance_rank << " nuisance) -> " << out_path
            << "\n";
  return kExitOk;
}

int run_classify(const std::string& train_path, const std::string& test_path,
                 const std::string& nap_path, int rank, const std::string& report_path) {
  const DatasetManifest train = load_manifest(train_path);
  const DatasetManifest test = load_manifest(test_path);
  check(train.classes == test.classes, "train and test manifests disagree on classes");

  Eigen::MatrixXd train_vectors, test_vectors;
  std::vector<int> train_labels, test_labels;
  load_vector_matrix(train, &train_vectors, &train_labels);
  load_vector_matrix(test, &test_vectors, &test_labels);

  NapModel nap;
  if (!nap_path.empty()) {
    nap = load_nap(nap_path);
  } else {
    nap = train_nap(train_vectors, train_labels,
                    std::min<int>(rank, static_cast<int>(train_vectors.cols()) - 1));
  }
  const CentroidModel nc =
      train_nc(nap_project_rows(nap, train_vectors), train_labels, train.classes);

  int correct = 0;
  json predictions = json::array();
  for (Eigen::Index i = 0; i < test_vectors.rows(); ++i) {
    const int predicted =
        nc_predict(nc, l2_normalized(nap_project(nap, test_vectors.row(i).transpose())));
    if (predicted == test_labels[static_cast<std::size_t>(i)]) ++correct;
    predictions.push_back({{"id", test.items[static_cast<std::size_t>(i)].id},
                           {"label", test.items[static_cast<std::size_t>(i)].label},
                           {"predicted", test.classes[static_cast<std::size_t>(predicted)]}});
  }
  const double accuracy = 100.0 * correct / static_cast<double>(test_vectors.rows());
  json doc{{"accuracy", accuracy},
           {"test_items", test_vectors.rows()},
           {"classes", test.classes},
           {"predictions", predictions}};
  if (report_path.empty()) {
    std::cout << doc.dump(2) << "\n";
  } else {
    write_text_atomic(report_path, doc.dump(2) + "\n");
    std::cout << "accuracy " << accuracy << "% over " << test_vectors.rows() << " items -> "
              << report_path << "\n";
  }
  return kExitOk;
}

int run_evaluate(const std::string& manifest_path, const std::string& config_path,
                 const ConfigOverrides& ov, const std::string& json_path,
                 const std::string& csv_path) {
  const RunConfig cfg = resolve_config(config_path, ov);
  const DatasetManifest manifest = load_manifest(manifest_path);
  std::vector<std::string> warnings;
  const EvalReport report = evaluate(manifest, cfg, &warnings);
  print_warnings(warnings);
  write_eval_report(report, json_path, csv_path);
  std::printf("%s K=%d: %.2f%% +- %.2f over %zu trials\n", report.method.c_str(),
              report.components, report.mean_accuracy, report.std_accuracy,
              report.accuracies.size());
  if (!json_path.empty()) std::cout << "report -> " << json_path << "\n";
  return kExitOk;
}

int run_sweep(const std::string& manifest_path, const std::string& config_path,
              const ConfigOverrides& ov, const std::string& grid_name,
              const std::string& json_path) {
  const RunConfig cfg = resolve_config(config_path, ov);
  const DatasetManifest manifest = load_manifest(manifest_path);
  std::vector<int> grid;
  if (grid_name == "desk") {
    grid = {8, 16, 32};
  } else if (grid_name == "paper") {
    grid = {32, 64, 128, 256, 512, 1024};
  } else {
    for (const auto& token : CLI::detail::split(grid_name, ',')) {
      grid.push_back(std::stoi(token));
    }
  }
  std::vector<std::string> warnings;
  const SweepReport report = sweep_components(manifest, cfg, grid, &warnings);
  print_warnings(warnings);
  std::cout << sweep_report_table(report);
  if (!json_path.empty()) {
    write_text_atomic(json_path, sweep_report_to_json(report));
    std::cout << "report -> " << json_path << "\n";
  }
  return kExitOk;
}

int run_inspect(const std::string& path) {
  std::ifstream probe(path, std::ios::binary);
  if (!probe) throw IoError(IoCode::kMissingFile, path, "cannot open");
  char magic[4] = {0, 0, 0, 0};
  probe.read(magic, 4);
  const std::string tag(magic, 4);
  probe.close();

  if (tag == "LAGM") {
    const DiagonalGmm model = load_gmm(path);
    std::printf("mixture model: K=%ld D=%ld\n", long(model.components()), long(model.dim()));
    std::printf("  weights in [%.6g, %.6g], sum %.12f\n", model.weights.minCoeff(),
                model.weights.maxCoeff(), model.weights.sum());
    std::printf("  min std %.6g, max std %.6g\n", model.stds.minCoeff(), model.stds.maxCoeff());
  } else if (tag == "LAGV") {
    const SupervectorBundle bundle = load_supervector(path);
    std::printf("supervector: method=%s regions=%d K=%d D=%d length=%ld\n",
                method_name(bundle.method), bundle.regions, bundle.components, bundle.dim,
                long(bundle.values.size()));
    std::printf("  norm %.6g, min %.6g, max %.6g\n", bundle.values.norm(),
                bundle.values.minCoeff(), bundle.values.maxCoeff());
  } else if (tag == "LAGP") {
    const PatchSet patches = load_patchset(path);
    std::printf("patch set: T=%ld D=%ld\n", long(patches.count()), long(patches.dim()));
    if (patches.count() > 0) {
      std::printf("  coords in [%.3f, %.3f] x [%.3f, %.3f]\n", patches.coords.col(0).minCoeff(),
                  patches.coords.col(0).maxCoeff(), patches.coords.col(1).minCoeff(),
                  patches.coords.col(1).maxCoeff());
    }
  } else if (tag == "LAGR") {
    const PcaModel model = load_pca(path);
    std::printf("projection: %ld -> %ld\n", long(model.input_dim()), long(model.output_dim()));
  } else if (tag == "LAGN") {
    const NapModel model = load_nap(path);
    std::printf("nuisance projection: dim=%ld removed=%ld (nuisance %d)\n", long(model.dim()),
                long(model.removed_rank()), model.nuisance_rank);
  } else {
    throw IoError(IoCode::kBadMagic, path, "unknown container magic '" + tag + "'");
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gaussian-mixture supervector toolkit"};
  app.require_subcommand(1);

  std::string manifest_path, config_path, out_path, out_dir, csv_path, spec_path;
  std::string ubm_path, pca_in, pca_out, train_path, test_path, nap_path, grid = "desk";
  int rank = 32;
  ConfigOverrides ov;

  auto* synth = app.add_subcommand("synth", "Generate a labeled synthetic benchmark");
  synth->add_option("--spec", spec_path, "Synthetic spec JSON (defaults used when omitted)");
  synth->add_option("--out-dir", out_dir, "Output directory")->required();

  auto* train_ubm = app.add_subcommand("train-ubm", "Train the background model on a manifest");
  train_ubm->add_option("--manifest", manifest_path, "Dataset manifest")->required();
  train_ubm->add_option("--config", config_path, "Run configuration JSON");
  train_ubm->add_option("--out", out_path, "Output model file")->required();
  add_override_flags(train_ubm, &ov);

  auto* extract = app.add_subcommand("extract", "Describe image items into patch containers");
  extract->add_option("--manifest", manifest_path, "Image dataset manifest")->required();
  extract->add_option("--config", config_path, "Run configuration JSON");
  extract->add_option("--out-dir", out_dir, "Output directory")->required();
  extract->add_option("--pca", pca_in, "Existing projection to apply");
  extract->add_option("--fit-pca", pca_out, "Fit the projection here and save it");
  add_override_flags(extract, &ov);

  auto* vectorize = app.add_subcommand("vectorize", "Supervectors for every manifest item");
  vectorize->add_option("--manifest", manifest_path, "Dataset manifest")->required();
  vectorize->add_option("--config", config_path, "Run configuration JSON");
  vectorize->add_option("--ubm", ubm_path, "Background model file")->required();
  vectorize->add_option("--out-dir", out_dir, "Output directory")->required();
  add_override_flags(vectorize, &ov);

  auto* nap_train = app.add_subcommand("nap-train", "Fit the nuisance projection on vectors");
  nap_train->add_option("--manifest", manifest_path, "Vectors manifest")->required();
  nap_train->add_option("--rank", rank, "Nuisance rank");
  nap_train->add_option("--out", out_path, "Output projection file")->required();

  auto* classify = app.add_subcommand("classify", "Train on one vector set, score another");
  classify->add_option("--train", train_path, "Training vectors manifest")->required();
  classify->add_option("--test", test_path, "Test vectors manifest")->required();
  classify->add_option("--nap", nap_path, "Existing nuisance projection");
  classify->add_option("--rank", rank, "Nuisance rank when fitting here");
  classify->add_option("--out", out_path, "Report JSON (stdout when omitted)");

  auto* evaluate_cmd = app.add_subcommand("evaluate", "Random-split trials with full retraining");
  evaluate_cmd->add_option("--manifest", manifest_path, "Dataset manifest")->required();
  evaluate_cmd->add_option("--config", config_path, "Run configuration JSON");
  evaluate_cmd->add_option("--out", out_path, "Report JSON path");
  evaluate_cmd->add_option("--csv", csv_path, "Confusion matrix CSV path");
  add_override_flags(evaluate_cmd, &ov);

  auto* sweep = app.add_subcommand("sweep-k", "Evaluate every method over a mixture-size grid");
  sweep->add_option("--manifest", manifest_path, "Dataset manifest")->required();
  sweep->add_option("--config", config_path, "Run configuration JSON");
  sweep->add_option("--grid", grid, "desk | paper | comma separated sizes");
  sweep->add_option("--out", out_path, "Report JSON path");
  add_override_flags(sweep, &ov);

  auto* inspect = app.add_subcommand("inspect", "Print container metadata");
  inspect->add_option("file", ubm_path, "Container file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) return run_synth(spec_path, out_dir);
    if (train_ubm->parsed()) return run_train_ubm(manifest_path, config_path, ov, out_path);
    if (extract->parsed())
      return run_extract(manifest_path, config_path, ov, out_dir, pca_in, pca_out);
    if (vectorize->parsed())
      return run_vectorize(manifest_path, config_path, ov, ubm_path, out_dir);
    if (nap_train->parsed()) return run_nap_train(manifest_path, rank, out_path);
    if (classify->parsed()) return run_classify(train_path, test_path, nap_path, rank, out_path);
    if (evaluate_cmd->parsed())
      return run_evaluate(manifest_path, config_path, ov, out_path, csv_path);
    if (sweep->parsed()) return run_sweep(manifest_path, config_path, ov, grid, out_path);
    if (inspect->parsed()) return run_inspect(ubm_path);
  } catch (const ConfigError& e) {
    std::cerr << "error: invalid configuration\n";
    for (const auto& problem : e.problems()) std::cerr << "  - " << problem << "\n";
    return kExitBadConfig;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == IoCode::kMissingFile ? kExitMissingFile : kExitBadContainer;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitMissingFile;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitOk;
}
