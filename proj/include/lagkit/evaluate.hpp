#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "lagkit/classify.hpp"
#include "lagkit/io.hpp"

namespace lagkit {

struct EvalReport {
  std::string method;
  int components = 0;
  std::uint64_t seed = 0;
  int train_per_class = 0;
  std::vector<double> accuracies;  // percentage per trial
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;  // sample standard deviation over trials
  std::vector<std::string> classes;
  Eigen::MatrixXd confusion;  // rows true class, columns predicted, percentages
};

// Everything fitted from one trial's training split. Test items never
// contribute to any of these.
struct TrialArtifacts {
  std::vector<int> train_items;  // manifest item indices
  std::vector<int> test_items;
  std::optional<PcaModel> pca;  // present for image manifests
  DiagonalGmm ubm;
  NapModel nap;
  CentroidModel nc;
};

// Loads (and for image items, describes) every item's patches once.
// Image items carry raw window descriptors here; the per-trial PCA and
// coordinate append happen inside the trial.
struct ItemFeatureCache {
  std::vector<PatchSet> patches;  // by manifest item index
  bool image_pipeline = false;
};

ItemFeatureCache load_item_features(const DatasetManifest& manifest, const RunConfig& cfg);

// Deterministic per-class split for one trial. Throws when a class is too
// small and scale-down is off; otherwise halves the smallest class and
// appends a warning line to *warnings (may be null).
void split_items(const DatasetManifest& manifest, const RunConfig& cfg, int trial,
                 std::vector<int>* train_items, std::vector<int>* test_items,
                 std::vector<std::string>* warnings);

// Fits the trial's training-stage artifacts from the training split only.
TrialArtifacts train_trial(const DatasetManifest& manifest, const ItemFeatureCache& cache,
                           const RunConfig& cfg, int trial, std::vector<std::string>* warnings);

// Full protocol: per trial split / train / score, pooled confusion matrix,
// mean and sample-std accuracy. Deterministic for a fixed seed and
// independent of the worker count.
EvalReport evaluate(const DatasetManifest& manifest, const RunConfig& cfg,
                    std::vector<std::string>* warnings = nullptr);

std::string eval_report_to_json(const EvalReport& report);
std::string eval_report_confusion_csv(const EvalReport& report);
void write_eval_report(const EvalReport& report, const std::filesystem::path& json_path,
                       const std::filesystem::path& csv_path);

// Mixture-count sweep: evaluate every (method, K) pair on the manifest.
struct SweepEntry {
  std::string method;
  int components = 0;
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;
};

struct SweepReport {
  std::vector<int> grid;
  std::vector<SweepEntry> entries;  // method-major, K order per method
};

SweepReport sweep_components(const DatasetManifest& manifest, const RunConfig& cfg,
                             const std::vector<int>& grid,
                             std::vector<std::string>* warnings = nullptr);
std::string sweep_report_to_json(const SweepReport& report);
std::string sweep_report_table(const SweepReport& report);

}  // namespace lagkit
