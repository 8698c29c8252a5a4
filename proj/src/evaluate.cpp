#include "lagkit/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "lagkit/check.hpp"
#include "lagkit/parallel.hpp"
#include "lagkit/pipeline.hpp"
#include "lagkit/rng.hpp"

namespace lagkit {

namespace {

using nlohmann::json;

// Stream tags for hierarchical seed derivation.
constexpr std::uint64_t kTrialStream = 0x7261;
constexpr std::uint64_t kSplitStream = 0x73706C;
constexpr std::uint64_t kEmStream = 0x656D;

double round_fixed(double value, int digits) {
  const double scale = std::pow(10.0, digits);
  return std::round(value * scale) / scale;
}

// Training split size for one trial; scales down for small corpora when
// allowed, errors otherwise.
int resolve_train_count(const DatasetManifest& manifest, const RunConfig& cfg,
                        std::vector<std::string>* warnings) {
  const int smallest = manifest.min_class_size();
  check(smallest >= 2, "every class needs at least two items");
  if (smallest > cfg.split.train_per_class) return cfg.split.train_per_class;
  if (!cfg.split.allow_scale_down) {
    throw std::invalid_argument(
        "smallest class has " + std::to_string(smallest) + " items, not more than train_per_class=" +
        std::to_string(cfg.split.train_per_class) + "; rerun with split.allow_scale_down");
  }
  const int scaled = std::max(1, smallest / 2);
  if (warnings) {
    warnings->push_back("train_per_class scaled down from " +
                        std::to_string(cfg.split.train_per_class) + " to " +
                        std::to_string(scaled) + " for the smallest class of " +
                        std::to_string(smallest));
  }
  return scaled;
}

}  // namespace

ItemFeatureCache load_item_features(const DatasetManifest& manifest, const RunConfig& cfg) {
  ItemFeatureCache cache;
  cache.patches.resize(manifest.items.size());
  bool any_image = false;
  bool any_patches = false;
  for (const auto& item : manifest.items) {
    if (item.kind == ManifestItem::Kind::kImage) any_image = true;
    if (item.kind == ManifestItem::Kind::kPatches) any_patches = true;
    check(item.kind != ManifestItem::Kind::kVectors,
          "manifest lists precomputed vectors; evaluate needs patches or images");
  }
  check(!(any_image && any_patches), "manifest mixes image and patch items");
  cache.image_pipeline = any_image;

  const DescriptorPlugin plugin = raw_pixel_descriptor(cfg.descriptor.sample_grid);
  parallel_for(manifest.items.size(), effective_workers(cfg), [&](std::size_t i) {
    const auto& item = manifest.items[i];
    if (item.kind == ManifestItem::Kind::kImage) {
      cache.patches[i] = extract_patches(load_image(manifest.resolve(item)), cfg.descriptor, plugin);
    } else {
      cache.patches[i] = load_patchset(manifest.resolve(item));
    }
  });
  return cache;
}

void split_items(const DatasetManifest& manifest, const RunConfig& cfg, int trial,
                 std::vector<int>* train_items, std::vector<int>* test_items,
                 std::vector<std::string>* warnings) {
  const int train_count = resolve_train_count(manifest, cfg, warnings);
  const std::uint64_t trial_seed = Rng::derive(cfg.seed, kTrialStream + trial);
  train_items->clear();
  test_items->clear();
  for (int c = 0; c < static_cast<int>(manifest.classes.size()); ++c) {
    std::vector<int> members = manifest.items_of_class(c);
    Rng rng(Rng::derive(trial_seed, kSplitStream + c));
    rng.shuffle(members);
    for (std::size_t i = 0; i < members.size(); ++i) {
      (i < static_cast<std::size_t>(train_count) ? train_items : test_items)->push_back(members[i]);
    }
  }
  std::sort(train_items->begin(), train_items->end());
  std::sort(test_items->begin(), test_items->end());
}

namespace {

// Patches of one item as fed to the mixture stage: raw descriptors go
// through the trial's PCA and gain their coordinate columns.
PatchSet item_features(const ItemFeatureCache& cache, const std::optional<PcaModel>& pca,
                       std::size_t item) {
  if (!pca) return cache.patches[item];
  return append_coords(apply_pca(*pca, cache.patches[item]));
}

}  // namespace

TrialArtifacts train_trial(const DatasetManifest& manifest, const ItemFeatureCache& cache,
                           const RunConfig& cfg, int trial, std::vector<std::string>* warnings) {
  TrialArtifacts artifacts;
  split_items(manifest, cfg, trial, &artifacts.train_items, &artifacts.test_items, warnings);
  const std::uint64_t trial_seed = Rng::derive(cfg.seed, kTrialStream + trial);

  if (cache.image_pipeline) {
    Eigen::Index rows = 0;
    for (int item : artifacts.train_items) rows += cache.patches[item].count();
    Eigen::MatrixXd descriptors(rows, cache.patches[artifacts.train_items.front()].dim());
    Eigen::Index at = 0;
    for (int item : artifacts.train_items) {
      descriptors.middleRows(at, cache.patches[item].count()) = cache.patches[item].features;
      at += cache.patches[item].count();
    }
    artifacts.pca = fit_pca(descriptors, cfg.descriptor.pca_dim);
  }

  Eigen::Index rows = 0;
  for (int item : artifacts.train_items) rows += cache.patches[item].count();
  const Eigen::Index feature_dim =
      item_features(cache, artifacts.pca, artifacts.train_items.front()).dim();
  Eigen::MatrixXd pool(rows, feature_dim);
  Eigen::Index at = 0;
  for (int item : artifacts.train_items) {
    const PatchSet features = item_features(cache, artifacts.pca, item);
    pool.middleRows(at, features.count()) = features.features;
    at += features.count();
  }

  EmConfig em;
  em.max_iterations = cfg.gmm.em_max_iterations;
  em.ll_tolerance = cfg.gmm.em_tolerance;
  em.variance_floor = cfg.gmm.variance_floor;
  em.seed = Rng::derive(trial_seed, kEmStream);
  artifacts.ubm = train_ubm_em(pool, cfg.gmm.components, em).model;

  // Training supervectors, one per training item.
  std::vector<Eigen::VectorXd> vectors(artifacts.train_items.size());
  parallel_for(artifacts.train_items.size(), effective_workers(cfg), [&](std::size_t i) {
    const PatchSet features = item_features(cache, artifacts.pca, artifacts.train_items[i]);
    vectors[i] = image_to_supervector(features, artifacts.ubm, cfg.pyramid, cfg.adaptation,
                                      cfg.method)
                     .values;
  });
  Eigen::MatrixXd train_matrix(vectors.size(), vectors.front().size());
  std::vector<int> train_labels(vectors.size());
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    train_matrix.row(static_cast<Eigen::Index>(i)) = vectors[i].transpose();
    train_labels[i] = manifest.label_index(manifest.items[artifacts.train_items[i]].label);
  }

  const int rank = std::min<int>(cfg.nap_rank, static_cast<int>(train_matrix.cols()) - 1);
  artifacts.nap = train_nap(train_matrix, train_labels, rank);
  artifacts.nc = train_nc(nap_project_rows(artifacts.nap, train_matrix), train_labels,
                          manifest.classes);
  return artifacts;
}

EvalReport evaluate(const DatasetManifest& manifest, const RunConfig& cfg,
                    std::vector<std::string>* warnings) {
  check(cfg.split.trials >= 1, "at least one trial required");
  const ItemFeatureCache cache = load_item_features(manifest, cfg);

  EvalReport report;
  report.method = method_name(cfg.method);
  report.components = cfg.gmm.components;
  report.seed = cfg.seed;
  report.classes = manifest.classes;
  const int n_classes = static_cast<int>(manifest.classes.size());
  Eigen::MatrixXd confusion_counts = Eigen::MatrixXd::Zero(n_classes, n_classes);

  for (int trial = 0; trial < cfg.split.trials; ++trial) {
    std::vector<std::string>* warn = trial == 0 ? warnings : nullptr;  // warn once
    const TrialArtifacts artifacts = train_trial(manifest, cache, cfg, trial, warn);
    report.train_per_class =
        static_cast<int>(artifacts.train_items.size()) / std::max(1, n_classes);

    std::vector<int> predicted(artifacts.test_items.size());
    parallel_for(artifacts.test_items.size(), effective_workers(cfg), [&](std::size_t i) {
      const PatchSet features = item_features(cache, artifacts.pca, artifacts.test_items[i]);
      const Eigen::VectorXd vector =
          image_to_supervector(features, artifacts.ubm, cfg.pyramid, cfg.adaptation, cfg.method)
              .values;
      predicted[i] = nc_predict(artifacts.nc, l2_normalized(nap_project(artifacts.nap, vector)));
    });

    int correct = 0;
    for (std::size_t i = 0; i < artifacts.test_items.size(); ++i) {
      const int truth = manifest.label_index(manifest.items[artifacts.test_items[i]].label);
      confusion_counts(truth, predicted[i]) += 1.0;
      if (predicted[i] == truth) ++correct;
    }
    report.accuracies.push_back(100.0 * correct /
                                static_cast<double>(artifacts.test_items.size()));
  }

  const double n = static_cast<double>(report.accuracies.size());
  report.mean_accuracy =
      std::accumulate(report.accuracies.begin(), report.accuracies.end(), 0.0) / n;
  double ss = 0.0;
  for (double a : report.accuracies) ss += (a - report.mean_accuracy) * (a - report.mean_accuracy);
  report.std_accuracy = n > 1 ? std::sqrt(ss / (n - 1)) : 0.0;

  report.confusion = Eigen::MatrixXd::Zero(n_classes, n_classes);
  for (int r = 0; r < n_classes; ++r) {
    const double row_total = confusion_counts.row(r).sum();
    if (row_total > 0.0) report.confusion.row(r) = confusion_counts.row(r) * (100.0 / row_total);
  }
  return report;
}

std::string eval_report_to_json(const EvalReport& report) {
  json doc;
  doc["method"] = report.method;
  doc["components"] = report.components;
  doc["seed"] = report.seed;
  doc["train_per_class"] = report.train_per_class;
  doc["trials"] = report.accuracies.size();
  json acc = json::array();
  for (double a : report.accuracies) acc.push_back(round_fixed(a, 6));
  doc["accuracies"] = acc;
  doc["mean_accuracy"] = round_fixed(report.mean_accuracy, 6);
  doc["std_accuracy"] = round_fixed(report.std_accuracy, 6);
  doc["classes"] = report.classes;
  json confusion = json::array();
  for (Eigen::Index r = 0; r < report.confusion.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < report.confusion.cols(); ++c) {
      row.push_back(round_fixed(report.confusion(r, c), 6));
    }
    confusion.push_back(row);
  }
  doc["confusion_percent"] = confusion;
  return doc.dump(2) + "\n";
}

std::string eval_report_confusion_csv(const EvalReport& report) {
  std::ostringstream out;
  out << "true\\predicted";
  for (const auto& name : report.classes) out << "," << name;
  out << "\n";
  char cell[64];
  for (Eigen::Index r = 0; r < report.confusion.rows(); ++r) {
    out << report.classes[static_cast<std::size_t>(r)];
    for (Eigen::Index c = 0; c < report.confusion.cols(); ++c) {
      std::snprintf(cell, sizeof(cell), ",%.2f", report.confusion(r, c));
      out << cell;
    }
    out << "\n";
  }
  return out.str();
}

void write_eval_report(const EvalReport& report, const std::filesystem::path& json_path,
                       const std::filesystem::path& csv_path) {
  if (!json_path.empty()) write_text_atomic(json_path, eval_report_to_json(report));
  if (!csv_path.empty()) write_text_atomic(csv_path, eval_report_confusion_csv(report));
}

SweepReport sweep_components(const DatasetManifest& manifest, const RunConfig& cfg,
                             const std::vector<int>& grid,
                             std::vector<std::string>* warnings) {
  check(!grid.empty(), "sweep grid is empty");
  SweepReport report;
  report.grid = grid;
  for (Method method : {Method::kLag, Method::kRlag, Method::kKlvec}) {
    for (int k : grid) {
      RunConfig local = cfg;
      local.method = method;
      local.gmm.components = k;
      const EvalReport entry = evaluate(manifest, local, warnings);
      report.entries.push_back(
          {method_name(method), k, entry.mean_accuracy, entry.std_accuracy});
    }
  }
  return report;
}

std::string sweep_report_to_json(const SweepReport& report) {
  json doc;
  doc["grid"] = report.grid;
  json entries = json::array();
  for (const auto& entry : report.entries) {
    entries.push_back({{"method", entry.method},
                       {"components", entry.components},
                       {"mean_accuracy", round_fixed(entry.mean_accuracy, 6)},
                       {"std_accuracy", round_fixed(entry.std_accuracy, 6)}});
  }
  doc["entries"] = entries;
  return doc.dump(2) + "\n";
}

std::string sweep_report_table(const SweepReport& report) {
  // One row per mixture size, one column per method.
  std::ostringstream out;
  out << "components";
  for (const char* m : {"LAG", "RLAG", "KLVEC"}) out << "\t" << m;
  out << "\n";
  char cell[64];
  for (int k : report.grid) {
    out << k;
    for (const char* m : {"LAG", "RLAG", "KLVEC"}) {
      for (const auto& entry : report.entries) {
        if (entry.components == k && entry.method == m) {
          std::snprintf(cell, sizeof(cell), "\t%.2f+-%.2f", entry.mean_accuracy,
                        entry.std_accuracy);
          out << cell;
        }
      }
    }
    out << "\n";
  }
  return out.str();
}

}  // namespace lagkit
