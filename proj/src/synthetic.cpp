#include "lagkit/synthetic.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "json.hpp"
#include "lagkit/check.hpp"
#include "lagkit/rng.hpp"

namespace lagkit {

namespace {

using nlohmann::json;

// Internal structure constants tied to the separation knob: class mixtures
// move their component means by separation and their log-scales by a
// quarter of it. Items re-draw the same kind of perturbation around their
// class mixture with magnitude kItemJitterRatio * sqrt(separation), which
// keeps within-class variability comparable to the class signal near the
// default separation yet lets wide separations saturate.
constexpr double kLogScaleRatio = 0.25;
constexpr double kItemJitterRatio = 1.8;

struct ClassMixture {
  std::vector<double> weights;          // K_gen
  std::vector<Eigen::VectorXd> means;   // K_gen x D
  std::vector<Eigen::VectorXd> stds;    // K_gen x D
};

ClassMixture base_mixture(const SyntheticSpec& spec) {
  Rng rng(Rng::derive(spec.seed, 0xBA5E));
  ClassMixture mix;
  double weight_sum = 0.0;
  for (int k = 0; k < spec.components; ++k) {
    Eigen::VectorXd mean(spec.dim), std(spec.dim);
    for (int d = 0; d < spec.dim; ++d) {
      mean[d] = 1.5 * rng.normal();
      std[d] = rng.uniform(0.7, 1.3);
    }
    mix.means.push_back(std::move(mean));
    mix.stds.push_back(std::move(std));
    mix.weights.push_back(rng.uniform(0.5, 1.5));
    weight_sum += mix.weights.back();
  }
  for (double& w : mix.weights) w /= weight_sum;
  return mix;
}

ClassMixture class_mixture(const SyntheticSpec& spec, const ClassMixture& base, int class_index) {
  Rng rng(Rng::derive(spec.seed, 0xC1A5 + class_index));
  ClassMixture mix = base;
  for (int k = 0; k < spec.components; ++k) {
    for (int d = 0; d < spec.dim; ++d) {
      mix.means[k][d] += spec.separation * rng.normal();
      mix.stds[k][d] *= std::exp(kLogScaleRatio * spec.separation * rng.normal());
    }
  }
  return mix;
}

}  // namespace

void SyntheticSpec::validate() const {
  std::vector<std::string> problems;
  if (classes < 1) problems.push_back("classes: must be >= 1");
  if (dim < 1) problems.push_back("dim: must be >= 1");
  if (components < 1) problems.push_back("components: must be >= 1");
  if (patches_per_item < 1) problems.push_back("patches_per_item: must be >= 1");
  if (items_per_class < 1) problems.push_back("items_per_class: must be >= 1");
  if (separation < 0.0) problems.push_back("separation: must be >= 0");
  if (!problems.empty()) throw ConfigError(std::move(problems));
}

SyntheticSpec synthetic_spec_from_json(const std::string& text, const std::string& origin) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError({origin + ": not valid JSON: " + e.what()});
  }
  SyntheticSpec spec;
  try {
    spec.classes = doc.value("classes", spec.classes);
    spec.dim = doc.value("dim", spec.dim);
    spec.components = doc.value("components", spec.components);
    spec.patches_per_item = doc.value("patches_per_item", spec.patches_per_item);
    spec.items_per_class = doc.value("items_per_class", spec.items_per_class);
    spec.separation = doc.value("separation", spec.separation);
    spec.seed = doc.value("seed", spec.seed);
  } catch (const json::exception& e) {
    throw ConfigError({origin + ": bad field type: " + e.what()});
  }
  spec.validate();
  return spec;
}

std::string synthetic_spec_to_json(const SyntheticSpec& spec) {
  json doc{{"classes", spec.classes},
           {"dim", spec.dim},
           {"components", spec.components},
           {"patches_per_item", spec.patches_per_item},
           {"items_per_class", spec.items_per_class},
           {"separation", spec.separation},
           {"seed", spec.seed}};
  return doc.dump(2) + "\n";
}

DatasetManifest generate_synthetic(const SyntheticSpec& spec,
                                   const std::filesystem::path& out_dir) {
  spec.validate();
  std::filesystem::create_directories(out_dir / "patches");

  const ClassMixture base = base_mixture(spec);
  DatasetManifest manifest;
  manifest.base_dir = out_dir;
  manifest.root = ".";
  for (int c = 0; c < spec.classes; ++c) {
    manifest.classes.push_back("class" + std::to_string(c));
  }

  for (int c = 0; c < spec.classes; ++c) {
    const ClassMixture mix = class_mixture(spec, base, c);
    const std::uint64_t class_seed = Rng::derive(spec.seed, 0x17E6 + c);
    for (int item = 0; item < spec.items_per_class; ++item) {
      Rng rng(Rng::derive(class_seed, item));
      // Item-specific mixture: the class mixture perturbed the same way the
      // class perturbs the base, scaled by the jitter ratio.
      ClassMixture own = mix;
      const double jitter = kItemJitterRatio * std::sqrt(spec.separation);
      for (int k = 0; k < spec.components; ++k) {
        for (int d = 0; d < spec.dim; ++d) {
          own.means[k][d] += jitter * rng.normal();
          own.stds[k][d] *= std::exp(kLogScaleRatio * jitter * rng.normal());
        }
      }
      PatchSet patches;
      patches.features.resize(spec.patches_per_item, spec.dim);
      patches.coords.resize(spec.patches_per_item, 2);
      for (int t = 0; t < spec.patches_per_item; ++t) {
        // Component choice by cumulative weight.
        double u = rng.uniform01();
        int k = spec.components - 1;
        for (int j = 0; j < spec.components; ++j) {
          u -= own.weights[j];
          if (u <= 0.0) {
            k = j;
            break;
          }
        }
        for (int d = 0; d < spec.dim; ++d) {
          patches.features(t, d) = own.means[k][d] + own.stds[k][d] * rng.normal();
        }
        patches.coords(t, 0) = rng.uniform01();
        patches.coords(t, 1) = rng.uniform01();
      }
      ManifestItem entry;
      entry.id = "c" + std::to_string(c) + "_i" + std::to_string(item);
      entry.label = manifest.classes[c];
      entry.path = "patches/" + entry.id + ".lagp";
      entry.kind = ManifestItem::Kind::kPatches;
      save_patchset(patches, manifest.resolve(entry));
      manifest.items.push_back(std::move(entry));
    }
  }
  save_manifest(manifest, out_dir / "manifest.json");
  return manifest;
}

}  // namespace lagkit
