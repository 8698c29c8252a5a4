#pragma once

#include <cstdint>
#include <filesystem>

#include "lagkit/io.hpp"

namespace lagkit {

// Desk-scale labeled benchmark: every class draws its patches from a
// class-specific mixture. All class mixtures share a base mixture;
// component means and log-scales are perturbed proportionally to
// `separation`, so separation 0 makes the classes indistinguishable.
struct SyntheticSpec {
  int classes = 5;
  int dim = 8;
  int components = 4;  // generating mixture size per class
  int patches_per_item = 200;
  int items_per_class = 60;
  double separation = 1.0;
  std::uint64_t seed = 7;

  void validate() const;  // throws ConfigError listing bad fields
};

SyntheticSpec synthetic_spec_from_json(const std::string& text, const std::string& origin);
std::string synthetic_spec_to_json(const SyntheticSpec& spec);

// Writes one patch container per item plus manifest.json under out_dir
// and returns the loaded manifest. Fully determined by spec.seed.
DatasetManifest generate_synthetic(const SyntheticSpec& spec,
                                   const std::filesystem::path& out_dir);

}  // namespace lagkit
