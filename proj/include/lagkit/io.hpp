#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "lagkit/classify.hpp"
#include "lagkit/gmm.hpp"
#include "lagkit/pipeline.hpp"
#include "lagkit/vectorize.hpp"

namespace lagkit {

enum class IoCode {
  kMissingFile,
  kBadMagic,
  kTruncated,
  kUnsupportedVersion,
  kTrailingData,
  kBadValue,
};

const char* io_code_name(IoCode code);

class IoError : public std::runtime_error {
 public:
  IoError(IoCode code, const std::filesystem::path& path, const std::string& detail);
  IoCode code() const { return code_; }

 private:
  IoCode code_;
};

// Binary containers. All integers and floats are little-endian; model
// parameters are stored as 64-bit floats, bulk features and supervector
// payloads as 32-bit. Writes go through a unique temporary name and an
// atomic rename.
//
//   "LAGM" v1: u32 K, u32 D, f64 weights[K], f64 means[K*D] row-major, f64 stds[K*D]
//   "LAGV" v1: u8 method, u32 regions, u32 K, u32 D, f32 values[L]
//   "LAGP" v1: u32 T, u32 D, f32 features[T*D] row-major, f32 coords[T*2]
//   "LAGR" v1: u32 in_dim, u32 out_dim, f64 mean[in], f64 basis[out*in] row-major
//   "LAGN" v1: u32 dim, u32 rows, u32 nuisance_rank, f64 mean[dim], f64 basis[rows*dim]

void save_gmm(const DiagonalGmm& model, const std::filesystem::path& path);
DiagonalGmm load_gmm(const std::filesystem::path& path);

void save_supervector(const SupervectorBundle& bundle, const std::filesystem::path& path);
SupervectorBundle load_supervector(const std::filesystem::path& path);

void save_patchset(const PatchSet& patches, const std::filesystem::path& path);
PatchSet load_patchset(const std::filesystem::path& path);

void save_pca(const PcaModel& model, const std::filesystem::path& path);
PcaModel load_pca(const std::filesystem::path& path);

void save_nap(const NapModel& model, const std::filesystem::path& path);
NapModel load_nap(const std::filesystem::path& path);

// Writes `text` atomically (temp file + rename).
void write_text_atomic(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Dataset manifest

struct ManifestItem {
  enum class Kind { kPatches, kImage, kVectors };
  std::string id;
  std::string label;
  std::string path;  // relative to the manifest's root
  Kind kind = Kind::kPatches;
};

struct DatasetManifest {
  std::filesystem::path base_dir;  // directory the manifest was loaded from
  std::string root;                // path prefix, may be "."
  std::vector<std::string> classes;
  std::vector<ManifestItem> items;

  int label_index(const std::string& label) const;
  std::filesystem::path resolve(const ManifestItem& item) const;
  std::vector<int> items_of_class(int class_index) const;
  int min_class_size() const;
};

// Validates unique ids, labels against the class list, and that every
// referenced file exists.
DatasetManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Run configuration

struct GmmConfig {
  int components = 512;
  int em_max_iterations = 50;
  double em_tolerance = 1e-5;
  double variance_floor = 1e-4;
};

struct SplitConfig {
  int train_per_class = 100;
  int trials = 10;
  bool allow_scale_down = false;
};

struct RunConfig {
  std::uint64_t seed = 12345;
  Method method = Method::kLag;
  GmmConfig gmm;
  AdaptationConfig adaptation;
  DescriptorConfig descriptor;
  PyramidLayout pyramid;
  int nap_rank = 32;
  SplitConfig split;
  int workers = 1;
};

// Field-level problems found while parsing or validating a RunConfig.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

RunConfig load_run_config(const std::filesystem::path& path);
void save_run_config(const RunConfig& cfg, const std::filesystem::path& path);
std::string run_config_to_json(const RunConfig& cfg);
RunConfig run_config_from_json(const std::string& text, const std::string& origin);

// Effective worker count: config value capped by the LAGKIT_THREADS
// environment variable when set.
int effective_workers(const RunConfig& cfg);

}  // namespace lagkit
