#include "lagkit/io.hpp"

#include <atomic>
#include <bit>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <unistd.h>

#include "json.hpp"
#include "lagkit/check.hpp"

namespace lagkit {

namespace {

using nlohmann::json;

constexpr std::uint32_t kFormatVersion = 1;

// ---------------------------------------------------------------------------
// Little-endian primitives

void put_bytes(std::string& out, const void* data, std::size_t n) {
  out.append(static_cast<const char*>(data), n);
}

template <typename T>
void put_le(std::string& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char bytes[sizeof(T)];
  if constexpr (sizeof(T) == 1) {
    bytes[0] = static_cast<unsigned char>(value);
  } else {
    using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
    U raw = std::bit_cast<U>(value);
    for (std::size_t i = 0; i < sizeof(T); ++i) bytes[i] = static_cast<unsigned char>(raw >> (8 * i));
  }
  put_bytes(out, bytes, sizeof(T));
}

void put_f32(std::string& out, float value) { put_le(out, value); }
void put_f64(std::string& out, double value) { put_le(out, value); }
void put_u32(std::string& out, std::uint32_t value) { put_le(out, value); }
void put_u8(std::string& out, std::uint8_t value) { put_le(out, value); }

class Reader {
 public:
  Reader(std::string data, std::filesystem::path path)
      : data_(std::move(data)), path_(std::move(path)) {}

  void expect_magic(const char* magic) {
    if (data_.size() < 4 || std::memcmp(data_.data(), magic, 4) != 0) {
      throw IoError(IoCode::kBadMagic, path_, std::string("expected magic '") + magic + "'");
    }
    at_ = 4;
  }

  std::uint32_t get_u32() {
    std::uint32_t v = 0;
    for (std::size_t i = 0; i < 4; ++i) v |= std::uint32_t(byte()) << (8 * i);
    return v;
  }

  std::uint8_t get_u8() { return byte(); }

  float get_f32() {
    std::uint32_t raw = get_u32();
    return std::bit_cast<float>(raw);
  }

  double get_f64() {
    std::uint64_t raw = 0;
    for (std::size_t i = 0; i < 8; ++i) raw |= std::uint64_t(byte()) << (8 * i);
    return std::bit_cast<double>(raw);
  }

  void expect_version() {
    const std::uint32_t version = get_u32();
    if (version != kFormatVersion) {
      throw IoError(IoCode::kUnsupportedVersion, path_,
                    "unsupported version " + std::to_string(version));
    }
  }

  void expect_end() const {
    if (at_ != data_.size()) {
      throw IoError(IoCode::kTrailingData, path_,
                    std::to_string(data_.size() - at_) + " unexpected trailing bytes");
    }
  }

  const std::filesystem::path& path() const { return path_; }

 private:
  unsigned char byte() {
    if (at_ >= data_.size()) throw IoError(IoCode::kTruncated, path_, "truncated container");
    return static_cast<unsigned char>(data_[at_++]);
  }

  std::string data_;
  std::filesystem::path path_;
  std::size_t at_ = 0;
};

Reader open_reader(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(IoCode::kMissingFile, path, "cannot open");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return Reader(std::move(buffer).str(), path);
}

}  // namespace

const char* io_code_name(IoCode code) {
  switch (code) {
    case IoCode::kMissingFile:
      return "missing_file";
    case IoCode::kBadMagic:
      return "bad_magic";
    case IoCode::kTruncated:
      return "truncated";
    case IoCode::kUnsupportedVersion:
      return "unsupported_version";
    case IoCode::kTrailingData:
      return "trailing_data";
    case IoCode::kBadValue:
      return "bad_value";
  }
  return "unknown";
}

IoError::IoError(IoCode code, const std::filesystem::path& path, const std::string& detail)
    : std::runtime_error(path.string() + ": " + detail + " [" + io_code_name(code) + "]"),
      code_(code) {}

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  auto parent = path.parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  static std::atomic<unsigned> counter{0};
  std::filesystem::path tmp =
      path.string() + ".tmp." + std::to_string(::getpid()) + "." +
      std::to_string(counter.fetch_add(1));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(IoCode::kBadValue, tmp, "cannot create");
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw IoError(IoCode::kBadValue, tmp, "short write");
  }
  std::filesystem::rename(tmp, path);
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(IoCode::kMissingFile, path, "cannot open");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return std::move(buffer).str();
}

// ---------------------------------------------------------------------------
// Containers

void save_gmm(const DiagonalGmm& model, const std::filesystem::path& path) {
  model.validate();
  std::string out;
  out.reserve(16 + static_cast<std::size_t>(model.components()) * (1 + 2 * model.dim()) * 8);
  out.append("LAGM");
  put_u32(out, kFormatVersion);
  put_u32(out, static_cast<std::uint32_t>(model.components()));
  put_u32(out, static_cast<std::uint32_t>(model.dim()));
  for (Eigen::Index k = 0; k < model.components(); ++k) put_f64(out, model.weights[k]);
  for (Eigen::Index k = 0; k < model.components(); ++k) {
    for (Eigen::Index d = 0; d < model.dim(); ++d) put_f64(out, model.means(k, d));
  }
  for (Eigen::Index k = 0; k < model.components(); ++k) {
    for (Eigen::Index d = 0; d < model.dim(); ++d) put_f64(out, model.stds(k, d));
  }
  write_text_atomic(path, out);
}

DiagonalGmm load_gmm(const std::filesystem::path& path) {
  Reader reader = open_reader(path);
  reader.expect_magic("LAGM");
  reader.expect_version();
  const std::uint32_t k = reader.get_u32();
  const std::uint32_t d = reader.get_u32();
  if (k == 0 || d == 0 || k > (1u << 24) || d > (1u << 24)) {
    throw IoError(IoCode::kBadValue, path, "implausible mixture shape");
  }
  DiagonalGmm model;
  model.weights.resize(k);
  model.means.resize(k, d);
  model.stds.resize(k, d);
  for (std::uint32_t i = 0; i < k; ++i) model.weights[i] = reader.get_f64();
  for (std::uint32_t i = 0; i < k; ++i) {
    for (std::uint32_t j = 0; j < d; ++j) model.means(i, j) = reader.get_f64();
  }
  for (std::uint32_t i = 0; i < k; ++i) {
    for (std::uint32_t j = 0; j < d; ++j) model.stds(i, j) = reader.get_f64();
  }
  reader.expect_end();
  return model;
}

void save_supervector(const SupervectorBundle& bundle, const std::filesystem::path& path) {
  bundle.validate();
  std::string out;
  out.reserve(24 + static_cast<std::size_t>(bundle.values.size()) * 4);
  out.append("LAGV");
  put_u32(out, kFormatVersion);
  put_u8(out, static_cast<std::uint8_t>(bundle.method));
  put_u32(out, static_cast<std::uint32_t>(bundle.regions));
  put_u32(out, static_cast<std::uint32_t>(bundle.components));
  put_u32(out, static_cast<std::uint32_t>(bundle.dim));
  for (Eigen::Index i = 0; i < bundle.values.size(); ++i) {
    put_f32(out, static_cast<float>(bundle.values[i]));
  }
  write_text_atomic(path, out);
}

SupervectorBundle load_supervector(const std::filesystem::path& path) {
  Reader reader = open_reader(path);
  reader.expect_magic("LAGV");
  reader.expect_version();
  const std::uint8_t method = reader.get_u8();
  if (method > 2) throw IoError(IoCode::kBadValue, path, "unknown method tag");
  SupervectorBundle bundle;
  bundle.method = static_cast<Method>(method);
  bundle.regions = static_cast<std::int32_t>(reader.get_u32());
  bundle.components = static_cast<std::int32_t>(reader.get_u32());
  bundle.dim = static_cast<std::int32_t>(reader.get_u32());
  if (bundle.regions < 1 || bundle.components < 1 || bundle.dim < 1) {
    throw IoError(IoCode::kBadValue, path, "implausible supervector layout");
  }
  const Eigen::Index length = Eigen::Index(bundle.regions) * bundle.components *
                              method_block_size(bundle.method, bundle.dim);
  bundle.values.resize(length);
  for (Eigen::Index i = 0; i < length; ++i) bundle.values[i] = reader.get_f32();
  reader.expect_end();
  return bundle;
}

void save_patchset(const PatchSet& patches, const std::filesystem::path& path) {
  std::string out;
  out.reserve(16 + static_cast<std::size_t>(patches.count()) * (patches.dim() + 2) * 4);
  out.append("LAGP");
  put_u32(out, kFormatVersion);
  put_u32(out, static_cast<std::uint32_t>(patches.count()));
  put_u32(out, static_cast<std::uint32_t>(patches.dim()));
  for (Eigen::Index t = 0; t < patches.count(); ++t) {
    for (Eigen::Index d = 0; d < patches.dim(); ++d) {
      put_f32(out, static_cast<float>(patches.features(t, d)));
    }
  }
  for (Eigen::Index t = 0; t < patches.count(); ++t) {
    put_f32(out, static_cast<float>(patches.coords(t, 0)));
    put_f32(out, static_cast<float>(patches.coords(t, 1)));
  }
  write_text_atomic(path, out);
}

PatchSet load_patchset(const std::filesystem::path& path) {
  Reader reader = open_reader(path);
  reader.expect_magic("LAGP");
  reader.expect_version();
  const std::uint32_t t = reader.get_u32();
  const std::uint32_t d = reader.get_u32();
  if (d == 0 || t > (1u << 28) || d > (1u << 24)) {
    throw IoError(IoCode::kBadValue, path, "implausible patch shape");
  }
  PatchSet patches;
  patches.features.resize(t, d);
  patches.coords.resize(t, 2);
  for (std::uint32_t i = 0; i < t; ++i) {
    for (std::uint32_t j = 0; j < d; ++j) patches.features(i, j) = reader.get_f32();
  }
  for (std::uint32_t i = 0; i < t; ++i) {
    patches.coords(i, 0) = reader.get_f32();
    patches.coords(i, 1) = reader.get_f32();
  }
  reader.expect_end();
  if (t > 0 && (patches.coords.minCoeff() < 0.0 || patches.coords.maxCoeff() > 1.0)) {
    throw IoError(IoCode::kBadValue, path, "coordinates outside the unit square");
  }
  return patches;
}

void save_pca(const PcaModel& model, const std::filesystem::path& path) {
  std::string out;
  out.append("LAGR");
  put_u32(out, kFormatVersion);
  put_u32(out, static_cast<std::uint32_t>(model.input_dim()));
  put_u32(out, static_cast<std::uint32_t>(model.output_dim()));
  for (Eigen::Index i = 0; i < model.mean.size(); ++i) put_f64(out, model.mean[i]);
  for (Eigen::Index r = 0; r < model.basis.rows(); ++r) {
    for (Eigen::Index c = 0; c < model.basis.cols(); ++c) put_f64(out, model.basis(r, c));
  }
  write_text_atomic(path, out);
}

PcaModel load_pca(const std::filesystem::path& path) {
  Reader reader = open_reader(path);
  reader.expect_magic("LAGR");
  reader.expect_version();
  const std::uint32_t in_dim = reader.get_u32();
  const std::uint32_t out_dim = reader.get_u32();
  if (in_dim == 0 || out_dim == 0 || out_dim > in_dim) {
    throw IoError(IoCode::kBadValue, path, "implausible projection shape");
  }
  PcaModel model;
  model.mean.resize(in_dim);
  model.basis.resize(out_dim, in_dim);
  for (std::uint32_t i = 0; i < in_dim; ++i) model.mean[i] = reader.get_f64();
  for (std::uint32_t r = 0; r < out_dim; ++r) {
    for (std::uint32_t c = 0; c < in_dim; ++c) model.basis(r, c) = reader.get_f64();
  }
  reader.expect_end();
  return model;
}

void save_nap(const NapModel& model, const std::filesystem::path& path) {
  std::string out;
  out.append("LAGN");
  put_u32(out, kFormatVersion);
  put_u32(out, static_cast<std::uint32_t>(model.dim()));
  put_u32(out, static_cast<std::uint32_t>(model.removed_rank()));
  put_u32(out, static_cast<std::uint32_t>(model.nuisance_rank));
  for (Eigen::Index i = 0; i < model.mean.size(); ++i) put_f64(out, model.mean[i]);
  for (Eigen::Index r = 0; r < model.basis.rows(); ++r) {
    for (Eigen::Index c = 0; c < model.basis.cols(); ++c) put_f64(out, model.basis(r, c));
  }
  write_text_atomic(path, out);
}

NapModel load_nap(const std::filesystem::path& path) {
  Reader reader = open_reader(path);
  reader.expect_magic("LAGN");
  reader.expect_version();
  const std::uint32_t dim = reader.get_u32();
  const std::uint32_t rows = reader.get_u32();
  const std::uint32_t nuisance = reader.get_u32();
  if (dim == 0 || rows > dim || nuisance > rows) {
    throw IoError(IoCode::kBadValue, path, "implausible projection shape");
  }
  NapModel model;
  model.nuisance_rank = static_cast<std::int32_t>(nuisance);
  model.mean.resize(dim);
  model.basis.resize(rows, dim);
  for (std::uint32_t i = 0; i < dim; ++i) model.mean[i] = reader.get_f64();
  for (std::uint32_t r = 0; r < rows; ++r) {
    for (std::uint32_t c = 0; c < dim; ++c) model.basis(r, c) = reader.get_f64();
  }
  reader.expect_end();
  return model;
}

// ---------------------------------------------------------------------------
// Dataset manifest

int DatasetManifest::label_index(const std::string& label) const {
  for (std::size_t i = 0; i < classes.size(); ++i) {
    if (classes[i] == label) return static_cast<int>(i);
  }
  throw std::invalid_argument("label '" + label + "' is not in the class list");
}

std::filesystem::path DatasetManifest::resolve(const ManifestItem& item) const {
  std::filesystem::path p(item.path);
  if (p.is_absolute()) return p;
  std::filesystem::path base = base_dir;
  if (!root.empty() && root != ".") base /= root;
  return base / p;
}

std::vector<int> DatasetManifest::items_of_class(int class_index) const {
  std::vector<int> out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (items[i].label == classes[static_cast<std::size_t>(class_index)]) {
      out.push_back(static_cast<int>(i));
    }
  }
  return out;
}

int DatasetManifest::min_class_size() const {
  int smallest = std::numeric_limits<int>::max();
  for (std::size_t c = 0; c < classes.size(); ++c) {
    smallest = std::min(smallest, static_cast<int>(items_of_class(static_cast<int>(c)).size()));
  }
  return classes.empty() ? 0 : smallest;
}

namespace {

ManifestItem::Kind kind_from_string(const std::string& kind, const std::string& path) {
  if (kind == "patches") return ManifestItem::Kind::kPatches;
  if (kind == "image") return ManifestItem::Kind::kImage;
  if (kind == "vectors") return ManifestItem::Kind::kVectors;
  if (!kind.empty()) throw std::invalid_argument("unknown item kind '" + kind + "'");
  // Infer from the extension.
  const auto dot = path.find_last_of('.');
  const std::string ext = dot == std::string::npos ? "" : path.substr(dot);
  if (ext == ".lagp") return ManifestItem::Kind::kPatches;
  if (ext == ".lagv") return ManifestItem::Kind::kVectors;
  if (ext == ".png" || ext == ".pgm") return ManifestItem::Kind::kImage;
  throw std::invalid_argument("cannot infer item kind from '" + path + "'");
}

const char* kind_to_string(ManifestItem::Kind kind) {
  switch (kind) {
    case ManifestItem::Kind::kPatches:
      return "patches";
    case ManifestItem::Kind::kImage:
      return "image";
    case ManifestItem::Kind::kVectors:
      return "vectors";
  }
  return "?";
}

}  // namespace

DatasetManifest load_manifest(const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw IoError(IoCode::kBadValue, path, std::string("manifest is not valid JSON: ") + e.what());
  }
  DatasetManifest manifest;
  manifest.base_dir = path.has_parent_path() ? path.parent_path() : ".";
  try {
    manifest.root = doc.value("root", ".");
    manifest.classes = doc.at("classes").get<std::vector<std::string>>();
    for (const auto& entry : doc.at("items")) {
      ManifestItem item;
      item.id = entry.at("id").get<std::string>();
      item.label = entry.at("label").get<std::string>();
      item.path = entry.at("path").get<std::string>();
      item.kind = kind_from_string(entry.value("kind", ""), item.path);
      manifest.items.push_back(std::move(item));
    }
  } catch (const json::exception& e) {
    throw IoError(IoCode::kBadValue, path, std::string("bad manifest structure: ") + e.what());
  }

  std::set<std::string> ids;
  for (const auto& item : manifest.items) {
    if (!ids.insert(item.id).second) {
      throw IoError(IoCode::kBadValue, path, "duplicate item id '" + item.id + "'");
    }
    manifest.label_index(item.label);  // throws on unknown label
    const auto file = manifest.resolve(item);
    if (!std::filesystem::exists(file)) {
      throw IoError(IoCode::kMissingFile, file, "referenced by item '" + item.id + "'");
    }
  }
  return manifest;
}

void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
  json doc;
  doc["root"] = manifest.root.empty() ? "." : manifest.root;
  doc["classes"] = manifest.classes;
  json items = json::array();
  for (const auto& item : manifest.items) {
    items.push_back({{"id", item.id},
                     {"label", item.label},
                     {"path", item.path},
                     {"kind", kind_to_string(item.kind)}});
  }
  doc["items"] = items;
  write_text_atomic(path, doc.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Run configuration

ConfigError::ConfigError(std::vector<std::string> problems)
    : std::runtime_error(problems.empty() ? "invalid configuration"
                                          : "invalid configuration: " + problems.front() +
                                                (problems.size() > 1 ? " (+more)" : "")),
      problems_(std::move(problems)) {}

namespace {

// Pulls a field if present, recording a typed diagnostic on mismatch.
template <typename T>
void read_field(const json& obj, const std::string& prefix, const char* name, T* out,
                std::vector<std::string>* problems) {
  if (!obj.contains(name)) return;
  try {
    *out = obj.at(name).get<T>();
  } catch (const json::exception&) {
    problems->push_back(prefix + name + ": wrong type");
  }
}

void require(bool ok, const std::string& message, std::vector<std::string>* problems) {
  if (!ok) problems->push_back(message);
}

}  // namespace

RunConfig run_config_from_json(const std::string& text, const std::string& origin) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError({origin + ": not valid JSON: " + e.what()});
  }
  if (!doc.is_object()) throw ConfigError({origin + ": top level must be an object"});

  RunConfig cfg;
  std::vector<std::string> problems;
  read_field(doc, "", "seed", &cfg.seed, &problems);
  std::string method = method_name(cfg.method);
  read_field(doc, "", "method", &method, &problems);
  try {
    cfg.method = method_from_name(method);
  } catch (const std::invalid_argument& e) {
    problems.push_back(std::string("method: ") + e.what());
  }
  if (doc.contains("gmm")) {
    const auto& g = doc["gmm"];
    read_field(g, "gmm.", "components", &cfg.gmm.components, &problems);
    read_field(g, "gmm.", "em_max_iterations", &cfg.gmm.em_max_iterations, &problems);
    read_field(g, "gmm.", "em_tolerance", &cfg.gmm.em_tolerance, &problems);
    read_field(g, "gmm.", "variance_floor", &cfg.gmm.variance_floor, &problems);
  }
  if (doc.contains("adaptation")) {
    const auto& a = doc["adaptation"];
    read_field(a, "adaptation.", "relevance", &cfg.adaptation.relevance, &problems);
    read_field(a, "adaptation.", "adapt_weights", &cfg.adaptation.adapt_weights, &problems);
    read_field(a, "adaptation.", "adapt_means", &cfg.adaptation.adapt_means, &problems);
    read_field(a, "adaptation.", "adapt_stds", &cfg.adaptation.adapt_stds, &problems);
    read_field(a, "adaptation.", "variance_floor", &cfg.adaptation.variance_floor, &problems);
  }
  if (doc.contains("descriptor")) {
    const auto& d = doc["descriptor"];
    read_field(d, "descriptor.", "patch_sizes", &cfg.descriptor.patch_sizes, &problems);
    read_field(d, "descriptor.", "step", &cfg.descriptor.step, &problems);
    read_field(d, "descriptor.", "sample_grid", &cfg.descriptor.sample_grid, &problems);
    read_field(d, "descriptor.", "pca_dim", &cfg.descriptor.pca_dim, &problems);
    read_field(d, "descriptor.", "max_side", &cfg.descriptor.max_side, &problems);
  }
  if (doc.contains("pyramid")) {
    read_field(doc["pyramid"], "pyramid.", "levels", &cfg.pyramid.levels, &problems);
  }
  read_field(doc, "", "nap_rank", &cfg.nap_rank, &problems);
  if (doc.contains("split")) {
    const auto& s = doc["split"];
    read_field(s, "split.", "train_per_class", &cfg.split.train_per_class, &problems);
    read_field(s, "split.", "trials", &cfg.split.trials, &problems);
    read_field(s, "split.", "allow_scale_down", &cfg.split.allow_scale_down, &problems);
  }
  read_field(doc, "", "workers", &cfg.workers, &problems);

  require(cfg.gmm.components >= 1, "gmm.components: must be >= 1", &problems);
  require(cfg.gmm.em_max_iterations >= 1, "gmm.em_max_iterations: must be >= 1", &problems);
  require(cfg.gmm.em_tolerance > 0.0, "gmm.em_tolerance: must be > 0", &problems);
  require(cfg.gmm.variance_floor > 0.0, "gmm.variance_floor: must be > 0", &problems);
  require(cfg.adaptation.relevance > 0.0, "adaptation.relevance: must be > 0", &problems);
  require(cfg.adaptation.variance_floor > 0.0, "adaptation.variance_floor: must be > 0",
          &problems);
  require(!cfg.descriptor.patch_sizes.empty(), "descriptor.patch_sizes: must not be empty",
          &problems);
  for (int size : cfg.descriptor.patch_sizes) {
    require(size >= 2, "descriptor.patch_sizes: entries must be >= 2", &problems);
  }
  require(cfg.descriptor.step >= 1, "descriptor.step: must be >= 1", &problems);
  require(cfg.descriptor.sample_grid >= 2, "descriptor.sample_grid: must be >= 2", &problems);
  require(cfg.descriptor.pca_dim >= 1, "descriptor.pca_dim: must be >= 1", &problems);
  require(cfg.descriptor.max_side >= 2, "descriptor.max_side: must be >= 2", &problems);
  require(!cfg.pyramid.levels.empty(), "pyramid.levels: must not be empty", &problems);
  for (int g : cfg.pyramid.levels) {
    require(g >= 1, "pyramid.levels: entries must be >= 1", &problems);
  }
  require(cfg.nap_rank >= 0, "nap_rank: must be >= 0", &problems);
  require(cfg.split.train_per_class >= 1, "split.train_per_class: must be >= 1", &problems);
  require(cfg.split.trials >= 1, "split.trials: must be >= 1", &problems);
  require(cfg.workers >= 1, "workers: must be >= 1", &problems);

  if (!problems.empty()) throw ConfigError(std::move(problems));
  return cfg;
}

std::string run_config_to_json(const RunConfig& cfg) {
  json doc;
  doc["seed"] = cfg.seed;
  doc["method"] = method_name(cfg.method);
  doc["gmm"] = {{"components", cfg.gmm.components},
                {"em_max_iterations", cfg.gmm.em_max_iterations},
                {"em_tolerance", cfg.gmm.em_tolerance},
                {"variance_floor", cfg.gmm.variance_floor}};
  doc["adaptation"] = {{"relevance", cfg.adaptation.relevance},
                       {"adapt_weights", cfg.adaptation.adapt_weights},
                       {"adapt_means", cfg.adaptation.adapt_means},
                       {"adapt_stds", cfg.adaptation.adapt_stds},
                       {"variance_floor", cfg.adaptation.variance_floor}};
  doc["descriptor"] = {{"patch_sizes", cfg.descriptor.patch_sizes},
                       {"step", cfg.descriptor.step},
                       {"sample_grid", cfg.descriptor.sample_grid},
                       {"pca_dim", cfg.descriptor.pca_dim},
                       {"max_side", cfg.descriptor.max_side}};
  doc["pyramid"] = {{"levels", cfg.pyramid.levels}};
  doc["nap_rank"] = cfg.nap_rank;
  doc["split"] = {{"train_per_class", cfg.split.train_per_class},
                  {"trials", cfg.split.trials},
                  {"allow_scale_down", cfg.split.allow_scale_down}};
  doc["workers"] = cfg.workers;
  return doc.dump(2) + "\n";
}

RunConfig load_run_config(const std::filesystem::path& path) {
  return run_config_from_json(read_text(path), path.string());
}

void save_run_config(const RunConfig& cfg, const std::filesystem::path& path) {
  write_text_atomic(path, run_config_to_json(cfg));
}

int effective_workers(const RunConfig& cfg) {
  int workers = std::max(1, cfg.workers);
  if (const char* env = std::getenv("LAGKIT_THREADS")) {
    char* end = nullptr;
    const long cap = std::strtol(env, &end, 10);
    if (end != env && cap >= 1) workers = static_cast<int>(std::min<long>(workers, cap));
  }
  return workers;
}

}  // namespace lagkit
