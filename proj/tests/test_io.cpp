#include <unistd.h>

#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "lagkit/io.hpp"
#include "support/generators.hpp"

using namespace lagkit;
using lagkit::testing::perturbed_gmm;
using lagkit::testing::random_gmm;

namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("lagkit_io_" + std::to_string(::getpid()) + "_" + std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static int& counter() {
    static int n = 0;
    return n;
  }
};

std::string slurp(const fs::path& p) { return read_text(p); }

void corrupt_byte(const fs::path& p, std::size_t offset, char value) {
  std::string data = slurp(p);
  data[offset] = value;
  write_text_atomic(p, data);
}

}  // namespace

TEST_CASE("mixture container round-trips bitwise") {
  TempDir dir;
  Rng rng(91);
  const DiagonalGmm g = random_gmm(rng, 6, 4);
  const fs::path file = dir.path / "model.lagm";
  save_gmm(g, file);
  const DiagonalGmm back = load_gmm(file);
  CHECK(back.weights == g.weights);
  CHECK(back.means == g.means);
  CHECK(back.stds == g.stds);
}

TEST_CASE("supervector container round-trips at storage precision") {
  TempDir dir;
  Rng rng(92);
  const DiagonalGmm g = random_gmm(rng, 3, 2);
  const SupervectorBundle v = lag_vector(g, perturbed_gmm(rng, g));
  const fs::path file = dir.path / "item.lagv";
  save_supervector(v, file);
  const SupervectorBundle back = load_supervector(file);
  CHECK(back.method == v.method);
  CHECK(back.components == v.components);
  CHECK(back.dim == v.dim);
  CHECK(back.regions == v.regions);
  for (Eigen::Index i = 0; i < v.values.size(); ++i) {
    CHECK(back.values[i] == double(float(v.values[i])));
  }
  // Stored form is a fixed point of save/load.
  save_supervector(back, dir.path / "again.lagv");
  CHECK(slurp(dir.path / "again.lagv") == slurp(file));
}

TEST_CASE("patch container round-trips at storage precision") {
  TempDir dir;
  PatchSet ps;
  ps.features = Eigen::MatrixXd::Random(7, 3);
  ps.coords = Eigen::MatrixXd::Random(7, 2).cwiseAbs();
  const fs::path file = dir.path / "item.lagp";
  save_patchset(ps, file);
  const PatchSet back = load_patchset(file);
  CHECK(back.count() == 7);
  CHECK(back.dim() == 3);
  for (Eigen::Index t = 0; t < 7; ++t) {
    for (Eigen::Index d = 0; d < 3; ++d) {
      CHECK(back.features(t, d) == double(float(ps.features(t, d))));
    }
  }
  save_patchset(back, dir.path / "again.lagp");
  CHECK(slurp(dir.path / "again.lagp") == slurp(file));
}

TEST_CASE("projection containers round-trip bitwise") {
  TempDir dir;
  Rng rng(93);
  Eigen::MatrixXd data(30, 6);
  for (int i = 0; i < 30; ++i) {
    for (int j = 0; j < 6; ++j) data(i, j) = rng.uniform(-1.0, 1.0);
  }
  const PcaModel pca = fit_pca(data, 3);
  save_pca(pca, dir.path / "p.lagr");
  const PcaModel pca_back = load_pca(dir.path / "p.lagr");
  CHECK(pca_back.mean == pca.mean);
  CHECK(pca_back.basis == pca.basis);

  const std::vector<int> labels{0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0,
                                1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1};
  const NapModel nap = train_nap(data, labels, 2);
  save_nap(nap, dir.path / "n.lagn");
  const NapModel nap_back = load_nap(dir.path / "n.lagn");
  CHECK(nap_back.mean == nap.mean);
  CHECK(nap_back.basis == nap.basis);
  CHECK(nap_back.nuisance_rank == nap.nuisance_rank);
}

TEST_CASE("corrupt containers fail with distinct codes") {
  TempDir dir;
  Rng rng(94);
  const DiagonalGmm g = random_gmm(rng, 2, 2);
  const fs::path file = dir.path / "model.lagm";
  save_gmm(g, file);

  SUBCASE("bad magic") {
    corrupt_byte(file, 0, 'X');
    try {
      load_gmm(file);
      FAIL("expected a failure");
    } catch (const IoError& e) {
      CHECK(e.code() == IoCode::kBadMagic);
    }
  }

  SUBCASE("version skew") {
    corrupt_byte(file, 4, 2);  // version u32 little endian
    try {
      load_gmm(file);
      FAIL("expected a failure");
    } catch (const IoError& e) {
      CHECK(e.code() == IoCode::kUnsupportedVersion);
    }
  }

  SUBCASE("truncation") {
    std::string data = slurp(file);
    write_text_atomic(file, data.substr(0, data.size() - 5));
    try {
      load_gmm(file);
      FAIL("expected a failure");
    } catch (const IoError& e) {
      CHECK(e.code() == IoCode::kTruncated);
    }
  }

  SUBCASE("trailing bytes") {
    write_text_atomic(file, slurp(file) + "xx");
    try {
      load_gmm(file);
      FAIL("expected a failure");
    } catch (const IoError& e) {
      CHECK(e.code() == IoCode::kTrailingData);
    }
  }

  SUBCASE("missing file") {
    try {
      load_gmm(dir.path / "absent.lagm");
      FAIL("expected a failure");
    } catch (const IoError& e) {
      CHECK(e.code() == IoCode::kMissingFile);
    }
  }
}

TEST_CASE("manifest validation catches structural problems") {
  TempDir dir;
  PatchSet stub;
  stub.features = Eigen::MatrixXd::Zero(2, 2);
  stub.coords = Eigen::MatrixXd::Zero(2, 2);
  save_patchset(stub, dir.path / "a.lagp");

  SUBCASE("valid manifest loads and resolves") {
    write_text_atomic(dir.path / "m.json", R"({
      "classes": ["x"],
      "items": [{"id": "a", "label": "x", "path": "a.lagp"}]
    })");
    const DatasetManifest m = load_manifest(dir.path / "m.json");
    CHECK(m.items.size() == 1);
    CHECK(m.items[0].kind == ManifestItem::Kind::kPatches);
    CHECK(m.min_class_size() == 1);
  }

  SUBCASE("duplicate ids are rejected") {
    write_text_atomic(dir.path / "m.json", R"({
      "classes": ["x"],
      "items": [{"id": "a", "label": "x", "path": "a.lagp"},
                {"id": "a", "label": "x", "path": "a.lagp"}]
    })");
    CHECK_THROWS_AS(load_manifest(dir.path / "m.json"), IoError);
  }

  SUBCASE("unknown labels are rejected") {
    write_text_atomic(dir.path / "m.json", R"({
      "classes": ["x"],
      "items": [{"id": "a", "label": "y", "path": "a.lagp"}]
    })");
    CHECK_THROWS(load_manifest(dir.path / "m.json"));
  }

  SUBCASE("missing referenced files are rejected") {
    write_text_atomic(dir.path / "m.json", R"({
      "classes": ["x"],
      "items": [{"id": "a", "label": "x", "path": "gone.lagp"}]
    })");
    try {
      load_manifest(dir.path / "m.json");
      FAIL("expected a failure");
    } catch (const IoError& e) {
      CHECK(e.code() == IoCode::kMissingFile);
    }
  }
}

TEST_CASE("run configuration round-trips losslessly") {
  RunConfig cfg;
  cfg.seed = 987654321;
  cfg.method = Method::kRlag;
  cfg.gmm.components = 24;
  cfg.gmm.em_tolerance = 3.5e-7;
  cfg.adaptation.relevance = 12.25;
  cfg.adaptation.adapt_stds = false;
  cfg.descriptor.patch_sizes = {8, 12, 20};
  cfg.pyramid.levels = {1, 3};
  cfg.nap_rank = 7;
  cfg.split.train_per_class = 55;
  cfg.split.allow_scale_down = true;
  cfg.workers = 3;

  const RunConfig back = run_config_from_json(run_config_to_json(cfg), "round-trip");
  CHECK(run_config_to_json(back) == run_config_to_json(cfg));
  CHECK(back.seed == cfg.seed);
  CHECK(back.method == cfg.method);
  CHECK(back.gmm.em_tolerance == cfg.gmm.em_tolerance);
  CHECK(back.adaptation.adapt_stds == false);
  CHECK(back.descriptor.patch_sizes == cfg.descriptor.patch_sizes);
  CHECK(back.pyramid.levels == cfg.pyramid.levels);
  CHECK(back.split.allow_scale_down == true);
}

TEST_CASE("bad configuration reports every offending field") {
  const std::string text = R"({
    "gmm": {"components": 0, "em_tolerance": -1.0},
    "nap_rank": -3,
    "workers": 0
  })";
  try {
    run_config_from_json(text, "inline");
    FAIL("expected a failure");
  } catch (const ConfigError& e) {
    const auto& problems = e.problems();
    REQUIRE(problems.size() == 4);
    CHECK(problems[0].find("gmm.components") != std::string::npos);
    CHECK(problems[1].find("gmm.em_tolerance") != std::string::npos);
    CHECK(problems[2].find("nap_rank") != std::string::npos);
    CHECK(problems[3].find("workers") != std::string::npos);
  }
}

TEST_CASE("environment variable caps the worker budget") {
  RunConfig cfg;
  cfg.workers = 8;
  ::unsetenv("LAGKIT_THREADS");
  CHECK(effective_workers(cfg) == 8);
  ::setenv("LAGKIT_THREADS", "3", 1);
  CHECK(effective_workers(cfg) == 3);
  ::setenv("LAGKIT_THREADS", "16", 1);
  CHECK(effective_workers(cfg) == 8);  // a cap, not a raise
  ::setenv("LAGKIT_THREADS", "junk", 1);
  CHECK(effective_workers(cfg) == 8);
  ::unsetenv("LAGKIT_THREADS");
}

TEST_CASE("atomic writes leave no temporaries behind") {
  TempDir dir;
  write_text_atomic(dir.path / "out.txt", "payload");
  CHECK(slurp(dir.path / "out.txt") == "payload");
  int entries = 0;
  for ([[maybe_unused]] const auto& entry : fs::directory_iterator(dir.path)) ++entries;
  CHECK(entries == 1);
}
