#include "lagkit/pipeline.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

#include "lagkit/check.hpp"

namespace lagkit {

DescriptorPlugin raw_pixel_descriptor(int sample_grid) {
  check(sample_grid >= 2, "sample grid must be at least 2");
  DescriptorPlugin plugin;
  plugin.name = "raw-pixel";
  plugin.output_dim = sample_grid * sample_grid;
  plugin.describe = [sample_grid](const GrayImage& image, int row0, int col0, int size,
                                  Eigen::Ref<Eigen::VectorXd> out) {
    const int n = sample_grid;
    // Bilinear resample of the window to the fixed grid, so 16- and
    // 24-pixel windows share one descriptor length.
    const double cell = static_cast<double>(size) / n;
    Eigen::Index idx = 0;
    for (int r = 0; r < n; ++r) {
      const double src_r = row0 + (r + 0.5) * cell - 0.5;
      const int r0 = std::clamp(static_cast<int>(std::floor(src_r)), row0, row0 + size - 1);
      const int r1 = std::min(r0 + 1, row0 + size - 1);
      const double fr = std::clamp(src_r - r0, 0.0, 1.0);
      for (int c = 0; c < n; ++c, ++idx) {
        const double src_c = col0 + (c + 0.5) * cell - 0.5;
        const int c0 = std::clamp(static_cast<int>(std::floor(src_c)), col0, col0 + size - 1);
        const int c1 = std::min(c0 + 1, col0 + size - 1);
        const double fc = std::clamp(src_c - c0, 0.0, 1.0);
        const double top = image.at(r0, c0) * (1.0 - fc) + image.at(r0, c1) * fc;
        const double bottom = image.at(r1, c0) * (1.0 - fc) + image.at(r1, c1) * fc;
        out[idx] = top * (1.0 - fr) + bottom * fr;
      }
    }
    const double mean = out.mean();
    out.array() -= mean;
    const double norm = std::sqrt(out.squaredNorm() / out.size());
    out /= (norm + 1e-8);
  };
  return plugin;
}

PatchSet extract_patches(const GrayImage& image, const DescriptorConfig& cfg,
                         const DescriptorPlugin& plugin) {
  check(!image.empty(), "image is empty");
  check(cfg.step >= 1 && !cfg.patch_sizes.empty(), "bad descriptor configuration");
  const GrayImage scaled = resize_max_side(image, cfg.max_side);
  const int min_size = *std::min_element(cfg.patch_sizes.begin(), cfg.patch_sizes.end());
  if (scaled.height < min_size || scaled.width < min_size) {
    throw std::invalid_argument("image " + std::to_string(scaled.height) + "x" +
                                std::to_string(scaled.width) + " is smaller than the " +
                                std::to_string(min_size) + "-pixel patch");
  }

  Eigen::Index total = 0;
  for (int size : cfg.patch_sizes) {
    if (scaled.height < size || scaled.width < size) continue;
    const Eigen::Index rows = (scaled.height - size) / cfg.step + 1;
    const Eigen::Index cols = (scaled.width - size) / cfg.step + 1;
    total += rows * cols;
  }

  PatchSet out;
  out.features.resize(total, plugin.output_dim);
  out.coords.resize(total, 2);
  Eigen::Index t = 0;
  Eigen::VectorXd descriptor(plugin.output_dim);
  for (int size : cfg.patch_sizes) {
    if (scaled.height < size || scaled.width < size) continue;
    for (int r = 0; r + size <= scaled.height; r += cfg.step) {
      for (int c = 0; c + size <= scaled.width; c += cfg.step, ++t) {
        plugin.describe(scaled, r, c, size, descriptor);
        out.features.row(t) = descriptor.transpose();
        out.coords(t, 0) = (r + size / 2.0) / scaled.height;
        out.coords(t, 1) = (c + size / 2.0) / scaled.width;
      }
    }
  }
  return out;
}

PcaModel fit_pca(const Eigen::Ref<const Eigen::MatrixXd>& features, int output_dim) {
  const Eigen::Index n = features.rows();
  const Eigen::Index d = features.cols();
  check(output_dim >= 1 && output_dim <= d, "output dimension out of range");
  if (n <= output_dim) {
    throw std::invalid_argument("need more than " + std::to_string(output_dim) +
                                " samples to fit " + std::to_string(output_dim) +
                                " principal axes, got " + std::to_string(n));
  }
  PcaModel model;
  model.mean = features.colwise().mean().transpose();
  Eigen::MatrixXd centered = features.rowwise() - model.mean.transpose();
  Eigen::MatrixXd covariance = centered.transpose() * centered / static_cast<double>(n - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(covariance);
  check(solver.info() == Eigen::Success, "eigendecomposition failed");
  // Eigenvalues ascend; take the top output_dim, largest first, and fix
  // each axis sign so the largest-magnitude entry is positive.
  model.basis.resize(output_dim, d);
  for (int j = 0; j < output_dim; ++j) {
    Eigen::VectorXd axis = solver.eigenvectors().col(d - 1 - j);
    Eigen::Index peak;
    axis.cwiseAbs().maxCoeff(&peak);
    if (axis[peak] < 0.0) axis = -axis;
    model.basis.row(j) = axis.transpose();
  }
  return model;
}

Eigen::MatrixXd pca_transform(const PcaModel& model,
                              const Eigen::Ref<const Eigen::MatrixXd>& features) {
  check(features.cols() == model.input_dim(), "feature dimension does not match the projection");
  return (features.rowwise() - model.mean.transpose()) * model.basis.transpose();
}

PatchSet apply_pca(const PcaModel& model, const PatchSet& patches) {
  PatchSet out;
  out.features = pca_transform(model, patches.features);
  out.coords = patches.coords;
  return out;
}

PatchSet append_coords(const PatchSet& patches) {
  PatchSet out;
  out.features.resize(patches.count(), patches.dim() + 2);
  out.features.leftCols(patches.dim()) = patches.features;
  out.features.rightCols(2) = patches.coords;
  out.coords = patches.coords;
  return out;
}

std::vector<PatchSet> pyramid_partition(const PatchSet& patches, const PyramidLayout& layout) {
  check(!layout.levels.empty(), "pyramid layout has no levels");
  const Eigen::Index t = patches.count();
  const int regions = layout.region_count();
  std::vector<std::vector<Eigen::Index>> members(regions);

  int offset = 0;
  for (int g : layout.levels) {
    check(g >= 1, "pyramid grid sizes must be positive");
    for (Eigen::Index i = 0; i < t; ++i) {
      // floor(coord * g) sends a coordinate exactly on a boundary to the
      // higher-index cell; 1.0 clamps into the last cell.
      const int row = std::min(static_cast<int>(patches.coords(i, 0) * g), g - 1);
      const int col = std::min(static_cast<int>(patches.coords(i, 1) * g), g - 1);
      members[offset + row * g + col].push_back(i);
    }
    offset += g * g;
  }

  std::vector<PatchSet> out(regions);
  for (int region = 0; region < regions; ++region) {
    const auto& rows = members[region];
    out[region].features.resize(rows.size(), patches.dim());
    out[region].coords.resize(rows.size(), 2);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      out[region].features.row(i) = patches.features.row(rows[i]);
      out[region].coords.row(i) = patches.coords.row(rows[i]);
    }
  }
  return out;
}

SupervectorBundle image_to_supervector(const PatchSet& patches, const DiagonalGmm& ubm,
                                       const PyramidLayout& layout, const AdaptationConfig& cfg,
                                       Method method) {
  check(patches.count() == 0 || patches.dim() == ubm.dim(),
        "patch dimension does not match the background model");
  std::vector<PatchSet> regions;
  if (patches.count() == 0) {
    regions.assign(layout.region_count(), PatchSet{Eigen::MatrixXd(0, ubm.dim()),
                                                   Eigen::Matrix<double, Eigen::Dynamic, 2>(0, 2)});
  } else {
    regions = pyramid_partition(patches, layout);
  }
  std::vector<SupervectorBundle> parts;
  parts.reserve(regions.size());
  for (const PatchSet& region : regions) {
    const SufficientStats stats = accumulate_stats(ubm, region.features);
    const DiagonalGmm adapted = map_adapt(ubm, stats, cfg);
    parts.push_back(vectorize_gmm(ubm, adapted, method));
  }
  return concat_regions(parts);
}

}  // namespace lagkit
