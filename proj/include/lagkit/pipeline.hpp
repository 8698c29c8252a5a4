#pragma once

#include <Eigen/Core>
#include <functional>
#include <string>
#include <vector>

#include "lagkit/gmm.hpp"
#include "lagkit/image.hpp"
#include "lagkit/vectorize.hpp"

namespace lagkit {

// Local features of one item plus normalized patch-center positions.
// Coordinate columns are (row/H, col/W), both in [0, 1].
struct PatchSet {
  Eigen::MatrixXd features;                          // T x D
  Eigen::Matrix<double, Eigen::Dynamic, 2> coords;   // T x 2

  Eigen::Index count() const { return features.rows(); }
  Eigen::Index dim() const { return features.cols(); }
};

// Mean-centered orthonormal projection onto the top principal axes.
struct PcaModel {
  Eigen::VectorXd mean;   // input_dim
  Eigen::MatrixXd basis;  // output_dim x input_dim, orthonormal rows

  Eigen::Index input_dim() const { return mean.size(); }
  Eigen::Index output_dim() const { return basis.rows(); }
};

// Pyramid of square grids; default {1, 2} means a 1x1 plus a 2x2 grid,
// five regions total.
struct PyramidLayout {
  std::vector<int> levels{1, 2};

  int region_count() const {
    int n = 0;
    for (int g : levels) n += g * g;
    return n;
  }
};

struct DescriptorConfig {
  std::vector<int> patch_sizes{16, 24};
  int step = 4;
  int sample_grid = 16;  // windows are resampled to this grid before flattening
  int pca_dim = 50;
  int max_side = 300;
};

// Maps one image window (top-left row/col, side length) to a fixed-length
// descriptor written into `out`.
struct DescriptorPlugin {
  std::string name;
  int output_dim = 0;
  std::function<void(const GrayImage&, int, int, int, Eigen::Ref<Eigen::VectorXd>)> describe;
};

// Flattened grayscale window, resampled to sample_grid x sample_grid so
// every patch size yields the same length, then contrast normalized to
// zero mean and unit variance (1e-8 guard).
DescriptorPlugin raw_pixel_descriptor(int sample_grid);

// Dense windows at every position congruent 0 mod step with the window
// fully inside the (possibly downscaled) image, for each patch size.
// Throws when the image is smaller than the smallest patch.
PatchSet extract_patches(const GrayImage& image, const DescriptorConfig& cfg,
                         const DescriptorPlugin& plugin);

// Top-eigenvector basis of the sample covariance. Requires more samples
// than output dimensions.
PcaModel fit_pca(const Eigen::Ref<const Eigen::MatrixXd>& features, int output_dim);

Eigen::MatrixXd pca_transform(const PcaModel& model,
                              const Eigen::Ref<const Eigen::MatrixXd>& features);
PatchSet apply_pca(const PcaModel& model, const PatchSet& patches);

// Appends the two coordinate columns to the feature matrix (D + 2).
PatchSet append_coords(const PatchSet& patches);

// One PatchSet per region in layout order: the 1x1 level first, then each
// g x g level's cells row-major. A coordinate exactly on a cell boundary
// belongs to the higher-index cell.
std::vector<PatchSet> pyramid_partition(const PatchSet& patches, const PyramidLayout& layout);

// Per region: accumulate statistics, adapt the prior, vectorize; the
// region supervectors are concatenated in layout order. An empty region
// contributes the vectorization of the unadapted prior.
SupervectorBundle image_to_supervector(const PatchSet& patches, const DiagonalGmm& ubm,
                                       const PyramidLayout& layout, const AdaptationConfig& cfg,
                                       Method method);

}  // namespace lagkit
