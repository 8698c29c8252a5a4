#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

namespace lagkit {

// Orthogonal annihilator of high within-class-variance directions.
// `basis` spans the removed subspace: the top within-class scatter
// eigenvectors plus the global-mean direction, so the projection both
// centers and stays exactly idempotent.
struct NapModel {
  Eigen::VectorXd mean;    // global mean, length dim
  Eigen::MatrixXd basis;   // removed_rank x dim, orthonormal rows
  std::int32_t nuisance_rank = 0;  // rows that came from the scatter (excludes the mean row)

  Eigen::Index dim() const { return mean.size(); }
  Eigen::Index removed_rank() const { return basis.rows(); }
};

// Nuisance directions are the top-`rank` eigenvectors of the within-class
// scatter, computed in the N x N Gram domain (vector dim is typically far
// larger than N). Eigendirections with vanishing scatter are dropped.
// Requires at least two samples, no singleton class when rank > 0, and
// rank < dim.
NapModel train_nap(const Eigen::Ref<const Eigen::MatrixXd>& vectors /* N x dim */,
                   const std::vector<int>& labels, int rank);

// (I - V^T V)(v - mean); idempotent, output orthogonal to every removed row.
Eigen::VectorXd nap_project(const NapModel& model, const Eigen::Ref<const Eigen::VectorXd>& v);
Eigen::MatrixXd nap_project_rows(const NapModel& model,
                                 const Eigen::Ref<const Eigen::MatrixXd>& vectors);

// Nearest-centroid classifier over projected, L2-normalized vectors.
struct CentroidModel {
  std::vector<std::string> classes;
  Eigen::MatrixXd centroids;  // classes x dim

  Eigen::Index dim() const { return centroids.cols(); }
};

// L2-normalizes rows (zero rows pass through) and averages per class.
// Every class must own at least one row.
CentroidModel train_nc(const Eigen::Ref<const Eigen::MatrixXd>& projected,
                       const std::vector<int>& labels, const std::vector<std::string>& classes);

// Index of the nearest centroid under Euclidean distance; ties go to the
// lowest class index. The query is L2-normalized the same way as training
// rows.
int nc_predict(const CentroidModel& model, const Eigen::Ref<const Eigen::VectorXd>& vector);

Eigen::VectorXd l2_normalized(const Eigen::Ref<const Eigen::VectorXd>& v);

}  // namespace lagkit
