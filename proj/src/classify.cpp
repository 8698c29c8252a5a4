#include "lagkit/classify.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <map>

#include "lagkit/check.hpp"

namespace lagkit {

namespace {

// Appends `candidate` to the rows of `rows` after Gram-Schmidt against the
// existing rows; returns false when it lies in their span.
bool append_orthonormal(std::vector<Eigen::VectorXd>& rows, Eigen::VectorXd candidate) {
  const double original = candidate.norm();
  if (original <= 0.0) return false;
  for (const auto& row : rows) candidate -= row.dot(candidate) * row;
  // Second pass stabilizes near-dependent candidates.
  for (const auto& row : rows) candidate -= row.dot(candidate) * row;
  const double residual = candidate.norm();
  if (residual <= 1e-10 * original) return false;
  rows.push_back(candidate / residual);
  return true;
}

}  // namespace

NapModel train_nap(const Eigen::Ref<const Eigen::MatrixXd>& vectors,
                   const std::vector<int>& labels, int rank) {
  const Eigen::Index n = vectors.rows();
  const Eigen::Index dim = vectors.cols();
  check(n >= 2, "need at least two vectors");
  check(static_cast<Eigen::Index>(labels.size()) == n, "one label per vector required");
  check(rank >= 0, "rank must be nonnegative");
  check(rank < dim, "rank must be smaller than the vector dimension");

  std::map<int, std::vector<Eigen::Index>> by_class;
  for (Eigen::Index i = 0; i < n; ++i) by_class[labels[i]].push_back(i);
  if (rank > 0) {
    for (const auto& [label, rows] : by_class) {
      if (rows.size() < 2) {
        throw std::invalid_argument("class " + std::to_string(label) +
                                    " has a single sample; cannot estimate within-class scatter");
      }
    }
  }

  NapModel model;
  model.mean = vectors.colwise().mean().transpose();

  // Within-class centering; the scatter is Z^T Z, eigensolved in the
  // N x N Gram domain since dim is usually much larger than N.
  Eigen::MatrixXd centered(n, dim);
  for (const auto& [label, rows] : by_class) {
    Eigen::RowVectorXd class_mean = Eigen::RowVectorXd::Zero(dim);
    for (Eigen::Index i : rows) class_mean += vectors.row(i);
    class_mean /= static_cast<double>(rows.size());
    for (Eigen::Index i : rows) centered.row(i) = vectors.row(i) - class_mean;
  }

  std::vector<Eigen::VectorXd> basis_rows;
  if (rank > 0) {
    Eigen::MatrixXd gram = centered * centered.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram);
    check(solver.info() == Eigen::Success, "eigendecomposition failed");
    const double top = std::max(solver.eigenvalues().maxCoeff(), 0.0);
    const double cutoff = std::max(top * 1e-10, 1e-12);
    for (int j = 0; j < rank; ++j) {
      const Eigen::Index col = n - 1 - j;
      if (col < 0) break;
      const double eigenvalue = solver.eigenvalues()[col];
      if (eigenvalue <= cutoff) break;  // zero-scatter directions are not removed
      Eigen::VectorXd direction =
          centered.transpose() * solver.eigenvectors().col(col) / std::sqrt(eigenvalue);
      append_orthonormal(basis_rows, std::move(direction));
    }
  }
  model.nuisance_rank = static_cast<std::int32_t>(basis_rows.size());

  // Folding the global-mean direction into the removed span makes the
  // projection a plain linear idempotent map: (I - V^T V)(v - mean)
  // equals (I - V^T V) v once mean lies in span(V).
  append_orthonormal(basis_rows, model.mean);

  model.basis.resize(static_cast<Eigen::Index>(basis_rows.size()), dim);
  for (std::size_t i = 0; i < basis_rows.size(); ++i) {
    model.basis.row(static_cast<Eigen::Index>(i)) = basis_rows[i].transpose();
  }
  return model;
}

Eigen::VectorXd nap_project(const NapModel& model, const Eigen::Ref<const Eigen::VectorXd>& v) {
  check(v.size() == model.dim(), "vector dimension does not match the projection");
  Eigen::VectorXd out = v - model.mean;
  if (model.basis.rows() > 0) out.noalias() -= model.basis.transpose() * (model.basis * out);
  return out;
}

Eigen::MatrixXd nap_project_rows(const NapModel& model,
                                 const Eigen::Ref<const Eigen::MatrixXd>& vectors) {
  check(vectors.cols() == model.dim(), "vector dimension does not match the projection");
  Eigen::MatrixXd out = vectors.rowwise() - model.mean.transpose();
  if (model.basis.rows() > 0) out.noalias() -= (out * model.basis.transpose()) * model.basis;
  return out;
}

Eigen::VectorXd l2_normalized(const Eigen::Ref<const Eigen::VectorXd>& v) {
  const double norm = v.norm();
  if (norm <= 0.0) return v;
  return v / norm;
}

CentroidModel train_nc(const Eigen::Ref<const Eigen::MatrixXd>& projected,
                       const std::vector<int>& labels, const std::vector<std::string>& classes) {
  const Eigen::Index n = projected.rows();
  check(static_cast<Eigen::Index>(labels.size()) == n, "one label per vector required");
  check(!classes.empty(), "class list is empty");

  CentroidModel model;
  model.classes = classes;
  model.centroids = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(classes.size()),
                                          projected.cols());
  std::vector<int> counts(classes.size(), 0);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int label = labels[i];
    check(label >= 0 && label < static_cast<int>(classes.size()), "label index out of range");
    model.centroids.row(label) += l2_normalized(projected.row(i).transpose()).transpose();
    counts[label] += 1;
  }
  for (std::size_t c = 0; c < classes.size(); ++c) {
    if (counts[c] == 0) {
      throw std::invalid_argument("class '" + classes[c] + "' has no training vectors");
    }
    model.centroids.row(static_cast<Eigen::Index>(c)) /= static_cast<double>(counts[c]);
  }
  return model;
}

// Pure nearest centroid: callers normalize queries the same way the
// training rows were normalized.
int nc_predict(const CentroidModel& model, const Eigen::Ref<const Eigen::VectorXd>& vector) {
  check(vector.size() == model.dim(), "vector dimension does not match the centroids");
  int best = 0;
  double best_distance = (model.centroids.row(0).transpose() - vector).squaredNorm();
  for (Eigen::Index c = 1; c < model.centroids.rows(); ++c) {
    const double distance = (model.centroids.row(c).transpose() - vector).squaredNorm();
    if (distance < best_distance) {  // strict: ties stay with the lower index
      best_distance = distance;
      best = static_cast<int>(c);
    }
  }
  return best;
}

}  // namespace lagkit
