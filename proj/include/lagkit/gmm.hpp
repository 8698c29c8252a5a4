#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

namespace lagkit {

// Soft counts below this are treated as empty; the moment slots of an
// empty component carry the prior's moments instead of 0/0 (the
// adaptation coefficient of such a component vanishes, so the slot
// value never influences an adapted model).
inline constexpr double kCountEpsilon = 1e-10;

// K-component diagonal-covariance Gaussian mixture. Stores standard
// deviations, not variances. Treat as immutable once trained; safe to
// share read-only across threads.
struct DiagonalGmm {
  Eigen::VectorXd weights;  // K, nonnegative, sums to 1
  Eigen::MatrixXd means;    // K x D
  Eigen::MatrixXd stds;     // K x D, strictly positive

  Eigen::Index components() const { return weights.size(); }
  Eigen::Index dim() const { return means.cols(); }

  // Throws std::invalid_argument on shape mismatch, weights off unity,
  // or variances below the floor.
  void validate(double variance_floor = 0.0) const;
};

// Per-component soft counts and normalized first/second moments of a
// patch set under a fixed mixture.
struct SufficientStats {
  Eigen::VectorXd counts;      // K, soft counts
  Eigen::MatrixXd mean_acc;    // K x D, (1/n_k) sum_t p_tk s_t
  Eigen::MatrixXd sqmean_acc;  // K x D, (1/n_k) sum_t p_tk s_t^2
  std::int64_t total_patches = 0;

  Eigen::Index components() const { return counts.size(); }
  Eigen::Index dim() const { return mean_acc.cols(); }
};

struct AdaptationConfig {
  double relevance = 16.0;  // r in alpha_k = n_k / (n_k + r)
  bool adapt_weights = true;
  bool adapt_means = true;
  bool adapt_stds = true;
  double variance_floor = 1e-4;
};

struct AdaptDiagnostics {
  Eigen::VectorXd alphas;  // K
  double gamma = 1.0;      // weight renormalization factor
};

struct EmConfig {
  int max_iterations = 50;
  double ll_tolerance = 1e-6;  // relative improvement stop
  std::uint64_t seed = 0;
  double variance_floor = 1e-4;
};

struct EmResult {
  DiagonalGmm model;
  std::vector<double> ll_trace;  // total log-likelihood per iteration
};

// Posterior probability of each component given one patch; log-domain
// with max subtraction, output sums to 1.
Eigen::VectorXd component_posteriors(const DiagonalGmm& model,
                                     const Eigen::Ref<const Eigen::VectorXd>& patch);

// Soft-count statistics of a T x D patch matrix under `model`.
SufficientStats accumulate_stats(const DiagonalGmm& model,
                                 const Eigen::Ref<const Eigen::MatrixXd>& patches);

// Associative combine of statistics accumulated over disjoint patch
// subsets; counts add, moments combine count-weighted.
SufficientStats merge_stats(const DiagonalGmm& model, const SufficientStats& a,
                            const SufficientStats& b);

// One-iteration MAP adaptation of the prior toward the statistics.
// The per-component blend is alpha_k = n_k / (n_k + relevance); adapted
// weights are renormalized to unity, adapted variances floored before
// the square root. Flags that are off copy the prior's parameters.
DiagonalGmm map_adapt(const DiagonalGmm& ubm, const SufficientStats& stats,
                      const AdaptationConfig& cfg, AdaptDiagnostics* diagnostics = nullptr);

// EM training of the background model. k-means++ seeded on a subsample,
// deterministic for a fixed cfg.seed. Requires at least `components`
// patches. The trace holds the total log-likelihood of the parameters
// entering each iteration and is non-decreasing up to the floor.
EmResult train_ubm_em(const Eigen::Ref<const Eigen::MatrixXd>& patches, int components,
                      const EmConfig& cfg);

double log_likelihood(const DiagonalGmm& model,
                      const Eigen::Ref<const Eigen::MatrixXd>& patches);

}  // namespace lagkit
