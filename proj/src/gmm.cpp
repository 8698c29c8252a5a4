#include "lagkit/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "lagkit/check.hpp"
#include "lagkit/rng.hpp"

namespace lagkit {

namespace {

constexpr double kLogTwoPi = 1.8378770664093454836;  // log(2*pi)

// Per-component constants for repeated density evaluation. The model is
// borrowed and must outlive the evaluator.
struct GmmEvaluator {
  const DiagonalGmm& model;
  Eigen::MatrixXd inv_std;    // K x D
  Eigen::VectorXd log_gain;   // K: log w_k - sum_d log sigma_kd - D/2 log 2pi

  explicit GmmEvaluator(const DiagonalGmm& m) : model(m) {
    const Eigen::Index k = m.components();
    const Eigen::Index d = m.dim();
    inv_std = m.stds.cwiseInverse();
    log_gain.resize(k);
    for (Eigen::Index i = 0; i < k; ++i) {
      const double log_w =
          m.weights[i] > 0.0 ? std::log(m.weights[i]) : -std::numeric_limits<double>::infinity();
      log_gain[i] = log_w - m.stds.row(i).array().log().sum() - 0.5 * double(d) * kLogTwoPi;
    }
  }

  // Joint log density log(w_k N(x; mu_k, sigma_k)) for every component of
  // one block of patches. Output is T x K.
  Eigen::MatrixXd log_joint(const Eigen::Ref<const Eigen::MatrixXd>& patches) const {
    const Eigen::Index t = patches.rows();
    const Eigen::Index k = model.components();
    Eigen::MatrixXd out(t, k);
    for (Eigen::Index i = 0; i < k; ++i) {
      out.col(i) =
          ((patches.rowwise() - model.means.row(i)).array().rowwise() * inv_std.row(i).array())
              .square()
              .rowwise()
              .sum() *
              -0.5 +
          log_gain[i];
    }
    return out;
  }
};

// Rowwise softmax in place; returns the per-row log-sum-exp values.
Eigen::VectorXd softmax_rows(Eigen::MatrixXd& log_joint) {
  const Eigen::Index t = log_joint.rows();
  Eigen::VectorXd lse(t);
  for (Eigen::Index r = 0; r < t; ++r) {
    const double peak = log_joint.row(r).maxCoeff();
    log_joint.row(r) = (log_joint.row(r).array() - peak).exp();
    const double total = log_joint.row(r).sum();
    log_joint.row(r) /= total;
    lse[r] = peak + std::log(total);
  }
  return lse;
}

struct RawStats {
  Eigen::VectorXd counts;  // K
  Eigen::MatrixXd sum_x;   // K x D
  Eigen::MatrixXd sum_x2;  // K x D
  double log_likelihood = 0.0;
};

// One pass over the patches in fixed-size blocks; block boundaries do not
// depend on any worker budget, so the result is reproducible bit for bit.
RawStats accumulate_raw(const DiagonalGmm& model,
                        const Eigen::Ref<const Eigen::MatrixXd>& patches) {
  constexpr Eigen::Index kBlock = 4096;
  const Eigen::Index t = patches.rows();
  const Eigen::Index k = model.components();
  const Eigen::Index d = model.dim();
  GmmEvaluator eval(model);
  RawStats raw;
  raw.counts = Eigen::VectorXd::Zero(k);
  raw.sum_x = Eigen::MatrixXd::Zero(k, d);
  raw.sum_x2 = Eigen::MatrixXd::Zero(k, d);
  for (Eigen::Index start = 0; start < t; start += kBlock) {
    const Eigen::Index len = std::min(kBlock, t - start);
    const auto block = patches.middleRows(start, len);
    Eigen::MatrixXd post = eval.log_joint(block);
    raw.log_likelihood += softmax_rows(post).sum();
    raw.counts += post.colwise().sum().transpose();
    raw.sum_x += post.transpose() * block;
    raw.sum_x2 += post.transpose() * block.cwiseProduct(block);
  }
  return raw;
}

SufficientStats normalize_stats(const DiagonalGmm& model, const RawStats& raw,
                                std::int64_t total) {
  SufficientStats stats;
  stats.counts = raw.counts;
  stats.total_patches = total;
  const Eigen::Index k = model.components();
  stats.mean_acc.resize(k, model.dim());
  stats.sqmean_acc.resize(k, model.dim());
  for (Eigen::Index i = 0; i < k; ++i) {
    if (raw.counts[i] < kCountEpsilon) {
      // Empty component: carry the prior's moments (inert, alpha ~ 0).
      stats.mean_acc.row(i) = model.means.row(i);
      stats.sqmean_acc.row(i) =
          model.stds.row(i).cwiseProduct(model.stds.row(i)) +
          model.means.row(i).cwiseProduct(model.means.row(i));
    } else {
      stats.mean_acc.row(i) = raw.sum_x.row(i) / raw.counts[i];
      stats.sqmean_acc.row(i) = raw.sum_x2.row(i) / raw.counts[i];
    }
  }
  return stats;
}

}  // namespace

void DiagonalGmm::validate(double variance_floor) const {
  const Eigen::Index k = components();
  const Eigen::Index d = dim();
  check(k >= 1 && d >= 1, "mixture must have at least one component and one dimension");
  check(means.rows() == k && stds.rows() == k && stds.cols() == d,
        "mixture parameter shapes are inconsistent");
  check(weights.minCoeff() >= 0.0, "mixture weights must be nonnegative");
  check(std::abs(weights.sum() - 1.0) <= 1e-10, "mixture weights must sum to 1");
  check(stds.minCoeff() > 0.0, "standard deviations must be positive");
  if (variance_floor > 0.0) {
    const double min_std = std::sqrt(variance_floor) * (1.0 - 1e-12);
    check(stds.minCoeff() >= min_std, "standard deviation below the variance floor");
  }
}

Eigen::VectorXd component_posteriors(const DiagonalGmm& model,
                                     const Eigen::Ref<const Eigen::VectorXd>& patch) {
  check(patch.size() == model.dim(), "patch dimension does not match the mixture");
  GmmEvaluator eval(model);
  Eigen::MatrixXd post = eval.log_joint(patch.transpose());
  softmax_rows(post);
  return post.row(0).transpose();
}

SufficientStats accumulate_stats(const DiagonalGmm& model,
                                 const Eigen::Ref<const Eigen::MatrixXd>& patches) {
  check(patches.rows() == 0 || patches.cols() == model.dim(),
        "patch dimension does not match the mixture");
  RawStats raw;
  if (patches.rows() == 0) {
    raw.counts = Eigen::VectorXd::Zero(model.components());
    raw.sum_x = Eigen::MatrixXd::Zero(model.components(), model.dim());
    raw.sum_x2 = Eigen::MatrixXd::Zero(model.components(), model.dim());
  } else {
    raw = accumulate_raw(model, patches);
  }
  return normalize_stats(model, raw, patches.rows());
}

SufficientStats merge_stats(const DiagonalGmm& model, const SufficientStats& a,
                            const SufficientStats& b) {
  check(a.components() == model.components() && b.components() == model.components() &&
            a.dim() == model.dim() && b.dim() == model.dim(),
        "statistics shapes do not match the mixture");
  RawStats raw;
  raw.counts = a.counts + b.counts;
  const Eigen::Index k = model.components();
  raw.sum_x.resize(k, model.dim());
  raw.sum_x2.resize(k, model.dim());
  for (Eigen::Index i = 0; i < k; ++i) {
    raw.sum_x.row(i).setZero();
    raw.sum_x2.row(i).setZero();
    // Empty slots carry prior moments, not data; they contribute nothing.
    if (a.counts[i] >= kCountEpsilon) {
      raw.sum_x.row(i) += a.counts[i] * a.mean_acc.row(i);
      raw.sum_x2.row(i) += a.counts[i] * a.sqmean_acc.row(i);
    }
    if (b.counts[i] >= kCountEpsilon) {
      raw.sum_x.row(i) += b.counts[i] * b.mean_acc.row(i);
      raw.sum_x2.row(i) += b.counts[i] * b.sqmean_acc.row(i);
    }
  }
  return normalize_stats(model, raw, a.total_patches + b.total_patches);
}

DiagonalGmm map_adapt(const DiagonalGmm& ubm, const SufficientStats& stats,
                      const AdaptationConfig& cfg, AdaptDiagnostics* diagnostics) {
  check(stats.components() == ubm.components() && stats.dim() == ubm.dim(),
        "statistics do not match the prior mixture");
  check(cfg.relevance > 0.0 && cfg.variance_floor > 0.0,
        "relevance and variance floor must be positive");
  const Eigen::Index k = ubm.components();
  const Eigen::Index d = ubm.dim();
  Eigen::VectorXd alphas(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    alphas[i] = stats.counts[i] / (stats.counts[i] + cfg.relevance);
  }

  DiagonalGmm out;
  out.weights = ubm.weights;
  out.means = ubm.means;
  out.stds = ubm.stds;

  double gamma = 1.0;
  if (cfg.adapt_weights && stats.total_patches > 0) {
    const double total = static_cast<double>(stats.total_patches);
    Eigen::VectorXd unnormalized(k);
    for (Eigen::Index i = 0; i < k; ++i) {
      unnormalized[i] = alphas[i] * stats.counts[i] / total + (1.0 - alphas[i]) * ubm.weights[i];
    }
    gamma = 1.0 / unnormalized.sum();
    out.weights = unnormalized * gamma;
  }

  if (cfg.adapt_means) {
    for (Eigen::Index i = 0; i < k; ++i) {
      if (stats.counts[i] < kCountEpsilon) continue;  // empty component keeps the prior exactly
      out.means.row(i) =
          alphas[i] * stats.mean_acc.row(i) + (1.0 - alphas[i]) * ubm.means.row(i);
    }
  }

  if (cfg.adapt_stds) {
    for (Eigen::Index i = 0; i < k; ++i) {
      if (stats.counts[i] < kCountEpsilon) continue;
      const auto prior_second =
          ubm.stds.row(i).cwiseProduct(ubm.stds.row(i)) +
          ubm.means.row(i).cwiseProduct(ubm.means.row(i));
      Eigen::RowVectorXd variance = alphas[i] * stats.sqmean_acc.row(i) +
                                    (1.0 - alphas[i]) * prior_second -
                                    out.means.row(i).cwiseProduct(out.means.row(i));
      out.stds.row(i) = variance.cwiseMax(cfg.variance_floor).cwiseSqrt();
    }
  }

  if (diagnostics) {
    diagnostics->alphas = std::move(alphas);
    diagnostics->gamma = gamma;
  }
  return out;
}

double log_likelihood(const DiagonalGmm& model,
                      const Eigen::Ref<const Eigen::MatrixXd>& patches) {
  if (patches.rows() == 0) return 0.0;
  check(patches.cols() == model.dim(), "patch dimension does not match the mixture");
  constexpr Eigen::Index kBlock = 4096;
  GmmEvaluator eval(model);
  double total = 0.0;
  for (Eigen::Index start = 0; start < patches.rows(); start += kBlock) {
    const Eigen::Index len = std::min(kBlock, patches.rows() - start);
    Eigen::MatrixXd post = eval.log_joint(patches.middleRows(start, len));
    total += softmax_rows(post).sum();
  }
  return total;
}

namespace {

// k-means++ seeding followed by a single hard assignment; clusters give
// the initial weights, means, and within-cluster variances.
DiagonalGmm em_initialize(const Eigen::Ref<const Eigen::MatrixXd>& patches, int components,
                          const EmConfig& cfg) {
  const Eigen::Index t = patches.rows();
  const Eigen::Index d = patches.cols();
  const Eigen::Index k = components;
  Rng rng(Rng::derive(cfg.seed, 0xC1A55EED));

  const Eigen::Index cap = std::min<Eigen::Index>(t, 100 * k);
  std::vector<Eigen::Index> order(t);
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  rng.shuffle(order);
  Eigen::MatrixXd sample(cap, d);
  for (Eigen::Index i = 0; i < cap; ++i) sample.row(i) = patches.row(order[i]);

  Eigen::MatrixXd centers(k, d);
  centers.row(0) = sample.row(rng.below(cap));
  Eigen::VectorXd dist2 =
      (sample.rowwise() - centers.row(0)).rowwise().squaredNorm();
  for (Eigen::Index j = 1; j < k; ++j) {
    const double total = dist2.sum();
    Eigen::Index pick;
    if (total <= 0.0) {
      pick = rng.below(cap);
    } else {
      double target = rng.uniform01() * total;
      pick = cap - 1;
      for (Eigen::Index i = 0; i < cap; ++i) {
        target -= dist2[i];
        if (target <= 0.0) {
          pick = i;
          break;
        }
      }
    }
    centers.row(j) = sample.row(pick);
    dist2 = dist2.cwiseMin((sample.rowwise() - centers.row(j)).rowwise().squaredNorm());
  }

  Eigen::VectorXd counts = Eigen::VectorXd::Zero(k);
  Eigen::MatrixXd sum_x = Eigen::MatrixXd::Zero(k, d);
  Eigen::MatrixXd sum_x2 = Eigen::MatrixXd::Zero(k, d);
  for (Eigen::Index i = 0; i < cap; ++i) {
    Eigen::Index best = 0;
    double best_d = (sample.row(i) - centers.row(0)).squaredNorm();
    for (Eigen::Index j = 1; j < k; ++j) {
      const double dj = (sample.row(i) - centers.row(j)).squaredNorm();
      if (dj < best_d) {
        best_d = dj;
        best = j;
      }
    }
    counts[best] += 1.0;
    sum_x.row(best) += sample.row(i);
    sum_x2.row(best) += sample.row(i).cwiseProduct(sample.row(i));
  }

  const Eigen::RowVectorXd global_mean = sample.colwise().mean();
  Eigen::RowVectorXd global_var =
      sample.cwiseProduct(sample).colwise().mean() - global_mean.cwiseProduct(global_mean);
  global_var = global_var.cwiseMax(cfg.variance_floor);

  DiagonalGmm model;
  model.weights.resize(k);
  model.means.resize(k, d);
  model.stds.resize(k, d);
  for (Eigen::Index j = 0; j < k; ++j) {
    if (counts[j] > 0.0) {
      model.weights[j] = counts[j];
      model.means.row(j) = sum_x.row(j) / counts[j];
      Eigen::RowVectorXd var =
          sum_x2.row(j) / counts[j] - model.means.row(j).cwiseProduct(model.means.row(j));
      model.stds.row(j) = var.cwiseMax(cfg.variance_floor).cwiseSqrt();
    } else {
      model.weights[j] = 1.0;  // treated as one phantom point
      model.means.row(j) = centers.row(j);
      model.stds.row(j) = global_var.cwiseSqrt();
    }
  }
  model.weights /= model.weights.sum();
  return model;
}

}  // namespace

EmResult train_ubm_em(const Eigen::Ref<const Eigen::MatrixXd>& patches, int components,
                      const EmConfig& cfg) {
  check(components >= 1, "component count must be positive");
  check(cfg.max_iterations >= 1, "max_iterations must be positive");
  if (patches.rows() < components) {
    throw std::invalid_argument("insufficient data for " + std::to_string(components) +
                                " components: " + std::to_string(patches.rows()) + " patches");
  }
  const double total = static_cast<double>(patches.rows());

  EmResult result;
  result.model = em_initialize(patches, components, cfg);
  for (int iteration = 0; iteration < cfg.max_iterations; ++iteration) {
    const RawStats raw = accumulate_raw(result.model, patches);
    result.ll_trace.push_back(raw.log_likelihood);
    if (iteration > 0) {
      const double previous = result.ll_trace[iteration - 1];
      const double gain = raw.log_likelihood - previous;
      if (gain < cfg.ll_tolerance * std::abs(previous)) break;
    }
    for (Eigen::Index j = 0; j < components; ++j) {
      if (raw.counts[j] < kCountEpsilon) continue;  // dead component keeps its parameters
      result.model.means.row(j) = raw.sum_x.row(j) / raw.counts[j];
      Eigen::RowVectorXd var =
          raw.sum_x2.row(j) / raw.counts[j] -
          result.model.means.row(j).cwiseProduct(result.model.means.row(j));
      result.model.stds.row(j) = var.cwiseMax(cfg.variance_floor).cwiseSqrt();
    }
    result.model.weights = raw.counts / total;
    result.model.weights /= result.model.weights.sum();
  }
  return result;
}

}  // namespace lagkit
