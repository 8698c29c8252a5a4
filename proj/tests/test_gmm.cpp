#include <cmath>
#include <vector>

#include "doctest.h"
#include "lagkit/gmm.hpp"
#include "lagkit/rng.hpp"
#include "support/generators.hpp"

using namespace lagkit;
using lagkit::testing::random_gmm;
using lagkit::testing::random_patches;

namespace {

// Direct extended-precision evaluation of the mixture densities; kept
// independent of the library's log-domain path.
std::vector<long double> direct_posteriors(const DiagonalGmm& g, const Eigen::VectorXd& s) {
  const long double two_pi = 6.283185307179586476925286766559L;
  std::vector<long double> joint(g.components());
  long double total = 0.0L;
  for (Eigen::Index k = 0; k < g.components(); ++k) {
    long double density = 1.0L;
    for (Eigen::Index d = 0; d < g.dim(); ++d) {
      const long double sd = g.stds(k, d);
      const long double z = (static_cast<long double>(s[d]) - g.means(k, d)) / sd;
      density *= std::exp(-0.5L * z * z) / (sd * std::sqrt(two_pi));
    }
    joint[k] = g.weights[k] * density;
    total += joint[k];
  }
  for (auto& j : joint) j /= total;
  return joint;
}

long double direct_log_likelihood(const DiagonalGmm& g, const Eigen::MatrixXd& patches) {
  const long double two_pi = 6.283185307179586476925286766559L;
  long double total = 0.0L;
  for (Eigen::Index t = 0; t < patches.rows(); ++t) {
    long double mix = 0.0L;
    for (Eigen::Index k = 0; k < g.components(); ++k) {
      long double density = 1.0L;
      for (Eigen::Index d = 0; d < g.dim(); ++d) {
        const long double sd = g.stds(k, d);
        const long double z = (static_cast<long double>(patches(t, d)) - g.means(k, d)) / sd;
        density *= std::exp(-0.5L * z * z) / (sd * std::sqrt(two_pi));
      }
      mix += g.weights[k] * density;
    }
    total += std::log(mix);
  }
  return total;
}

}  // namespace

TEST_CASE("single-component posterior is unity") {
  Rng rng(1);
  const DiagonalGmm g = random_gmm(rng, 1, 3);
  const Eigen::VectorXd s = Eigen::Vector3d(0.4, -2.0, 1.0);
  const Eigen::VectorXd p = component_posteriors(g, s);
  CHECK(p.size() == 1);
  CHECK(p[0] == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("symmetric two-component posterior splits evenly") {
  DiagonalGmm g;
  g.weights = Eigen::Vector2d(0.5, 0.5);
  g.means = Eigen::MatrixXd(2, 1);
  g.means << -1.5, 1.5;
  g.stds = Eigen::MatrixXd::Constant(2, 1, 0.8);
  const Eigen::VectorXd p = component_posteriors(g, Eigen::VectorXd::Zero(1));
  CHECK(p[0] == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(p[1] == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("two-component posterior matches direct evaluation") {
  DiagonalGmm g;
  g.weights = Eigen::Vector2d(0.3, 0.7);
  g.means = Eigen::MatrixXd(2, 1);
  g.means << 0.0, 1.0;
  g.stds = Eigen::MatrixXd::Constant(2, 1, 1.0);
  Eigen::VectorXd s(1);
  s << 0.5;
  const auto expected = direct_posteriors(g, s);
  const Eigen::VectorXd p = component_posteriors(g, s);
  CHECK(p[0] == doctest::Approx(double(expected[0])).epsilon(1e-13));
  CHECK(p[1] == doctest::Approx(double(expected[1])).epsilon(1e-13));
  // Both components sit at the same distance from the patch, so the
  // posterior collapses to the weights.
  CHECK(p[0] == doctest::Approx(0.3).epsilon(1e-13));
}

TEST_CASE("posteriors sum to one over random models") {
  Rng rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    const int k = 1 + int(rng.below(12));
    const int d = 1 + int(rng.below(5));
    const DiagonalGmm g = random_gmm(rng, k, d);
    Eigen::VectorXd s(d);
    for (int i = 0; i < d; ++i) s[i] = rng.uniform(-30.0, 30.0);  // includes far tails
    const Eigen::VectorXd p = component_posteriors(g, s);
    CHECK(p.minCoeff() >= 0.0);
    CHECK(std::abs(p.sum() - 1.0) <= 1e-12);
  }
}

TEST_CASE("posterior rejects dimension mismatch") {
  Rng rng(2);
  const DiagonalGmm g = random_gmm(rng, 2, 3);
  CHECK_THROWS_AS(component_posteriors(g, Eigen::VectorXd::Zero(4)), std::invalid_argument);
}

TEST_CASE("statistics of an empty patch set fall back to the prior") {
  Rng rng(3);
  const DiagonalGmm g = random_gmm(rng, 3, 2);
  const SufficientStats stats = accumulate_stats(g, Eigen::MatrixXd(0, 2));
  CHECK(stats.total_patches == 0);
  CHECK(stats.counts.isZero());
  CHECK(stats.mean_acc.isApprox(g.means));
  CHECK(stats.sqmean_acc.isApprox(
      Eigen::MatrixXd(g.stds.cwiseProduct(g.stds) + g.means.cwiseProduct(g.means))));
}

TEST_CASE("single-component statistics are plain averages") {
  Rng rng(4);
  const DiagonalGmm g = random_gmm(rng, 1, 2);
  Eigen::MatrixXd patches(2, 2);
  patches << 1.0, 2.0, 3.0, 5.0;
  const SufficientStats stats = accumulate_stats(g, patches);
  CHECK(stats.counts[0] == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(stats.mean_acc(0, 0) == doctest::Approx(2.0).epsilon(1e-13));
  CHECK(stats.mean_acc(0, 1) == doctest::Approx(3.5).epsilon(1e-13));
  CHECK(stats.sqmean_acc(0, 0) == doctest::Approx(5.0).epsilon(1e-13));
  CHECK(stats.sqmean_acc(0, 1) == doctest::Approx(14.5).epsilon(1e-13));
}

TEST_CASE("statistics match the brute-force summation oracle") {
  Rng rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    const int k = 1 + int(rng.below(8));
    const int d = 1 + int(rng.below(4));
    const int t = 1 + int(rng.below(50));
    const DiagonalGmm g = random_gmm(rng, k, d);
    const Eigen::MatrixXd patches = random_patches(rng, t, d);

    Eigen::VectorXd counts = Eigen::VectorXd::Zero(k);
    Eigen::MatrixXd sum_x = Eigen::MatrixXd::Zero(k, d);
    Eigen::MatrixXd sum_x2 = Eigen::MatrixXd::Zero(k, d);
    for (int i = 0; i < t; ++i) {
      const auto post = direct_posteriors(g, patches.row(i).transpose());
      for (int c = 0; c < k; ++c) {
        counts[c] += double(post[c]);
        for (int j = 0; j < d; ++j) {
          sum_x(c, j) += double(post[c]) * patches(i, j);
          sum_x2(c, j) += double(post[c]) * patches(i, j) * patches(i, j);
        }
      }
    }

    const SufficientStats stats = accumulate_stats(g, patches);
    CHECK(stats.total_patches == t);
    CHECK(std::abs(stats.counts.sum() - t) <= 1e-8);
    for (int c = 0; c < k; ++c) {
      CHECK(stats.counts[c] == doctest::Approx(counts[c]).epsilon(1e-9));
      if (counts[c] < kCountEpsilon) continue;
      for (int j = 0; j < d; ++j) {
        CHECK(stats.mean_acc(c, j) == doctest::Approx(sum_x(c, j) / counts[c]).epsilon(1e-9));
        CHECK(stats.sqmean_acc(c, j) == doctest::Approx(sum_x2(c, j) / counts[c]).epsilon(1e-9));
        // Jensen: second moment dominates the squared first moment.
        CHECK(stats.sqmean_acc(c, j) >= stats.mean_acc(c, j) * stats.mean_acc(c, j) - 1e-8);
      }
    }
  }
}

TEST_CASE("split accumulation merges to the whole within reassociation error") {
  Rng rng(6);
  const DiagonalGmm g = random_gmm(rng, 5, 3);
  const Eigen::MatrixXd patches = random_patches(rng, 90, 3);
  const SufficientStats whole = accumulate_stats(g, patches);
  const SufficientStats merged = merge_stats(
      g,
      merge_stats(g, accumulate_stats(g, patches.topRows(31)),
                  accumulate_stats(g, patches.middleRows(31, 20))),
      accumulate_stats(g, patches.bottomRows(39)));
  CHECK(merged.total_patches == whole.total_patches);
  CHECK((merged.counts - whole.counts).cwiseAbs().maxCoeff() <= 1e-9);
  CHECK((merged.mean_acc - whole.mean_acc).cwiseAbs().maxCoeff() <= 1e-9);
  CHECK((merged.sqmean_acc - whole.sqmean_acc).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("adapting with zero-count statistics returns the prior") {
  Rng rng(7);
  const DiagonalGmm g = random_gmm(rng, 3, 2);
  const SufficientStats stats = accumulate_stats(g, Eigen::MatrixXd(0, 2));
  AdaptDiagnostics diag;
  const DiagonalGmm adapted = map_adapt(g, stats, AdaptationConfig{}, &diag);
  CHECK(adapted.weights == g.weights);
  CHECK(adapted.means == g.means);
  CHECK(adapted.stds == g.stds);
  CHECK(diag.gamma == 1.0);
  CHECK(diag.alphas.maxCoeff() == 0.0);
}

TEST_CASE("blend coefficient and mean update follow the closed form") {
  // counts 16 with relevance 16 blends half and half: E(s)=4 against a
  // prior mean of 2 lands on 3.
  DiagonalGmm g;
  g.weights = Eigen::VectorXd::Ones(1);
  g.means = Eigen::MatrixXd::Constant(1, 1, 2.0);
  g.stds = Eigen::MatrixXd::Constant(1, 1, 1.0);
  SufficientStats stats;
  stats.counts = Eigen::VectorXd::Constant(1, 16.0);
  stats.mean_acc = Eigen::MatrixXd::Constant(1, 1, 4.0);
  stats.sqmean_acc = Eigen::MatrixXd::Constant(1, 1, 17.0);
  stats.total_patches = 16;
  AdaptationConfig cfg;
  cfg.relevance = 16.0;
  AdaptDiagnostics diag;
  const DiagonalGmm adapted = map_adapt(g, stats, cfg, &diag);
  CHECK(diag.alphas[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(adapted.means(0, 0) == doctest::Approx(3.0).epsilon(1e-14));
}

TEST_CASE("adaptation matches an independent transcription of the update") {
  Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const int k = 2, d = 2, t = 10;
    const DiagonalGmm g = random_gmm(rng, k, d);
    const Eigen::MatrixXd patches = random_patches(rng, t, d);
    const SufficientStats stats = accumulate_stats(g, patches);
    AdaptationConfig cfg;
    cfg.relevance = rng.uniform(1.0, 40.0);
    const DiagonalGmm adapted = map_adapt(g, stats, cfg);

    // Straight-line update written from scratch.
    std::vector<double> alpha(k);
    for (int c = 0; c < k; ++c) alpha[c] = stats.counts[c] / (stats.counts[c] + cfg.relevance);
    double gamma_denominator = 0.0;
    for (int c = 0; c < k; ++c) {
      gamma_denominator += alpha[c] * stats.counts[c] / t + (1.0 - alpha[c]) * g.weights[c];
    }
    for (int c = 0; c < k; ++c) {
      const double w = (alpha[c] * stats.counts[c] / t + (1.0 - alpha[c]) * g.weights[c]) /
                       gamma_denominator;
      CHECK(adapted.weights[c] == doctest::Approx(w).epsilon(1e-12));
      for (int j = 0; j < d; ++j) {
        const double mean = alpha[c] * stats.mean_acc(c, j) + (1.0 - alpha[c]) * g.means(c, j);
        const double variance = alpha[c] * stats.sqmean_acc(c, j) +
                                (1.0 - alpha[c]) * (g.stds(c, j) * g.stds(c, j) +
                                                    g.means(c, j) * g.means(c, j)) -
                                mean * mean;
        CHECK(adapted.means(c, j) == doctest::Approx(mean).epsilon(1e-12));
        CHECK(adapted.stds(c, j) ==
              doctest::Approx(std::sqrt(std::max(variance, cfg.variance_floor))).epsilon(1e-12));
      }
    }
    adapted.validate(cfg.variance_floor);
  }
}

TEST_CASE("huge relevance pins the adaptation to the prior") {
  Rng rng(9);
  const DiagonalGmm g = random_gmm(rng, 4, 3);
  const Eigen::MatrixXd patches = random_patches(rng, 200, 3);
  AdaptationConfig cfg;
  cfg.relevance = 1e12;
  const DiagonalGmm adapted = map_adapt(g, accumulate_stats(g, patches), cfg);
  CHECK((adapted.weights - g.weights).cwiseAbs().maxCoeff() <= 1e-6);
  CHECK((adapted.means - g.means).cwiseAbs().maxCoeff() <= 1e-6);
  CHECK((adapted.stds - g.stds).cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("disabled flags copy the prior exactly") {
  Rng rng(10);
  const DiagonalGmm g = random_gmm(rng, 3, 2);
  const Eigen::MatrixXd patches = random_patches(rng, 50, 2);
  AdaptationConfig cfg;
  cfg.adapt_weights = cfg.adapt_means = cfg.adapt_stds = false;
  const DiagonalGmm adapted = map_adapt(g, accumulate_stats(g, patches), cfg);
  CHECK(adapted.weights == g.weights);
  CHECK(adapted.means == g.means);
  CHECK(adapted.stds == g.stds);
}

TEST_CASE("adapted weights always renormalize to one") {
  Rng rng(11);
  for (int trial = 0; trial < 25; ++trial) {
    const int k = 1 + int(rng.below(10));
    const DiagonalGmm g = random_gmm(rng, k, 2);
    const int t = 1 + int(rng.below(80));
    const DiagonalGmm adapted =
        map_adapt(g, accumulate_stats(g, random_patches(rng, t, 2)), AdaptationConfig{});
    CHECK(std::abs(adapted.weights.sum() - 1.0) <= 1e-10);
    CHECK(adapted.weights.minCoeff() >= 0.0);
  }
}

TEST_CASE("mismatched statistics are rejected") {
  Rng rng(12);
  const DiagonalGmm g = random_gmm(rng, 3, 2);
  const DiagonalGmm other = random_gmm(rng, 4, 2);
  const SufficientStats stats = accumulate_stats(other, random_patches(rng, 10, 2));
  CHECK_THROWS_AS(map_adapt(g, stats, AdaptationConfig{}), std::invalid_argument);
}

TEST_CASE("single-component training recovers the sample statistics") {
  Rng rng(13);
  const Eigen::MatrixXd patches = random_patches(rng, 400, 3, 1.5);
  EmConfig cfg;
  cfg.seed = 99;
  const EmResult result = train_ubm_em(patches, 1, cfg);
  const Eigen::RowVectorXd mean = patches.colwise().mean();
  Eigen::RowVectorXd var = (patches.rowwise() - mean).array().square().colwise().mean();
  CHECK(result.model.weights[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK((result.model.means.row(0) - mean).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK((result.model.stds.row(0) - var.cwiseSqrt()).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("training separates two well-separated clusters") {
  Rng rng(14);
  Eigen::MatrixXd patches(300, 2);
  for (int i = 0; i < 150; ++i) {
    patches(i, 0) = -5.0 + 0.3 * rng.normal();
    patches(i, 1) = -5.0 + 0.3 * rng.normal();
    patches(150 + i, 0) = 5.0 + 0.3 * rng.normal();
    patches(150 + i, 1) = 5.0 + 0.3 * rng.normal();
  }
  EmConfig cfg;
  cfg.seed = 7;
  const EmResult result = train_ubm_em(patches, 2, cfg);
  // Match components to generators by sign of the first mean coordinate.
  const int low = result.model.means(0, 0) < 0.0 ? 0 : 1;
  const int high = 1 - low;
  CHECK(std::abs(result.model.means(low, 0) + 5.0) <= 0.1);
  CHECK(std::abs(result.model.means(low, 1) + 5.0) <= 0.1);
  CHECK(std::abs(result.model.means(high, 0) - 5.0) <= 0.1);
  CHECK(std::abs(result.model.means(high, 1) - 5.0) <= 0.1);
}

TEST_CASE("training trace never decreases") {
  Rng rng(15);
  for (int trial = 0; trial < 4; ++trial) {
    const Eigen::MatrixXd patches = random_patches(rng, 300, 3);
    EmConfig cfg;
    cfg.seed = 1000 + trial;
    cfg.max_iterations = 25;
    const EmResult result = train_ubm_em(patches, 5, cfg);
    REQUIRE(!result.ll_trace.empty());
    for (std::size_t i = 1; i < result.ll_trace.size(); ++i) {
      CHECK(result.ll_trace[i] >=
            result.ll_trace[i - 1] - 1e-8 * std::abs(result.ll_trace[i - 1]));
    }
    result.model.validate(cfg.variance_floor);
  }
}

TEST_CASE("training is reproducible for a fixed seed") {
  Rng rng(16);
  const Eigen::MatrixXd patches = random_patches(rng, 200, 2);
  EmConfig cfg;
  cfg.seed = 5;
  const EmResult a = train_ubm_em(patches, 4, cfg);
  const EmResult b = train_ubm_em(patches, 4, cfg);
  CHECK(a.model.weights == b.model.weights);
  CHECK(a.model.means == b.model.means);
  CHECK(a.model.stds == b.model.stds);
  CHECK(a.ll_trace == b.ll_trace);
}

TEST_CASE("training refuses fewer patches than components") {
  Rng rng(17);
  const Eigen::MatrixXd patches = random_patches(rng, 3, 2);
  CHECK_THROWS_WITH_AS(train_ubm_em(patches, 4, EmConfig{}),
                       doctest::Contains("insufficient data"), std::invalid_argument);
}

TEST_CASE("log likelihood of nothing is zero") {
  Rng rng(18);
  const DiagonalGmm g = random_gmm(rng, 2, 3);
  CHECK(log_likelihood(g, Eigen::MatrixXd(0, 3)) == 0.0);
}

TEST_CASE("standard normal at its mode") {
  DiagonalGmm g;
  g.weights = Eigen::VectorXd::Ones(1);
  g.means = Eigen::MatrixXd::Zero(1, 1);
  g.stds = Eigen::MatrixXd::Ones(1, 1);
  CHECK(log_likelihood(g, Eigen::MatrixXd::Zero(1, 1)) ==
        doctest::Approx(-0.9189385332046727).epsilon(1e-12));
}

TEST_CASE("log likelihood matches direct evaluation") {
  Rng rng(19);
  for (int trial = 0; trial < 10; ++trial) {
    const int k = 1 + int(rng.below(6));
    const int d = 1 + int(rng.below(4));
    const DiagonalGmm g = random_gmm(rng, k, d);
    const Eigen::MatrixXd patches = random_patches(rng, 40, d);
    CHECK(log_likelihood(g, patches) ==
          doctest::Approx(double(direct_log_likelihood(g, patches))).epsilon(1e-11));
  }
}
