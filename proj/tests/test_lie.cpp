#include <Eigen/LU>
#include <cmath>

#include "doctest.h"
#include "lagkit/lie.hpp"
#include "lagkit/rng.hpp"
#include "support/matrix_log_oracle.hpp"

using namespace lagkit;
using lagkit::testing::log_matrix2_oracle;
using lagkit::testing::Matrix2;

namespace {

UtdatDiag utdat1(double mean, double std) {
  return to_utdat(Eigen::VectorXd::Constant(1, mean), Eigen::VectorXd::Constant(1, std));
}

Matrix2 utdat_matrix(double mean, double std) {
  Matrix2 m;
  m << std, mean, 0.0, 1.0;
  return m;
}

}  // namespace

TEST_CASE("standard parameters map to the identity transformation") {
  const UtdatDiag m = utdat1(0.0, 1.0);
  CHECK(m.scale[0] == 1.0);
  CHECK(m.shift[0] == 0.0);
}

TEST_CASE("parameters copy through") {
  const UtdatDiag m = utdat1(3.0, 2.0);
  CHECK(m.scale[0] == 2.0);
  CHECK(m.shift[0] == 3.0);
}

TEST_CASE("transformation round-trips the parameters") {
  Rng rng(31);
  for (int i = 0; i < 1000; ++i) {
    Eigen::VectorXd means(3), stds(3);
    for (int d = 0; d < 3; ++d) {
      means[d] = rng.uniform(-10.0, 10.0);
      stds[d] = rng.uniform(0.05, 20.0);
    }
    const auto [m, s] = from_utdat(to_utdat(means, stds));
    CHECK(m == means);
    CHECK(s == stds);
  }
}

TEST_CASE("nonpositive scale is rejected") {
  CHECK_THROWS_AS(to_utdat(Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1)),
                  std::invalid_argument);
}

TEST_CASE("projection at the anchor is exactly zero") {
  Rng rng(32);
  for (int i = 0; i < 100; ++i) {
    const UtdatDiag x = utdat1(rng.uniform(-10.0, 10.0), rng.uniform(0.05, 20.0));
    const TangentVector tv = log_utdat_scalar(x, x);
    CHECK(tv.log_scale[0] == 0.0);
    CHECK(tv.translation[0] == 0.0);
  }
}

TEST_CASE("doubled scale with shift three") {
  const TangentVector tv = log_utdat_scalar(utdat1(0.0, 1.0), utdat1(3.0, 2.0));
  const double ln2 = std::log(2.0);
  CHECK(tv.log_scale[0] == doctest::Approx(ln2).epsilon(1e-15));
  CHECK(tv.translation[0] == doctest::Approx(3.0 * ln2).epsilon(1e-15));
  // Confirmed against the series oracle on the same pair.
  const Matrix2 m = log_matrix2_oracle(utdat_matrix(0.0, 1.0).inverse() * utdat_matrix(3.0, 2.0));
  CHECK(tv.log_scale[0] == doctest::Approx(m(0, 0)).epsilon(1e-12));
  CHECK(tv.translation[0] == doctest::Approx(m(0, 1)).epsilon(1e-12));
}

TEST_CASE("equal scales take the limit form") {
  const TangentVector tv = log_utdat_scalar(utdat1(0.0, 2.0), utdat1(1.0, 2.0));
  CHECK(tv.log_scale[0] == 0.0);
  CHECK(tv.translation[0] == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("scalar projection agrees with the matrix-log oracle") {
  Rng rng(33);
  for (int i = 0; i < 2000; ++i) {
    const double anchor_std = rng.uniform(0.05, 20.0);
    const double anchor_mean = rng.uniform(-10.0, 10.0);
    const double std = rng.uniform(0.05, 20.0);
    const double mean = rng.uniform(-10.0, 10.0);
    const TangentVector tv =
        log_utdat_scalar(utdat1(anchor_mean, anchor_std), utdat1(mean, std));
    const Matrix2 product =
        utdat_matrix(anchor_mean, anchor_std).inverse() * utdat_matrix(mean, std);
    const Matrix2 logm = log_matrix2_oracle(product);
    CHECK(std::abs(tv.log_scale[0] - logm(0, 0)) <= 1e-9);
    CHECK(std::abs(tv.translation[0] - logm(0, 1)) <= 1e-9);
    // The structural row stays zero up to series roundoff.
    CHECK(std::abs(logm(1, 0)) <= 1e-12);
    CHECK(std::abs(logm(1, 1)) <= 1e-12);
  }
}

TEST_CASE("translation is continuous across the branch switch") {
  const double anchor_std = 1.7, anchor_mean = -0.4, mean = 2.1;
  const double limit = (mean - anchor_mean) / anchor_std;
  for (double eps : {1e-6, -1e-6, 1e-9, -1e-9, 1e-12, -1e-12}) {
    const TangentVector tv =
        log_utdat_scalar(utdat1(anchor_mean, anchor_std), utdat1(mean, anchor_std * (1.0 + eps)));
    CHECK(tv.translation[0] == doctest::Approx(limit).epsilon(1e-6));
  }
}

TEST_CASE("log scale is antisymmetric") {
  Rng rng(34);
  for (int i = 0; i < 500; ++i) {
    const UtdatDiag a = utdat1(rng.uniform(-10.0, 10.0), rng.uniform(0.05, 20.0));
    const UtdatDiag b = utdat1(rng.uniform(-10.0, 10.0), rng.uniform(0.05, 20.0));
    const double forward = log_utdat_scalar(a, b).log_scale[0];
    const double backward = log_utdat_scalar(b, a).log_scale[0];
    CHECK(std::abs(forward + backward) <= 1e-13 * std::max(1.0, std::abs(forward)));
  }
}

TEST_CASE("oracle maps the identity to zero") {
  CHECK(log_matrix2_oracle(Matrix2::Identity()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("oracle handles a diagonal stretch") {
  Matrix2 m;
  m << std::exp(1.0), 0.0, 0.0, 1.0;
  const Matrix2 logm = log_matrix2_oracle(m);
  CHECK(logm(0, 0) == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(std::abs(logm(0, 1)) <= 1e-14);
}

TEST_CASE("oracle matches the closed form on a shear") {
  const Matrix2 logm = log_matrix2_oracle(utdat_matrix(3.0, 2.0));
  const double ln2 = std::log(2.0);
  // For [[2, 3], [0, 1]] the principal log is [[ln 2, 3 ln 2], [0, 0]].
  CHECK(logm(0, 0) == doctest::Approx(ln2).epsilon(1e-12));
  CHECK(logm(0, 1) == doctest::Approx(3.0 * ln2).epsilon(1e-12));
}

TEST_CASE("oracle rejects input outside the affine shape") {
  Matrix2 bad;
  bad << 2.0, 1.0, 0.5, 1.0;
  CHECK_THROWS_AS(log_matrix2_oracle(bad), std::invalid_argument);
  bad << -1.0, 0.0, 0.0, 1.0;
  CHECK_THROWS_AS(log_matrix2_oracle(bad), std::invalid_argument);
}

TEST_CASE("reduced tangent at the anchor is zero") {
  const UtdatDiag x = utdat1(1.3, 0.6);
  CHECK(reduced_tangent(x, x)[0] == 0.0);
}

TEST_CASE("reduced tangent is the normalized shift") {
  CHECK(reduced_tangent(utdat1(2.0, 4.0), utdat1(4.0, 1.0))[0] ==
        doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("reduced tangent equals the translation when scales agree") {
  Rng rng(35);
  for (int i = 0; i < 200; ++i) {
    const double anchor_std = rng.uniform(0.05, 20.0);
    const UtdatDiag anchor = utdat1(rng.uniform(-10.0, 10.0), anchor_std);
    const UtdatDiag point = utdat1(rng.uniform(-10.0, 10.0), anchor_std);
    CHECK(reduced_tangent(anchor, point)[0] ==
          doctest::Approx(log_utdat_scalar(anchor, point).translation[0]).epsilon(1e-15));
  }
}
