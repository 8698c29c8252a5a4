#pragma once

#include <Eigen/Core>
#include <utility>

namespace lagkit {

// Relative |sigma - anchor sigma| threshold below which the translation
// entry switches to its analytic limit; under this scale the quotient
// form loses about half the significand to cancellation while the limit
// is exact to first order.
inline constexpr double kScaleSwitchEpsilon = 1e-8;

// Diagonal upper-triangular definite affine transformation
// [[diag(scale), shift], [0, 1]], one per Gaussian component.
struct UtdatDiag {
  Eigen::VectorXd scale;  // per-dimension sigma, > 0
  Eigen::VectorXd shift;  // per-dimension mu

  Eigen::Index dim() const { return scale.size(); }
};

// Per-dimension (log-scale, translation) pair of one component mapped
// into the tangent space at its anchor.
struct TangentVector {
  Eigen::VectorXd log_scale;    // log(sigma_d / anchor sigma_d)
  Eigen::VectorXd translation;  // (mu_d - anchor mu_d) * dlog/dsigma quotient

  Eigen::Index dim() const { return log_scale.size(); }
};

UtdatDiag to_utdat(const Eigen::Ref<const Eigen::VectorXd>& means,
                   const Eigen::Ref<const Eigen::VectorXd>& stds);

// (means, stds) round-trip of to_utdat.
std::pair<Eigen::VectorXd, Eigen::VectorXd> from_utdat(const UtdatDiag& m);

// Closed-form tangent projection log(anchor^-1 * point) per dimension:
//   log_scale   = log(sigma / anchor_sigma)
//   translation = (mu - anchor_mu) * log(sigma/anchor_sigma) / (sigma - anchor_sigma)
// with the limit (mu - anchor_mu) / anchor_sigma when the scales agree
// to within kScaleSwitchEpsilon relative.
TangentVector log_utdat_scalar(const UtdatDiag& anchor, const UtdatDiag& point);

// Mean-only tangent: (mu - anchor_mu) / anchor_sigma, ignoring scale.
Eigen::VectorXd reduced_tangent(const UtdatDiag& anchor, const UtdatDiag& point);

}  // namespace lagkit
