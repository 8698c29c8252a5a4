#include "lagkit/lie.hpp"

#include <cmath>

#include "lagkit/check.hpp"

namespace lagkit {

UtdatDiag to_utdat(const Eigen::Ref<const Eigen::VectorXd>& means,
                   const Eigen::Ref<const Eigen::VectorXd>& stds) {
  check(means.size() == stds.size(), "mean and std dimensions differ");
  check(stds.size() == 0 || stds.minCoeff() > 0.0, "transformation scale must be positive");
  return UtdatDiag{stds, means};
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> from_utdat(const UtdatDiag& m) {
  return {m.shift, m.scale};
}

TangentVector log_utdat_scalar(const UtdatDiag& anchor, const UtdatDiag& point) {
  check(anchor.dim() == point.dim(), "anchor and point dimensions differ");
  const Eigen::Index d = anchor.dim();
  TangentVector tv;
  tv.log_scale.resize(d);
  tv.translation.resize(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    const double anchor_scale = anchor.scale[i];
    const double scale = point.scale[i];
    const double shift_delta = point.shift[i] - anchor.shift[i];
    // log1p of the relative scale step keeps the quotient below accurate;
    // two separate logs would cancel catastrophically near the anchor.
    const double step = (scale - anchor_scale) / anchor_scale;
    const double log_scale = std::log1p(step);
    tv.log_scale[i] = log_scale;
    if (std::abs(step) > kScaleSwitchEpsilon) {
      tv.translation[i] = shift_delta * log_scale / (scale - anchor_scale);
    } else {
      tv.translation[i] = shift_delta / anchor_scale;
    }
  }
  return tv;
}

Eigen::VectorXd reduced_tangent(const UtdatDiag& anchor, const UtdatDiag& point) {
  check(anchor.dim() == point.dim(), "anchor and point dimensions differ");
  return (point.shift - anchor.shift).cwiseQuotient(anchor.scale);
}

}  // namespace lagkit
