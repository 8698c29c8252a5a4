#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "lagkit/gmm.hpp"

namespace lagkit {

enum class Method : std::uint8_t { kLag = 0, kRlag = 1, kKlvec = 2 };

const char* method_name(Method m);
Method method_from_name(const std::string& name);

// Values per component block: 2D for LAG, D for RLAG and KLVEC.
Eigen::Index method_block_size(Method m, Eigen::Index dim);

// Fixed-length supervector with its layout tag. `values` holds
// region-major, component-major blocks; within a LAG block the D
// log-scale entries precede the D translation entries.
struct SupervectorBundle {
  Method method = Method::kLag;
  std::int32_t components = 0;
  std::int32_t dim = 0;
  std::int32_t regions = 1;
  Eigen::VectorXd values;

  Eigen::Index size() const { return values.size(); }
  void validate() const;
};

// sqrt(adapted weight) weighted tangent blocks of every component at its
// prior anchor; length 2*D*K.
SupervectorBundle lag_vector(const DiagonalGmm& ubm, const DiagonalGmm& adapted);

// Mean-only variant; length D*K.
SupervectorBundle rlag_vector(const DiagonalGmm& ubm, const DiagonalGmm& adapted);

// Divergence-motivated baseline sqrt(w_k) * mu_k / prior_sigma_k; unlike
// the tangent forms it is not centered at the prior. Length D*K.
SupervectorBundle klvec_vector(const DiagonalGmm& ubm, const DiagonalGmm& adapted);

SupervectorBundle vectorize_gmm(const DiagonalGmm& ubm, const DiagonalGmm& adapted, Method m);

// Product kernel sum_k sqrt(w_k^a w_k^b) <m_k^a, m_k^b> computed from
// per-component tangents, without assembling supervectors. Matches the
// dot product of the corresponding supervectors; methods kLag and kRlag.
double gmm_product_kernel(const DiagonalGmm& ubm, const DiagonalGmm& a, const DiagonalGmm& b,
                          Method m);

// Concatenation of per-region bundles sharing method/K/D, in order.
SupervectorBundle concat_regions(const std::vector<SupervectorBundle>& parts);

}  // namespace lagkit
