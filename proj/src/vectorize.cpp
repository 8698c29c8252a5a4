#include "lagkit/vectorize.hpp"

#include <cmath>

#include "lagkit/check.hpp"
#include "lagkit/lie.hpp"

namespace lagkit {

const char* method_name(Method m) {
  switch (m) {
    case Method::kLag:
      return "LAG";
    case Method::kRlag:
      return "RLAG";
    case Method::kKlvec:
      return "KLVEC";
  }
  return "?";
}

Method method_from_name(const std::string& name) {
  if (name == "LAG" || name == "lag") return Method::kLag;
  if (name == "RLAG" || name == "rlag" || name == "rLAG") return Method::kRlag;
  if (name == "KLVEC" || name == "klvec" || name == "KLVec") return Method::kKlvec;
  throw std::invalid_argument("unknown method '" + name + "' (expected LAG, RLAG or KLVEC)");
}

Eigen::Index method_block_size(Method m, Eigen::Index dim) {
  return m == Method::kLag ? 2 * dim : dim;
}

void SupervectorBundle::validate() const {
  check(components >= 1 && dim >= 1 && regions >= 1, "supervector layout fields must be positive");
  check(values.size() ==
            Eigen::Index(regions) * components * method_block_size(method, dim),
        "supervector length does not match its layout");
  check(values.allFinite(), "supervector entries must be finite");
}

namespace {

void require_matching(const DiagonalGmm& ubm, const DiagonalGmm& adapted) {
  check(ubm.components() == adapted.components() && ubm.dim() == adapted.dim(),
        "adapted mixture does not match the prior");
}

UtdatDiag component_utdat(const DiagonalGmm& model, Eigen::Index k) {
  return UtdatDiag{model.stds.row(k).transpose(), model.means.row(k).transpose()};
}

}  // namespace

SupervectorBundle lag_vector(const DiagonalGmm& ubm, const DiagonalGmm& adapted) {
  require_matching(ubm, adapted);
  const Eigen::Index k = ubm.components();
  const Eigen::Index d = ubm.dim();
  SupervectorBundle out;
  out.method = Method::kLag;
  out.components = static_cast<std::int32_t>(k);
  out.dim = static_cast<std::int32_t>(d);
  out.values.resize(k * 2 * d);
  for (Eigen::Index i = 0; i < k; ++i) {
    const TangentVector tv = log_utdat_scalar(component_utdat(ubm, i), component_utdat(adapted, i));
    const double root_w = std::sqrt(adapted.weights[i]);
    out.values.segment(i * 2 * d, d) = root_w * tv.log_scale;
    out.values.segment(i * 2 * d + d, d) = root_w * tv.translation;
  }
  return out;
}

SupervectorBundle rlag_vector(const DiagonalGmm& ubm, const DiagonalGmm& adapted) {
  require_matching(ubm, adapted);
  const Eigen::Index k = ubm.components();
  const Eigen::Index d = ubm.dim();
  SupervectorBundle out;
  out.method = Method::kRlag;
  out.components = static_cast<std::int32_t>(k);
  out.dim = static_cast<std::int32_t>(d);
  out.values.resize(k * d);
  for (Eigen::Index i = 0; i < k; ++i) {
    out.values.segment(i * d, d) =
        std::sqrt(adapted.weights[i]) *
        reduced_tangent(component_utdat(ubm, i), component_utdat(adapted, i));
  }
  return out;
}

SupervectorBundle klvec_vector(const DiagonalGmm& ubm, const DiagonalGmm& adapted) {
  require_matching(ubm, adapted);
  const Eigen::Index k = ubm.components();
  const Eigen::Index d = ubm.dim();
  SupervectorBundle out;
  out.method = Method::kKlvec;
  out.components = static_cast<std::int32_t>(k);
  out.dim = static_cast<std::int32_t>(d);
  out.values.resize(k * d);
  for (Eigen::Index i = 0; i < k; ++i) {
    out.values.segment(i * d, d) =
        std::sqrt(adapted.weights[i]) *
        adapted.means.row(i).cwiseQuotient(ubm.stds.row(i)).transpose();
  }
  return out;
}

SupervectorBundle vectorize_gmm(const DiagonalGmm& ubm, const DiagonalGmm& adapted, Method m) {
  switch (m) {
    case Method::kLag:
      return lag_vector(ubm, adapted);
    case Method::kRlag:
      return rlag_vector(ubm, adapted);
    case Method::kKlvec:
      return klvec_vector(ubm, adapted);
  }
  throw std::invalid_argument("unknown vectorization method");
}

double gmm_product_kernel(const DiagonalGmm& ubm, const DiagonalGmm& a, const DiagonalGmm& b,
                          Method m) {
  require_matching(ubm, a);
  require_matching(ubm, b);
  check(m == Method::kLag || m == Method::kRlag, "product kernel is defined for LAG and RLAG");
  const Eigen::Index k = ubm.components();
  double total = 0.0;
  for (Eigen::Index i = 0; i < k; ++i) {
    const UtdatDiag anchor = component_utdat(ubm, i);
    double dot;
    if (m == Method::kLag) {
      const TangentVector ta = log_utdat_scalar(anchor, component_utdat(a, i));
      const TangentVector tb = log_utdat_scalar(anchor, component_utdat(b, i));
      dot = ta.log_scale.dot(tb.log_scale) + ta.translation.dot(tb.translation);
    } else {
      dot = reduced_tangent(anchor, component_utdat(a, i))
                .dot(reduced_tangent(anchor, component_utdat(b, i)));
    }
    total += std::sqrt(a.weights[i] * b.weights[i]) * dot;
  }
  return total;
}

SupervectorBundle concat_regions(const std::vector<SupervectorBundle>& parts) {
  check(!parts.empty(), "cannot concatenate zero regions");
  const SupervectorBundle& head = parts.front();
  Eigen::Index total = 0;
  for (const auto& part : parts) {
    check(part.method == head.method && part.components == head.components &&
              part.dim == head.dim && part.regions == 1,
          "region supervectors disagree on layout");
    total += part.values.size();
  }
  SupervectorBundle out;
  out.method = head.method;
  out.components = head.components;
  out.dim = head.dim;
  out.regions = static_cast<std::int32_t>(parts.size());
  out.values.resize(total);
  Eigen::Index offset = 0;
  for (const auto& part : parts) {
    out.values.segment(offset, part.values.size()) = part.values;
    offset += part.values.size();
  }
  return out;
}

}  // namespace lagkit
