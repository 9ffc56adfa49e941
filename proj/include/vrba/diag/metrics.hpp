#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "vrba/errors.hpp"

namespace vrba::diag {

/// |mean g| / sqrt(mean |g_j - mean g|^2) over the partition gradients; +inf when the
/// gradients agree exactly.
inline double snr(const std::vector<Eigen::VectorXd>& grads) {
  if (grads.size() < 2) throw PartitionError("snr needs at least two partition gradients");
  const Eigen::Index n = grads.front().size();
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(n);
  for (const auto& g : grads) {
    if (g.size() != n) throw ShapeError("snr: partition gradients differ in length");
    mean += g;
  }
  mean /= static_cast<double>(grads.size());
  double noise = 0.0;
  for (const auto& g : grads) noise += (g - mean).squaredNorm();
  noise /= static_cast<double>(grads.size());
  if (noise == 0.0) return std::numeric_limits<double>::infinity();
  return mean.norm() / std::sqrt(noise);
}

/// Population variance under p of r * dq/dp, where dq/dp = q_i / p_i.
inline double estimator_variance(const Eigen::Ref<const Eigen::VectorXd>& r, const Eigen::Ref<const Eigen::VectorXd>& q,
                                 const Eigen::Ref<const Eigen::VectorXd>& p) {
  if (r.size() != q.size() || r.size() != p.size()) throw ShapeError("estimator_variance: length mismatch");
  const Eigen::ArrayXd v = r.array() * q.array() / p.array();
  const double m = (p.array() * v).sum();
  return (p.array() * (v - m).square()).sum();
}

/// Uniform base measure p_i = 1/N.
inline double estimator_variance(const Eigen::Ref<const Eigen::VectorXd>& r, const Eigen::Ref<const Eigen::VectorXd>& q) {
  const Eigen::VectorXd p = Eigen::VectorXd::Constant(r.size(), 1.0 / static_cast<double>(r.size()));
  return estimator_variance(r, q, p);
}

/// Plain population variance of r under the uniform measure.
inline double residual_variance(const Eigen::Ref<const Eigen::VectorXd>& r) {
  return (r.array() - r.mean()).square().mean();
}

struct ErrorNorms {
  double rel_l2 = 0.0;
  double l_inf = 0.0;
};

inline ErrorNorms error_norms(const Eigen::Ref<const Eigen::VectorXd>& pred, const Eigen::Ref<const Eigen::VectorXd>& ref) {
  if (pred.size() != ref.size()) throw ShapeError("error_norms: shape mismatch");
  const double rn = ref.norm();
  if (rn == 0.0) throw DegenerateReference("reference has zero norm");
  const Eigen::VectorXd e = pred - ref;
  return {e.norm() / rn, e.cwiseAbs().maxCoeff()};
}

}  // namespace vrba::diag
