#pragma once

#include <Eigen/Dense>

#include "vrba/ad/ops.hpp"

namespace vrba::adapt {

/// (1/N) sum (lambda_i r_i)^2 on plain vectors.
inline double weighted_loss(const Eigen::Ref<const Eigen::VectorXd>& r, const Eigen::Ref<const Eigen::VectorXd>& lambdas) {
  if (r.size() != lambdas.size()) throw ShapeError("weighted_loss: length mismatch");
  return (lambdas.array() * r.array()).square().mean();
}

/// Mean squared error on plain vectors.
inline double mse(const Eigen::Ref<const Eigen::VectorXd>& r) { return r.array().square().mean(); }

/// Tape version; lambda enters as a constant so gradients flow through the residuals only.
/// `r` is 1 x N (a row of residuals) and lambda has N entries.
inline ad::Tensor weighted_loss(const ad::Tensor& r, const Eigen::Ref<const Eigen::VectorXd>& lambdas) {
  if (r.rows() != 1 || r.cols() != lambdas.size()) throw ShapeError("weighted_loss: length mismatch");
  ad::Tensor l = r.tape().constant(lambdas.transpose());
  return ad::mean(ad::square(l * r));
}

inline ad::Tensor mse(const ad::Tensor& r) { return ad::mean(ad::square(r)); }

}  // namespace vrba::adapt
