#pragma once

#include <cmath>
#include <span>

#include <Eigen/Dense>

#include "vrba/adapt/potential.hpp"

namespace vrba::adapt {

/// Tilted p.m.f. q_i proportional to Phi'(r_i / eps) over the sample points.
///
/// Exponential: softmax of r / eps after subtracting the maximum. Quadratic: r_i / sum r
/// (eps cancels). Residuals must be finite and nonnegative.
inline Eigen::VectorXd tilted_pmf(const Eigen::Ref<const Eigen::VectorXd>& r, const Potential& pot, double eps) {
  if (r.size() == 0) throw ShapeError("tilted_pmf on empty residual vector");
  if (!r.allFinite()) throw NonFiniteError("tilted_pmf: non-finite residual");
  if ((r.array() < 0.0).any()) throw DomainError("tilted_pmf: residual magnitudes must be nonnegative");
  Eigen::VectorXd q;
  if (pot.kind() == Potential::Kind::Exponential) {
    if (!(eps > 0.0)) throw DomainError("tilted_pmf: temperature must be positive");
    const double m = r.maxCoeff();
    q = ((r.array() - m) / eps).exp().matrix();
  } else {
    q = r;
  }
  const double s = q.sum();
  if (!(s > 0.0)) throw DegenerateResiduals("all residuals are zero; tilted p.m.f. undefined");
  return q / s;
}

/// Same as tilted_pmf but falls back to the uniform p.m.f. on degenerate residuals.
inline Eigen::VectorXd tilted_pmf_or_uniform(const Eigen::Ref<const Eigen::VectorXd>& r, const Potential& pot,
                                             double eps) {
  try {
    return tilted_pmf(r, pot, eps);
  } catch (const DegenerateResiduals&) {
    return Eigen::VectorXd::Constant(r.size(), 1.0 / static_cast<double>(r.size()));
  }
}

/// Self-normalized estimate sum_i q_i v_i with q the tilted p.m.f. of the residuals.
inline double self_normalized_estimate(const Eigen::Ref<const Eigen::VectorXd>& values,
                                       const Eigen::Ref<const Eigen::VectorXd>& residuals, const Potential& pot,
                                       double eps) {
  if (values.size() != residuals.size()) throw ShapeError("self_normalized_estimate: length mismatch");
  return tilted_pmf(residuals, pot, eps).dot(values);
}

}  // namespace vrba::adapt
