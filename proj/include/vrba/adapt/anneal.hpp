#pragma once

#include <cmath>

#include <Eigen/Dense>

#include "vrba/errors.hpp"

namespace vrba::adapt {

/// Temperature schedule for the tilted p.m.f.
///
/// LogDecay: eps_k = c * max r / ln(2 + k). QuadraticNormalizer: eps = 2 mean(r), the value
/// making mean Phi'(r / eps) = 1 for Phi(r) = r^2 + 1. A zero residual maximum keeps the
/// previous value.
struct AnnealSchedule {
  enum class Kind { LogDecay, QuadraticNormalizer };
  Kind kind = Kind::LogDecay;
  double c = 1.0;
  double epsilon = 1.0;

  double next(long k, const Eigen::Ref<const Eigen::VectorXd>& r) {
    if (r.size() == 0) throw ShapeError("anneal_epsilon on empty residuals");
    const double m = r.maxCoeff();
    if (!(m > 0.0)) return epsilon;
    if (kind == Kind::LogDecay) {
      epsilon = c * m / std::log(2.0 + static_cast<double>(k));
    } else {
      epsilon = 2.0 * r.mean();
    }
    return epsilon;
  }
};

inline double anneal_epsilon(AnnealSchedule& s, long k, const Eigen::Ref<const Eigen::VectorXd>& r) {
  return s.next(k, r);
}

}  // namespace vrba::adapt
