#pragma once

#include <algorithm>

#include <Eigen/Dense>

#include "vrba/errors.hpp"

namespace vrba::adapt {

/// EMA importance weights lambda with the self-scaling memory schedule.
///
/// With `staged` set, the memory at update k is gamma_k = 1 - eta / lambda_max(k) where
/// lambda_max(k) = min(lambda_max0 + k / n_stage, lambda_cap); otherwise gamma is fixed.
struct MultiplierState {
  Eigen::VectorXd lambdas;
  double gamma = 0.999;
  double eta = 0.01;
  double phi = 1.0;
  double lambda_max0 = 10.0;
  double lambda_cap = 20.0;
  double n_stage = 50000.0;
  bool staged = false;
  bool normalize_rate = true;

  double lambda_max(long k) const {
    return std::min(lambda_max0 + static_cast<double>(k) / n_stage, lambda_cap);
  }

  double gamma_at(long k) const { return staged ? 1.0 - eta / lambda_max(k) : gamma; }

  /// eta* = eta / max q when rate normalization is on.
  double eta_star(const Eigen::Ref<const Eigen::VectorXd>& q) const {
    return normalize_rate ? eta / q.maxCoeff() : eta;
  }

  void validate() const {
    if (!(gamma >= 0.0 && gamma < 1.0)) throw RangeError("gamma must lie in [0, 1)");
    if (!(eta > 0.0)) throw RangeError("eta must be positive");
    if (!(phi >= 0.0 && phi <= 1.0)) throw RangeError("phi must lie in [0, 1]");
  }
};

/// lambda <- gamma_k lambda + eta* (phi q + (1 - phi) / N).
inline void update_multipliers(MultiplierState& s, const Eigen::Ref<const Eigen::VectorXd>& q, long k) {
  if (q.size() != s.lambdas.size()) throw ShapeError("update_multipliers: p.m.f. length differs from lambda");
  const double g = s.gamma_at(k);
  const double es = s.eta_star(q);
  const double u = 1.0 / static_cast<double>(q.size());
  s.lambdas = g * s.lambdas + es * (s.phi * q.array() + (1.0 - s.phi) * u).matrix();
}

inline MultiplierState updated(MultiplierState s, const Eigen::Ref<const Eigen::VectorXd>& q, long k) {
  update_multipliers(s, q, k);
  return s;
}

}  // namespace vrba::adapt
