#pragma once

#include <cmath>

#include <Eigen/Dense>

#include "vrba/errors.hpp"

namespace vrba::optim {

/// Bias-corrected Adam with step decay lr_k = lr * decay_rate^floor(k / decay_step).
struct Adam {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double decay_rate = 1.0;
  long decay_step = 1;

  Eigen::VectorXd m;
  Eigen::VectorXd v;
  long steps = 0;

  double rate(long k) const {
    return lr * std::pow(decay_rate, static_cast<double>(k / std::max(decay_step, 1L)));
  }

  void step(Eigen::VectorXd& params, const Eigen::Ref<const Eigen::VectorXd>& grad) {
    if (grad.size() != params.size()) throw ShapeError("adam: gradient length differs from parameters");
    if (!grad.allFinite()) throw NonFiniteError("adam: non-finite gradient");
    if (m.size() != params.size()) {
      m = Eigen::VectorXd::Zero(params.size());
      v = Eigen::VectorXd::Zero(params.size());
    }
    const double a = rate(steps);
    ++steps;
    m = beta1 * m + (1.0 - beta1) * grad;
    v = beta2 * v + (1.0 - beta2) * grad.cwiseAbs2();
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(steps));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(steps));
    params.array() -= a * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
  }
};

}  // namespace vrba::optim
