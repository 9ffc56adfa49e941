#pragma once

#include <functional>
#include <span>
#include <vector>

#include "vrba/ad/jet.hpp"

namespace vrba::ad {

using LossFn = std::function<Tensor(Tape&, const Tensor& params)>;

struct ValueAndGradient {
  double value = 0.0;
  Eigen::VectorXd gradient;
};

/// Records `loss_fn` on a fresh tape and returns the loss with its reverse-mode gradient.
inline ValueAndGradient value_and_gradient(const LossFn& loss_fn, const Eigen::VectorXd& params) {
  Tape tape;
  Tensor p = tape.variable(params);
  Tensor loss = loss_fn(tape, p);
  ValueAndGradient out;
  out.value = loss.item();
  out.gradient = tape.gradient(loss, p).col(0);
  return out;
}

inline Eigen::VectorXd param_gradient(const LossFn& loss_fn, const Eigen::VectorXd& params) {
  return value_and_gradient(loss_fn, params).gradient;
}

/// Output value and input derivatives of a scalar field at one point.
struct InputDerivatives {
  double u = 0.0;
  Eigen::VectorXd grad;
  Eigen::MatrixXd hessian;  // empty for order 1
};

/// Network factory: given a tape, build the field (parameters are captured by the factory).
using FieldBuilder = std::function<Field(Tape&)>;

inline InputDerivatives input_derivatives(const FieldBuilder& build, std::span<const double> x, int order) {
  if (order < 1 || order > 2) throw UnsupportedOrderError("input_derivatives supports order 1 or 2, got " +
                                                         std::to_string(order));
  const int d = static_cast<int>(x.size());
  Tape tape;
  Field f = build(tape);
  auto pattern = JetPattern::full(d, order);
  Matrix pt(d, 1);
  for (int i = 0; i < d; ++i) pt(i, 0) = x[static_cast<std::size_t>(i)];
  std::vector<Jet> in = seed_inputs(tape, pt, pattern);
  Jet u = f(in);
  InputDerivatives out;
  out.u = u.v.item();
  out.grad.resize(d);
  for (int i = 0; i < d; ++i) out.grad(i) = u.dx(i).item();
  if (order == 2) {
    out.hessian.resize(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = i; j < d; ++j) out.hessian(i, j) = out.hessian(j, i) = u.dxx(i, j).item();
  }
  return out;
}

}  // namespace vrba::ad
