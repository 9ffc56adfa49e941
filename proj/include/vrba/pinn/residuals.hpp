#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <span>

#include "vrba/ad/derivatives.hpp"
#include "vrba/pinn/burgers_reference.hpp"

namespace vrba::pinn {

inline constexpr double kAllenCahnK = 1e-4;

// Signed residuals on batched jets. Coordinates are (x) for Poisson and (t, x) otherwise.

/// u_xx + pi^2 sin(pi x)
inline ad::Tensor poisson_residual(std::span<const ad::Jet> x, const ad::Jet& u) {
  const double pi2 = std::numbers::pi * std::numbers::pi;
  return u.dxx(0, 0) + ad::affine(ad::sinpi(x[0].v), pi2);
}

/// u_t + u u_x - nu u_xx
inline ad::Tensor burgers_residual(std::span<const ad::Jet>, const ad::Jet& u, double nu = kBurgersNu) {
  return u.dx(0) + u.v * u.dx(1) - ad::affine(u.dxx(1, 1), nu);
}

/// u_t - k u_xx + 5 u (u^2 - 1)
inline ad::Tensor allen_cahn_residual(std::span<const ad::Jet>, const ad::Jet& u, double k = kAllenCahnK) {
  return u.dx(0) - ad::affine(u.dxx(1, 1), k) + ad::affine(u.v * ad::affine(ad::square(u.v), 1.0, -1.0), 5.0);
}

// Pointwise magnitudes for a field given by a builder (parameters captured inside).

inline double residual_fit(const ad::FieldBuilder& net, std::span<const double> x,
                           const std::function<double(std::span<const double>)>& target) {
  ad::Tape tape;
  ad::Field f = net(tape);
  ad::Matrix pt(static_cast<Eigen::Index>(x.size()), 1);
  for (std::size_t i = 0; i < x.size(); ++i) pt(static_cast<Eigen::Index>(i), 0) = x[i];
  auto in = ad::seed_inputs(tape, pt, ad::JetPattern::full(static_cast<int>(x.size()), 0));
  return std::fabs(target(x) - f(in).v.item());
}

namespace detail {

template <class R>
double point_residual(const ad::FieldBuilder& net, std::span<const double> x, R residual) {
  ad::Tape tape;
  ad::Field f = net(tape);
  const int d = static_cast<int>(x.size());
  ad::Matrix pt(d, 1);
  for (int i = 0; i < d; ++i) pt(i, 0) = x[static_cast<std::size_t>(i)];
  auto in = ad::seed_inputs(tape, pt, ad::JetPattern::full(d, 2));
  ad::Jet u = f(in);
  return std::fabs(residual(in, u).item());
}

}  // namespace detail

inline double residual_poisson(const ad::FieldBuilder& net, double x) {
  const double p[] = {x};
  return detail::point_residual(net, p, [](std::span<const ad::Jet> in, const ad::Jet& u) {
    return poisson_residual(in, u);
  });
}

inline double residual_burgers(const ad::FieldBuilder& net, double t, double x) {
  const double p[] = {t, x};
  return detail::point_residual(net, p, [](std::span<const ad::Jet> in, const ad::Jet& u) {
    return burgers_residual(in, u);
  });
}

inline double residual_allen_cahn(const ad::FieldBuilder& net, double t, double x) {
  const double p[] = {t, x};
  return detail::point_residual(net, p, [](std::span<const ad::Jet> in, const ad::Jet& u) {
    return allen_cahn_residual(in, u);
  });
}

}  // namespace vrba::pinn
