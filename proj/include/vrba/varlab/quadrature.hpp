#pragma once

#include <cmath>
#include <functional>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss.hpp>

#include "vrba/errors.hpp"

namespace vrba::varlab {

/// Nodes and weights of a quadrature rule; weights sum to the interval length.
struct QuadratureRule {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;

  /// Weights rescaled to a probability measure (uniform p on the interval).
  Eigen::VectorXd probabilities() const { return weights / weights.sum(); }

  Eigen::VectorXd apply(const std::function<double(double)>& f) const {
    Eigen::VectorXd v(nodes.size());
    for (Eigen::Index i = 0; i < nodes.size(); ++i) v(i) = f(nodes(i));
    return v;
  }
};

/// Composite 16-point Gauss-Legendre on [a, b] with about `nodes_per_unit` nodes per unit length.
inline QuadratureRule composite_gauss_legendre(double a, double b, int nodes_per_unit = 512) {
  if (!(b > a)) throw DomainError("quadrature interval must have b > a");
  using Rule = boost::math::quadrature::gauss<double, 16>;
  const auto& x = Rule::abscissa();
  const auto& w = Rule::weights();
  const int panels = std::max(1, static_cast<int>(std::ceil((b - a) * nodes_per_unit / 16.0)));
  QuadratureRule q;
  q.nodes.resize(panels * 16);
  q.weights.resize(panels * 16);
  const double h = (b - a) / panels;
  Eigen::Index k = 0;
  for (int p = 0; p < panels; ++p) {
    const double c = a + (p + 0.5) * h;
    for (std::size_t i = 0; i < x.size(); ++i) {
      q.nodes(k) = c - 0.5 * h * x[i];
      q.weights(k++) = 0.5 * h * w[i];
      q.nodes(k) = c + 0.5 * h * x[i];
      q.weights(k++) = 0.5 * h * w[i];
    }
  }
  return q;
}

struct Minimum {
  double x = 0.0;
  double f = 0.0;
};

/// Golden-section search for the minimum of a unimodal function on [a, b].
inline Minimum golden_section(const std::function<double(double)>& f, double a, double b, double tol = 1e-10,
                              int max_iter = 500) {
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - invphi * (b - a);
  double d = a + invphi * (b - a);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < max_iter && (b - a) > tol; ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = f(d);
    }
  }
  const double x = 0.5 * (a + b);
  return {x, f(x)};
}

}  // namespace vrba::varlab
