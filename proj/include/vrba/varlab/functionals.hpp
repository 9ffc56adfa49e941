#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "vrba/adapt/potential.hpp"
#include "vrba/rng.hpp"
#include "vrba/varlab/quadrature.hpp"

namespace vrba::varlab {

using adapt::Potential;

/// eps log sum_i p_i exp(r_i / eps), evaluated with max subtraction.
inline double laplace_functional(const Eigen::Ref<const Eigen::VectorXd>& r, const Eigen::Ref<const Eigen::VectorXd>& p,
                                 double eps) {
  if (!(eps > 0.0)) throw DomainError("laplace_functional needs eps > 0");
  if (r.size() != p.size()) throw ShapeError("laplace_functional: length mismatch");
  const double m = r.maxCoeff();
  return m + eps * std::log((p.array() * ((r.array() - m) / eps).exp()).sum());
}

/// log E_p[e^r].
inline double log_mean_exp(const Eigen::Ref<const Eigen::VectorXd>& r, const Eigen::Ref<const Eigen::VectorXd>& p) {
  return laplace_functional(r, p, 1.0);
}

/// Relative entropy H(q|p) = sum q log(q/p) with 0 log 0 = 0.
inline double relative_entropy(const Eigen::Ref<const Eigen::VectorXd>& q, const Eigen::Ref<const Eigen::VectorXd>& p) {
  double h = 0.0;
  for (Eigen::Index i = 0; i < q.size(); ++i) {
    if (q(i) > 0.0) h += q(i) * std::log(q(i) / p(i));
  }
  return h;
}

inline double gibbs_objective(const Eigen::Ref<const Eigen::VectorXd>& r, const Eigen::Ref<const Eigen::VectorXd>& p,
                              const Eigen::Ref<const Eigen::VectorXd>& q) {
  return q.dot(r) - relative_entropy(q, p);
}

struct GibbsResult {
  double lhs = 0.0;            // log E_p e^r
  double at_optimum = 0.0;     // E_q* r - H(q*|p)
  double max_perturbed = 0.0;  // largest objective over random p.m.f.s
  Eigen::VectorXd q_star;
};

/// Evaluates both sides of the Gibbs variational formula on a discrete measure.
inline GibbsResult gibbs_check(const Eigen::Ref<const Eigen::VectorXd>& r, const Eigen::Ref<const Eigen::VectorXd>& p,
                               Rng& rng, int perturbations = 1000) {
  GibbsResult g;
  g.lhs = log_mean_exp(r, p);
  const double m = r.maxCoeff();
  g.q_star = (p.array() * (r.array() - m).exp()).matrix();
  g.q_star /= g.q_star.sum();
  g.at_optimum = gibbs_objective(r, p, g.q_star);
  g.max_perturbed = -std::numeric_limits<double>::infinity();
  const Eigen::Index n = r.size();
  for (int k = 0; k < perturbations; ++k) {
    Eigen::VectorXd q(n);
    // alternate between multiplicative jitter of q* and fresh random p.m.f.s
    const double scale = (k % 2 == 0) ? std::pow(10.0, rng.uniform(-6.0, 0.0)) : 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      q(i) = scale > 0.0 ? g.q_star(i) * std::exp(scale * rng.normal()) : -std::log(rng.uniform(1e-300, 1.0));
    }
    q /= q.sum();
    g.max_perturbed = std::max(g.max_perturbed, gibbs_objective(r, p, q));
  }
  return g;
}

/// nu + E_p[Phi(r - nu)].
inline double phi_dual_objective(const Eigen::Ref<const Eigen::VectorXd>& r, const Eigen::Ref<const Eigen::VectorXd>& p,
                                 const Potential& pot, double nu) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < r.size(); ++i) s += p(i) * pot.phi(r(i) - nu);
  return nu + s;
}

/// Golden-section minimizer of `f` over the bracket; throws when the minimum sits on an end.
inline Minimum bracketed_minimum(const std::function<double(double)>& f, double lo, double hi, double tol) {
  const Minimum m = golden_section(f, lo, hi, tol);
  const double edge = 1e3 * tol + 1e-12 * (std::fabs(lo) + std::fabs(hi));
  if (m.x - lo < edge || hi - m.x < edge) {
    throw NuSearchError("nu search hit the bracket end [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }
  return m;
}

struct GeneralizedGibbsResult {
  double nu_star = 0.0;
  double lhs = 0.0;  // inf_nu { nu + E_p Phi(r - nu) }
  double rhs = 0.0;  // E_q r - E_p Phi*(dq/dp) with q = Phi'(r) p
  double q_mass = 0.0;
};

/// Generalized Gibbs check under the normalization E_p Phi'(r) = 1 (caller pre-scales r).
inline GeneralizedGibbsResult generalized_gibbs_check(const Eigen::Ref<const Eigen::VectorXd>& r,
                                                      const Eigen::Ref<const Eigen::VectorXd>& p, const Potential& pot,
                                                      double tol = 1e-10) {
  GeneralizedGibbsResult g;
  const Minimum m = bracketed_minimum([&](double nu) { return phi_dual_objective(r, p, pot, nu); },
                                      r.minCoeff() - 1.0, r.maxCoeff() + 1.0, tol);
  g.nu_star = m.x;
  g.lhs = m.f;
  double eq_r = 0.0, div = 0.0, mass = 0.0;
  for (Eigen::Index i = 0; i < r.size(); ++i) {
    const double dens = pot.dphi(r(i));
    eq_r += p(i) * dens * r(i);
    div += p(i) * pot.conjugate(dens);
    mass += p(i) * dens;
  }
  g.rhs = eq_r - div;
  g.q_mass = mass;
  return g;
}

/// Rescales or shifts r so that E_p Phi'(r) = 1.
inline Eigen::VectorXd normalize_for_potential(const Eigen::Ref<const Eigen::VectorXd>& r,
                                               const Eigen::Ref<const Eigen::VectorXd>& p, const Potential& pot) {
  if (pot.kind() == Potential::Kind::Quadratic) return r / (2.0 * p.dot(r));
  return (r.array() - log_mean_exp(r, p)).matrix();
}

/// inf_nu eps Phi^{-1}( nu/eps + E_p Phi((r - nu)/eps) ), minimizing the monotone inner part.
inline double lambda_eps(const Eigen::Ref<const Eigen::VectorXd>& r, const Eigen::Ref<const Eigen::VectorXd>& p,
                         const Potential& pot, double eps, double tol = 1e-10) {
  if (!(eps > 0.0)) throw DomainError("lambda_eps needs eps > 0");
  auto inner = [&](double nu) {
    double s = nu / eps;
    for (Eigen::Index i = 0; i < r.size(); ++i) s += p(i) * pot.phi((r(i) - nu) / eps);
    return s;
  };
  const Minimum m = bracketed_minimum(inner, r.minCoeff() - 1.0, r.maxCoeff() + 1.0, tol);
  return eps * pot.phi_inv(m.f);
}

/// Quadratic potential closed form sqrt(Var_p r + eps E_p r - eps^2 / 4).
inline double lambda_eps_quadratic_closed_form(const Eigen::Ref<const Eigen::VectorXd>& r,
                                               const Eigen::Ref<const Eigen::VectorXd>& p, double eps) {
  const double mean = p.dot(r);
  const double var = p.dot(((r.array() - mean).square()).matrix());
  return std::sqrt(var + eps * mean - eps * eps / 4.0);
}

}  // namespace vrba::varlab
