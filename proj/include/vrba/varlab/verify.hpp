#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include <boost/math/tools/minima.hpp>

#include "vrba/varlab/functionals.hpp"

namespace vrba::varlab {

struct CheckRow {
  std::string name;
  double measured = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

inline CheckRow check_le(std::string name, double measured, double tolerance) {
  return {std::move(name), measured, tolerance, measured <= tolerance};
}

/// eps log( eps (e^{1/eps} - 1) ) for r(x) = x under the uniform law on [0, 1].
inline double laplace_linear_closed_form(double eps) {
  return 1.0 + eps * std::log(eps * (-std::expm1(-1.0 / eps)));
}

inline Eigen::VectorXd uniform_pmf(Eigen::Index n) { return Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n)); }

inline Eigen::VectorXd random_pmf(Eigen::Index n, Rng& rng) {
  Eigen::VectorXd p(n);
  for (Eigen::Index i = 0; i < n; ++i) p(i) = rng.uniform(0.05, 1.0);
  return p / p.sum();
}

/// Full appendix check suite; deterministic for a given seed.
inline std::vector<CheckRow> run_verification(std::uint64_t seed = 2024) {
  std::vector<CheckRow> rows;
  Rng root(seed);

  // Laplace principle on r(x) = x, x ~ U[0, 1].
  {
    const QuadratureRule rule = composite_gauss_legendre(0.0, 1.0, 512);
    const Eigen::VectorXd r = rule.nodes;
    const Eigen::VectorXd p = rule.probabilities();
    double worst = 0.0, prev = -1e300;
    bool increasing = true, bounded = true;
    for (double eps : {0.2, 0.1, 0.05, 0.01}) {
      const double v = laplace_functional(r, p, eps);
      worst = std::max(worst, std::fabs(v - laplace_linear_closed_form(eps)));
      increasing = increasing && v > prev;
      bounded = bounded && v <= 1.0;
      prev = v;
    }
    rows.push_back(check_le("laplace_quadrature_vs_closed_form", worst, 1e-9));
    rows.push_back(check_le("laplace_gap_to_esssup_eps_0.01", 1.0 - prev, 0.05));
    rows.push_back({"laplace_increasing_in_1/eps", increasing ? 0.0 : 1.0, 0.0, increasing});
    rows.push_back({"laplace_below_esssup", bounded ? 0.0 : 1.0, 0.0, bounded});
    const Eigen::VectorXd c = Eigen::VectorXd::Constant(r.size(), 0.7);
    rows.push_back(check_le("laplace_constant_exact", std::fabs(laplace_functional(c, p, 0.01) - 0.7), 1e-12));
  }

  // Gibbs variational formula on random discrete measures.
  {
    Rng rng = root.split("gibbs");
    double eq_gap = 0.0, dominance = -1e300;
    for (int inst = 0; inst < 200; ++inst) {
      const Eigen::Index n = 2 + static_cast<Eigen::Index>(inst % 49);
      const Eigen::VectorXd p = random_pmf(n, rng);
      Eigen::VectorXd r(n);
      for (Eigen::Index i = 0; i < n; ++i) r(i) = rng.uniform(-3.0, 3.0);
      const GibbsResult g = gibbs_check(r, p, rng, 1000);
      eq_gap = std::max(eq_gap, std::fabs(g.lhs - g.at_optimum));
      dominance = std::max(dominance, g.max_perturbed - g.lhs);
    }
    rows.push_back(check_le("gibbs_equality_at_q_star", eq_gap, 1e-12));
    rows.push_back(check_le("gibbs_perturbations_below_lhs", dominance, 1e-12));
    Eigen::VectorXd r2(2);
    r2 << 0.0, std::log(2.0);
    const GibbsResult h = gibbs_check(r2, uniform_pmf(2), rng, 10);
    rows.push_back(check_le("gibbs_two_point_ln_1.5", std::fabs(h.at_optimum - std::log(1.5)), 1e-12));
  }

  // Generalized Gibbs under the normalization E_p Phi'(r) = 1.
  {
    Rng rng = root.split("generalized");
    double nu_q = 0.0, eq_q = 0.0, nu_e = 0.0, eq_e = 0.0, mass_e = 0.0;
    for (int inst = 0; inst < 50; ++inst) {
      const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng.uniform(0.0, 49.0));
      const Eigen::VectorXd p = random_pmf(n, rng);
      Eigen::VectorXd r(n);
      for (Eigen::Index i = 0; i < n; ++i) r(i) = rng.uniform(0.0, 2.0);
      const auto gq = generalized_gibbs_check(normalize_for_potential(r, p, Potential::quadratic()), p,
                                              Potential::quadratic());
      nu_q = std::max(nu_q, std::fabs(gq.nu_star));
      eq_q = std::max(eq_q, std::fabs(gq.lhs - gq.rhs));
      const auto ge = generalized_gibbs_check(normalize_for_potential(r, p, Potential::exponential()), p,
                                              Potential::exponential());
      nu_e = std::max(nu_e, std::fabs(ge.nu_star));
      eq_e = std::max(eq_e, std::fabs(ge.lhs - ge.rhs));
      mass_e = std::max(mass_e, std::fabs(ge.q_mass - 1.0));
    }
    rows.push_back(check_le("generalized_gibbs_quadratic_nu_star", nu_q, 1e-6));
    rows.push_back(check_le("generalized_gibbs_quadratic_duality", eq_q, 1e-8));
    rows.push_back(check_le("generalized_gibbs_exponential_nu_star", nu_e, 1e-6));
    rows.push_back(check_le("generalized_gibbs_exponential_duality", eq_e, 1e-8));
    rows.push_back(check_le("generalized_gibbs_exponential_q_mass", mass_e, 1e-12));

    // Point mass: inf_nu {nu + Phi(r - nu)} = r - Phi*(1), against Brent's method.
    double point_gap = 0.0;
    for (const Potential pot : {Potential::exponential(), Potential::quadratic()}) {
      for (double rx : {-1.3, 0.0, 0.4, 2.5}) {
        auto f = [&](double nu) { return nu + pot.phi(rx - nu); };
        const auto [x, fx] = boost::math::tools::brent_find_minima(f, rx - 5.0, rx + 5.0, 52);
        (void)x;
        point_gap = std::max(point_gap, std::fabs(fx - (rx - pot.conjugate(1.0))));
      }
    }
    rows.push_back(check_le("generalized_gibbs_point_mass_conjugate", point_gap, 1e-10));
  }

  // Quadratic Lambda_eps: closed form and the eps -> 0 limit.
  {
    Rng rng = root.split("lambda");
    double closed_gap = 0.0;
    for (int inst = 0; inst < 50; ++inst) {
      const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng.uniform(0.0, 49.0));
      const Eigen::VectorXd p = random_pmf(n, rng);
      Eigen::VectorXd r(n);
      for (Eigen::Index i = 0; i < n; ++i) r(i) = rng.uniform(0.0, 2.0);
      for (double eps : {0.5, 0.1, 0.01, 0.001}) {
        closed_gap = std::max(closed_gap, std::fabs(lambda_eps(r, p, Potential::quadratic(), eps) -
                                                    lambda_eps_quadratic_closed_form(r, p, eps)));
      }
    }
    rows.push_back(check_le("lambda_eps_quadratic_closed_form", closed_gap, 1e-9));

    Eigen::VectorXd r2(2);
    r2 << 0.0, 2.0;
    rows.push_back(check_le("lambda_eps_two_point_sqrt_1.19",
                            std::fabs(lambda_eps(r2, uniform_pmf(2), Potential::quadratic(), 0.2) - std::sqrt(1.19)),
                            1e-9));

    const QuadratureRule rule = composite_gauss_legendre(0.0, 1.0, 512);
    const Eigen::VectorXd pg = rule.probabilities();
    double std_gap = 0.0;
    std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>> cases = {
        {r2, uniform_pmf(2)},
        {rule.nodes, pg},
        {rule.apply([](double x) { return std::pow(std::sin(std::numbers::pi * x), 2); }), pg}};
    for (const auto& [r, p] : cases) {
      const double mean = p.dot(r);
      const double sd = std::sqrt(p.dot(((r.array() - mean).square()).matrix()));
      std_gap = std::max(std_gap, std::fabs(lambda_eps(r, p, Potential::quadratic(), 1e-3) - sd));
    }
    rows.push_back(check_le("lambda_eps_quadratic_std_limit_eps_1e-3", std_gap, 1e-3));
  }
  return rows;
}

inline bool all_pass(const std::vector<CheckRow>& rows) {
  for (const auto& r : rows)
    if (!r.pass) return false;
  return true;
}

}  // namespace vrba::varlab
