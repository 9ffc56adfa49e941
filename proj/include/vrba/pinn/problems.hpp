#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "vrba/nn/ansatz.hpp"
#include "vrba/nn/mlp.hpp"
#include "vrba/pinn/residuals.hpp"
#include "vrba/rng.hpp"

namespace vrba::pinn {

/// Points with target values for a boundary/initial (B) or data (D) term.
struct TermData {
  ad::Matrix points;  // dim x n
  Eigen::VectorXd targets;
};

struct PinnProblem {
  std::string name;
  int dim = 1;
  Eigen::VectorXd lo, hi;
  std::shared_ptr<const ad::JetPattern> pattern;
  std::function<ad::Tensor(std::span<const ad::Jet>, const ad::Jet&)> residual;
  /// Turns a raw network into the trained field (identity or a hard-constraint wrapper).
  std::function<ad::Field(const nn::Mlp&, const ad::Tensor&)> model;
  std::optional<TermData> boundary;
  std::optional<TermData> data;
  /// Reference solution on columns of a point matrix; empty when none is available.
  std::function<Eigen::VectorXd(const ad::Matrix&)> reference;
  nn::MlpConfig net;
  ad::Matrix eval_points;
};

inline ad::Matrix uniform_points(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi, Eigen::Index n, Rng& rng) {
  ad::Matrix pts(lo.size(), n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index d = 0; d < lo.size(); ++d) pts(d, j) = rng.uniform(lo(d), hi(d));
  return pts;
}

inline Eigen::VectorXd linspace(double a, double b, Eigen::Index n) { return Eigen::VectorXd::LinSpaced(n, a, b); }

/// Tensor grid with t as the slow index.
inline ad::Matrix grid_2d(const Eigen::VectorXd& t, const Eigen::VectorXd& x) {
  ad::Matrix pts(2, t.size() * x.size());
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < t.size(); ++i)
    for (Eigen::Index j = 0; j < x.size(); ++j) {
      pts(0, k) = t(i);
      pts(1, k++) = x(j);
    }
  return pts;
}

inline auto plain_model() {
  return [](const nn::Mlp& net, const ad::Tensor& p) { return net.field(p); };
}

/// u'' + pi^2 sin(pi x) = 0 on [-1, 1], u(+-1) = 0; exact solution sin(pi x).
inline PinnProblem poisson_problem() {
  PinnProblem p;
  p.name = "poisson";
  p.dim = 1;
  p.lo = Eigen::VectorXd::Constant(1, -1.0);
  p.hi = Eigen::VectorXd::Constant(1, 1.0);
  p.pattern = ad::JetPattern::full(1, 2);
  p.residual = poisson_residual;
  p.model = plain_model();
  TermData d;
  d.points = ad::Matrix(1, 2);
  d.points << -1.0, 1.0;
  d.targets = Eigen::VectorXd::Zero(2);
  p.data = d;
  p.reference = [](const ad::Matrix& pts) {
    Eigen::VectorXd v(pts.cols());
    for (Eigen::Index i = 0; i < pts.cols(); ++i) v(i) = ad::sinpi(pts(0, i));
    return v;
  };
  p.net.input_dim = 1;
  p.net.hidden = {32, 32};
  p.eval_points = linspace(-1.0, 1.0, 1001).transpose();
  return p;
}

/// Viscous Burgers on [0, 1] x [-1, 1] with initial and boundary data built into the ansatz.
inline PinnProblem burgers_problem() {
  PinnProblem p;
  p.name = "burgers";
  p.dim = 2;
  p.lo = Eigen::Vector2d(0.0, -1.0);
  p.hi = Eigen::Vector2d(1.0, 1.0);
  p.pattern = ad::JetPattern::with_pairs(2, {{1, 1}});
  p.residual = [](std::span<const ad::Jet> x, const ad::Jet& u) { return burgers_residual(x, u); };
  p.model = [](const nn::Mlp& net, const ad::Tensor& params) {
    return nn::burgers_hard_constraint(net.field(params));
  };
  p.reference = [](const ad::Matrix& pts) { return BurgersReference().on_points(pts); };
  p.net.input_dim = 2;
  p.net.hidden = {20, 20, 20};
  p.net.embedding = nn::Embedding::Periodic;
  p.eval_points = grid_2d(linspace(0.0, 1.0, 26), linspace(-1.0, 1.0, 101));
  return p;
}

/// Allen-Cahn with periodic encoding in x and the initial condition as the B term.
inline PinnProblem allen_cahn_problem(Eigen::Index n_initial = 128) {
  PinnProblem p;
  p.name = "allen_cahn";
  p.dim = 2;
  p.lo = Eigen::Vector2d(0.0, -1.0);
  p.hi = Eigen::Vector2d(1.0, 1.0);
  p.pattern = ad::JetPattern::with_pairs(2, {{1, 1}});
  p.residual = [](std::span<const ad::Jet> x, const ad::Jet& u) { return allen_cahn_residual(x, u); };
  p.model = plain_model();
  TermData b;
  const Eigen::VectorXd xs = linspace(-1.0, 1.0, n_initial);
  b.points = ad::Matrix(2, n_initial);
  b.targets.resize(n_initial);
  for (Eigen::Index i = 0; i < n_initial; ++i) {
    b.points(0, i) = 0.0;
    b.points(1, i) = xs(i);
    b.targets(i) = xs(i) * xs(i) * ad::cospi(xs(i));
  }
  p.boundary = b;
  p.net.input_dim = 2;
  p.net.hidden = {32, 32, 32};
  p.net.embedding = nn::Embedding::Periodic;
  p.eval_points = grid_2d(linspace(0.0, 1.0, 26), linspace(-1.0, 1.0, 101));
  return p;
}

inline PinnProblem make_problem(const std::string& name) {
  if (name == "poisson") return poisson_problem();
  if (name == "burgers") return burgers_problem();
  if (name == "allen_cahn") return allen_cahn_problem();
  throw ConfigError("unknown problem '" + name + "'");
}

}  // namespace vrba::pinn
