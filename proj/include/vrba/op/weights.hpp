#pragma once

#include <algorithm>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "vrba/adapt/pmf.hpp"
#include "vrba/op/deeponet.hpp"

namespace vrba::op {

/// R_ij = |G(v_j)(x_i) - G[v_j](x_i)| for a batch of function indices.
inline Eigen::MatrixXd operator_residual_matrix(const DeepONet& model, const Eigen::VectorXd& params,
                                                const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& outputs,
                                                const Eigen::RowVectorXd& coords, std::span<const Eigen::Index> batch) {
  Eigen::MatrixXd v(inputs.rows(), static_cast<Eigen::Index>(batch.size()));
  Eigen::MatrixXd u(outputs.rows(), static_cast<Eigen::Index>(batch.size()));
  for (std::size_t j = 0; j < batch.size(); ++j) {
    v.col(static_cast<Eigen::Index>(j)) = inputs.col(batch[j]);
    u.col(static_cast<Eigen::Index>(j)) = outputs.col(batch[j]);
  }
  return (model.predict(params, v, coords) - u).cwiseAbs();
}

/// Column-wise tilted p.m.f.s: softmax of R / eps (exponential) or R / sum R (quadratic);
/// a zero column becomes uniform.
inline Eigen::MatrixXd q_matrix_update(const Eigen::MatrixXd& r, const adapt::Potential& pot, double eps) {
  if (!r.allFinite()) throw NonFiniteError("q_matrix_update: non-finite residual matrix");
  Eigen::MatrixXd q(r.rows(), r.cols());
  for (Eigen::Index j = 0; j < r.cols(); ++j) q.col(j) = adapt::tilted_pmf_or_uniform(r.col(j), pot, eps);
  return q;
}

/// Lambda(:, j) <- gamma Lambda(:, j) + eta*_j (phi Q(:, c) + (1 - phi) / N) for the batch
/// column c holding function j, with eta*_j = eta / max_i Q(i, c). Columns outside the batch
/// are left unchanged; a function drawn several times is updated once.
inline void lambda_matrix_update(Eigen::MatrixXd& lambdas, const Eigen::MatrixXd& q, std::span<const Eigen::Index> batch,
                                 double gamma, double eta, double phi = 1.0) {
  if (q.rows() != lambdas.rows() || q.cols() != static_cast<Eigen::Index>(batch.size())) {
    throw ShapeError("lambda_matrix_update: Q shape does not match batch");
  }
  const double u = 1.0 / static_cast<double>(q.rows());
  std::vector<char> done(static_cast<std::size_t>(lambdas.cols()), 0);
  for (std::size_t c = 0; c < batch.size(); ++c) {
    const Eigen::Index j = batch[c];
    if (j < 0 || j >= lambdas.cols()) throw ShapeError("lambda_matrix_update: function index out of range");
    if (done[static_cast<std::size_t>(j)]) continue;
    done[static_cast<std::size_t>(j)] = 1;
    const auto qc = q.col(static_cast<Eigen::Index>(c));
    const double es = eta / qc.maxCoeff();
    lambdas.col(j) = gamma * lambdas.col(j) + es * (phi * qc.array() + (1.0 - phi) * u).matrix();
  }
}

/// q_j = s_j / sum s with s_j the column sums of Lambda; uniform when Lambda is all zero.
inline Eigen::VectorXd function_pmf(const Eigen::MatrixXd& lambdas) {
  if ((lambdas.array() < 0.0).any()) throw DomainError("function_pmf: negative weights");
  Eigen::VectorXd s = lambdas.colwise().sum().transpose();
  const double total = s.sum();
  if (!(total > 0.0)) return Eigen::VectorXd::Constant(s.size(), 1.0 / static_cast<double>(s.size()));
  return s / total;
}

/// Largest deviation of any column of `q` from an exact p.m.f. (negative mass or sum != 1).
inline double pmf_deviation(const Eigen::MatrixXd& q) {
  double dev = 0.0;
  for (Eigen::Index j = 0; j < q.cols(); ++j) {
    dev = std::max(dev, std::abs(q.col(j).sum() - 1.0));
    dev = std::max(dev, -std::min(0.0, q.col(j).minCoeff()));
  }
  return dev;
}

}  // namespace vrba::op
