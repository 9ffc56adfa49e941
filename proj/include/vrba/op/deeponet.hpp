#pragma once

#include <span>
#include <vector>

#include "vrba/nn/mlp.hpp"

namespace vrba::op {

struct DeepONetConfig {
  int n_sensor = 100;
  std::vector<int> branch_hidden = {64, 64};
  std::vector<int> trunk_hidden = {64, 64};
  int width = 32;  // shared feature dimension p
  nn::Activation activation = nn::Activation::Gelu;

  nn::MlpConfig branch() const {
    nn::MlpConfig c;
    c.input_dim = n_sensor;
    c.hidden = branch_hidden;
    c.output_dim = width;
    c.activation = activation;
    return c;
  }

  nn::MlpConfig trunk() const {
    nn::MlpConfig c;
    c.input_dim = 1;
    c.hidden = trunk_hidden;
    c.output_dim = width;
    c.activation = activation;
    return c;
  }
};

/// Branch net on the sensor values, trunk net on the output coordinate; the prediction is
/// the dot product of their width-p outputs. Parameters are one flat vector, branch first.
class DeepONet {
 public:
  explicit DeepONet(DeepONetConfig cfg) : cfg_(std::move(cfg)), branch_(cfg_.branch()), trunk_(cfg_.trunk()) {}

  const DeepONetConfig& config() const { return cfg_; }
  Eigen::Index num_params() const { return branch_.num_params() + trunk_.num_params(); }
  Eigen::Index trunk_offset() const { return branch_.num_params(); }
  const nn::Mlp& branch() const { return branch_; }
  const nn::Mlp& trunk() const { return trunk_; }

  Eigen::VectorXd init(std::uint64_t seed) const {
    Rng rng(seed);
    Eigen::VectorXd p(num_params());
    p << branch_.init(rng.split("branch").engine()()).values, trunk_.init(rng.split("trunk").engine()()).values;
    return p;
  }

  /// Predictions (n_points x n_functions) for sensor values (n_sensor x n_functions) and
  /// output coordinates (1 x n_points).
  ad::Tensor operator()(const ad::Tensor& params, const ad::Tensor& inputs, const ad::Tensor& coords) const {
    if (inputs.rows() != cfg_.n_sensor) throw ShapeError("DeepONet: input function has wrong sensor count");
    if (coords.rows() != 1) throw ShapeError("DeepONet: coordinates must be a row vector");
    if (params.rows() != num_params()) throw ShapeError("DeepONet: parameter vector length mismatch");
    ad::Tensor b = branch_.apply_features(params, inputs, 0);
    ad::Tensor t = trunk_.apply_features(params, coords, trunk_offset());
    return ad::matmul(ad::transpose(t), b);
  }

  Eigen::MatrixXd predict(const Eigen::VectorXd& params, const Eigen::MatrixXd& inputs,
                          const Eigen::RowVectorXd& coords) const {
    ad::Tape tape;
    return (*this)(tape.constant(params), tape.constant(inputs), tape.constant(coords)).value();
  }

 private:
  DeepONetConfig cfg_;
  nn::Mlp branch_;
  nn::Mlp trunk_;
};

/// Dot product of the branch features (from branch_params) and trunk features at y.
inline double deeponet_forward(const nn::Mlp& branch, const Eigen::VectorXd& branch_params, const nn::Mlp& trunk,
                               const Eigen::VectorXd& trunk_params, std::span<const double> input_values, double y) {
  if (branch.config().output_dim != trunk.config().output_dim) {
    throw ShapeError("branch and trunk feature widths differ");
  }
  if (static_cast<int>(input_values.size()) != branch.config().input_dim) {
    throw ShapeError("input function has wrong sensor count");
  }
  ad::Tape tape;
  Eigen::MatrixXd v(static_cast<Eigen::Index>(input_values.size()), 1);
  for (std::size_t i = 0; i < input_values.size(); ++i) v(static_cast<Eigen::Index>(i), 0) = input_values[i];
  ad::Tensor b = branch.apply_features(tape.constant(branch_params), tape.constant(v));
  ad::Tensor t = trunk.apply_features(tape.constant(trunk_params), tape.constant(Eigen::MatrixXd::Constant(1, 1, y)));
  return b.value().col(0).dot(t.value().col(0));
}

}  // namespace vrba::op
