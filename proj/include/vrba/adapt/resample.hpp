#pragma once

#include <random>
#include <vector>

#include <Eigen/Dense>

#include "vrba/errors.hpp"
#include "vrba/rng.hpp"

namespace vrba::adapt {

/// Draws `batch` indices i.i.d. from q_i = lambda_i / sum lambda, with replacement.
inline std::vector<Eigen::Index> resample_points(const Eigen::Ref<const Eigen::VectorXd>& lambdas, std::size_t batch,
                                                 Rng& rng) {
  if (!(lambdas.sum() > 0.0)) throw DegenerateResiduals("resample_points: multipliers sum to zero");
  std::discrete_distribution<Eigen::Index> dist(lambdas.data(), lambdas.data() + lambdas.size());
  std::vector<Eigen::Index> out(batch);
  for (auto& i : out) i = dist(rng.engine());
  return out;
}

}  // namespace vrba::adapt
