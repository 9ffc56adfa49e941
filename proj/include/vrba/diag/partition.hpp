#pragma once

#include <algorithm>
#include <functional>
#include <numeric>
#include <span>
#include <vector>

#include "vrba/ad/tape.hpp"
#include "vrba/errors.hpp"
#include "vrba/rng.hpp"

namespace vrba::diag {

/// Equal-size disjoint blocks covering 0..N-1.
struct PartitionScheme {
  std::vector<std::vector<Eigen::Index>> blocks;

  std::size_t b() const { return blocks.size(); }
  std::size_t block_size() const { return blocks.empty() ? 0 : blocks.front().size(); }

  /// Contiguous blocks of the identity assignment.
  static PartitionScheme contiguous(Eigen::Index n, std::size_t b) {
    std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), Eigen::Index{0});
    return from_permutation(perm, b);
  }

  /// Blocks of a random permutation; a new scheme per call.
  static PartitionScheme shuffled(Eigen::Index n, std::size_t b, Rng& rng) {
    std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), Eigen::Index{0});
    std::shuffle(perm.begin(), perm.end(), rng.engine());
    return from_permutation(perm, b);
  }

  static PartitionScheme from_permutation(const std::vector<Eigen::Index>& perm, std::size_t b) {
    if (b < 1) throw PartitionError("partition needs at least one block");
    if (perm.size() % b != 0) {
      throw PartitionError("partition count " + std::to_string(b) + " does not divide " + std::to_string(perm.size()));
    }
    const std::size_t m = perm.size() / b;
    PartitionScheme s;
    for (std::size_t j = 0; j < b; ++j) s.blocks.emplace_back(perm.begin() + j * m, perm.begin() + (j + 1) * m);
    return s;
  }
};

/// Builds the mean loss over the given point indices on a tape.
using SubsetLoss = std::function<ad::Tensor(ad::Tape&, const ad::Tensor& params, std::span<const Eigen::Index> idx)>;

inline std::vector<Eigen::VectorXd> partition_gradients(const SubsetLoss& loss, const Eigen::VectorXd& params,
                                                        const PartitionScheme& scheme) {
  std::vector<Eigen::VectorXd> out;
  out.reserve(scheme.b());
  for (const auto& block : scheme.blocks) {
    ad::Tape tape;
    ad::Tensor p = tape.variable(params);
    ad::Tensor l = loss(tape, p, block);
    out.push_back(tape.gradient(l, p).col(0));
  }
  return out;
}

}  // namespace vrba::diag
