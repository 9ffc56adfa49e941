#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "vrba/errors.hpp"

namespace vrba::ad {

using Matrix = Eigen::MatrixXd;

class Tape;

/// Handle to a matrix-valued node recorded on a Tape.
///
/// Handles are cheap to copy; the tape owns the storage. A handle is only valid while the
/// tape that produced it is alive.
class Tensor {
 public:
  Tensor() = default;

  Tape& tape() const { return *tape_; }
  std::size_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

  const Matrix& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  bool requires_grad() const;

  /// Scalar value of a 1x1 node.
  double item() const;

 private:
  friend class Tape;
  Tensor(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Append-only record of primitive operations; nodes are stored in topological order
/// because a node can only be created after its parents exist.
class Tape {
 public:
  /// Propagates the adjoint of node `self` into its parents.
  using Backward = std::function<void(Tape&, std::size_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  Tape(Tape&&) = default;
  Tape& operator=(Tape&&) = default;

  Tensor variable(Matrix value) { return push(std::move(value), "variable", true, nullptr); }
  Tensor constant(Matrix value) { return push(std::move(value), "constant", false, nullptr); }
  Tensor scalar(double v) { return constant(Matrix::Constant(1, 1, v)); }

  /// Records the result of a primitive. The value is checked for finiteness here so every
  /// primitive reports its own name when it produces inf/nan.
  Tensor record(Matrix value, const char* op, bool requires_grad, Backward backward) {
    // a finite sum implies finite entries; only an overflowing sum needs the exact scan
    if (!std::isfinite(value.sum()) && !value.allFinite()) {
      throw NonFiniteError(std::string("non-finite value produced by primitive '") + op + "'");
    }
    return push(std::move(value), op, requires_grad, requires_grad ? std::move(backward) : nullptr);
  }

  std::size_t size() const { return nodes_.size(); }
  const Matrix& value(std::size_t id) const { return nodes_[id].value; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  const char* op(std::size_t id) const { return nodes_[id].op; }

  /// Reverse sweep from a scalar node; returns d(loss)/d(wrt) for every requested node.
  /// Nodes are visited once each, from `loss` down to the first node.
  std::vector<Matrix> gradients(const Tensor& loss, std::span<const Tensor> wrt) {
    if (loss.tape_ != this) throw ShapeError("gradient requested for a node of another tape");
    if (loss.rows() != 1 || loss.cols() != 1) throw ShapeError("gradient requires a 1x1 loss node");
    adjoints_.assign(loss.id_ + 1, Matrix());
    touched_.assign(loss.id_ + 1, 0);
    adjoints_[loss.id_] = Matrix::Ones(1, 1);
    touched_[loss.id_] = 1;
    for (std::size_t i = loss.id_ + 1; i-- > 0;) {
      if (!touched_[i]) continue;
      const Node& node = nodes_[i];
      if (node.backward) node.backward(*this, i);
    }
    std::vector<Matrix> out;
    out.reserve(wrt.size());
    for (const Tensor& w : wrt) {
      if (w.id_ <= loss.id_ && touched_[w.id_]) {
        out.push_back(adjoints_[w.id_]);
      } else {
        out.push_back(Matrix::Zero(w.rows(), w.cols()));
      }
    }
    return out;
  }

  Matrix gradient(const Tensor& loss, const Tensor& wrt) {
    const Tensor w[1] = {wrt};
    return std::move(gradients(loss, w).front());
  }

  // -- used by backward closures --------------------------------------------------------

  const Matrix& adjoint(std::size_t id) const { return adjoints_[id]; }

  template <class Derived>
  void accumulate(std::size_t id, const Eigen::MatrixBase<Derived>& g) {
    if (!nodes_[id].requires_grad) return;
    if (touched_[id]) {
      adjoints_[id] += g;
    } else {
      adjoints_[id] = g;
      touched_[id] = 1;
    }
  }

  /// Adds `g` into rows [offset, offset + g.size()) of a column-vector node's adjoint.
  template <class Derived>
  void accumulate_segment(std::size_t id, Eigen::Index offset, const Eigen::MatrixBase<Derived>& g) {
    if (!nodes_[id].requires_grad) return;
    if (!touched_[id]) {
      adjoints_[id] = Matrix::Zero(nodes_[id].value.rows(), nodes_[id].value.cols());
      touched_[id] = 1;
    }
    adjoints_[id].col(0).segment(offset, g.size()) +=
        Eigen::Map<const Eigen::VectorXd>(g.derived().eval().data(), g.size());
  }

  Tensor handle(std::size_t id) { return Tensor(this, id); }

 private:
  struct Node {
    Matrix value;
    const char* op;
    bool requires_grad;
    Backward backward;
  };

  Tensor push(Matrix value, const char* op, bool requires_grad, Backward backward) {
    nodes_.push_back(Node{std::move(value), op, requires_grad, std::move(backward)});
    return Tensor(this, nodes_.size() - 1);
  }

  std::vector<Node> nodes_;
  std::vector<Matrix> adjoints_;
  std::vector<char> touched_;
};

inline const Matrix& Tensor::value() const { return tape_->value(id_); }
inline bool Tensor::requires_grad() const { return tape_->requires_grad(id_); }
inline double Tensor::item() const {
  if (rows() != 1 || cols() != 1) throw ShapeError("item() on a non-scalar node");
  return value()(0, 0);
}

}  // namespace vrba::ad
