#pragma once

#include <cmath>
#include <initializer_list>
#include <numbers>
#include <span>
#include <vector>

#include "vrba/ad/tape.hpp"

namespace vrba::ad {

namespace detail {

inline void same_tape(const Tensor& a, const Tensor& b) {
  if (&a.tape() != &b.tape()) throw ShapeError("operands live on different tapes");
}

inline bool is_scalar(const Matrix& m) { return m.rows() == 1 && m.cols() == 1; }

// Elementwise binary ops accept equal shapes or a 1x1 operand on either side.
inline void broadcast_shape(const Matrix& a, const Matrix& b, const char* op, Eigen::Index& r,
                            Eigen::Index& c) {
  if (a.rows() == b.rows() && a.cols() == b.cols()) {
    r = a.rows();
    c = a.cols();
  } else if (is_scalar(a)) {
    r = b.rows();
    c = b.cols();
  } else if (is_scalar(b)) {
    r = a.rows();
    c = a.cols();
  } else {
    throw ShapeError(std::string("shape mismatch in '") + op + "': " + std::to_string(a.rows()) + "x" +
                     std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                     std::to_string(b.cols()));
  }
}

// Applies an elementwise array functor to equal shapes or a 1x1 operand on either side.
template <class F>
Matrix zip(const Matrix& a, const Matrix& b, F f) {
  if (a.rows() == b.rows() && a.cols() == b.cols()) return f(a.array(), b.array()).matrix();
  if (is_scalar(a)) return f(Matrix::Constant(b.rows(), b.cols(), a(0, 0)).array(), b.array()).matrix();
  return f(a.array(), Matrix::Constant(a.rows(), a.cols(), b(0, 0)).array()).matrix();
}

// Sums a broadcast adjoint back down to the operand's shape.
template <class Derived>
void accumulate_reduced(Tape& tape, std::size_t id, const Eigen::MatrixBase<Derived>& g) {
  if (!tape.requires_grad(id)) return;
  const Matrix& v = tape.value(id);
  if (v.rows() == g.rows() && v.cols() == g.cols()) {
    tape.accumulate(id, g);
  } else {
    tape.accumulate(id, Matrix::Constant(1, 1, g.sum()));
  }
}

// Unary elementwise op given the value and derivative of f at the input.
template <class F, class DF>
Tensor unary(const Tensor& x, const char* op, F f, DF df) {
  Tape& tape = x.tape();
  const Matrix& xv = x.value();
  Matrix y = xv.unaryExpr(f);
  const std::size_t xi = x.id();
  return tape.record(std::move(y), op, x.requires_grad(), [xi, df](Tape& t, std::size_t self) {
    const Matrix& xv = t.value(xi);
    t.accumulate(xi, t.adjoint(self).cwiseProduct(xv.unaryExpr(df)));
  });
}

}  // namespace detail

inline Tensor add(const Tensor& a, const Tensor& b) {
  detail::same_tape(a, b);
  Eigen::Index r, c;
  detail::broadcast_shape(a.value(), b.value(), "add", r, c);
  Matrix v = detail::zip(a.value(), b.value(), [](const auto& x, const auto& y) { return x + y; });
  const std::size_t ai = a.id(), bi = b.id();
  return a.tape().record(std::move(v), "add", a.requires_grad() || b.requires_grad(),
                         [ai, bi](Tape& t, std::size_t self) {
                           detail::accumulate_reduced(t, ai, t.adjoint(self));
                           detail::accumulate_reduced(t, bi, t.adjoint(self));
                         });
}

inline Tensor sub(const Tensor& a, const Tensor& b) {
  detail::same_tape(a, b);
  Eigen::Index r, c;
  detail::broadcast_shape(a.value(), b.value(), "sub", r, c);
  Matrix v = detail::zip(a.value(), b.value(), [](const auto& x, const auto& y) { return x - y; });
  const std::size_t ai = a.id(), bi = b.id();
  return a.tape().record(std::move(v), "sub", a.requires_grad() || b.requires_grad(),
                         [ai, bi](Tape& t, std::size_t self) {
                           detail::accumulate_reduced(t, ai, t.adjoint(self));
                           detail::accumulate_reduced(t, bi, -t.adjoint(self));
                         });
}

inline Tensor mul(const Tensor& a, const Tensor& b) {
  detail::same_tape(a, b);
  Eigen::Index r, c;
  detail::broadcast_shape(a.value(), b.value(), "mul", r, c);
  Matrix v = detail::zip(a.value(), b.value(), [](const auto& x, const auto& y) { return x * y; });
  const std::size_t ai = a.id(), bi = b.id();
  return a.tape().record(std::move(v), "mul", a.requires_grad() || b.requires_grad(),
                         [ai, bi](Tape& t, std::size_t self) {
                           constexpr auto prod = [](const auto& x, const auto& y) { return x * y; };
                           const Matrix& g = t.adjoint(self);
                           if (t.requires_grad(ai)) detail::accumulate_reduced(t, ai, detail::zip(g, t.value(bi), prod));
                           if (t.requires_grad(bi)) detail::accumulate_reduced(t, bi, detail::zip(g, t.value(ai), prod));
                         });
}

inline Tensor div(const Tensor& a, const Tensor& b) {
  detail::same_tape(a, b);
  Eigen::Index r, c;
  detail::broadcast_shape(a.value(), b.value(), "div", r, c);
  Matrix v = detail::zip(a.value(), b.value(), [](const auto& x, const auto& y) { return x / y; });
  const std::size_t ai = a.id(), bi = b.id();
  return a.tape().record(std::move(v), "div", a.requires_grad() || b.requires_grad(),
                         [ai, bi](Tape& t, std::size_t self) {
                           const Matrix& g = t.adjoint(self);
                           const Matrix& bv = t.value(bi);
                           if (t.requires_grad(ai)) {
                             detail::accumulate_reduced(
                                 t, ai, detail::zip(g, bv, [](const auto& x, const auto& y) { return x / y; }));
                           }
                           if (t.requires_grad(bi)) {
                             // d(a/b)/db = -(a/b)/b
                             const Matrix q = detail::zip(t.value(self), bv, [](const auto& x, const auto& y) { return x / y; });
                             detail::accumulate_reduced(t, bi, -g.cwiseProduct(q));
                           }
                         });
}

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
inline Tensor operator/(const Tensor& a, const Tensor& b) { return div(a, b); }

/// scale * x + shift, elementwise.
inline Tensor affine(const Tensor& x, double scale, double shift = 0.0) {
  Matrix v = (scale * x.value().array() + shift).matrix();
  const std::size_t xi = x.id();
  return x.tape().record(std::move(v), "affine", x.requires_grad(),
                         [xi, scale](Tape& t, std::size_t self) { t.accumulate(xi, scale * t.adjoint(self)); });
}

inline Tensor neg(const Tensor& x) { return affine(x, -1.0); }
inline Tensor operator-(const Tensor& x) { return neg(x); }

inline Tensor tanh(const Tensor& x) {
  Matrix y = x.value().array().tanh().matrix();
  const std::size_t xi = x.id();
  return x.tape().record(std::move(y), "tanh", x.requires_grad(), [xi](Tape& t, std::size_t self) {
    const Matrix& y = t.value(self);
    t.accumulate(xi, (t.adjoint(self).array() * (1.0 - y.array().square())).matrix());
  });
}

inline Tensor exp(const Tensor& x) {
  Matrix y = x.value().array().exp().matrix();
  const std::size_t xi = x.id();
  return x.tape().record(std::move(y), "exp", x.requires_grad(), [xi](Tape& t, std::size_t self) {
    t.accumulate(xi, t.adjoint(self).cwiseProduct(t.value(self)));
  });
}

inline Tensor log(const Tensor& x) {
  Matrix y = x.value().array().log().matrix();
  const std::size_t xi = x.id();
  return x.tape().record(std::move(y), "log", x.requires_grad(), [xi](Tape& t, std::size_t self) {
    t.accumulate(xi, t.adjoint(self).cwiseQuotient(t.value(xi)));
  });
}

inline Tensor sin(const Tensor& x) {
  return detail::unary(
      x, "sin", [](double v) { return std::sin(v); }, [](double v) { return std::cos(v); });
}

inline Tensor cos(const Tensor& x) {
  return detail::unary(
      x, "cos", [](double v) { return std::cos(v); }, [](double v) { return -std::sin(v); });
}

/// sin(pi x) evaluated with exact zeros at integer x.
inline double sinpi(double x) {
  const double r = std::remainder(x, 2.0);  // r in [-1, 1]
  if (r == 0.0 || std::fabs(r) == 1.0) return 0.0;
  if (std::fabs(r) == 0.5) return r > 0 ? 1.0 : -1.0;
  return std::sin(std::numbers::pi * r);
}

/// cos(pi x) evaluated with exact zeros at half-integers.
inline double cospi(double x) {
  const double r = std::fabs(std::remainder(x, 2.0));
  if (r == 0.5) return 0.0;
  if (r == 0.0) return 1.0;
  if (r == 1.0) return -1.0;
  return std::cos(std::numbers::pi * r);
}

inline Tensor sinpi(const Tensor& x) {
  return detail::unary(
      x, "sinpi", [](double v) { return sinpi(v); },
      [](double v) { return std::numbers::pi * cospi(v); });
}

inline Tensor cospi(const Tensor& x) {
  return detail::unary(
      x, "cospi", [](double v) { return cospi(v); },
      [](double v) { return -std::numbers::pi * sinpi(v); });
}

inline Tensor sqrt(const Tensor& x) {
  Matrix y = x.value().array().sqrt().matrix();
  const std::size_t xi = x.id();
  return x.tape().record(std::move(y), "sqrt", x.requires_grad(), [xi](Tape& t, std::size_t self) {
    t.accumulate(xi, (0.5 * t.adjoint(self).array() / t.value(self).array()).matrix());
  });
}

inline Tensor pow(const Tensor& x, double p) {
  Matrix y = x.value().array().pow(p).matrix();
  const std::size_t xi = x.id();
  return x.tape().record(std::move(y), "pow", x.requires_grad(), [xi, p](Tape& t, std::size_t self) {
    t.accumulate(xi, (t.adjoint(self).array() * p * t.value(xi).array().pow(p - 1.0)).matrix());
  });
}

inline Tensor square(const Tensor& x) {
  Matrix y = x.value().array().square().matrix();
  const std::size_t xi = x.id();
  return x.tape().record(std::move(y), "square", x.requires_grad(), [xi](Tape& t, std::size_t self) {
    t.accumulate(xi, (2.0 * t.adjoint(self).array() * t.value(xi).array()).matrix());
  });
}

inline Tensor erf(const Tensor& x) {
  return detail::unary(
      x, "erf", [](double v) { return std::erf(v); },
      [](double v) { return 2.0 / std::sqrt(std::numbers::pi) * std::exp(-v * v); });
}

/// sqrt(x^2 + delta^2) - delta; delta = 0 gives |x| with derivative sign(x) (0 at 0).
inline Tensor abs_smooth(const Tensor& x, double delta) {
  const double d2 = delta * delta;
  return detail::unary(
      x, "abs_smooth", [d2, delta](double v) { return std::sqrt(v * v + d2) - delta; },
      [d2](double v) {
        if (d2 == 0.0) return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0);
        return v / std::sqrt(v * v + d2);
      });
}

inline Tensor sum(const Tensor& x) {
  Matrix v = Matrix::Constant(1, 1, x.value().sum());
  const std::size_t xi = x.id();
  return x.tape().record(std::move(v), "sum", x.requires_grad(), [xi](Tape& t, std::size_t self) {
    const Matrix& xv = t.value(xi);
    t.accumulate(xi, Matrix::Constant(xv.rows(), xv.cols(), t.adjoint(self)(0, 0)));
  });
}

inline Tensor mean(const Tensor& x) {
  const double n = static_cast<double>(x.value().size());
  Matrix v = Matrix::Constant(1, 1, x.value().sum() / n);
  const std::size_t xi = x.id();
  return x.tape().record(std::move(v), "mean", x.requires_grad(), [xi, n](Tape& t, std::size_t self) {
    const Matrix& xv = t.value(xi);
    t.accumulate(xi, Matrix::Constant(xv.rows(), xv.cols(), t.adjoint(self)(0, 0) / n));
  });
}

inline Tensor matmul(const Tensor& a, const Tensor& b) {
  detail::same_tape(a, b);
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: inner dimensions " + std::to_string(a.cols()) + " and " +
                     std::to_string(b.rows()) + " differ");
  }
  Matrix v = a.value() * b.value();
  const std::size_t ai = a.id(), bi = b.id();
  return a.tape().record(std::move(v), "matmul", a.requires_grad() || b.requires_grad(),
                         [ai, bi](Tape& t, std::size_t self) {
                           const Matrix& g = t.adjoint(self);
                           if (t.requires_grad(ai)) t.accumulate(ai, g * t.value(bi).transpose());
                           if (t.requires_grad(bi)) t.accumulate(bi, t.value(ai).transpose() * g);
                         });
}

inline Tensor transpose(const Tensor& x) {
  Matrix v = x.value().transpose();
  const std::size_t xi = x.id();
  return x.tape().record(std::move(v), "transpose", x.requires_grad(), [xi](Tape& t, std::size_t self) {
    t.accumulate(xi, t.adjoint(self).transpose());
  });
}

/// Adds a column vector to every column of `a`.
inline Tensor add_colvec(const Tensor& a, const Tensor& v) {
  detail::same_tape(a, v);
  if (v.cols() != 1 || v.rows() != a.rows()) throw ShapeError("add_colvec: bias shape mismatch");
  Matrix out = a.value().colwise() + v.value().col(0);
  const std::size_t ai = a.id(), vi = v.id();
  return a.tape().record(std::move(out), "add_colvec", a.requires_grad() || v.requires_grad(),
                         [ai, vi](Tape& t, std::size_t self) {
                           const Matrix& g = t.adjoint(self);
                           t.accumulate(ai, g);
                           if (t.requires_grad(vi)) t.accumulate(vi, g.rowwise().sum());
                         });
}

/// Column-major rows x cols window into a column-vector node starting at `offset`.
inline Tensor view(const Tensor& p, Eigen::Index offset, Eigen::Index rows, Eigen::Index cols) {
  if (p.cols() != 1 || offset < 0 || offset + rows * cols > p.rows()) {
    throw ShapeError("view: window exceeds parameter vector");
  }
  Matrix v = Eigen::Map<const Matrix>(p.value().data() + offset, rows, cols);
  const std::size_t pi = p.id();
  return p.tape().record(std::move(v), "view", p.requires_grad(), [pi, offset](Tape& t, std::size_t self) {
    t.accumulate_segment(pi, offset, t.adjoint(self));
  });
}

/// Stacks nodes with equal column counts on top of each other.
inline Tensor concat_rows(std::span<const Tensor> parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no operands");
  const Eigen::Index c = parts.front().cols();
  Eigen::Index r = 0;
  bool rg = false;
  for (const Tensor& p : parts) {
    detail::same_tape(parts.front(), p);
    if (p.cols() != c) throw ShapeError("concat_rows: column counts differ");
    r += p.rows();
    rg = rg || p.requires_grad();
  }
  Matrix v(r, c);
  std::vector<std::size_t> ids;
  Eigen::Index row = 0;
  for (const Tensor& p : parts) {
    v.middleRows(row, p.rows()) = p.value();
    row += p.rows();
    ids.push_back(p.id());
  }
  return parts.front().tape().record(std::move(v), "concat_rows", rg,
                                     [ids = std::move(ids)](Tape& t, std::size_t self) {
                                       const Matrix& g = t.adjoint(self);
                                       Eigen::Index row = 0;
                                       for (std::size_t id : ids) {
                                         const Eigen::Index n = t.value(id).rows();
                                         if (t.requires_grad(id)) t.accumulate(id, g.middleRows(row, n));
                                         row += n;
                                       }
                                     });
}

inline Tensor concat_rows(std::initializer_list<Tensor> parts) {
  return concat_rows(std::span<const Tensor>(parts.begin(), parts.size()));
}

/// Selects columns by index (duplicates allowed).
inline Tensor select_cols(const Tensor& x, std::span<const Eigen::Index> idx) {
  Matrix v(x.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) v.col(static_cast<Eigen::Index>(k)) = x.value().col(idx[k]);
  const std::size_t xi = x.id();
  std::vector<Eigen::Index> cols(idx.begin(), idx.end());
  return x.tape().record(std::move(v), "select_cols", x.requires_grad(),
                         [xi, cols = std::move(cols)](Tape& t, std::size_t self) {
                           const Matrix& g = t.adjoint(self);
                           Matrix acc = Matrix::Zero(t.value(xi).rows(), t.value(xi).cols());
                           for (std::size_t k = 0; k < cols.size(); ++k) {
                             acc.col(cols[k]) += g.col(static_cast<Eigen::Index>(k));
                           }
                           t.accumulate(xi, acc);
                         });
}

/// Multiplies elementwise by a fixed matrix that is not differentiated.
inline Tensor scale_by(const Tensor& x, const Matrix& w) {
  if (w.rows() != x.rows() || w.cols() != x.cols()) throw ShapeError("scale_by: shape mismatch");
  return mul(x, x.tape().constant(w));
}

inline Tensor operator*(double s, const Tensor& x) { return affine(x, s); }
inline Tensor operator*(const Tensor& x, double s) { return affine(x, s); }
inline Tensor operator+(const Tensor& x, double s) { return affine(x, 1.0, s); }
inline Tensor operator-(const Tensor& x, double s) { return affine(x, 1.0, -s); }

}  // namespace vrba::ad
