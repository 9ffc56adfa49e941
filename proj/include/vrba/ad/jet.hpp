#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <span>
#include <utility>
#include <vector>

#include "vrba/ad/ops.hpp"

namespace vrba::ad {

/// Which input directions carry tangents and which second derivatives are tracked.
struct JetPattern {
  int dims = 0;
  int order = 0;
  std::vector<std::pair<int, int>> pairs;  // (i, j) with i <= j

  /// All first derivatives; for order 2 every pair i <= j.
  static std::shared_ptr<const JetPattern> full(int dims, int order) {
    if (order < 0 || order > 2) throw UnsupportedOrderError("derivative order " + std::to_string(order));
    auto p = std::make_shared<JetPattern>();
    p->dims = dims;
    p->order = order;
    if (order == 2) {
      for (int i = 0; i < dims; ++i)
        for (int j = i; j < dims; ++j) p->pairs.emplace_back(i, j);
    }
    return p;
  }

  /// First derivatives in all directions plus only the listed second derivatives.
  static std::shared_ptr<const JetPattern> with_pairs(int dims, std::vector<std::pair<int, int>> pairs) {
    auto p = std::make_shared<JetPattern>();
    p->dims = dims;
    p->order = pairs.empty() ? 1 : 2;
    for (auto& [i, j] : pairs) {
      if (i > j) std::swap(i, j);
      if (i < 0 || j >= dims) throw ShapeError("jet pair index out of range");
    }
    p->pairs = std::move(pairs);
    return p;
  }

  /// Number of first-derivative directions carried (none for value-only jets).
  int tangents() const { return order >= 1 ? dims : 0; }

  int pair_index(int i, int j) const {
    if (i > j) std::swap(i, j);
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      if (pairs[k].first == i && pairs[k].second == j) return static_cast<int>(k);
    }
    return -1;
  }
};

/// Second-order forward jet whose components are tape nodes, so anything built from the
/// derivatives stays differentiable with respect to parameters by a reverse sweep.
/// Each component is a matrix batched over evaluation points (columns).
struct Jet {
  Tensor v;
  std::vector<Tensor> d;
  std::vector<Tensor> dd;
  std::shared_ptr<const JetPattern> pattern;

  Tape& tape() const { return v.tape(); }
  Tensor dx(int i) const { return d.at(static_cast<std::size_t>(i)); }
  Tensor dxx(int i, int j) const {
    const int k = pattern->pair_index(i, j);
    if (k < 0) throw UnsupportedOrderError("second derivative not tracked by this jet");
    return dd[static_cast<std::size_t>(k)];
  }
};

using Field = std::function<Jet(std::span<const Jet>)>;

namespace detail {

inline Tensor zeros_like(const Tensor& t) { return t.tape().constant(Matrix::Zero(t.rows(), t.cols())); }

inline void check_patterns(const Jet& a, const Jet& b) {
  if (a.pattern != b.pattern) throw ShapeError("jets carry different derivative patterns");
}

}  // namespace detail

/// Lifts a node into a jet with zero derivatives.
inline Jet constant_jet(const Tensor& value, std::shared_ptr<const JetPattern> pattern) {
  Jet j{value, {}, {}, pattern};
  if (pattern->order == 0) return j;
  Tensor z = detail::zeros_like(value);
  j.d.assign(static_cast<std::size_t>(pattern->tangents()), z);
  j.dd.assign(pattern->pairs.size(), z);
  return j;
}

/// Value-only jet wrapping `value`; used when no input derivatives are needed.
inline Jet value_jet(const Tensor& value) {
  static const auto pattern = JetPattern::full(0, 0);
  return Jet{value, {}, {}, pattern};
}

/// Coordinate jets for points stored column-wise in `pts` (dims x n).
inline std::vector<Jet> seed_inputs(Tape& tape, const Matrix& pts, std::shared_ptr<const JetPattern> pattern) {
  if (pts.rows() != pattern->dims) throw ShapeError("seed_inputs: point dimension does not match pattern");
  const Eigen::Index n = pts.cols();
  Tensor zero = tape.constant(Matrix::Zero(1, n));
  Tensor one = tape.constant(Matrix::Ones(1, n));
  std::vector<Jet> out;
  for (int k = 0; k < pattern->dims; ++k) {
    Jet j{tape.constant(pts.row(k)), {}, {}, pattern};
    for (int i = 0; i < pattern->tangents(); ++i) j.d.push_back(i == k ? one : zero);
    j.dd.assign(pattern->pairs.size(), zero);
    out.push_back(std::move(j));
  }
  return out;
}

inline Jet operator+(const Jet& a, const Jet& b) {
  detail::check_patterns(a, b);
  Jet r{a.v + b.v, {}, {}, a.pattern};
  for (std::size_t i = 0; i < a.d.size(); ++i) r.d.push_back(a.d[i] + b.d[i]);
  for (std::size_t k = 0; k < a.dd.size(); ++k) r.dd.push_back(a.dd[k] + b.dd[k]);
  return r;
}

inline Jet operator-(const Jet& a, const Jet& b) {
  detail::check_patterns(a, b);
  Jet r{a.v - b.v, {}, {}, a.pattern};
  for (std::size_t i = 0; i < a.d.size(); ++i) r.d.push_back(a.d[i] - b.d[i]);
  for (std::size_t k = 0; k < a.dd.size(); ++k) r.dd.push_back(a.dd[k] - b.dd[k]);
  return r;
}

inline Jet operator*(const Jet& a, const Jet& b) {
  detail::check_patterns(a, b);
  Jet r{a.v * b.v, {}, {}, a.pattern};
  for (std::size_t i = 0; i < a.d.size(); ++i) r.d.push_back(a.d[i] * b.v + a.v * b.d[i]);
  for (std::size_t k = 0; k < a.dd.size(); ++k) {
    const auto [i, j] = a.pattern->pairs[k];
    const auto ui = static_cast<std::size_t>(i), uj = static_cast<std::size_t>(j);
    r.dd.push_back(a.dd[k] * b.v + a.d[ui] * b.d[uj] + a.d[uj] * b.d[ui] + a.v * b.dd[k]);
  }
  return r;
}

/// scale * a + shift.
inline Jet affine(const Jet& a, double scale, double shift = 0.0) {
  Jet r{affine(a.v, scale, shift), {}, {}, a.pattern};
  for (const Tensor& t : a.d) r.d.push_back(affine(t, scale));
  for (const Tensor& t : a.dd) r.dd.push_back(affine(t, scale));
  return r;
}

inline Jet operator-(const Jet& a) { return affine(a, -1.0); }
inline Jet operator*(double s, const Jet& a) { return affine(a, s); }

/// Chain rule for an elementwise map given f(a), f'(a) and f''(a) as nodes; f'' is only
/// read when second derivatives are tracked.
inline Jet chain(const Jet& a, Tensor f0, const Tensor& f1, const Tensor& f2) {
  Jet r{std::move(f0), {}, {}, a.pattern};
  for (const Tensor& t : a.d) r.d.push_back(f1 * t);
  for (std::size_t k = 0; k < a.dd.size(); ++k) {
    const auto [i, j] = a.pattern->pairs[k];
    r.dd.push_back(f2 * (a.d[static_cast<std::size_t>(i)] * a.d[static_cast<std::size_t>(j)]) + f1 * a.dd[k]);
  }
  return r;
}

inline Jet tanh(const Jet& a) {
  Tensor f = tanh(a.v);
  if (a.pattern->order == 0) return Jet{f, {}, {}, a.pattern};
  Tensor f1 = affine(square(f), -1.0, 1.0);
  Tensor f2 = a.dd.empty() ? Tensor{} : affine(f * f1, -2.0);
  return chain(a, f, f1, f2);
}

inline Jet sinpi(const Jet& a) {
  Tensor f = sinpi(a.v);
  if (a.pattern->order == 0) return Jet{f, {}, {}, a.pattern};
  Tensor c = cospi(a.v);
  Tensor f1 = affine(c, std::numbers::pi);
  Tensor f2 = affine(f, -std::numbers::pi * std::numbers::pi);
  return chain(a, f, f1, f2);
}

inline Jet cospi(const Jet& a) {
  Tensor f = cospi(a.v);
  if (a.pattern->order == 0) return Jet{f, {}, {}, a.pattern};
  Tensor s = sinpi(a.v);
  Tensor f1 = affine(s, -std::numbers::pi);
  Tensor f2 = affine(f, -std::numbers::pi * std::numbers::pi);
  return chain(a, f, f1, f2);
}

inline Jet sin(const Jet& a) {
  Tensor f = sin(a.v);
  if (a.pattern->order == 0) return Jet{f, {}, {}, a.pattern};
  return chain(a, f, cos(a.v), neg(f));
}

inline Jet cos(const Jet& a) {
  Tensor f = cos(a.v);
  if (a.pattern->order == 0) return Jet{f, {}, {}, a.pattern};
  return chain(a, f, neg(sin(a.v)), neg(f));
}

inline Jet exp(const Jet& a) {
  Tensor f = exp(a.v);
  if (a.pattern->order == 0) return Jet{f, {}, {}, a.pattern};
  return chain(a, f, f, f);
}

inline Jet square(const Jet& a) { return a * a; }

/// x * Phi(x) with Phi the standard normal CDF, built from erf.
inline Jet gelu(const Jet& a) {
  constexpr double inv_sqrt2 = 0.70710678118654752440;
  const double inv_sqrt2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  Tensor cdf = affine(erf(affine(a.v, inv_sqrt2)), 0.5, 0.5);
  Tensor f = a.v * cdf;
  if (a.pattern->order == 0) return Jet{f, {}, {}, a.pattern};
  Tensor pdf = affine(exp(affine(square(a.v), -0.5)), inv_sqrt2pi);
  Tensor f1 = cdf + a.v * pdf;
  Tensor f2 = a.dd.empty() ? Tensor{} : pdf * affine(square(a.v), -1.0, 2.0);
  return chain(a, f, f1, f2);
}

/// W * a + b where b is a column vector broadcast over points; the bias only shifts values.
inline Jet linear(const Tensor& w, const Tensor& b, const Jet& a) {
  Jet r{add_colvec(matmul(w, a.v), b), {}, {}, a.pattern};
  for (const Tensor& t : a.d) r.d.push_back(matmul(w, t));
  for (const Tensor& t : a.dd) r.dd.push_back(matmul(w, t));
  return r;
}

inline Jet concat_rows(std::span<const Jet> parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no operands");
  const auto& pat = parts.front().pattern;
  std::vector<Tensor> tmp;
  auto stack = [&](auto pick) {
    tmp.clear();
    for (const Jet& p : parts) {
      detail::check_patterns(parts.front(), p);
      tmp.push_back(pick(p));
    }
    return concat_rows(std::span<const Tensor>(tmp));
  };
  Jet r{stack([](const Jet& p) { return p.v; }), {}, {}, pat};
  for (std::size_t i = 0; i < parts.front().d.size(); ++i) r.d.push_back(stack([i](const Jet& p) { return p.d[i]; }));
  for (std::size_t k = 0; k < parts.front().dd.size(); ++k)
    r.dd.push_back(stack([k](const Jet& p) { return p.dd[k]; }));
  return r;
}

}  // namespace vrba::ad
