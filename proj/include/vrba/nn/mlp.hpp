#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vrba/ad/jet.hpp"
#include "vrba/rng.hpp"

namespace vrba::nn {

enum class Activation { Tanh, Gelu };
enum class Embedding { None, Fourier, Periodic };

/// Fully connected network description. The embedding, when present, replaces the last
/// input coordinate (the spatial one) by [sin(k pi x), cos(k pi x)], k = 1..degree.
struct MlpConfig {
  int input_dim = 1;
  std::vector<int> hidden = {32, 32};
  int output_dim = 1;
  Activation activation = Activation::Tanh;
  Embedding embedding = Embedding::None;
  int fourier_degree = 10;

  int embed_degree() const {
    switch (embedding) {
      case Embedding::None: return 0;
      case Embedding::Periodic: return 1;
      case Embedding::Fourier: return fourier_degree;
    }
    return 0;
  }

  /// Width of the first layer's input after embedding.
  int feature_dim() const { return embedding == Embedding::None ? input_dim : input_dim - 1 + 2 * embed_degree(); }

  std::vector<int> layer_widths() const {
    std::vector<int> w{feature_dim()};
    w.insert(w.end(), hidden.begin(), hidden.end());
    w.push_back(output_dim);
    return w;
  }

  void validate() const {
    if (input_dim < 1 || output_dim < 1) throw ShapeError("network input and output widths must be positive");
    if (hidden.empty()) throw ShapeError("network needs at least one hidden layer");
    for (int h : hidden)
      if (h < 1) throw ShapeError("hidden widths must be positive");
    if (embedding == Embedding::Fourier && fourier_degree < 1) throw ShapeError("Fourier degree must be >= 1");
  }
};

struct LayerSlice {
  enum class Kind { Weight, Bias };
  int layer = 0;
  Kind kind = Kind::Weight;
  Eigen::Index offset = 0;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
};

/// Flat parameters: per layer the column-major weight matrix (out x in) then the bias.
struct ParamVector {
  Eigen::VectorXd values;
  std::vector<LayerSlice> layout;

  Eigen::Index size() const { return values.size(); }
};

inline std::vector<LayerSlice> make_layout(const MlpConfig& cfg) {
  cfg.validate();
  const auto w = cfg.layer_widths();
  std::vector<LayerSlice> out;
  Eigen::Index off = 0;
  for (std::size_t l = 0; l + 1 < w.size(); ++l) {
    const int in = w[l], o = w[l + 1];
    out.push_back({static_cast<int>(l), LayerSlice::Kind::Weight, off, o, in});
    off += static_cast<Eigen::Index>(o) * in;
    out.push_back({static_cast<int>(l), LayerSlice::Kind::Bias, off, o, 1});
    off += o;
  }
  return out;
}

inline Eigen::Index param_count(const MlpConfig& cfg) {
  const auto w = cfg.layer_widths();
  Eigen::Index n = 0;
  for (std::size_t l = 0; l + 1 < w.size(); ++l) n += static_cast<Eigen::Index>(w[l] + 1) * w[l + 1];
  return n;
}

/// Weights ~ U(-sqrt(3/I), sqrt(3/I)) with I the layer fan-in; biases zero.
inline ParamVector init_params(const MlpConfig& cfg, std::uint64_t seed) {
  ParamVector p;
  p.layout = make_layout(cfg);
  p.values = Eigen::VectorXd::Zero(param_count(cfg));
  Rng rng = Rng(seed).split("init");
  for (const LayerSlice& s : p.layout) {
    if (s.kind != LayerSlice::Kind::Weight) continue;
    const double a = std::sqrt(3.0 / static_cast<double>(s.cols));
    for (Eigen::Index i = 0; i < s.rows * s.cols; ++i) p.values(s.offset + i) = rng.uniform(-a, a);
  }
  return p;
}

/// Features [sin(k pi x) for k=1..m, cos(k pi x) for k=1..m].
inline std::vector<double> fourier_embed(double x, int m) {
  if (m < 1) throw ShapeError("Fourier degree must be >= 1");
  std::vector<double> out(static_cast<std::size_t>(2 * m));
  for (int k = 1; k <= m; ++k) {
    out[static_cast<std::size_t>(k - 1)] = ad::sinpi(k * x);
    out[static_cast<std::size_t>(m + k - 1)] = ad::cospi(k * x);
  }
  return out;
}

inline std::vector<ad::Jet> fourier_embed(const ad::Jet& x, int m) {
  std::vector<ad::Jet> out;
  for (int k = 1; k <= m; ++k) out.push_back(ad::sinpi(ad::affine(x, k)));
  for (int k = 1; k <= m; ++k) out.push_back(ad::cospi(ad::affine(x, k)));
  return out;
}

class Mlp {
 public:
  explicit Mlp(MlpConfig cfg) : cfg_(std::move(cfg)), layout_(make_layout(cfg_)), size_(param_count(cfg_)) {}

  const MlpConfig& config() const { return cfg_; }
  const std::vector<LayerSlice>& layout() const { return layout_; }
  Eigen::Index num_params() const { return size_; }
  ParamVector init(std::uint64_t seed) const { return init_params(cfg_, seed); }

  /// Network output (output_dim x n) for batched coordinate jets, with parameters read from
  /// `params` starting at `base`.
  ad::Jet operator()(const ad::Tensor& params, std::span<const ad::Jet> x, Eigen::Index base = 0) const {
    if (static_cast<int>(x.size()) != cfg_.input_dim) {
      throw ShapeError("network expects " + std::to_string(cfg_.input_dim) + " inputs, got " +
                       std::to_string(x.size()));
    }
    if (params.cols() != 1 || params.rows() < base + size_) throw ShapeError("parameter vector too short");
    std::vector<ad::Jet> feats;
    if (cfg_.embedding == Embedding::None) {
      feats.assign(x.begin(), x.end());
    } else {
      feats.assign(x.begin(), x.end() - 1);
      auto e = fourier_embed(x.back(), cfg_.embed_degree());
      feats.insert(feats.end(), e.begin(), e.end());
    }
    ad::Jet h = feats.size() == 1 ? feats.front() : ad::concat_rows(feats);
    return hidden_and_output(params, std::move(h), base);
  }

  /// Same network applied to an already-assembled feature matrix (feature_dim x n), values only.
  ad::Tensor apply_features(const ad::Tensor& params, const ad::Tensor& features, Eigen::Index base = 0) const {
    if (features.rows() != cfg_.feature_dim()) throw ShapeError("feature matrix has wrong row count");
    return hidden_and_output(params, ad::value_jet(features), base).v;
  }

  ad::Field field(const ad::Tensor& params, Eigen::Index base = 0) const {
    return [this, params, base](std::span<const ad::Jet> x) { return (*this)(params, x, base); };
  }

  /// Plain evaluation at one point.
  double eval(const Eigen::VectorXd& params, std::span<const double> x) const {
    if (static_cast<int>(x.size()) != cfg_.input_dim) {
      throw ShapeError("network expects " + std::to_string(cfg_.input_dim) + " inputs, got " +
                       std::to_string(x.size()));
    }
    if (params.size() != size_) throw ShapeError("parameter vector length mismatch");
    ad::Tape tape;
    ad::Tensor p = tape.constant(params);
    auto pattern = ad::JetPattern::full(cfg_.input_dim, 0);
    ad::Matrix pt(cfg_.input_dim, 1);
    for (int i = 0; i < cfg_.input_dim; ++i) pt(i, 0) = x[static_cast<std::size_t>(i)];
    auto in = ad::seed_inputs(tape, pt, pattern);
    return (*this)(p, in).v.value()(0, 0);
  }

 private:
  ad::Jet activate(const ad::Jet& z) const {
    return cfg_.activation == Activation::Tanh ? ad::tanh(z) : ad::gelu(z);
  }

  ad::Jet hidden_and_output(const ad::Tensor& params, ad::Jet h, Eigen::Index base) const {
    const std::size_t layers = layout_.size() / 2;
    for (std::size_t l = 0; l < layers; ++l) {
      const LayerSlice& ws = layout_[2 * l];
      const LayerSlice& bs = layout_[2 * l + 1];
      ad::Tensor w = ad::view(params, base + ws.offset, ws.rows, ws.cols);
      ad::Tensor b = ad::view(params, base + bs.offset, bs.rows, 1);
      h = ad::linear(w, b, h);
      if (l + 1 < layers) h = activate(h);
    }
    return h;
  }

  MlpConfig cfg_;
  std::vector<LayerSlice> layout_;
  Eigen::Index size_;
};

inline double forward(const ParamVector& params, const MlpConfig& cfg, std::span<const double> x) {
  return Mlp(cfg).eval(params.values, x);
}

inline std::string to_string(Activation a) { return a == Activation::Tanh ? "tanh" : "gelu"; }

inline std::string to_string(Embedding e) {
  switch (e) {
    case Embedding::None: return "none";
    case Embedding::Fourier: return "fourier";
    case Embedding::Periodic: return "periodic";
  }
  return "none";
}

}  // namespace vrba::nn
