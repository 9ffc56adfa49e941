#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "vrba/errors.hpp"
#include "vrba/parallel.hpp"
#include "vrba/rng.hpp"

namespace vrba::op {

/// Dimensionless damped oscillator R0 r'' + damping r' + stiffness r = -dp / rho.
struct OdeCoefficients {
  double r0 = 1.0;
  double damping = 0.5;
  double stiffness = 4.0;
  double rho = 1.0;
};

struct DatasetConfig {
  int n_func = 250;
  int n_sensor = 100;
  int n_out = 100;
  double t_end = 10.0;
  double length_scale = 1.0;
  double sigma = 1.0;
  double mean = 0.0;
  double ramp_tau = 0.5;
  int substeps = 10;  // RK4 steps per output interval
  OdeCoefficients ode;
  double train_frac = 0.8;
  double val_frac = 0.1;
  std::uint64_t seed = 0;

  void validate() const {
    if (n_func < 1 || n_sensor < 2 || n_out < 2 || substeps < 1) throw RangeError("dataset sizes must be positive");
    if (!(t_end > 0.0) || !(length_scale > 0.0) || !(sigma >= 0.0) || !(ramp_tau > 0.0)) {
      throw RangeError("dataset scales must be positive");
    }
    if (!(ode.r0 > 0.0) || !(ode.rho > 0.0)) throw RangeError("ODE coefficients R0 and rho must be positive");
    if (!(train_frac > 0.0 && val_frac >= 0.0 && train_frac + val_frac <= 1.0)) throw RangeError("bad split fractions");
  }
};

/// Input forcing on the sensor grid and trajectory on the output grid, one column per function.
struct Dataset {
  DatasetConfig config;
  Eigen::VectorXd t_sensor;
  Eigen::VectorXd t_out;
  Eigen::MatrixXd inputs;   // n_sensor x n_func
  Eigen::MatrixXd outputs;  // n_out x n_func
  std::vector<Eigen::Index> train, val, test;

  Eigen::Index n_func() const { return inputs.cols(); }
};

/// Squared-exponential Gram matrix sigma^2 exp(-(s - t)^2 / (2 l^2)).
inline Eigen::MatrixXd se_kernel(const Eigen::VectorXd& t, double sigma, double length_scale) {
  const Eigen::Index n = t.size();
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      const double d = (t(i) - t(j)) / length_scale;
      k(i, j) = sigma * sigma * std::exp(-0.5 * d * d);
    }
  return k;
}

/// Lower Cholesky factor of K + jitter I.
inline Eigen::MatrixXd kernel_factor(const Eigen::MatrixXd& k, double jitter = 1e-10) {
  Eigen::MatrixXd a = k;
  a.diagonal().array() += jitter;
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success) throw KernelError("Cholesky factorization of the GP kernel failed");
  return llt.matrixL();
}

inline double ramp(double t, double tau) { return 1.0 - std::exp(-t / tau); }

/// Catmull-Rom interpolation of samples `v` on the uniform grid [0, t_end]; clamped ends.
inline double interpolate(const Eigen::VectorXd& v, double t_end, double t) {
  const Eigen::Index n = v.size();
  const double h = t_end / static_cast<double>(n - 1);
  const double s = std::clamp(t / h, 0.0, static_cast<double>(n - 1));
  const Eigen::Index i = std::min<Eigen::Index>(static_cast<Eigen::Index>(s), n - 2);
  const double u = s - static_cast<double>(i);
  auto at = [&](Eigen::Index k) { return v(std::clamp<Eigen::Index>(k, 0, n - 1)); };
  const double p0 = at(i - 1), p1 = at(i), p2 = at(i + 1), p3 = at(i + 2);
  return 0.5 * ((2.0 * p1) + (-p0 + p2) * u + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * u * u +
                (-p0 + 3.0 * p1 - 3.0 * p2 + p3) * u * u * u);
}

/// Fixed-step RK4 for the oscillator with r(0) = r'(0) = 0; returns r at n_out uniform times.
template <class Forcing>
Eigen::VectorXd integrate_rk4(const Forcing& dp, const OdeCoefficients& c, double t_end, int n_out, int substeps) {
  const double h = t_end / static_cast<double>((n_out - 1) * substeps);
  auto rhs = [&](double t, double r, double v, double& dr, double& dv) {
    dr = v;
    dv = (-dp(t) / c.rho - c.damping * v - c.stiffness * r) / c.r0;
  };
  Eigen::VectorXd out(n_out);
  double r = 0.0, v = 0.0, t = 0.0;
  out(0) = 0.0;
  for (int k = 1; k < n_out; ++k) {
    for (int s = 0; s < substeps; ++s) {
      double k1r, k1v, k2r, k2v, k3r, k3v, k4r, k4v;
      rhs(t, r, v, k1r, k1v);
      rhs(t + 0.5 * h, r + 0.5 * h * k1r, v + 0.5 * h * k1v, k2r, k2v);
      rhs(t + 0.5 * h, r + 0.5 * h * k2r, v + 0.5 * h * k2v, k3r, k3v);
      rhs(t + h, r + h * k3r, v + h * k3v, k4r, k4v);
      r += h / 6.0 * (k1r + 2.0 * k2r + 2.0 * k3r + k4r);
      v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
      t = (static_cast<double>(k - 1) * substeps + s + 1) * h;
    }
    out(k) = r;
  }
  return out;
}

inline Dataset generate_dataset(const DatasetConfig& cfg) {
  cfg.validate();
  Dataset d;
  d.config = cfg;
  d.t_sensor = Eigen::VectorXd::LinSpaced(cfg.n_sensor, 0.0, cfg.t_end);
  d.t_out = Eigen::VectorXd::LinSpaced(cfg.n_out, 0.0, cfg.t_end);
  const Eigen::MatrixXd l = kernel_factor(se_kernel(d.t_sensor, cfg.sigma, cfg.length_scale));
  d.inputs.resize(cfg.n_sensor, cfg.n_func);
  d.outputs.resize(cfg.n_out, cfg.n_func);
  const Rng root(cfg.seed);
  parallel_for(static_cast<std::size_t>(cfg.n_func), [&](std::size_t j) {
    Rng rng = root.split("function", j);
    Eigen::VectorXd z(cfg.n_sensor);
    for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = rng.normal();
    Eigen::VectorXd g = (l * z).array() + cfg.mean;
    for (Eigen::Index i = 0; i < g.size(); ++i) g(i) *= ramp(d.t_sensor(i), cfg.ramp_tau);
    const auto col = static_cast<Eigen::Index>(j);
    d.inputs.col(col) = g;
    d.outputs.col(col) = integrate_rk4([&](double t) { return interpolate(g, cfg.t_end, t); }, cfg.ode, cfg.t_end,
                                       cfg.n_out, cfg.substeps);
  });

  std::vector<Eigen::Index> perm(static_cast<std::size_t>(cfg.n_func));
  std::iota(perm.begin(), perm.end(), Eigen::Index{0});
  Rng split = root.split("split");
  std::shuffle(perm.begin(), perm.end(), split.engine());
  const auto n_train = static_cast<std::size_t>(std::lround(cfg.train_frac * cfg.n_func));
  const auto n_val = static_cast<std::size_t>(std::lround(cfg.val_frac * cfg.n_func));
  d.train.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
  d.val.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train),
               perm.begin() + static_cast<std::ptrdiff_t>(std::min(perm.size(), n_train + n_val)));
  d.test.assign(perm.begin() + static_cast<std::ptrdiff_t>(std::min(perm.size(), n_train + n_val)), perm.end());
  return d;
}

inline nlohmann::json to_json(const DatasetConfig& c) {
  return {{"n_func", c.n_func},
          {"n_sensor", c.n_sensor},
          {"n_out", c.n_out},
          {"t_end", c.t_end},
          {"length_scale", c.length_scale},
          {"sigma", c.sigma},
          {"mean", c.mean},
          {"ramp_tau", c.ramp_tau},
          {"substeps", c.substeps},
          {"ode", {{"r0", c.ode.r0}, {"damping", c.ode.damping}, {"stiffness", c.ode.stiffness}, {"rho", c.ode.rho}}},
          {"train_frac", c.train_frac},
          {"val_frac", c.val_frac},
          {"seed", c.seed}};
}

/// Text dump: one JSON header line (config, grids, split indices), then for every function
/// its n_sensor inputs followed by its n_out outputs, one value per line in %.17g.
inline void save_dataset(const std::string& path, const Dataset& d) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write dataset file: " + path);
  nlohmann::json h;
  h["format"] = "vrba-dataset-1";
  h["config"] = to_json(d.config);
  h["train"] = d.train;
  h["val"] = d.val;
  h["test"] = d.test;
  out << h.dump() << '\n';
  char buf[32];
  for (Eigen::Index j = 0; j < d.n_func(); ++j) {
    for (Eigen::Index i = 0; i < d.inputs.rows(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", d.inputs(i, j));
      out << buf << '\n';
    }
    for (Eigen::Index i = 0; i < d.outputs.rows(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", d.outputs(i, j));
      out << buf << '\n';
    }
  }
}

inline Dataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read dataset file: " + path);
  std::string line;
  std::getline(in, line);
  const auto h = nlohmann::json::parse(line);
  if (h.value("format", "") != "vrba-dataset-1") throw ConfigError("unknown dataset format in " + path);
  Dataset d;
  const auto& c = h.at("config");
  auto& dc = d.config;
  dc.n_func = c.at("n_func");
  dc.n_sensor = c.at("n_sensor");
  dc.n_out = c.at("n_out");
  dc.t_end = c.at("t_end");
  dc.length_scale = c.at("length_scale");
  dc.sigma = c.at("sigma");
  dc.mean = c.at("mean");
  dc.ramp_tau = c.at("ramp_tau");
  dc.substeps = c.at("substeps");
  dc.ode.r0 = c.at("ode").at("r0");
  dc.ode.damping = c.at("ode").at("damping");
  dc.ode.stiffness = c.at("ode").at("stiffness");
  dc.ode.rho = c.at("ode").at("rho");
  dc.train_frac = c.at("train_frac");
  dc.val_frac = c.at("val_frac");
  dc.seed = c.at("seed");
  d.train = h.at("train").get<std::vector<Eigen::Index>>();
  d.val = h.at("val").get<std::vector<Eigen::Index>>();
  d.test = h.at("test").get<std::vector<Eigen::Index>>();
  d.t_sensor = Eigen::VectorXd::LinSpaced(dc.n_sensor, 0.0, dc.t_end);
  d.t_out = Eigen::VectorXd::LinSpaced(dc.n_out, 0.0, dc.t_end);
  d.inputs.resize(dc.n_sensor, dc.n_func);
  d.outputs.resize(dc.n_out, dc.n_func);
  for (Eigen::Index j = 0; j < dc.n_func; ++j) {
    for (Eigen::Index i = 0; i < dc.n_sensor; ++i) in >> d.inputs(i, j);
    for (Eigen::Index i = 0; i < dc.n_out; ++i) in >> d.outputs(i, j);
  }
  if (!in) throw Error("truncated dataset file: " + path);
  return d;
}

}  // namespace vrba::op
