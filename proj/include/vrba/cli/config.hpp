#pragma once

#include <cmath>
#include <fstream>
#include <optional>
#include <set>
#include <string>

#include <nlohmann/json.hpp>

#include "vrba/errors.hpp"
#include "vrba/op/dataset.hpp"
#include "vrba/op/train.hpp"
#include "vrba/pinn/problems.hpp"
#include "vrba/pinn/train.hpp"

namespace vrba::cli {

using nlohmann::json;

enum class Command { TrainPinn, TrainOp };

inline std::string to_string(Command c) { return c == Command::TrainPinn ? "train-pinn" : "train-op"; }

/// Fully resolved run settings. Only the block matching `command` is meaningful.
struct RunConfig {
  Command command = Command::TrainPinn;
  pinn::PinnConfig pinn;
  op::OpConfig op;
  op::DatasetConfig dataset;
  std::string data_path;  // load the operator dataset from here instead of generating it
  std::string out = "run";
};

/// Command-line values layered over the config file.
struct Overrides {
  std::optional<std::string> mode;
  std::optional<std::string> potential;
  std::optional<std::uint64_t> seed;
  std::optional<long> iters;
  std::optional<std::string> out;
};

namespace detail {

/// Reads keys out of one JSON object and remembers which were consumed, so anything left
/// over can be reported as unknown.
class Reader {
 public:
  Reader(const json& obj, std::string prefix) : obj_(obj), prefix_(std::move(prefix)) {
    if (!obj_.is_object()) throw ConfigError("'" + where() + "' must be a JSON object");
  }

  bool has(const std::string& key) const { return obj_.contains(key); }

  template <class T>
  void get(const std::string& key, T& dst) {
    seen_.insert(key);
    if (!obj_.contains(key)) return;
    try {
      dst = obj_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError("config key '" + name(key) + "' has the wrong type");
    }
  }

  template <class T>
  T require(const std::string& key) {
    if (!obj_.contains(key)) throw ConfigError("missing required config key '" + name(key) + "'");
    T v{};
    get(key, v);
    return v;
  }

  Reader child(const std::string& key) {
    seen_.insert(key);
    return Reader(obj_.contains(key) ? obj_.at(key) : empty(), name(key));
  }

  void reject_unknown() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError("unknown config key '" + name(it.key()) + "'");
    }
  }

  std::string name(const std::string& key) const { return prefix_.empty() ? key : prefix_ + "." + key; }

 private:
  static const json& empty() {
    static const json e = json::object();
    return e;
  }
  std::string where() const { return prefix_.empty() ? "<root>" : prefix_; }

  const json& obj_;
  std::string prefix_;
  std::set<std::string> seen_;
};

inline void range(bool ok, const std::string& what) {
  if (!ok) throw RangeError(what);
}

inline nn::Activation activation_from_name(const std::string& s) {
  if (s == "tanh") return nn::Activation::Tanh;
  if (s == "gelu") return nn::Activation::Gelu;
  throw ConfigError("unknown activation '" + s + "'");
}

inline nn::Embedding embedding_from_name(const std::string& s) {
  if (s == "none") return nn::Embedding::None;
  if (s == "fourier") return nn::Embedding::Fourier;
  if (s == "periodic") return nn::Embedding::Periodic;
  throw ConfigError("unknown embedding '" + s + "'");
}

/// Schedule, optimizer and logging keys shared by both trainers.
template <class Cfg>
void read_common(Reader& r, Cfg& c, adapt::Mode mode, bool sampling_defaults,
                 std::optional<double> sampling_phi = std::nullopt) {
  c.mode = mode;
  std::string pot = c.potential.name();
  r.get("potential", pot);
  c.potential = adapt::potential_from_name(pot);

  if (sampling_defaults) {
    c.gamma = 0.9;
    c.eta = 0.1;
    if (sampling_phi) c.phi = *sampling_phi;
  }
  r.get("gamma", c.gamma);
  r.get("eta", c.eta);
  r.get("phi", c.phi);
  // the quadratic tilt is run without smoothing
  if (c.potential.kind() == adapt::Potential::Kind::Quadratic) c.phi = 1.0;
  r.get("anneal_c", c.anneal_c);
  r.get("lambda_max0", c.lambda_max0);
  r.get("lambda_cap", c.lambda_cap);
  r.get("n_stage", c.n_stage);
  r.get("staged", c.staged);

  r.get("iters", c.iters);
  r.get("lr", c.lr);
  r.get("decay_rate", c.decay_rate);
  r.get("decay_step", c.decay_step);
  r.get("log_every", c.log_every);
  r.get("snr_every", c.snr_every);
  r.get("snr_partitions", c.snr_partitions);
  r.get("seed", c.seed);
  r.get("record_wall_time", c.record_wall_time);

  range(c.gamma >= 0.0 && c.gamma < 1.0, "gamma must lie in [0, 1)");
  range(c.eta > 0.0 && c.eta <= 1.0, "eta must lie in (0, 1]");
  range(c.phi >= 0.0 && c.phi <= 1.0, "phi must lie in [0, 1]");
  range(c.anneal_c > 0.0, "anneal_c must be positive");
  range(c.lambda_max0 > 0.0, "lambda_max0 must be positive");
  range(c.lambda_cap >= c.lambda_max0, "lambda_cap must be >= lambda_max0");
  range(c.n_stage > 0.0, "n_stage must be positive");
  range(c.iters >= 0, "iters must be non-negative");
  range(c.lr > 0.0 && std::isfinite(c.lr), "lr must be positive");
  range(c.decay_rate > 0.0 && c.decay_rate <= 1.0, "decay_rate must lie in (0, 1]");
  range(c.decay_step >= 1, "decay_step must be >= 1");
  range(c.log_every >= 1, "log_every must be >= 1");
  range(c.snr_every >= 0, "snr_every must be >= 0");
  range(c.snr_partitions >= 2, "snr_partitions must be >= 2");
}

inline void read_pinn(Reader& r, RunConfig& rc, adapt::Mode mode) {
  auto& c = rc.pinn;
  if (mode == adapt::Mode::Hybrid) throw ConfigError("mode 'vrba_hybrid' is only available for train-op");
  r.get("problem", c.problem);
  const auto problem = pinn::make_problem(c.problem);
  // tabulated sampling smoothing; other problems keep the generic 0.8
  std::optional<double> sampling_phi;
  if (c.problem == "burgers") sampling_phi = 1.0;
  if (c.problem == "allen_cahn") sampling_phi = 0.9;
  read_common(r, c, mode, mode == adapt::Mode::Sampling, sampling_phi);

  nn::MlpConfig net = problem.net;
  auto n = r.child("net");
  n.get("hidden", net.hidden);
  std::string act = nn::to_string(net.activation), emb = nn::to_string(net.embedding);
  n.get("activation", act);
  n.get("embedding", emb);
  n.get("fourier_degree", net.fourier_degree);
  n.reject_unknown();
  net.activation = activation_from_name(act);
  net.embedding = embedding_from_name(emb);
  net.validate();
  c.net = net;

  r.get("n_points", c.n_points);
  r.get("pool_size", c.pool_size);
  r.get("resample_every", c.resample_every);
  r.get("global_weights", c.global_weights);
  r.get("alpha_g", c.alpha_g);
  r.get("gamma_g", c.gamma_g);
  r.get("m_E", c.m_E);
  r.get("gw_data_only", c.gw_data_only);

  range(c.n_points >= 1, "n_points must be >= 1");
  if (mode == adapt::Mode::Sampling) range(c.pool_size >= c.n_points, "pool_size must be >= n_points");
  range(c.resample_every >= 1, "resample_every must be >= 1");
  range(c.alpha_g >= 0.0 && c.alpha_g < 1.0, "alpha_g must lie in [0, 1)");
  range(c.gamma_g >= 0.0 && c.gamma_g < 1.0, "gamma_g must lie in [0, 1)");
  range(c.m_E > 0.0, "m_E must be positive");
}

inline void read_op(Reader& r, RunConfig& rc, adapt::Mode mode) {
  auto& c = rc.op;
  read_common(r, c, mode, mode == adapt::Mode::Sampling);
  r.get("batch", c.batch);
  r.get("n_update", c.n_update);
  range(c.batch >= 1, "batch must be >= 1");
  range(c.n_update >= 1, "n_update must be >= 1");

  auto n = r.child("net");
  n.get("branch_hidden", c.net.branch_hidden);
  n.get("trunk_hidden", c.net.trunk_hidden);
  n.get("width", c.net.width);
  std::string act = nn::to_string(c.net.activation);
  n.get("activation", act);
  n.reject_unknown();
  c.net.activation = activation_from_name(act);
  range(c.net.width >= 1, "net.width must be >= 1");

  r.get("data_path", rc.data_path);
  auto& d = rc.dataset;
  auto ds = r.child("dataset");
  ds.get("n_func", d.n_func);
  ds.get("n_sensor", d.n_sensor);
  ds.get("n_out", d.n_out);
  ds.get("t_end", d.t_end);
  ds.get("length_scale", d.length_scale);
  ds.get("sigma", d.sigma);
  ds.get("mean", d.mean);
  ds.get("ramp_tau", d.ramp_tau);
  ds.get("substeps", d.substeps);
  ds.get("train_frac", d.train_frac);
  ds.get("val_frac", d.val_frac);
  ds.get("seed", d.seed);
  auto ode = ds.child("ode");
  ode.get("r0", d.ode.r0);
  ode.get("damping", d.ode.damping);
  ode.get("stiffness", d.ode.stiffness);
  ode.get("rho", d.ode.rho);
  ode.reject_unknown();
  ds.reject_unknown();
  d.validate();
  c.net.n_sensor = d.n_sensor;
}

}  // namespace detail

/// Builds a validated RunConfig from a JSON object plus command-line overrides.
/// `mode` is the only required key; everything else falls back to the documented defaults.
inline RunConfig parse_config(Command cmd, json j, const Overrides& ov = {}) {
  if (j.is_null()) j = json::object();
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  if (ov.mode) j["mode"] = *ov.mode;
  if (ov.potential) j["potential"] = *ov.potential;
  if (ov.seed) j["seed"] = *ov.seed;
  if (ov.iters) j["iters"] = *ov.iters;
  if (ov.out) j["out"] = *ov.out;

  RunConfig rc;
  rc.command = cmd;
  detail::Reader r(j, "");
  const auto mode = adapt::mode_from_name(r.require<std::string>("mode"));
  r.get("out", rc.out);
  if (cmd == Command::TrainPinn) detail::read_pinn(r, rc, mode);
  else detail::read_op(r, rc, mode);
  r.reject_unknown();
  return rc;
}

inline json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file: " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("invalid JSON in " + path + ": " + e.what());
  }
}

inline RunConfig parse_config_file(Command cmd, const std::string& path, const Overrides& ov = {}) {
  return parse_config(cmd, path.empty() ? json::object() : load_json_file(path), ov);
}

/// Effective configuration with every default spelled out; parsing it again gives the same run.
inline json snapshot(const RunConfig& rc) {
  json j;
  auto common = [&j](const auto& c) {
    j["mode"] = adapt::to_string(c.mode);
    j["potential"] = c.potential.name();
    j["gamma"] = c.gamma;
    j["eta"] = c.eta;
    j["phi"] = c.phi;
    j["anneal_c"] = c.anneal_c;
    j["lambda_max0"] = c.lambda_max0;
    j["lambda_cap"] = c.lambda_cap;
    j["n_stage"] = c.n_stage;
    j["staged"] = c.staged;
    j["iters"] = c.iters;
    j["lr"] = c.lr;
    j["decay_rate"] = c.decay_rate;
    j["decay_step"] = c.decay_step;
    j["log_every"] = c.log_every;
    j["snr_every"] = c.snr_every;
    j["snr_partitions"] = c.snr_partitions;
    j["seed"] = c.seed;
    j["record_wall_time"] = c.record_wall_time;
  };
  j["out"] = rc.out;
  if (rc.command == Command::TrainPinn) {
    const auto& c = rc.pinn;
    common(c);
    j["problem"] = c.problem;
    const nn::MlpConfig net = c.net ? *c.net : pinn::make_problem(c.problem).net;
    j["net"] = {{"hidden", net.hidden},
                {"activation", nn::to_string(net.activation)},
                {"embedding", nn::to_string(net.embedding)},
                {"fourier_degree", net.fourier_degree}};
    j["n_points"] = c.n_points;
    j["pool_size"] = c.pool_size;
    j["resample_every"] = c.resample_every;
    j["global_weights"] = c.global_weights;
    j["alpha_g"] = c.alpha_g;
    j["gamma_g"] = c.gamma_g;
    j["m_E"] = c.m_E;
    j["gw_data_only"] = c.gw_data_only;
  } else {
    const auto& c = rc.op;
    common(c);
    j["batch"] = c.batch;
    j["n_update"] = c.n_update;
    j["net"] = {{"branch_hidden", c.net.branch_hidden},
                {"trunk_hidden", c.net.trunk_hidden},
                {"width", c.net.width},
                {"activation", nn::to_string(c.net.activation)}};
    j["data_path"] = rc.data_path;
    j["dataset"] = op::to_json(rc.dataset);
  }
  return j;
}

}  // namespace vrba::cli
