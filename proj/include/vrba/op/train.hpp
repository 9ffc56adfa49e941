#pragma once

#include <chrono>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "vrba/adapt/anneal.hpp"
#include "vrba/adapt/mode.hpp"
#include "vrba/adapt/multipliers.hpp"
#include "vrba/diag/metrics.hpp"
#include "vrba/diag/partition.hpp"
#include "vrba/diag/record.hpp"
#include "vrba/op/dataset.hpp"
#include "vrba/op/weights.hpp"
#include "vrba/optim/adam.hpp"

namespace vrba::op {

using adapt::Mode;

struct OpConfig {
  Mode mode = Mode::Baseline;
  adapt::Potential potential = adapt::Potential::exponential();
  DeepONetConfig net;
  long iters = 30000;
  int batch = 32;  // b_u functions per iteration

  double gamma = 0.999;
  double eta = 0.01;
  double phi = 0.8;
  double lambda_max0 = 10.0;
  double lambda_cap = 20.0;
  double n_stage = 50000.0;
  bool staged = true;
  double anneal_c = 1.0;
  int n_update = 100;

  double lr = 1e-3;
  double decay_rate = 0.9;
  long decay_step = 5000;

  int log_every = 100;
  int snr_every = 100;  // 0 disables the SNR measurement
  int snr_partitions = 8;
  std::uint64_t seed = 0;
  bool record_wall_time = false;

  bool uses_weights() const { return mode == Mode::Weighting || mode == Mode::Hybrid; }
  bool uses_sampling() const { return mode == Mode::Sampling || mode == Mode::Hybrid; }
};

struct OpResult {
  std::vector<diag::RunRecord> records;
  Eigen::VectorXd params;
  double test_rel_l2 = diag::kNaN;
  double val_rel_l2 = diag::kNaN;
  /// Largest deviation of any Q column or of q-bar from an exact p.m.f. over all checks.
  double max_pmf_deviation = 0.0;
  long pmf_checks = 0;
  /// max over updates of Lambda_ij * (1 - gamma) / eta*_j, which must stay below 1.
  double max_bound_ratio = 0.0;
  Eigen::VectorXd function_pmf;
  double wall_seconds = 0.0;
};

/// Mean over functions of ||pred - true|| / ||true|| on the output grid.
inline double mean_relative_l2(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& truth) {
  if (pred.rows() != truth.rows() || pred.cols() != truth.cols()) throw ShapeError("mean_relative_l2: shape mismatch");
  double s = 0.0;
  for (Eigen::Index j = 0; j < truth.cols(); ++j) {
    const double n = truth.col(j).norm();
    if (n == 0.0) throw DegenerateReference("test function with zero output norm");
    s += (pred.col(j) - truth.col(j)).norm() / n;
  }
  return s / static_cast<double>(truth.cols());
}

/// Operator training with spatial importance weights and function-level sampling.
class OpTrainer {
 public:
  OpTrainer(const Dataset& data, OpConfig cfg)
      : data_(data), cfg_(std::move(cfg)), model_(with_sensors(cfg_.net, data.inputs.rows())), rng_(cfg_.seed) {
    if (data_.train.empty() || data_.test.empty()) throw ConfigError("dataset needs train and test functions");
    if (cfg_.batch < 1 || cfg_.iters < 0 || cfg_.log_every < 1 || cfg_.n_update < 1) {
      throw RangeError("non-positive training sizes");
    }
    theta_ = model_.init(rng_.split("init").engine()());
    coords_ = (data_.t_out / data_.config.t_end).transpose();
    train_in_ = gather(data_.inputs, data_.train);
    train_out_ = gather(data_.outputs, data_.train);
    const auto nf = static_cast<Eigen::Index>(data_.train.size());
    lambdas_ = Eigen::MatrixXd::Constant(train_out_.rows(), nf, 0.1 * cfg_.lambda_max0);
    qbar_ = Eigen::VectorXd::Constant(nf, 1.0 / static_cast<double>(nf));
    sched_.lambdas = Eigen::VectorXd::Zero(1);
    sched_.gamma = cfg_.gamma;
    sched_.eta = cfg_.eta;
    sched_.phi = cfg_.phi;
    sched_.lambda_max0 = cfg_.lambda_max0;
    sched_.lambda_cap = cfg_.lambda_cap;
    sched_.n_stage = cfg_.n_stage;
    sched_.staged = cfg_.staged && cfg_.uses_weights();
    sched_.validate();
    anneal_.kind = cfg_.potential.kind() == adapt::Potential::Kind::Exponential
                       ? adapt::AnnealSchedule::Kind::LogDecay
                       : adapt::AnnealSchedule::Kind::QuadraticNormalizer;
    anneal_.c = cfg_.anneal_c;
    adam_.lr = cfg_.lr;
    adam_.decay_rate = cfg_.decay_rate;
    adam_.decay_step = cfg_.decay_step;
    batch_rng_ = rng_.split("batch");
    snr_rng_ = rng_.split("snr");
  }

  const DeepONet& model() const { return model_; }
  const Eigen::VectorXd& params() const { return theta_; }
  const Eigen::MatrixXd& lambdas() const { return lambdas_; }
  const Eigen::VectorXd& qbar() const { return qbar_; }

  OpResult run(const std::function<void(const diag::RunRecord&)>& on_record = {}) {
    using clock = std::chrono::steady_clock;
    const auto start = clock::now();
    OpResult res;
    auto emit = [&](diag::RunRecord r) {
      if (cfg_.record_wall_time) r.wall_ms = std::chrono::duration<double, std::milli>(clock::now() - start).count();
      last_ = r;
      res.records.push_back(r);
      if (on_record) on_record(r);
    };
    for (long k = 0; k < cfg_.iters; ++k) {
      std::optional<diag::RunRecord> rec;
      try {
        rec = step(k, k % cfg_.log_every == 0);
      } catch (const NonFiniteError& e) {
        abort(std::string("non-finite value during training: ") + e.what());
      }
      if (rec) emit(*rec);
    }
    diag::RunRecord fin;
    fin.iter = cfg_.iters;
    fin.loss_E = full_train_loss();
    fill_eval(fin);
    fin.epsilon = cfg_.uses_weights() || cfg_.uses_sampling() ? anneal_.epsilon : diag::kNaN;
    emit(fin);
    res.params = theta_;
    res.test_rel_l2 = fin.rel_l2;
    res.val_rel_l2 = data_.val.empty() ? diag::kNaN : split_rel_l2(data_.val);
    res.max_pmf_deviation = max_pmf_dev_;
    res.pmf_checks = pmf_checks_;
    res.max_bound_ratio = max_bound_ratio_;
    res.function_pmf = qbar_;
    res.wall_seconds = std::chrono::duration<double>(clock::now() - start).count();
    return res;
  }

  std::optional<diag::RunRecord> step(long k, bool log) {
    const std::vector<Eigen::Index> batch = draw_batch();
    const auto b = static_cast<Eigen::Index>(batch.size());

    ad::Tape tape;
    ad::Tensor p = tape.variable(theta_);
    ad::Tensor r = residual(tape, p, batch);
    const bool adaptive = cfg_.uses_weights() || cfg_.uses_sampling();
    Eigen::MatrixXd lam_b;
    if (adaptive) {
      const Eigen::MatrixXd rabs = r.value().cwiseAbs();
      const double eps = anneal_.next(k, rabs.reshaped());
      const Eigen::MatrixXd q = q_matrix_update(rabs, cfg_.potential, eps);
      track_pmf(q);
      const double g = sched_.gamma_at(k);
      lambda_matrix_update(lambdas_, q, batch, g, cfg_.eta, cfg_.phi);
      track_bound(q, batch, g);
      lam_b.resize(lambdas_.rows(), b);
      for (Eigen::Index c = 0; c < b; ++c) lam_b.col(c) = lambdas_.col(batch[static_cast<std::size_t>(c)]);
    }
    ad::Tensor loss = cfg_.uses_weights() ? ad::mean(ad::square(tape.constant(lam_b) * r)) : ad::mean(ad::square(r));
    const double lv = loss.item();
    if (std::isnan(lv)) abort("loss became NaN");
    const Eigen::VectorXd g = tape.gradient(loss, p).col(0);

    std::optional<diag::RunRecord> rec;
    if (log) {
      rec = diag::RunRecord{};
      rec->iter = k;
      rec->loss_E = lv;
      rec->epsilon = adaptive ? anneal_.epsilon : diag::kNaN;
      fill_eval(*rec);
      if (cfg_.snr_every > 0 && k % cfg_.snr_every == 0) rec->snr = measure_snr(batch, lam_b);
    }
    adam_.step(theta_, g);

    if (cfg_.uses_sampling() && k % cfg_.n_update == 0) {
      qbar_ = function_pmf(lambdas_);
      track_pmf(qbar_);
    }
    return rec;
  }

  Eigen::MatrixXd predict(std::span<const Eigen::Index> idx) const {
    return model_.predict(theta_, gather(data_.inputs, idx), coords_);
  }

  double split_rel_l2(std::span<const Eigen::Index> idx) const {
    return mean_relative_l2(predict(idx), gather(data_.outputs, idx));
  }

 private:
  static DeepONetConfig with_sensors(DeepONetConfig c, Eigen::Index n) {
    c.n_sensor = static_cast<int>(n);
    return c;
  }

  static Eigen::MatrixXd gather(const Eigen::MatrixXd& m, std::span<const Eigen::Index> idx) {
    Eigen::MatrixXd out(m.rows(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t j = 0; j < idx.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = m.col(idx[j]);
    return out;
  }

  /// Indices into the training set; i.i.d. from q-bar (with replacement) or uniform.
  std::vector<Eigen::Index> draw_batch() {
    std::vector<Eigen::Index> out(static_cast<std::size_t>(cfg_.batch));
    if (cfg_.uses_sampling()) {
      std::discrete_distribution<Eigen::Index> dist(qbar_.data(), qbar_.data() + qbar_.size());
      for (auto& j : out) j = dist(batch_rng_.engine());
    } else {
      std::uniform_int_distribution<Eigen::Index> dist(0, static_cast<Eigen::Index>(data_.train.size()) - 1);
      for (auto& j : out) j = dist(batch_rng_.engine());
    }
    return out;
  }

  /// Signed residual G(v_j)(x_i) - u_j(x_i) for training-set columns `batch`.
  ad::Tensor residual(ad::Tape& tape, const ad::Tensor& p, std::span<const Eigen::Index> batch) const {
    ad::Tensor v = tape.constant(gather(train_in_, batch));
    ad::Tensor u = tape.constant(gather(train_out_, batch));
    return model_(p, v, tape.constant(coords_)) - u;
  }

  double full_train_loss() const {
    const Eigen::MatrixXd r = model_.predict(theta_, train_in_, coords_) - train_out_;
    return r.array().square().mean();
  }

  void fill_eval(diag::RunRecord& rec) const {
    const Eigen::MatrixXd pred = predict(data_.test);
    const Eigen::MatrixXd truth = gather(data_.outputs, data_.test);
    rec.rel_l2 = mean_relative_l2(pred, truth);
    rec.l_inf = (pred - truth).cwiseAbs().maxCoeff();
    const Eigen::MatrixXd r = (model_.predict(theta_, train_in_, coords_) - train_out_).cwiseAbs();
    rec.variance = diag::residual_variance(r.reshaped());
  }

  double measure_snr(const std::vector<Eigen::Index>& batch, const Eigen::MatrixXd& lam_b) {
    const auto b = static_cast<Eigen::Index>(batch.size());
    if (b % cfg_.snr_partitions != 0 || b / cfg_.snr_partitions < 1) return diag::kNaN;
    auto scheme = diag::PartitionScheme::shuffled(b, static_cast<std::size_t>(cfg_.snr_partitions), snr_rng_);
    const bool weighted = cfg_.uses_weights();
    diag::SubsetLoss loss = [&](ad::Tape& tape, const ad::Tensor& p, std::span<const Eigen::Index> cols) {
      std::vector<Eigen::Index> sub;
      Eigen::MatrixXd lam(train_out_.rows(), static_cast<Eigen::Index>(cols.size()));
      for (std::size_t c = 0; c < cols.size(); ++c) {
        sub.push_back(batch[static_cast<std::size_t>(cols[c])]);
        if (weighted) lam.col(static_cast<Eigen::Index>(c)) = lam_b.col(cols[c]);
      }
      ad::Tensor r = residual(tape, p, sub);
      return weighted ? ad::mean(ad::square(tape.constant(lam) * r)) : ad::mean(ad::square(r));
    };
    return diag::snr(diag::partition_gradients(loss, theta_, scheme));
  }

  void track_pmf(const Eigen::MatrixXd& q) {
    max_pmf_dev_ = std::max(max_pmf_dev_, pmf_deviation(q));
    ++pmf_checks_;
  }

  void track_bound(const Eigen::MatrixXd& q, std::span<const Eigen::Index> batch, double gamma) {
    for (std::size_t c = 0; c < batch.size(); ++c) {
      const double es = cfg_.eta / q.col(static_cast<Eigen::Index>(c)).maxCoeff();
      const double ratio = lambdas_.col(batch[c]).maxCoeff() * (1.0 - gamma) / es;
      max_bound_ratio_ = std::max(max_bound_ratio_, ratio);
    }
  }

  [[noreturn]] void abort(const std::string& why) const {
    throw TrainingAborted(why + "; last record: " + diag::kCsvHeader + " | " + diag::csv_row(last_));
  }

  const Dataset& data_;
  OpConfig cfg_;
  DeepONet model_;
  Rng rng_;
  Rng batch_rng_{0};
  Rng snr_rng_{0};
  Eigen::VectorXd theta_;
  Eigen::RowVectorXd coords_;
  Eigen::MatrixXd train_in_, train_out_;
  Eigen::MatrixXd lambdas_;
  Eigen::VectorXd qbar_;
  adapt::MultiplierState sched_;
  adapt::AnnealSchedule anneal_;
  optim::Adam adam_;
  double max_pmf_dev_ = 0.0;
  long pmf_checks_ = 0;
  double max_bound_ratio_ = 0.0;
  diag::RunRecord last_;
};

inline OpResult train_operator(const Dataset& data, const OpConfig& cfg,
                               const std::function<void(const diag::RunRecord&)>& on_record = {}) {
  OpTrainer t(data, cfg);
  return t.run(on_record);
}

}  // namespace vrba::op
