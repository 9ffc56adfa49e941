#pragma once

#include <array>
#include <chrono>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "vrba/adapt/anneal.hpp"
#include "vrba/adapt/loss.hpp"
#include "vrba/adapt/mode.hpp"
#include "vrba/adapt/multipliers.hpp"
#include "vrba/adapt/pmf.hpp"
#include "vrba/adapt/resample.hpp"
#include "vrba/diag/metrics.hpp"
#include "vrba/diag/partition.hpp"
#include "vrba/diag/record.hpp"
#include "vrba/optim/adam.hpp"
#include "vrba/optim/global_weights.hpp"
#include "vrba/pinn/problems.hpp"

namespace vrba::pinn {

using adapt::Mode;

struct PinnConfig {
  std::string problem = "poisson";
  Mode mode = Mode::Baseline;
  adapt::Potential potential = adapt::Potential::exponential();
  std::optional<nn::MlpConfig> net;  // problem default when empty

  long iters = 20000;
  int n_points = 256;      // E-term collocation points (batch size in sampling mode)
  int pool_size = 1024;    // full collocation set resampled from in sampling mode
  int resample_every = 100;

  // multiplier EMA
  double gamma = 0.999;
  double eta = 0.01;
  double phi = 0.8;
  double lambda_max0 = 10.0;
  double lambda_cap = 20.0;
  double n_stage = 50000.0;
  bool staged = true;
  double anneal_c = 1.0;

  // optimizer
  double lr = 1e-3;
  double decay_rate = 0.9;
  long decay_step = 5000;

  // global weights
  bool global_weights = true;
  double alpha_g = 0.99975;
  double gamma_g = 0.99;
  double m_E = 1.0;
  bool gw_data_only = false;

  int log_every = 100;
  int snr_every = 100;  // 0 disables the SNR measurement
  int snr_partitions = 8;
  std::uint64_t seed = 0;
  bool record_wall_time = false;
};

struct PinnResult {
  std::vector<diag::RunRecord> records;
  Eigen::VectorXd params;
  nn::MlpConfig net;
  double rel_l2 = diag::kNaN;
  double l_inf = diag::kNaN;
  double variance = diag::kNaN;
  double wall_seconds = 0.0;
  std::array<double, 3> global_weights{1.0, 1.0, 1.0};
  Eigen::VectorXd lambdas_E;
};

namespace detail {

struct Term {
  optim::Term id = optim::Term::E;
  bool active = false;
  ad::Matrix points;          // current training points
  Eigen::VectorXd targets;    // B/D only
  adapt::MultiplierState lam; // per training point (weighting) or per pool point (sampling)
  adapt::AnnealSchedule anneal;
};

inline adapt::AnnealSchedule make_anneal(const adapt::Potential& pot, double c) {
  adapt::AnnealSchedule s;
  s.kind = pot.kind() == adapt::Potential::Kind::Exponential ? adapt::AnnealSchedule::Kind::LogDecay
                                                               : adapt::AnnealSchedule::Kind::QuadraticNormalizer;
  s.c = c;
  return s;
}

inline adapt::MultiplierState make_lambdas(const PinnConfig& c, Eigen::Index n, bool staged) {
  adapt::MultiplierState s;
  s.lambdas = Eigen::VectorXd::Constant(n, 0.1 * c.lambda_max0);
  s.gamma = c.gamma;
  s.eta = c.eta;
  s.phi = c.phi;
  s.lambda_max0 = c.lambda_max0;
  s.lambda_cap = c.lambda_cap;
  s.n_stage = c.n_stage;
  s.staged = staged;
  s.validate();
  return s;
}

inline Eigen::VectorXd abs_row(const ad::Tensor& r) { return r.value().row(0).transpose().cwiseAbs(); }

}  // namespace detail

/// Adaptive PINN training: residual evaluation per term, tilted p.m.f.s, EMA multipliers,
/// weighted or resampled losses, gradient-norm global weights and Adam steps.
class PinnTrainer {
 public:
  PinnTrainer(PinnProblem problem, PinnConfig cfg)
      : prob_(std::move(problem)), cfg_(std::move(cfg)), net_(cfg_.net.value_or(prob_.net)), rng_(cfg_.seed) {
    if (cfg_.mode == Mode::Hybrid) throw ConfigError("mode 'vrba_hybrid' applies to operator training only");
    if (net_.config().input_dim != prob_.dim) throw ShapeError("network input width does not match problem");
    if (cfg_.iters < 0 || cfg_.n_points < 1 || cfg_.log_every < 1) throw RangeError("non-positive training sizes");
    theta_ = net_.init(rng_.split("init").engine()()).values;

    const bool weighting = cfg_.mode == Mode::Weighting;
    Rng colloc = rng_.split("collocation");
    term_[0].id = optim::Term::E;
    term_[0].active = true;
    if (cfg_.mode == Mode::Sampling) {
      pool_ = uniform_points(prob_.lo, prob_.hi, cfg_.pool_size, colloc);
      term_[0].lam = detail::make_lambdas(cfg_, cfg_.pool_size, false);
      term_[0].points = pool_.leftCols(cfg_.n_points);
    } else {
      term_[0].points = uniform_points(prob_.lo, prob_.hi, cfg_.n_points, colloc);
      term_[0].lam = detail::make_lambdas(cfg_, cfg_.n_points, weighting && cfg_.staged);
    }
    term_[0].anneal = detail::make_anneal(cfg_.potential, cfg_.anneal_c);
    const std::optional<TermData>* extra[2] = {&prob_.boundary, &prob_.data};
    for (int a = 1; a < 3; ++a) {
      Term& t = term_[static_cast<std::size_t>(a)];
      t.id = static_cast<optim::Term>(a);
      if (!extra[a - 1]->has_value()) continue;
      t.active = true;
      t.points = (*extra[a - 1])->points;
      t.targets = (*extra[a - 1])->targets;
      t.lam = detail::make_lambdas(cfg_, t.points.cols(), weighting && cfg_.staged);
      t.anneal = detail::make_anneal(cfg_.potential, cfg_.anneal_c);
    }

    adam_.lr = cfg_.lr;
    adam_.decay_rate = cfg_.decay_rate;
    adam_.decay_step = cfg_.decay_step;
    gw_.m = {cfg_.m_E, 1.0, 1.0};
    gw_.alpha_g = cfg_.alpha_g;
    gw_.gamma_g = cfg_.gamma_g;
    gw_.data_only = cfg_.gw_data_only;

    if (prob_.reference) reference_ = prob_.reference(prob_.eval_points);
    snr_rng_ = rng_.split("snr");
    sample_rng_ = rng_.split("resample");
  }

  const nn::Mlp& net() const { return net_; }
  const Eigen::VectorXd& params() const { return theta_; }
  const ad::Matrix& training_points() const { return term_[0].points; }
  const adapt::MultiplierState& multipliers(optim::Term t) const { return term_[static_cast<std::size_t>(t)].lam; }

  PinnResult run(const std::function<void(const diag::RunRecord&)>& on_record = {}) {
    using clock = std::chrono::steady_clock;
    start_ = clock::now();
    PinnResult res;
    res.net = net_.config();
    auto emit = [&](diag::RunRecord r) {
      if (cfg_.record_wall_time) {
        r.wall_ms = std::chrono::duration<double, std::milli>(clock::now() - start_).count();
      }
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
    emit(final_record());
    res.params = theta_;
    res.rel_l2 = last_.rel_l2;
    res.l_inf = last_.l_inf;
    res.variance = last_.variance;
    res.global_weights = gw_.m;
    res.lambdas_E = term_[0].lam.lambdas;
    res.wall_seconds = std::chrono::duration<double>(clock::now() - start_).count();
    return res;
  }

  /// One training iteration; returns a record (state before the update) when `log` is set.
  std::optional<diag::RunRecord> step(long k, bool log) {
    if (cfg_.mode == Mode::Sampling && k % cfg_.resample_every == 0) resample(k);

    ad::Tape tape;
    ad::Tensor p = tape.variable(theta_);
    ad::Field u = prob_.model(net_, p);
    std::array<ad::Tensor, 3> loss;
    std::array<Eigen::VectorXd, 3> rabs;
    for (std::size_t a = 0; a < 3; ++a) {
      Term& t = term_[a];
      if (!t.active) continue;
      ad::Tensor r = term_residual(tape, u, t);
      rabs[a] = detail::abs_row(r);
      if (cfg_.mode == Mode::Weighting) {
        const double eps = t.anneal.next(k, rabs[a]);
        const Eigen::VectorXd q = adapt::tilted_pmf_or_uniform(rabs[a], cfg_.potential, eps);
        adapt::update_multipliers(t.lam, q, k);
        loss[a] = adapt::weighted_loss(r, t.lam.lambdas);
      } else {
        loss[a] = adapt::mse(r);
      }
    }

    std::array<Eigen::VectorXd, 3> grads;
    std::array<std::optional<double>, 3> norms;
    std::array<double, 3> lv{diag::kNaN, diag::kNaN, diag::kNaN};
    for (std::size_t a = 0; a < 3; ++a) {
      if (!term_[a].active) continue;
      lv[a] = loss[a].item();
      grads[a] = tape.gradient(loss[a], p).col(0);
      norms[a] = grads[a].norm();
    }
    for (std::size_t a = 0; a < 3; ++a) {
      if (term_[a].active && std::isnan(lv[a])) abort("loss became NaN");
    }
    if (cfg_.global_weights) gw_.update(norms);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(theta_.size());
    for (std::size_t a = 0; a < 3; ++a) {
      if (term_[a].active) g += gw_.m[a] * grads[a];
    }

    std::optional<diag::RunRecord> rec;
    if (log) {
      rec = diag::RunRecord{};
      rec->iter = k;
      rec->loss_E = lv[0];
      rec->loss_B = lv[1];
      rec->loss_D = lv[2];
      rec->epsilon = cfg_.mode == Mode::Weighting ? term_[0].anneal.epsilon : diag::kNaN;
      fill_eval(*rec);
      if (cfg_.snr_every > 0 && k % cfg_.snr_every == 0) rec->snr = measure_snr();
    }
    adam_.step(theta_, g);
    return rec;
  }

  /// Record for the current parameters without updating any state.
  diag::RunRecord final_record() {
    diag::RunRecord r;
    r.iter = cfg_.iters;
    ad::Tape tape;
    ad::Tensor p = tape.constant(theta_);
    ad::Field u = prob_.model(net_, p);
    double* slots[3] = {&r.loss_E, &r.loss_B, &r.loss_D};
    for (std::size_t a = 0; a < 3; ++a) {
      const Term& t = term_[a];
      if (!t.active) continue;
      ad::Tensor res = term_residual(tape, u, t);
      *slots[a] = cfg_.mode == Mode::Weighting ? adapt::weighted_loss(res, t.lam.lambdas).item()
                                               : adapt::mse(res).item();
    }
    r.epsilon = cfg_.mode == Mode::Weighting ? term_[0].anneal.epsilon : diag::kNaN;
    fill_eval(r);
    if (cfg_.snr_every > 0 && cfg_.iters % cfg_.snr_every == 0) r.snr = measure_snr();
    return r;
  }

  /// |residual| of the E term on the evaluation grid.
  Eigen::VectorXd eval_residuals() const {
    ad::Tape tape;
    ad::Tensor p = tape.constant(theta_);
    ad::Field u = prob_.model(net_, p);
    auto in = ad::seed_inputs(tape, prob_.eval_points, prob_.pattern);
    return detail::abs_row(prob_.residual(in, u(in)));
  }

  Eigen::VectorXd eval_prediction() const {
    ad::Tape tape;
    ad::Tensor p = tape.constant(theta_);
    ad::Field u = prob_.model(net_, p);
    auto in = ad::seed_inputs(tape, prob_.eval_points, ad::JetPattern::full(prob_.dim, 0));
    return u(in).v.value().row(0).transpose();
  }

 private:
  using Term = detail::Term;

  ad::Tensor term_residual(ad::Tape& tape, const ad::Field& u, const Term& t) const {
    if (t.id == optim::Term::E) {
      auto in = ad::seed_inputs(tape, t.points, prob_.pattern);
      return prob_.residual(in, u(in));
    }
    auto in = ad::seed_inputs(tape, t.points, ad::JetPattern::full(prob_.dim, 0));
    return u(in).v - tape.constant(t.targets.transpose());
  }

  void resample(long k) {
    Term& t = term_[0];
    ad::Tape tape;
    ad::Tensor p = tape.constant(theta_);
    ad::Field u = prob_.model(net_, p);
    auto in = ad::seed_inputs(tape, pool_, prob_.pattern);
    const Eigen::VectorXd r = detail::abs_row(prob_.residual(in, u(in)));
    const double eps = t.anneal.next(k, r);
    adapt::update_multipliers(t.lam, adapt::tilted_pmf_or_uniform(r, cfg_.potential, eps), k);
    const auto idx = adapt::resample_points(t.lam.lambdas, static_cast<std::size_t>(cfg_.n_points), sample_rng_);
    for (std::size_t j = 0; j < idx.size(); ++j) t.points.col(static_cast<Eigen::Index>(j)) = pool_.col(idx[j]);
  }

  void fill_eval(diag::RunRecord& r) const {
    const Eigen::VectorXd res = eval_residuals();
    r.variance = diag::residual_variance(res);
    if (reference_.size() > 0) {
      const auto e = diag::error_norms(eval_prediction(), reference_);
      r.rel_l2 = e.rel_l2;
      r.l_inf = e.l_inf;
      const double rms = e.rel_l2 * reference_.norm() / std::sqrt(static_cast<double>(reference_.size()));
      if (!(r.l_inf >= rms * (1.0 - 1e-12))) {
        throw Error("internal check failed: max error below RMS error");
      }
    }
  }

  /// SNR of the E-term objective over shuffled equal partitions of its training points.
  double measure_snr() {
    const Term& t = term_[0];
    const Eigen::Index n = t.points.cols();
    if (n % cfg_.snr_partitions != 0) return diag::kNaN;
    auto scheme = diag::PartitionScheme::shuffled(n, static_cast<std::size_t>(cfg_.snr_partitions), snr_rng_);
    const bool weighted = cfg_.mode == Mode::Weighting;
    diag::SubsetLoss loss = [&](ad::Tape& tape, const ad::Tensor& p, std::span<const Eigen::Index> idx) {
      ad::Matrix pts(t.points.rows(), static_cast<Eigen::Index>(idx.size()));
      Eigen::VectorXd lam(static_cast<Eigen::Index>(idx.size()));
      for (std::size_t j = 0; j < idx.size(); ++j) {
        pts.col(static_cast<Eigen::Index>(j)) = t.points.col(idx[j]);
        lam(static_cast<Eigen::Index>(j)) = weighted ? t.lam.lambdas(idx[j]) : 1.0;
      }
      ad::Field u = prob_.model(net_, p);
      auto in = ad::seed_inputs(tape, pts, prob_.pattern);
      ad::Tensor r = prob_.residual(in, u(in));
      return weighted ? adapt::weighted_loss(r, lam) : adapt::mse(r);
    };
    return diag::snr(diag::partition_gradients(loss, theta_, scheme));
  }

  [[noreturn]] void abort(const std::string& why) const {
    throw TrainingAborted(why + "; last record: " + diag::kCsvHeader + " | " + diag::csv_row(last_));
  }

  PinnProblem prob_;
  PinnConfig cfg_;
  nn::Mlp net_;
  Rng rng_;
  Rng snr_rng_{0};
  Rng sample_rng_{0};
  Eigen::VectorXd theta_;
  ad::Matrix pool_;
  std::array<Term, 3> term_;
  optim::Adam adam_;
  optim::GlobalWeights gw_;
  Eigen::VectorXd reference_;
  diag::RunRecord last_;
  std::chrono::steady_clock::time_point start_;
};

inline PinnResult train_pinn(const PinnProblem& problem, const PinnConfig& cfg,
                             const std::function<void(const diag::RunRecord&)>& on_record = {}) {
  PinnTrainer t(problem, cfg);
  return t.run(on_record);
}

}  // namespace vrba::pinn
