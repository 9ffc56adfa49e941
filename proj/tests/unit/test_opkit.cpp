#include <cmath>
#include <cstdio>
#include <filesystem>

#include <boost/math/distributions/chi_squared.hpp>
#include <gtest/gtest.h>

#include "vrba/adapt/resample.hpp"
#include "vrba/op/dataset.hpp"
#include "vrba/op/train.hpp"
#include "vrba/op/weights.hpp"

using namespace vrba;

namespace {

op::DatasetConfig small_data(std::uint64_t seed = 1) {
  op::DatasetConfig c;
  c.n_func = 40;
  c.n_sensor = 20;
  c.n_out = 21;
  c.seed = seed;
  return c;
}

op::DeepONetConfig small_net(int n_sensor) {
  op::DeepONetConfig c;
  c.n_sensor = n_sensor;
  c.branch_hidden = {8};
  c.trunk_hidden = {8};
  c.width = 6;
  return c;
}

std::vector<Eigen::Index> idx(std::initializer_list<Eigen::Index> v) { return v; }

}  // namespace

TEST(Kernel, GramMatrixAndFactor) {
  const Eigen::VectorXd t = Eigen::VectorXd::LinSpaced(30, 0.0, 10.0);
  const Eigen::MatrixXd k = op::se_kernel(t, 1.5, 1.0);
  EXPECT_DOUBLE_EQ(k(3, 3), 2.25);
  EXPECT_DOUBLE_EQ(k(2, 7), k(7, 2));
  EXPECT_NEAR(k(0, 1), 2.25 * std::exp(-0.5 * std::pow(10.0 / 29.0, 2)), 1e-15);
  const Eigen::MatrixXd l = op::kernel_factor(k);
  Eigen::MatrixXd kj = k;
  kj.diagonal().array() += 1e-10;
  EXPECT_LT((l * l.transpose() - kj).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_THROW(op::kernel_factor(-Eigen::MatrixXd::Identity(3, 3)), KernelError);
}

TEST(Interpolate, ExactAtNodesAndForQuadratics) {
  const int n = 21;
  const double t_end = 4.0;
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) {
    const double t = t_end * i / (n - 1);
    v(i) = 0.3 * t * t - t + 2.0;
  }
  for (int i = 0; i < n; ++i) EXPECT_NEAR(op::interpolate(v, t_end, t_end * i / (n - 1)), v(i), 1e-14);
  // uniform Catmull-Rom reproduces quadratics away from the clamped ends
  for (double t : {0.5, 1.37, 2.9, 3.6}) EXPECT_NEAR(op::interpolate(v, t_end, t), 0.3 * t * t - t + 2.0, 1e-13);
}

TEST(Rk4, ZeroForcingStaysAtRest) {
  const auto r = op::integrate_rk4([](double) { return 0.0; }, op::OdeCoefficients{}, 10.0, 50, 10);
  EXPECT_TRUE(r.isZero(0.0));
}

TEST(Rk4, ConstantForcingMatchesClosedForm) {
  // r'' + 0.5 r' + 4 r = -F with rest initial state
  op::OdeCoefficients c;
  const double f = 1.3, zeta = 0.25, wd = std::sqrt(4.0 - zeta * zeta), rss = -f / 4.0;
  const auto r = op::integrate_rk4([f](double) { return f; }, c, 10.0, 101, 10);
  for (int i = 0; i < 101; i += 10) {
    const double t = 0.1 * i;
    const double exact = rss * (1.0 - std::exp(-zeta * t) * (std::cos(wd * t) + zeta / wd * std::sin(wd * t)));
    EXPECT_NEAR(r(i), exact, 1e-8);
  }
  const auto late = op::integrate_rk4([f](double) { return f; }, c, 80.0, 81, 20);
  EXPECT_NEAR(late(80), rss, 1e-8);
}

TEST(Rk4, StepHalvingConverges) {
  op::OdeCoefficients c;
  auto forcing = [](double t) { return std::sin(1.7 * t) * (1.0 - std::exp(-2.0 * t)); };
  const auto a = op::integrate_rk4(forcing, c, 10.0, 101, 10);
  const auto b = op::integrate_rk4(forcing, c, 10.0, 101, 20);
  EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-7);
}

TEST(Dataset, ZeroForcingGivesZeroTrajectories) {
  auto cfg = small_data();
  cfg.sigma = 0.0;
  const auto d = op::generate_dataset(cfg);
  // only the 1e-10 jitter survives in the factor, so draws are O(1e-5)
  EXPECT_LT(d.inputs.cwiseAbs().maxCoeff(), 1e-4);
  EXPECT_LT(d.outputs.cwiseAbs().maxCoeff(), 1e-4);
  cfg.sigma = 1.0;
  EXPECT_GT(op::generate_dataset(cfg).inputs.cwiseAbs().maxCoeff(), 0.1);
}

TEST(Dataset, ShapesSplitsAndRampedStart) {
  const auto d = op::generate_dataset(small_data());
  EXPECT_EQ(d.inputs.rows(), 20);
  EXPECT_EQ(d.outputs.rows(), 21);
  EXPECT_EQ(d.n_func(), 40);
  EXPECT_EQ(d.train.size(), 32u);
  EXPECT_EQ(d.val.size(), 4u);
  EXPECT_EQ(d.test.size(), 4u);
  std::vector<Eigen::Index> all(d.train);
  all.insert(all.end(), d.val.begin(), d.val.end());
  all.insert(all.end(), d.test.begin(), d.test.end());
  std::sort(all.begin(), all.end());
  for (Eigen::Index j = 0; j < 40; ++j) EXPECT_EQ(all[static_cast<std::size_t>(j)], j);
  EXPECT_TRUE(d.inputs.row(0).isZero(0.0));
  EXPECT_TRUE(d.outputs.row(0).isZero(0.0));
  EXPECT_GT(d.outputs.cwiseAbs().maxCoeff(), 1e-3);
}

TEST(Dataset, OutputsSolveTheOdeForTheirInputs) {
  const auto d = op::generate_dataset(small_data());
  const auto& c = d.config;
  for (Eigen::Index j : {0, 17}) {
    const Eigen::VectorXd g = d.inputs.col(j);
    auto forcing = [&](double t) { return op::interpolate(g, c.t_end, t); };
    EXPECT_TRUE(op::integrate_rk4(forcing, c.ode, c.t_end, c.n_out, c.substeps) == d.outputs.col(j));
    const auto fine = op::integrate_rk4(forcing, c.ode, c.t_end, c.n_out, 4 * c.substeps);
    EXPECT_LT((fine - d.outputs.col(j)).cwiseAbs().maxCoeff(), 1e-5);
  }
}

TEST(Dataset, DeterministicUnderSeed) {
  const auto a = op::generate_dataset(small_data(5));
  const auto b = op::generate_dataset(small_data(5));
  const auto c = op::generate_dataset(small_data(6));
  EXPECT_TRUE(a.inputs == b.inputs);
  EXPECT_TRUE(a.outputs == b.outputs);
  EXPECT_EQ(a.train, b.train);
  EXPECT_FALSE(a.inputs == c.inputs);
}

TEST(Dataset, SaveLoadRoundTrip) {
  const auto d = op::generate_dataset(small_data(3));
  const auto path = (std::filesystem::temp_directory_path() / "vrba_dataset_test.txt").string();
  op::save_dataset(path, d);
  const auto e = op::load_dataset(path);
  EXPECT_TRUE(e.inputs == d.inputs);
  EXPECT_TRUE(e.outputs == d.outputs);
  EXPECT_EQ(e.train, d.train);
  EXPECT_EQ(e.test, d.test);
  EXPECT_EQ(e.config.seed, 3u);
  std::remove(path.c_str());
}

TEST(Dataset, RejectsBadConfig) {
  auto c = small_data();
  c.train_frac = 0.95;
  c.val_frac = 0.1;
  EXPECT_THROW(op::generate_dataset(c), RangeError);
  c = small_data();
  c.length_scale = 0.0;
  EXPECT_THROW(op::generate_dataset(c), RangeError);
}

TEST(DeepONet, ShapesAndParameterCount) {
  op::DeepONet m(small_net(5));
  EXPECT_EQ(m.num_params(), (5 + 1) * 8 + (8 + 1) * 6 + (1 + 1) * 8 + (8 + 1) * 6);
  const Eigen::VectorXd p = m.init(2);
  const Eigen::MatrixXd pred = m.predict(p, Eigen::MatrixXd::Random(5, 3), Eigen::RowVectorXd::LinSpaced(7, 0, 1));
  EXPECT_EQ(pred.rows(), 7);
  EXPECT_EQ(pred.cols(), 3);
  EXPECT_TRUE(m.predict(Eigen::VectorXd::Zero(m.num_params()), Eigen::MatrixXd::Ones(5, 2),
                        Eigen::RowVectorXd::Ones(4))
                  .isZero(0.0));
  EXPECT_THROW(m.predict(p, Eigen::MatrixXd::Ones(4, 2), Eigen::RowVectorXd::Ones(4)), ShapeError);
}

TEST(DeepONet, BatchedMatchesPointwiseForward) {
  op::DeepONet m(small_net(5));
  const Eigen::VectorXd p = m.init(4);
  const Eigen::MatrixXd v = Eigen::MatrixXd::Random(5, 2);
  const Eigen::RowVectorXd y = Eigen::RowVectorXd::LinSpaced(3, 0.0, 1.0);
  const Eigen::MatrixXd pred = m.predict(p, v, y);
  const Eigen::VectorXd bp = p.head(m.trunk_offset());
  const Eigen::VectorXd tp = p.tail(m.num_params() - m.trunk_offset());
  for (int j = 0; j < 2; ++j)
    for (int i = 0; i < 3; ++i) {
      const Eigen::VectorXd col = v.col(j);
      EXPECT_NEAR(op::deeponet_forward(m.branch(), bp, m.trunk(), tp, std::span(col.data(), 5), y(i)), pred(i, j),
                  1e-14);
    }
}

TEST(DeepONet, HandSetOneWideNetwork) {
  // one hidden unit and one feature in each net
  op::DeepONetConfig c = small_net(2);
  c.branch_hidden = {1};
  c.trunk_hidden = {1};
  c.width = 1;
  c.activation = nn::Activation::Tanh;
  op::DeepONet m(c);
  Eigen::VectorXd p = Eigen::VectorXd::Zero(m.num_params());
  // branch: W1 (1x2), b1, W2 (1x1), b2; trunk: W1 (1x1), b1, W2, b2
  p << 1.0, 1.0, 0.0, 2.0, 0.5, 1.0, 0.0, 3.0, -1.0;
  const Eigen::MatrixXd pred = m.predict(p, (Eigen::MatrixXd(2, 1) << 0.2, 0.3).finished(), Eigen::RowVectorXd::Constant(1, 0.4));
  const double branch = 2.0 * std::tanh(0.5) + 0.5;
  const double trunk = 3.0 * std::tanh(0.4) - 1.0;
  EXPECT_NEAR(pred(0, 0), branch * trunk, 1e-14);
}

TEST(DeepONet, WidthMismatchRejected) {
  nn::MlpConfig b;
  b.input_dim = 3;
  b.hidden = {4};
  b.output_dim = 5;
  nn::MlpConfig t;
  t.input_dim = 1;
  t.hidden = {4};
  t.output_dim = 6;
  nn::Mlp bm(b), tm(t);
  const double v[] = {0.0, 0.0, 0.0};
  EXPECT_THROW(op::deeponet_forward(bm, bm.init(0).values, tm, tm.init(0).values, v, 0.1), ShapeError);
}

TEST(OperatorWeights, ResidualMatrixIsAbsoluteError) {
  op::DeepONet m(small_net(4));
  const Eigen::VectorXd p = m.init(1);
  const Eigen::MatrixXd in = Eigen::MatrixXd::Random(4, 3);
  const Eigen::MatrixXd out = Eigen::MatrixXd::Random(5, 3);
  const Eigen::RowVectorXd y = Eigen::RowVectorXd::LinSpaced(5, 0, 1);
  const auto batch = idx({2, 0});
  const Eigen::MatrixXd r = op::operator_residual_matrix(m, p, in, out, y, batch);
  const Eigen::MatrixXd pred = m.predict(p, in, y);
  EXPECT_EQ(r.cols(), 2);
  EXPECT_TRUE(r.col(0) == (pred.col(2) - out.col(2)).cwiseAbs());
  EXPECT_TRUE(r.col(1) == (pred.col(0) - out.col(0)).cwiseAbs());
}

TEST(OperatorWeights, QMatrixColumnsAreTiltedPmfs) {
  Eigen::MatrixXd r(2, 3);
  r << 1, 0, 0, 3, 0, std::log(2.0);
  const Eigen::MatrixXd qq = op::q_matrix_update(r, adapt::Potential::quadratic(), 1.0);
  EXPECT_DOUBLE_EQ(qq(0, 0), 0.25);
  EXPECT_DOUBLE_EQ(qq(1, 1), 0.5);  // zero column is uniform
  const Eigen::MatrixXd qe = op::q_matrix_update(r, adapt::Potential::exponential(), 1.0);
  EXPECT_NEAR(qe(1, 2), 2.0 / 3.0, 1e-15);
  EXPECT_LT(op::pmf_deviation(qe), 1e-15);
  EXPECT_LT(op::pmf_deviation(qq), 1e-15);
  r(0, 0) = NAN;
  EXPECT_THROW(op::q_matrix_update(r, adapt::Potential::exponential(), 1.0), NonFiniteError);
}

TEST(OperatorWeights, LambdaUpdateHandValues) {
  Eigen::MatrixXd lam = Eigen::MatrixXd::Ones(2, 3);
  Eigen::MatrixXd q(2, 3);
  q << 0.25, 0.9, 0.5, 0.75, 0.1, 0.5;
  // function 1 appears twice; only its first column is used
  op::lambda_matrix_update(lam, q, idx({1, 1, 0}), 0.5, 0.3);
  EXPECT_DOUBLE_EQ(lam(0, 1), 0.5 + 0.3 / 0.75 * 0.25);
  EXPECT_DOUBLE_EQ(lam(1, 1), 0.5 + 0.3);
  EXPECT_DOUBLE_EQ(lam(0, 0), 0.5 + 0.3 / 0.5 * 0.5);
  EXPECT_EQ(lam(0, 2), 1.0);
  EXPECT_EQ(lam(1, 2), 1.0);
}

TEST(OperatorWeights, LambdaUpdateWithSmoothing) {
  Eigen::MatrixXd lam = Eigen::MatrixXd::Zero(2, 1);
  Eigen::MatrixXd q(2, 1);
  q << 1.0, 0.0;
  op::lambda_matrix_update(lam, q, idx({0}), 0.0, 1.0, 0.5);
  EXPECT_DOUBLE_EQ(lam(0, 0), 0.75);
  EXPECT_DOUBLE_EQ(lam(1, 0), 0.25);
}

TEST(OperatorWeights, LambdaUpdateRejectsBadShapes) {
  Eigen::MatrixXd lam = Eigen::MatrixXd::Ones(2, 3);
  EXPECT_THROW(op::lambda_matrix_update(lam, Eigen::MatrixXd::Ones(3, 1), idx({0}), 0.5, 0.1), ShapeError);
  EXPECT_THROW(op::lambda_matrix_update(lam, Eigen::MatrixXd::Ones(2, 1), idx({3}), 0.5, 0.1), ShapeError);
}

TEST(OperatorWeights, LambdaStaysBelowBound) {
  Rng rng(21);
  const double gamma = 0.999, eta = 0.01;
  Eigen::MatrixXd lam = Eigen::MatrixXd::Constant(6, 10, 1.0);
  for (int k = 0; k < 3000; ++k) {
    Eigen::MatrixXd r(6, 4);
    for (Eigen::Index i = 0; i < r.size(); ++i) r(i) = std::abs(rng.normal());
    const Eigen::MatrixXd q = op::q_matrix_update(r, adapt::Potential::exponential(), rng.uniform(0.1, 2.0));
    std::vector<Eigen::Index> b(4);
    for (auto& j : b) j = static_cast<Eigen::Index>(rng.uniform(0.0, 10.0));
    op::lambda_matrix_update(lam, q, b, gamma, eta);
  }
  // each update adds at most eta to an entry, so lambda <= eta / (1 - gamma) = 10
  EXPECT_LT(lam.maxCoeff(), 10.0);
  EXPECT_GT(lam.minCoeff(), 0.0);
}

TEST(FunctionPmf, ColumnSumsNormalized) {
  Eigen::MatrixXd lam(2, 3);
  lam << 1, 0, 2, 1, 4, 0;
  const Eigen::VectorXd q = op::function_pmf(lam);
  EXPECT_DOUBLE_EQ(q(0), 0.25);
  EXPECT_DOUBLE_EQ(q(1), 0.5);
  EXPECT_DOUBLE_EQ(q(2), 0.25);
  const Eigen::VectorXd u = op::function_pmf(Eigen::MatrixXd::Zero(3, 4));
  for (int j = 0; j < 4; ++j) EXPECT_DOUBLE_EQ(u(j), 0.25);
  lam(0, 0) = -1.0;
  EXPECT_THROW(op::function_pmf(lam), DomainError);
}

TEST(FunctionPmf, SamplingPassesChiSquare) {
  Eigen::MatrixXd lam(2, 5);
  lam << 1, 2, 3, 4, 5, 5, 4, 3, 2, 6;
  const Eigen::VectorXd q = op::function_pmf(lam);
  Rng rng(31);
  const std::size_t n = 200000;
  const auto draws = adapt::resample_points(q, n, rng);
  Eigen::VectorXd count = Eigen::VectorXd::Zero(5);
  for (auto j : draws) count(j) += 1.0;
  const Eigen::VectorXd expected = q * static_cast<double>(n);
  const double chi2 = ((count - expected).array().square() / expected.array()).sum();
  const double crit = boost::math::quantile(boost::math::chi_squared(4.0), 0.999);
  EXPECT_LT(chi2, crit);
}

TEST(MeanRelativeL2, HandValue) {
  Eigen::MatrixXd truth(2, 2), pred(2, 2);
  truth << 3, 1, 4, 0;
  pred << 3, 2, 4, 0;
  EXPECT_DOUBLE_EQ(op::mean_relative_l2(pred, truth), 0.5);
  EXPECT_THROW(op::mean_relative_l2(pred, Eigen::MatrixXd::Zero(2, 2)), DegenerateReference);
}

TEST(OpTrainer, HybridRunKeepsInvariants) {
  const auto d = op::generate_dataset(small_data(2));
  op::OpConfig cfg;
  cfg.mode = adapt::Mode::Hybrid;
  cfg.net = small_net(20);
  cfg.iters = 60;
  cfg.batch = 8;
  cfg.n_update = 10;
  cfg.log_every = 20;
  cfg.snr_every = 20;
  cfg.snr_partitions = 4;
  const auto res = op::train_operator(d, cfg);
  EXPECT_TRUE(std::isfinite(res.test_rel_l2));
  EXPECT_LT(res.max_pmf_deviation, 1e-12);
  EXPECT_GT(res.pmf_checks, 60);
  EXPECT_LT(res.max_bound_ratio, 1.0);
  EXPECT_NEAR(res.function_pmf.sum(), 1.0, 1e-12);
  EXPECT_EQ(res.function_pmf.size(), 32);
  ASSERT_EQ(res.records.size(), 4u);
  EXPECT_EQ(res.records.back().iter, 60);
  EXPECT_TRUE(std::isfinite(res.records.front().snr));
}

TEST(OpTrainer, DeterministicUnderSeed) {
  const auto d = op::generate_dataset(small_data(2));
  op::OpConfig cfg;
  cfg.mode = adapt::Mode::Sampling;
  cfg.net = small_net(20);
  cfg.iters = 30;
  cfg.batch = 8;
  cfg.n_update = 5;
  cfg.seed = 4;
  const auto a = op::train_operator(d, cfg);
  const auto b = op::train_operator(d, cfg);
  EXPECT_TRUE(a.params == b.params);
  EXPECT_EQ(a.test_rel_l2, b.test_rel_l2);
  cfg.seed = 5;
  EXPECT_FALSE(op::train_operator(d, cfg).params == a.params);
}

TEST(OpTrainer, BaselineReducesTrainingLoss) {
  const auto d = op::generate_dataset(small_data(2));
  op::OpConfig cfg;
  cfg.net = small_net(20);
  cfg.iters = 400;
  cfg.batch = 8;
  cfg.lr = 3e-3;
  cfg.log_every = 400;
  const auto res = op::train_operator(d, cfg);
  EXPECT_LT(res.records.back().loss_E, 0.5 * res.records.front().loss_E);
}
