#include <cmath>
#include <functional>
#include <numbers>

#include <gtest/gtest.h>

#include "vrba/ad/derivatives.hpp"
#include "vrba/nn/mlp.hpp"

using namespace vrba;
using ad::Jet;
using ad::Matrix;
using ad::Tape;
using ad::Tensor;

namespace {

double rel_err(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return (a - b).norm() / std::max(b.norm(), 1e-300);
}

Eigen::VectorXd central_diff(const std::function<double(const Eigen::VectorXd&)>& f, Eigen::VectorXd x, double h) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double xi = x(i);
    x(i) = xi + h;
    const double fp = f(x);
    x(i) = xi - h;
    const double fm = f(x);
    x(i) = xi;
    g(i) = (fp - fm) / (2 * h);
  }
  return g;
}

double eval_loss(const ad::LossFn& fn, const Eigen::VectorXd& p) {
  Tape t;
  return fn(t, t.constant(p)).item();
}

nn::MlpConfig small_net(int in, std::vector<int> hidden) {
  nn::MlpConfig c;
  c.input_dim = in;
  c.hidden = std::move(hidden);
  return c;
}

}  // namespace

TEST(ParamGradient, SquareOfFirstParameter) {
  Eigen::VectorXd p(2);
  p << 3.0, -1.0;
  auto g = ad::param_gradient([](Tape&, const Tensor& th) { return ad::square(ad::view(th, 0, 1, 1)); }, p);
  ASSERT_EQ(g.size(), 2);
  EXPECT_DOUBLE_EQ(g(0), 6.0);
  EXPECT_DOUBLE_EQ(g(1), 0.0);
}

TEST(ParamGradient, ConstantLossGivesZero) {
  Eigen::VectorXd p = Eigen::VectorXd::Random(4);
  auto g = ad::param_gradient([](Tape& t, const Tensor&) { return t.scalar(7.0); }, p);
  EXPECT_EQ(g.size(), 4);
  EXPECT_EQ(g.norm(), 0.0);
}

TEST(ParamGradient, TanhMlpMseMatchesFiniteDifferences) {
  nn::Mlp net(small_net(2, {16}));
  Matrix pts = Matrix::Random(2, 8);
  Eigen::RowVectorXd target = Eigen::RowVectorXd::Random(8);
  ad::LossFn loss = [&](Tape& t, const Tensor& p) {
    auto in = ad::seed_inputs(t, pts, ad::JetPattern::full(2, 0));
    Tensor u = net(p, in).v;
    return ad::mean(ad::square(u - t.constant(target)));
  };
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Eigen::VectorXd p = net.init(seed).values;
    const auto g = ad::param_gradient(loss, p);
    const auto fd = central_diff([&](const Eigen::VectorXd& q) { return eval_loss(loss, q); }, p, 1e-5);
    EXPECT_LT(rel_err(g, fd), 1e-6) << "seed " << seed;
  }
}

TEST(ParamGradient, NonFiniteValueNamesPrimitive) {
  Eigen::VectorXd p(1);
  p << -1.0;
  try {
    ad::param_gradient([](Tape&, const Tensor& th) { return ad::sum(ad::log(th)); }, p);
    FAIL() << "expected NonFiniteError";
  } catch (const NonFiniteError& e) {
    EXPECT_NE(std::string(e.what()).find("'log'"), std::string::npos);
  }
}

TEST(ParamGradient, GradientOfSumIsSumOfGradients) {
  Eigen::VectorXd p = Eigen::VectorXd::Random(5);
  ad::LossFn f1 = [](Tape&, const Tensor& th) { return ad::sum(ad::tanh(th)); };
  ad::LossFn f2 = [](Tape&, const Tensor& th) { return ad::mean(ad::square(ad::sin(th))); };
  ad::LossFn both = [&](Tape& t, const Tensor& th) { return f1(t, th) + f2(t, th); };
  const Eigen::VectorXd lhs = ad::param_gradient(both, p);
  const Eigen::VectorXd rhs = ad::param_gradient(f1, p) + ad::param_gradient(f2, p);
  EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Tape, ReverseSweepVisitsEachNodeOnce) {
  Tape t;
  Tensor x = t.variable(Matrix::Constant(1, 1, 2.0));
  int calls = 0;
  Tensor y = t.record(Matrix::Constant(1, 1, 4.0), "counted", true, [&calls, xi = x.id()](Tape& tp, std::size_t self) {
    ++calls;
    tp.accumulate(xi, 2.0 * tp.adjoint(self));
  });
  // diamond: y feeds two branches that rejoin
  Tensor z = ad::tanh(y) + ad::exp(ad::affine(y, 0.1));
  Matrix g = t.gradient(ad::sum(z), x);
  EXPECT_EQ(calls, 1);
  const double expect = 2.0 * ((1 - std::pow(std::tanh(4.0), 2)) + 0.1 * std::exp(0.4));
  EXPECT_NEAR(g(0, 0), expect, 1e-14);
}

TEST(Tape, BroadcastingAndMatmulGradients) {
  Eigen::VectorXd p = Eigen::VectorXd::Random(3 * 4 + 4 * 2 + 1);
  ad::LossFn f = [](Tape&, const Tensor& th) {
    Tensor a = ad::view(th, 0, 3, 4);
    Tensor b = ad::view(th, 12, 4, 2);
    Tensor s = ad::view(th, 20, 1, 1);
    Tensor c = ad::matmul(a, b);
    Tensor d = ad::div(c * s, ad::affine(ad::square(s), 1.0, 2.0));
    return ad::sum(ad::sqrt(ad::affine(ad::square(ad::transpose(d)), 1.0, 1.0)));
  };
  const auto g = ad::param_gradient(f, p);
  const auto fd = central_diff([&](const Eigen::VectorXd& q) { return eval_loss(f, q); }, p, 1e-6);
  EXPECT_LT(rel_err(g, fd), 1e-8);
}

TEST(Tape, ConcatSelectAndBias) {
  Eigen::VectorXd p = Eigen::VectorXd::Random(9);
  ad::LossFn f = [](Tape&, const Tensor& th) {
    Tensor a = ad::view(th, 0, 2, 3);
    Tensor v = ad::view(th, 6, 3, 1);
    Tensor s = ad::concat_rows({a, ad::transpose(v)});
    Tensor w = ad::add_colvec(s, v);
    const Eigen::Index idx[] = {2, 0, 2};
    return ad::sum(ad::cos(ad::select_cols(w, idx)));
  };
  const auto g = ad::param_gradient(f, p);
  const auto fd = central_diff([&](const Eigen::VectorXd& q) { return eval_loss(f, q); }, p, 1e-6);
  EXPECT_LT(rel_err(g, fd), 1e-8);
}

TEST(Primitives, SinpiCospiExactAtSpecialPoints) {
  for (int k = -4; k <= 4; ++k) {
    EXPECT_EQ(ad::sinpi(static_cast<double>(k)), 0.0);
    EXPECT_EQ(ad::cospi(k + 0.5), 0.0);
  }
  EXPECT_EQ(ad::sinpi(0.5), 1.0);
  EXPECT_EQ(ad::sinpi(-0.5), -1.0);
  EXPECT_NEAR(ad::sinpi(0.3), std::sin(0.3 * std::numbers::pi), 1e-15);
  EXPECT_NEAR(ad::cospi(2.3), std::cos(2.3 * std::numbers::pi), 1e-14);
}

TEST(Primitives, AbsSmoothAtZero) {
  Eigen::VectorXd p(3);
  p << -2.0, 0.0, 3.0;
  auto g = ad::param_gradient([](Tape&, const Tensor& th) { return ad::sum(ad::abs_smooth(th, 0.0)); }, p);
  EXPECT_EQ(g(0), -1.0);
  EXPECT_EQ(g(1), 0.0);
  EXPECT_EQ(g(2), 1.0);
  auto g2 = ad::param_gradient([](Tape&, const Tensor& th) { return ad::sum(ad::abs_smooth(th, 0.5)); }, p);
  EXPECT_NEAR(g2(0), -2.0 / std::sqrt(4.25), 1e-15);
}

// Forward-mode (jet tangent) vs reverse-mode derivative of each elementwise primitive.
TEST(Primitives, ForwardAndReverseAgree) {
  using UnaryJet = std::function<Jet(const Jet&)>;
  using UnaryTensor = std::function<Tensor(const Tensor&)>;
  struct Case {
    const char* name;
    UnaryJet fj;
    UnaryTensor ft;
    double lo, hi;
  };
  const std::vector<Case> cases = {
      {"tanh", [](const Jet& a) { return ad::tanh(a); }, [](const Tensor& a) { return ad::tanh(a); }, -2, 2},
      {"exp", [](const Jet& a) { return ad::exp(a); }, [](const Tensor& a) { return ad::exp(a); }, -2, 2},
      {"sin", [](const Jet& a) { return ad::sin(a); }, [](const Tensor& a) { return ad::sin(a); }, -3, 3},
      {"cos", [](const Jet& a) { return ad::cos(a); }, [](const Tensor& a) { return ad::cos(a); }, -3, 3},
      {"sinpi", [](const Jet& a) { return ad::sinpi(a); }, [](const Tensor& a) { return ad::sinpi(a); }, -1, 1},
      {"cospi", [](const Jet& a) { return ad::cospi(a); }, [](const Tensor& a) { return ad::cospi(a); }, -1, 1},
      {"square", [](const Jet& a) { return ad::square(a); }, [](const Tensor& a) { return ad::square(a); }, -2, 2},
      {"gelu", [](const Jet& a) { return ad::gelu(a); },
       [](const Tensor& a) {
         return a * ad::affine(ad::erf(ad::affine(a, 1.0 / std::sqrt(2.0))), 0.5, 0.5);
       },
       -3, 3},
  };
  const Matrix x = Matrix::Random(1, 50) * 2.0;
  for (const auto& c : cases) {
    Tape t;
    auto pat = ad::JetPattern::full(1, 2);
    Matrix xs = (x.array() * (c.hi - c.lo) / 4.0 + (c.hi + c.lo) / 2.0).matrix();
    auto in = ad::seed_inputs(t, xs, pat);
    Jet y = c.fj(in[0]);
    const Matrix fwd = y.dx(0).value();

    Tape r;
    Tensor xv = r.variable(Matrix(xs));
    Matrix rev = r.gradient(ad::sum(c.ft(xv)), xv);
    EXPECT_LT((fwd - rev).cwiseAbs().maxCoeff(), 1e-12) << c.name;

    // second derivative from the jet vs reverse mode of the first-derivative node
    Tape r2;
    Tensor xv2 = r2.variable(Matrix(xs));
    auto in2 = std::vector<Jet>{Jet{xv2, {r2.constant(Matrix::Ones(1, xs.cols()))}, {}, ad::JetPattern::full(1, 1)}};
    Jet y1 = c.fj(in2[0]);
    Matrix rev2 = r2.gradient(ad::sum(y1.dx(0)), xv2);
    EXPECT_LT((y.dxx(0, 0).value() - rev2).cwiseAbs().maxCoeff(), 1e-12) << c.name;
  }
}

TEST(InputDerivatives, LinearNeuron) {
  ad::FieldBuilder b = [](Tape& t) -> ad::Field {
    Tensor w = t.constant(Matrix::Constant(1, 1, 2.0));
    Tensor bias = t.constant(Matrix::Constant(1, 1, 0.5));
    return [w, bias](std::span<const Jet> x) { return ad::linear(w, bias, x[0]); };
  };
  const double x[] = {0.3};
  auto d = ad::input_derivatives(b, x, 2);
  EXPECT_DOUBLE_EQ(d.u, 1.1);
  EXPECT_DOUBLE_EQ(d.grad(0), 2.0);
  EXPECT_DOUBLE_EQ(d.hessian(0, 0), 0.0);
}

TEST(InputDerivatives, TanhNeuronAnalytic) {
  const double w = 1.5, x0 = 0.4;
  ad::FieldBuilder b = [w](Tape&) -> ad::Field {
    return [w](std::span<const Jet> x) { return ad::tanh(ad::affine(x[0], w)); };
  };
  const double x[] = {x0};
  auto d = ad::input_derivatives(b, x, 2);
  const double th = std::tanh(w * x0), sech2 = 1.0 - th * th;
  EXPECT_NEAR(d.grad(0), w * sech2, 1e-10);
  EXPECT_NEAR(d.hessian(0, 0), -2.0 * w * w * th * sech2, 1e-10);
}

TEST(InputDerivatives, OrderThreeRejected) {
  ad::FieldBuilder b = [](Tape&) -> ad::Field { return [](std::span<const Jet> x) { return x[0]; }; };
  const double x[] = {0.0};
  EXPECT_THROW(ad::input_derivatives(b, x, 3), UnsupportedOrderError);
}

TEST(InputDerivatives, RandomMlpSecondDerivativesVsFiniteDifferences) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    nn::Mlp net(small_net(2, {12, 12}));
    const Eigen::VectorXd p = net.init(seed).values;
    ad::FieldBuilder b = [&](Tape& t) { return net.field(t.constant(p)); };
    Rng rng(seed);
    const double x[] = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
    auto d = ad::input_derivatives(b, x, 2);
    const double h = 1e-3;
    auto f = [&](double a, double c) {
      const double q[] = {a, c};
      return net.eval(p, q);
    };
    const double fxx = (f(x[0] + h, x[1]) - 2 * f(x[0], x[1]) + f(x[0] - h, x[1])) / (h * h);
    const double fyy = (f(x[0], x[1] + h) - 2 * f(x[0], x[1]) + f(x[0], x[1] - h)) / (h * h);
    const double fxy = (f(x[0] + h, x[1] + h) - f(x[0] + h, x[1] - h) - f(x[0] - h, x[1] + h) +
                        f(x[0] - h, x[1] - h)) / (4 * h * h);
    Eigen::Vector3d fd(fxx, fyy, fxy), ad3(d.hessian(0, 0), d.hessian(1, 1), d.hessian(0, 1));
    EXPECT_LT(rel_err(ad3, fd), 1e-4) << "seed " << seed;
    EXPECT_DOUBLE_EQ(d.hessian(0, 1), d.hessian(1, 0));
  }
}

// Gradient of a loss built from u_xx matches finite differences of the whole pipeline.
TEST(NestedDifferentiation, ParamGradientThroughSecondDerivative) {
  nn::Mlp net(small_net(1, {8, 8}));
  Matrix pts = Matrix::Random(1, 10);
  ad::LossFn loss = [&](Tape& t, const Tensor& p) {
    auto in = ad::seed_inputs(t, pts, ad::JetPattern::full(1, 2));
    Jet u = net(p, in);
    Tensor r = u.dxx(0, 0) + ad::sinpi(in[0].v) * std::numbers::pi * std::numbers::pi;
    return ad::mean(ad::square(r));
  };
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const Eigen::VectorXd p = net.init(seed).values;
    const auto g = ad::param_gradient(loss, p);
    const auto fd = central_diff([&](const Eigen::VectorXd& q) { return eval_loss(loss, q); }, p, 1e-6);
    EXPECT_LT(rel_err(g, fd), 1e-5) << "seed " << seed;
  }
}
