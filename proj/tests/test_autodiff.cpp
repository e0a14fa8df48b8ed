#include <gtest/gtest.h>

#include <array>

#include "kwforge/adam.hpp"
#include "kwforge/autodiff.hpp"
#include "kwforge/errors.hpp"
#include "support.hpp"

using kwforge::Matrix;
using kwforge::TokenId;
namespace ad = kwforge::ad;

namespace {

using UnaryGraph = std::function<ad::Var(ad::Tape&, ad::Var)>;

// Reduces the graph output to a scalar with fixed random weights so every
// output entry contributes to the checked gradient.
void expect_gradient_matches(const UnaryGraph& graph, const Matrix& x0, double tol = 1e-6) {
  std::mt19937_64 rng(99);
  Matrix probe_out;
  {
    ad::Tape t;
    probe_out = graph(t, t.constant(x0)).value();
  }
  const Matrix weights = kwtest::random_matrix(probe_out.rows(), probe_out.cols(), rng);

  auto scalar = [&](ad::Tape& t, ad::Var x) { return ad::sum(ad::hadamard(graph(t, x), t.constant(weights))); };
  ad::Tape tape;
  ad::Var x = tape.variable(x0);
  ad::Var y = scalar(tape, x);
  tape.backward(y);

  const Matrix numeric = kwtest::numeric_gradient(
      [&](const Matrix& m) {
        ad::Tape t;
        return scalar(t, t.constant(m)).scalar();
      },
      x0);
  EXPECT_LT(kwtest::relative_error(x.grad(), numeric), tol);
}

}  // namespace

class AutodiffOps : public ::testing::Test {
 protected:
  std::mt19937_64 rng{5};
  Matrix a = kwtest::random_matrix(3, 4, rng);
  Matrix b = kwtest::random_matrix(4, 2, rng);
  Matrix c = kwtest::random_matrix(3, 4, rng);
  Matrix r = kwtest::random_matrix(1, 4, rng);
};

TEST_F(AutodiffOps, MatmulBothSides) {
  expect_gradient_matches([&](ad::Tape& t, ad::Var x) { return ad::matmul(x, t.constant(b)); }, a);
  expect_gradient_matches([&](ad::Tape& t, ad::Var x) { return ad::matmul(t.constant(a), x); }, b);
}

TEST_F(AutodiffOps, ElementwiseArithmetic) {
  expect_gradient_matches([&](ad::Tape& t, ad::Var x) { return ad::add(x, t.constant(c)); }, a);
  expect_gradient_matches([&](ad::Tape& t, ad::Var x) { return ad::sub(t.constant(c), x); }, a);
  expect_gradient_matches([&](ad::Tape& t, ad::Var x) { return ad::hadamard(x, t.constant(c)); }, a);
  expect_gradient_matches([&](ad::Tape&, ad::Var x) { return ad::hadamard(x, x); }, a);
  expect_gradient_matches([&](ad::Tape&, ad::Var x) { return ad::scale(x, -2.5); }, a);
  expect_gradient_matches([&](ad::Tape&, ad::Var x) { return ad::tanh(x); }, a);
}

TEST_F(AutodiffOps, RowBroadcastReachesBothOperands) {
  expect_gradient_matches([&](ad::Tape& t, ad::Var x) { return ad::add_row(x, t.constant(r)); }, a);
  expect_gradient_matches([&](ad::Tape& t, ad::Var x) { return ad::add_row(t.constant(a), x); }, r);
}

TEST_F(AutodiffOps, ShapeOps) {
  expect_gradient_matches([&](ad::Tape&, ad::Var x) { return ad::transpose(x); }, a);
  expect_gradient_matches([&](ad::Tape&, ad::Var x) { return ad::row(x, 1); }, a);
  expect_gradient_matches([&](ad::Tape&, ad::Var x) { return ad::element(x, 2, 3); }, a);
  expect_gradient_matches([&](ad::Tape&, ad::Var x) { return ad::mean_rows(x); }, a);
  expect_gradient_matches(
      [&](ad::Tape& t, ad::Var x) {
        const std::array<ad::Var, 3> parts = {x, t.constant(c), x};
        return ad::vstack(parts);
      },
      a);
}

TEST_F(AutodiffOps, Softmaxes) {
  expect_gradient_matches([&](ad::Tape&, ad::Var x) { return ad::softmax_rows(x); }, a);
  expect_gradient_matches([&](ad::Tape&, ad::Var x) { return ad::log_softmax_rows(x); }, a);
}

TEST_F(AutodiffOps, CosineDistanceBothArguments) {
  expect_gradient_matches([&](ad::Tape& t, ad::Var x) { return ad::cosine_distance_rows(x, t.constant(c)); }, a);
  expect_gradient_matches([&](ad::Tape& t, ad::Var x) { return ad::cosine_distance_rows(t.constant(c), x); }, a);
}

TEST_F(AutodiffOps, NllRows) {
  const std::array<TokenId, 3> targets = {0, 3, 1};
  expect_gradient_matches([&](ad::Tape&, ad::Var x) { return ad::nll_rows(ad::log_softmax_rows(x), targets); }, a);
}

TEST(Autodiff, SoftmaxValuesAreNormalized) {
  ad::Tape t;
  Matrix m(2, 3);
  m << 1000.0, 1001.0, 999.0, -3.0, 0.0, 2.0;
  const Matrix p = ad::softmax_rows(t.constant(m)).value();
  for (Eigen::Index i = 0; i < 2; ++i) EXPECT_NEAR(p.row(i).sum(), 1.0, 1e-12);
  EXPECT_TRUE(p.allFinite());
}

TEST(Autodiff, CosineDistanceOfIdenticalRowsIsExactlyZero) {
  std::mt19937_64 rng(1);
  const Matrix v = kwtest::random_matrix(6, 5, rng);
  ad::Tape t;
  const Matrix d = ad::cosine_distance_rows(t.constant(v), t.constant(v)).value();
  for (Eigen::Index i = 0; i < d.rows(); ++i) EXPECT_EQ(d(i, 0), 0.0);
}

TEST(Autodiff, CosineDistanceRejectsZeroRow) {
  ad::Tape t;
  Matrix z = Matrix::Zero(1, 3);
  Matrix o = Matrix::Ones(1, 3);
  EXPECT_THROW(ad::cosine_distance_rows(t.constant(z), t.constant(o)), kwforge::NumericError);
}

TEST(Autodiff, ShapeMismatchThrows) {
  ad::Tape t;
  EXPECT_THROW(ad::matmul(t.constant(Matrix::Zero(2, 3)), t.constant(Matrix::Zero(2, 3))), kwforge::ShapeError);
  EXPECT_THROW(ad::add(t.constant(Matrix::Zero(2, 3)), t.constant(Matrix::Zero(3, 2))), kwforge::ShapeError);
}

TEST(Autodiff, BackwardNeedsScalar) {
  ad::Tape t;
  ad::Var x = t.variable(Matrix::Ones(2, 2));
  EXPECT_THROW(t.backward(x), kwforge::ShapeError);
}

TEST(Autodiff, GradientsAccumulateOverReuse) {
  ad::Tape t;
  ad::Var x = t.variable(Matrix::Constant(1, 1, 3.0));
  ad::Var y = ad::add(ad::hadamard(x, x), ad::scale(x, 2.0));  // x^2 + 2x
  t.backward(y);
  EXPECT_DOUBLE_EQ(x.grad()(0, 0), 8.0);
}

TEST(Autodiff, ConstantsCarryNoGradient) {
  ad::Tape t;
  ad::Var c = t.constant(Matrix::Ones(1, 1));
  ad::Var x = t.variable(Matrix::Ones(1, 1));
  EXPECT_FALSE(c.requires_grad());
  EXPECT_TRUE(ad::add(c, x).requires_grad());
  EXPECT_FALSE(ad::scale(c, 2.0).requires_grad());
}

TEST(Adam, FirstStepMovesEachCoordinateByLearningRate) {
  // With bias correction the first update is lr * g / (|g| + eps') per coordinate.
  kwforge::Adam opt(kwforge::AdamOptions{0.02, 0.9, 0.999, 1e-8});
  Matrix p(1, 3);
  p << 1.0, -2.0, 0.5;
  Matrix g(1, 3);
  g << 4.0, -0.001, 0.0;
  const Matrix before = p;
  opt.step(p, g);
  EXPECT_NEAR(p(0, 0), before(0, 0) - 0.02 * 4.0 / (4.0 + 1e-8), 1e-15);
  EXPECT_NEAR(p(0, 1), before(0, 1) + 0.02 * 0.001 / (0.001 + 1e-8), 1e-15);
  EXPECT_EQ(p(0, 2), before(0, 2));
  EXPECT_EQ(opt.steps(), 1);
}

TEST(Adam, SecondStepMatchesHandRecurrence) {
  const double lr = 0.1, b1 = 0.9, b2 = 0.999, eps = 1e-8;
  kwforge::Adam opt(kwforge::AdamOptions{lr, b1, b2, eps});
  Matrix p = Matrix::Constant(1, 1, 0.0);
  const double g1 = 1.0, g2 = -3.0;
  opt.step(p, Matrix::Constant(1, 1, g1));
  opt.step(p, Matrix::Constant(1, 1, g2));

  double m = 0, v = 0, x = 0;
  int step = 0;
  for (double g : {g1, g2}) {
    ++step;
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    const double mh = m / (1 - std::pow(b1, step));
    const double vh = v / (1 - std::pow(b2, step));
    x -= lr * mh / (std::sqrt(vh) + eps);
  }
  EXPECT_NEAR(p(0, 0), x, 1e-14);
}

TEST(Adam, ResetClearsMoments) {
  kwforge::Adam opt;
  Matrix p = Matrix::Ones(2, 2);
  opt.step(p, Matrix::Ones(2, 2));
  opt.reset();
  EXPECT_EQ(opt.steps(), 0);
  Matrix q = Matrix::Ones(2, 2);
  opt.step(q, Matrix::Ones(2, 2));
  EXPECT_NEAR(q(0, 0), 1.0 - 0.02, 1e-9);
}
