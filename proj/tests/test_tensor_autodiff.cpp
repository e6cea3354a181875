#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <random>

#include "camboost/error.hpp"
#include "camboost/ops.hpp"
#include "camboost/tape.hpp"
#include "oracles.hpp"

using namespace camboost;

TEST(Tensor, ShapeMustMatchData) {
  EXPECT_THROW(Tensor(Shape{2, 3}, std::vector<double>(5)), DimensionError);
  Tensor t(Shape{2, 3}, 1.5);
  EXPECT_EQ(t.size(), 6u);
  EXPECT_FALSE(t.has_grad());
  t.grad()[0] = 1.0;
  EXPECT_EQ(t.grad().size(), t.size());
}

TEST(Conv2d, UnitKernelScalesConstantInput) {
  Tensor x(Shape{1, 3, 3}, 1.0);
  Tensor k(Shape{1, 1, 1, 1}, 2.0);
  Tensor b(Shape{1}, 0.0);
  const Tensor y = ops::conv2d(x, k, b);
  ASSERT_EQ(y.shape(), (Shape{1, 3, 3}));
  for (double v : y.data()) EXPECT_EQ(v, 2.0);
}

TEST(Conv2d, CenteredDeltaIsIdentity) {
  std::mt19937_64 rng(3);
  const Tensor x = oracle::random_tensor({1, 5, 4}, rng);
  Tensor k(Shape{1, 1, 3, 3}, 0.0);
  k[4] = 1.0;
  const Tensor y = ops::conv2d(x, k, Tensor(Shape{1}, 0.0));
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(y[i], x[i]);
}

TEST(Conv2d, MatchesDirectSummation) {
  std::mt19937_64 rng(11);
  const Tensor x = oracle::random_tensor({2, 5, 5}, rng);
  const Tensor k = oracle::random_tensor({3, 2, 3, 3}, rng);
  const Tensor b = oracle::random_tensor({3}, rng);
  const Tensor y = ops::conv2d(x, k, b);
  const Tensor ref = oracle::conv2d_direct(x, k, b);
  for (std::size_t i = 0; i < y.size(); ++i) EXPECT_NEAR(y[i], ref[i], 1e-12);
}

TEST(Conv2d, ChannelMismatchIsDimensionError) {
  EXPECT_THROW(ops::conv2d(Tensor(Shape{2, 4, 4}), Tensor(Shape{1, 3, 3, 3}), Tensor(Shape{1})), DimensionError);
  EXPECT_THROW(ops::conv2d(Tensor(Shape{1, 4, 4}), Tensor(Shape{1, 1, 2, 2}), Tensor(Shape{1})), DimensionError);
}

TEST(Conv2d, IsLinearInInput) {
  std::mt19937_64 rng(5);
  const Tensor x = oracle::random_tensor({2, 6, 6}, rng);
  const Tensor y = oracle::random_tensor({2, 6, 6}, rng);
  const Tensor k = oracle::random_tensor({3, 2, 3, 3}, rng);
  const Tensor zero(Shape{3}, 0.0);
  const double a = 0.7, c = -2.3;
  Tensor mix(x.shape());
  for (std::size_t i = 0; i < mix.size(); ++i) mix[i] = a * x[i] + c * y[i];
  const Tensor lhs = ops::conv2d(mix, k, zero);
  const Tensor kx = ops::conv2d(x, k, zero);
  const Tensor ky = ops::conv2d(y, k, zero);
  for (std::size_t i = 0; i < lhs.size(); ++i) EXPECT_NEAR(lhs[i], a * kx[i] + c * ky[i], 1e-10);
}

TEST(GlobalAveragePool, ArithmeticMean) {
  const Tensor m(Shape{1, 2, 2}, {1, 2, 3, 4});
  EXPECT_EQ(ops::global_average_pool(m)[0], 2.5);
  const Tensor c(Shape{1, 3, 5}, -0.25);
  EXPECT_EQ(ops::global_average_pool(c)[0], -0.25);
}

TEST(GlobalAveragePool, MatchesFlatSum) {
  std::mt19937_64 rng(8);
  const Tensor m = oracle::random_tensor({4, 7, 7}, rng);
  const Tensor g = ops::global_average_pool(m);
  for (std::size_t c = 0; c < 4; ++c) {
    double s = 0;
    for (std::size_t p = 0; p < 49; ++p) s += m[c * 49 + p];
    EXPECT_NEAR(g[c], s / 49.0, 1e-12);
  }
}

TEST(GlobalAveragePool, EmptySpatialExtentThrows) {
  EXPECT_THROW(ops::global_average_pool(Tensor(Shape{2, 0, 3})), DimensionError);
}

TEST(Sigmoid, StableAndSymmetric) {
  EXPECT_EQ(ops::sigmoid(0.0), 0.5);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> d(-30, 30);
  for (int i = 0; i < 100; ++i) {
    const double x = d(rng);
    EXPECT_NEAR(ops::sigmoid(x) + ops::sigmoid(-x), 1.0, 1e-12);
  }
  // 1 - sigmoid(40) = e^-40 / (1 + e^-40) ~ 4.25e-18, below double resolution at 1.
  const double s40 = ops::sigmoid(40.0);
  EXPECT_GT(s40, 1.0 - 1e-15);
  EXPECT_LE(s40, 1.0);
  EXPECT_TRUE(std::isfinite(ops::sigmoid(700.0)));
  EXPECT_TRUE(std::isfinite(ops::sigmoid(-700.0)));
  EXPECT_GE(ops::sigmoid(-700.0), 0.0);
}

TEST(Backward, OneByOneKernelMatchesCentralDifference) {
  std::mt19937_64 rng(21);
  const Tensor x = oracle::random_tensor({1, 4, 4}, rng);
  Tensor w(Shape{1, 1, 1, 1}, 0.8);
  w.set_requires_grad(true);
  Tensor b(Shape{1}, 0.0);

  Tape tape;
  const Var xv = tape.constant(x);
  const Var wv = tape.parameter(w);
  const Var bv = tape.constant(b);
  const Var loss = sum(tape, global_average_pool(tape, conv2d(tape, xv, wv, bv)));
  tape.backward(loss);

  auto f = [&] { return ops::global_average_pool(ops::conv2d(x, w, b))[0]; };
  const double fd = oracle::central_difference(f, w, 0);
  EXPECT_LE(oracle::relative_error(w.grad()[0], fd), 1e-6);
}

TEST(Backward, DisconnectedParameterGetsZeroGradient) {
  Tensor used(Shape{3}, 1.0);
  Tensor unused(Shape{3}, 2.0);
  used.set_requires_grad(true);
  unused.set_requires_grad(true);
  unused.grad();  // materialize slot
  Tape tape;
  const Var u = tape.parameter(used);
  tape.parameter(unused);
  tape.backward(sum(tape, u));
  for (double g : unused.grad()) EXPECT_EQ(g, 0.0);
  for (double g : used.grad()) EXPECT_EQ(g, 1.0);
}

TEST(Backward, NonScalarLossIsUsageError) {
  Tensor p(Shape{2}, 1.0);
  p.set_requires_grad(true);
  Tape tape;
  const Var v = tape.parameter(p);
  EXPECT_THROW(tape.backward(v), UsageError);
}

TEST(Backward, GradientsAccumulateAcrossUsesAndCalls) {
  Tensor p(Shape{2}, {1.0, -2.0});
  p.set_requires_grad(true);
  {
    Tape tape;
    const Var v = tape.parameter(p);
    tape.backward(sum(tape, add(tape, v, mul(tape, v, v))));  // d/dp (p + p^2) = 1 + 2p
  }
  EXPECT_DOUBLE_EQ(p.grad()[0], 3.0);
  EXPECT_DOUBLE_EQ(p.grad()[1], -3.0);
  {
    Tape tape;
    tape.backward(sum(tape, tape.parameter(p)));
  }
  EXPECT_DOUBLE_EQ(p.grad()[0], 4.0);
  p.zero_grad();
  EXPECT_EQ(p.grad()[0], 0.0);
}

// Property: random compositions of primitives with <= 200 parameters agree
// with central differences.
TEST(Backward, RandomCompositionsMatchFiniteDifferences) {
  std::mt19937_64 rng(1234);
  for (int trial = 0; trial < 20; ++trial) {
    std::uniform_int_distribution<int> sz(3, 6);
    const std::size_t h = static_cast<std::size_t>(sz(rng));
    const std::size_t w = static_cast<std::size_t>(sz(rng));
    Tensor x = oracle::random_tensor({2, h, w}, rng);
    Tensor k1 = oracle::random_tensor({3, 2, 3, 3}, rng);  // 54
    Tensor b1 = oracle::random_tensor({3}, rng);
    Tensor hw = oracle::random_tensor({2, 3}, rng);
    Tensor hb = oracle::random_tensor({2}, rng);
    for (Tensor* p : {&k1, &b1, &hw, &hb}) p->set_requires_grad(true);
    const bool use_relu = trial % 2 == 0;

    auto forward_value = [&] {
      Tensor a = ops::conv2d(x, k1, b1);
      if (use_relu) a = ops::relu(a);
      const Tensor g = ops::global_average_pool(ops::pointwise_conv(a, hw, hb));
      const Tensor s = ops::sigmoid(g);
      return s[0] * 0.7 + s[1] * 1.3 + g[0] * g[1];
    };
    Tape tape;
    const Var xv = tape.constant(x);
    Var a = conv2d(tape, xv, tape.parameter(k1), tape.parameter(b1));
    const Var pre = a;
    if (use_relu) a = relu(tape, a);
    const Var g = global_average_pool(tape, pointwise_conv(tape, a, tape.parameter(hw), tape.parameter(hb)));
    const Var s = sigmoid(tape, g);
    const Tensor coeffs(Shape{2}, {0.7, 1.3});
    const Var g0 = tape.record(Tensor::scalar(tape.value(g)[0]), {g},
                               [](const Tape&, std::span<const double> og, std::span<std::span<double>> in) {
                                 in[0][0] += og[0];
                               });
    const Var g1 = tape.record(Tensor::scalar(tape.value(g)[1]), {g},
                               [](const Tape&, std::span<const double> og, std::span<std::span<double>> in) {
                                 in[0][1] += og[0];
                               });
    const Var loss = add(tape, sum(tape, mul(tape, s, tape.constant(coeffs))), mul(tape, g0, g1));
    EXPECT_NEAR(tape.value(loss).item(), forward_value(), 1e-12);
    tape.backward(loss);

    const auto& pre_act = tape.value(pre);
    for (Tensor* p : {&k1, &b1, &hw, &hb}) {
      for (std::size_t i = 0; i < p->size(); ++i) {
        // Skip coordinates whose +-h perturbation flips a ReLU.
        if (use_relu) {
          auto pattern = [&] {
            const Tensor z = ops::conv2d(x, k1, b1);
            std::vector<bool> bits(z.size());
            for (std::size_t t = 0; t < z.size(); ++t) bits[t] = z[t] >= 0.0;
            return bits;
          };
          const double saved = (*p)[i];
          (*p)[i] = saved + 1e-3;
          const auto up = pattern();
          (*p)[i] = saved - 1e-3;
          const auto down = pattern();
          (*p)[i] = saved;
          if (up != down) continue;
        }
        const double fd = oracle::central_difference(forward_value, *p, i);
        EXPECT_LE(oracle::relative_error(p->grad()[i], fd), 1e-6) << "trial " << trial << " coord " << i;
      }
    }
    (void)pre_act;
  }
}

TEST(Backward, IsDeterministic) {
  auto run = [] {
    std::mt19937_64 rng(77);
    Tensor x = oracle::random_tensor({1, 6, 6}, rng);
    Tensor k = oracle::random_tensor({4, 1, 3, 3}, rng);
    Tensor b = oracle::random_tensor({4}, rng);
    k.set_requires_grad(true);
    Tape tape;
    const Var loss =
        sum(tape, global_average_pool(tape, relu(tape, conv2d(tape, tape.constant(x), tape.parameter(k),
                                                              tape.constant(b)))));
    tape.backward(loss);
    return std::make_pair(tape.value(loss).item(), std::vector<double>(k.grad().begin(), k.grad().end()));
  };
  const auto a = run();
  const auto b = run();
  EXPECT_EQ(std::memcmp(&a.first, &b.first, sizeof(double)), 0);
  ASSERT_EQ(a.second.size(), b.second.size());
  EXPECT_EQ(std::memcmp(a.second.data(), b.second.data(), a.second.size() * sizeof(double)), 0);
}
