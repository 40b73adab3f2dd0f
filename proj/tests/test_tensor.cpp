#include <gtest/gtest.h>

#include "cisnet/ops.hpp"
#include "cisnet/suppression.hpp"
#include "cisnet/tensor.hpp"
#include "test_util.hpp"

using namespace cisnet;
using namespace cisnet::testutil;

TEST(Conv2d, IdentityKernelReproducesInput) {
  Tensor input = random_tensor({1, 1, 3, 3}, 11);
  Tensor weight(Shape{1, 1, 1, 1}, std::vector<double>{1.0});
  Tensor out = conv2d(input, weight, Tensor());
  EXPECT_TRUE(bitwise_equal(out, input));
}

TEST(Conv2d, ZeroSumKernelAnnihilatesConstants) {
  Tensor input = Tensor::full({2, 1, 6, 6}, 3.7);
  // KB stencil: dyadic values, cancels exactly in accumulation order.
  Tensor weight(Shape{1, 1, 3, 3},
                std::vector<double>{0.25, -0.5, 0.25, -0.5, 1.0, -0.5, 0.25, -0.5, 0.25});
  Tensor out = conv2d(input, weight, Tensor());
  for (int64_t i = 0; i < out.numel(); ++i) EXPECT_EQ(out.data()[i], 0.0);
}

TEST(Conv2d, MatchesNaiveReference) {
  Tensor input = random_tensor({2, 3, 9, 7}, 21);
  Tensor weight = random_tensor({4, 3, 3, 3}, 22, -1.0, 1.0);
  for (int64_t stride : {1, 2}) {
    for (int64_t dilation : {1, 2}) {
      for (int64_t padding : {0, 2}) {
        if (conv_output_extent(7, padding, dilation, 3, stride) < 1) continue;
        Tensor got = conv2d(input, weight, Tensor(), stride, dilation, padding);
        Tensor want = naive_conv2d(input, weight, stride, dilation, padding);
        EXPECT_LE(max_abs_diff(got, want), 1e-12)
            << "stride=" << stride << " dilation=" << dilation << " padding=" << padding;
      }
    }
  }
}

TEST(Conv2d, DilatedGradientMatchesFiniteDifferences) {
  Tensor input = random_tensor({1, 2, 8, 8}, 31).set_requires_grad(true);
  Tensor weight = random_tensor({3, 2, 3, 3}, 32, -1.0, 1.0).set_requires_grad(true);
  Tensor bias = random_tensor({3}, 33, -0.5, 0.5).set_requires_grad(true);
  auto loss_fn = [&] {
    Tensor out = conv2d(input, weight, bias, 1, 2, 0);
    return scale(sum(mul(out, out)), 0.5);
  };
  EXPECT_LE(grad_check(input, loss_fn).max_rel_err, 1e-4);
  EXPECT_LE(grad_check(weight, loss_fn).max_rel_err, 1e-4);
  EXPECT_LE(grad_check(bias, loss_fn).max_rel_err, 1e-4);
}

TEST(Conv2d, AllZeroWeightsBroadcastBias) {
  Tensor input = random_tensor({2, 2, 4, 4}, 41);
  Tensor weight = Tensor::zeros({3, 2, 3, 3});
  Tensor bias(Shape{3}, std::vector<double>{0.7, -1.3, 2.9});
  Tensor out = conv2d(input, weight, bias, 1, 1, 1);
  for (int64_t n = 0; n < 2; ++n)
    for (int64_t co = 0; co < 3; ++co)
      for (int64_t y = 0; y < 4; ++y)
        for (int64_t x = 0; x < 4; ++x)
          EXPECT_EQ(out.at({n, co, y, x}), bias.data()[co]);
}

TEST(Conv2d, ShapeErrors) {
  Tensor input = random_tensor({1, 2, 4, 4}, 51);
  Tensor weight = random_tensor({3, 3, 3, 3}, 52);  // wrong in_channels
  EXPECT_THROW(conv2d(input, weight, Tensor()), Error);
  Tensor big_kernel = random_tensor({1, 2, 5, 5}, 53);
  Tensor small = random_tensor({1, 2, 3, 3}, 54);
  EXPECT_THROW(conv2d(small, big_kernel, Tensor()), Error);  // output extent < 1
}

TEST(AvgPool, WindowMean) {
  Tensor input(Shape{1, 1, 2, 2}, std::vector<double>{1.0, 1.0, 1.0, -1.0});
  Tensor out = avg_pool(input, 2, 2);
  EXPECT_EQ(out.numel(), 1);
  EXPECT_DOUBLE_EQ(out.item(), 0.5);
}

TEST(AvgPool, ConstantMapIsPreserved) {
  Tensor input = Tensor::full({1, 3, 4, 4}, -2.25);
  Tensor out = avg_pool(input, 2, 2);
  for (int64_t i = 0; i < out.numel(); ++i) EXPECT_EQ(out.data()[i], -2.25);
}

TEST(AvgPool, GradientMatchesFiniteDifferences) {
  Tensor input = random_tensor({1, 2, 4, 4}, 61).set_requires_grad(true);
  auto loss_fn = [&] {
    Tensor out = avg_pool(input, 2, 2);
    return scale(sum(mul(out, out)), 0.5);
  };
  EXPECT_LE(grad_check(input, loss_fn).max_rel_err, 1e-6);
}

TEST(AvgPool, UpsampleByReplicationPreservesWindowSums) {
  Tensor input = random_tensor({1, 1, 4, 4}, 62);
  Tensor pooled = avg_pool(input, 2, 2);
  for (int64_t oy = 0; oy < 2; ++oy)
    for (int64_t ox = 0; ox < 2; ++ox) {
      double window_sum = 0.0;
      for (int64_t dy = 0; dy < 2; ++dy)
        for (int64_t dx = 0; dx < 2; ++dx)
          window_sum += input.at({0, 0, 2 * oy + dy, 2 * ox + dx});
      const double m = pooled.at({0, 0, oy, ox});
      const double replicated_sum = m + m + m + m;
      EXPECT_EQ(replicated_sum, window_sum);
    }
}

TEST(AvgPool, Errors) {
  Tensor input = random_tensor({1, 1, 5, 5}, 63);
  EXPECT_THROW(avg_pool(input, 2, 2), Error);  // non-divisible extent
  EXPECT_THROW(avg_pool(input, 2, 1), Error);  // stride != window unsupported
}

TEST(FullyConnected, IdentityWeight) {
  Tensor input = random_tensor({3, 4}, 71);
  Tensor weight = Tensor::zeros({4, 4});
  for (int64_t i = 0; i < 4; ++i) weight.set({i, i}, 1.0);
  Tensor bias = Tensor::zeros({4});
  EXPECT_TRUE(bitwise_equal(fully_connected(input, weight, bias), input));
}

TEST(FullyConnected, DotProductRow) {
  Tensor input(Shape{1, 2}, std::vector<double>{1.0, 3.0});
  Tensor weight(Shape{1, 2}, std::vector<double>{2.0, -1.0});
  Tensor bias = Tensor::zeros({1});
  EXPECT_DOUBLE_EQ(fully_connected(input, weight, bias).item(), -1.0);
}

TEST(FullyConnected, GradientMatchesFiniteDifferences) {
  Tensor input = random_tensor({2, 5}, 81).set_requires_grad(true);
  Tensor weight = random_tensor({3, 5}, 82, -1.0, 1.0).set_requires_grad(true);
  Tensor bias = random_tensor({3}, 83, -0.5, 0.5).set_requires_grad(true);
  auto loss_fn = [&] {
    Tensor out = fully_connected(input, weight, bias);
    return scale(sum(mul(out, out)), 0.5);
  };
  EXPECT_LE(grad_check(input, loss_fn).max_rel_err, 1e-6);
  EXPECT_LE(grad_check(weight, loss_fn).max_rel_err, 1e-6);
  EXPECT_LE(grad_check(bias, loss_fn).max_rel_err, 1e-6);
}

TEST(FullyConnected, ShapeErrors) {
  Tensor input = random_tensor({2, 5}, 84);
  Tensor weight = random_tensor({3, 4}, 85);
  Tensor bias = Tensor::zeros({3});
  EXPECT_THROW(fully_connected(input, weight, bias), Error);
}

TEST(Backward, SumGivesOnes) {
  Tensor x = random_tensor({2, 3}, 91).set_requires_grad(true);
  sum(x).backward();
  for (double g : x.grad()) EXPECT_EQ(g, 1.0);
}

TEST(Backward, QuadraticGivesX) {
  Tensor x = random_tensor({7}, 92).set_requires_grad(true);
  scale(sum(mul(x, x)), 0.5).backward();
  const auto& g = x.grad();
  for (int64_t i = 0; i < x.numel(); ++i) EXPECT_DOUBLE_EQ(g[static_cast<size_t>(i)], x.data()[i]);
}

TEST(Backward, NonScalarThrows) {
  Tensor x = random_tensor({2, 2}, 93).set_requires_grad(true);
  Tensor y = mul(x, x);
  EXPECT_THROW(y.backward(), Error);
}

TEST(Backward, RepeatedCallsAccumulateOnLeaves) {
  Tensor x = random_tensor({4}, 94).set_requires_grad(true);
  Tensor loss = sum(x);
  loss.backward();
  loss.backward();
  for (double g : x.grad()) EXPECT_EQ(g, 2.0);
}

TEST(Backward, CompositeGraphMatchesFiniteDifferences) {
  // stl -> conv -> spl -> mean, inputs kept away from the stl kink and the
  // conv outputs away from the sublinear kink at 0 (seed chosen accordingly,
  // margins asserted below so drift fails loudly).
  const double threshold = 1.0;
  Tensor input = random_tensor({1, 1, 8, 8}, 4242);
  for (int64_t i = 0; i < input.numel(); ++i) {
    double v = input.data()[i];
    if (std::fabs(std::fabs(v) - threshold) < 0.05) v += 0.12;
    input.data()[i] = v;
  }
  input.set_requires_grad(true);
  Tensor weight = random_tensor({2, 1, 3, 3}, 4243, -1.0, 1.0).set_requires_grad(true);

  SublinearConfig spl_cfg{0.7, 0.8, 2};
  auto loss_fn = [&] {
    Tensor t = stl(input, threshold);
    t = conv2d(t, weight, Tensor(), 1, 1, 1);
    t = spl(t, spl_cfg);
    return mean(t);
  };
  {
    autodiff::NoGradGuard no_grad;
    Tensor pre = conv2d(stl(input, threshold), weight, Tensor(), 1, 1, 1);
    for (int64_t i = 0; i < pre.numel(); ++i)
      ASSERT_GT(std::fabs(pre.data()[i]), 1e-3) << "conv output too close to the pow kink";
    Tensor pooled = avg_pool(sublinear_map(pre, spl_cfg.gamma1), 2, 2);
    for (int64_t i = 0; i < pooled.numel(); ++i)
      ASSERT_GT(std::fabs(pooled.data()[i]), 1e-3) << "pooled output too close to the pow kink";
  }
  EXPECT_LE(grad_check(input, loss_fn).max_rel_err, 1e-4);
  EXPECT_LE(grad_check(weight, loss_fn).max_rel_err, 1e-4);
}

TEST(Tensor, ForwardPassesAreDeterministic) {
  Tensor input = random_tensor({2, 3, 8, 8}, 101);
  Tensor weight = random_tensor({4, 3, 3, 3}, 102);
  Tensor a = conv2d(input, weight, Tensor(), 1, 1, 1);
  Tensor b = conv2d(input, weight, Tensor(), 1, 1, 1);
  EXPECT_TRUE(bitwise_equal(a, b));
}

TEST(Tensor, MapUnaryCustomDerivativeHook) {
  Tensor x = random_tensor({16}, 111, 0.5, 2.0).set_requires_grad(true);
  auto cube = [](double v) { return v * v * v; };
  auto dcube = [](double v, double) { return 3.0 * v * v; };
  auto loss_fn = [&] { return sum(map_unary(x, cube, dcube)); };
  EXPECT_LE(grad_check(x, loss_fn).max_rel_err, 1e-6);
}

TEST(Tensor, AllFiniteDetectsNan) {
  Tensor x = Tensor::zeros({3});
  EXPECT_TRUE(x.all_finite());
  x.data()[1] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_FALSE(x.all_finite());
}

TEST(Tensor, InvariantShapeMatchesData) {
  EXPECT_THROW(Tensor(Shape{2, 2}, std::vector<double>{1.0, 2.0, 3.0}), Error);
  Tensor x({2, 3});
  EXPECT_EQ(x.numel(), 6);
}
