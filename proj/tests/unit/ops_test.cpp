// Copyright 2026 The CSRRM Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "csrrm/core/ops.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "csrrm/core/error.hpp"
#include "csrrm/core/gemm.hpp"
#include "gradcheck.hpp"
#include "oracles.hpp"

namespace csrrm {
namespace {

using testing::uniform_tensor;

std::vector<double> vec(const Tensor& t) { return {t.value().begin(), t.value().end()}; }

TEST(Matmul, IdentityAndHandExample) {
  Tape t(false);
  const Tensor eye = Tensor::from({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
  const Tensor x = Tensor::from({3, 2}, {1, 2, 3, 4, 5, 6});
  EXPECT_EQ(vec(ops::matmul(t, eye, x)), vec(x));
  const Tensor a = Tensor::from({2, 2}, {1, 2, 3, 4});
  const Tensor b = Tensor::from({2, 1}, {1, 1});
  const Tensor c = ops::matmul(t, a, b);
  EXPECT_EQ(c.shape(), (Shape{2, 1}));
  EXPECT_EQ(vec(c), (std::vector<double>{3, 7}));
}

TEST(Matmul, RejectsInnerMismatch) {
  Tape t;
  EXPECT_THROW(ops::matmul(t, Tensor::zeros({2, 3}), Tensor::zeros({2, 3})), ShapeError);
  EXPECT_THROW(ops::matmul(t, Tensor::zeros({6}), Tensor::zeros({6, 1})), ShapeError);
}

TEST(Gemm, AllTransposeCombinationsMatchNaive) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1, 1);
  for (const std::size_t m : {1, 7, 70}) {
    for (const std::size_t n : {1, 5, 66}) {
      for (const std::size_t k : {1, 9, 130}) {
        std::vector<double> a(m * k), b(k * n);
        for (auto& v : a) v = u(rng);
        for (auto& v : b) v = u(rng);
        for (const bool ta : {false, true}) {
          for (const bool tb : {false, true}) {
            std::vector<double> c(m * n, 0.5);
            detail::gemm(ta, tb, m, n, k, a.data(), ta ? m : k, b.data(), tb ? k : n, c.data(),
                         n, true);
            for (std::size_t i = 0; i < m; ++i)
              for (std::size_t j = 0; j < n; ++j) {
                double ref = 0.5;
                for (std::size_t p = 0; p < k; ++p)
                  ref += (ta ? a[p * m + i] : a[i * k + p]) * (tb ? b[j * k + p] : b[p * n + j]);
                ASSERT_NEAR(c[i * n + j], ref, 1e-12) << m << "x" << n << "x" << k;
              }
          }
        }
      }
    }
  }
}

TEST(Conv2d, PointwiseKernelScalesInput) {
  Tape t(false);
  const Tensor x = Tensor::from({1, 3, 3}, {1, 2, 3, 4, 5, 6, 7, 8, 9});
  const Tensor k = Tensor::from({1, 1, 1, 1}, {2});
  const Tensor y = ops::conv2d(t, x, k, Tensor(), {1, 0});
  EXPECT_EQ(vec(y), (std::vector<double>{2, 4, 6, 8, 10, 12, 14, 16, 18}));
}

TEST(Conv2d, ImpulseImprintsKernel) {
  Tape t(false);
  Tensor x = Tensor::zeros({1, 5, 5});
  x.value()[2 * 5 + 2] = 1.0;
  std::vector<double> kv{1, 2, 3, 4, 5, 6, 7, 8, 9};
  const Tensor y = ops::conv2d(t, x, Tensor::from({1, 1, 3, 3}, kv), Tensor(), {1, 1});
  // Cross-correlation: the impulse response is the kernel rotated by 180°.
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      EXPECT_EQ(y.value()[(1 + i) * 5 + (1 + j)], kv[(2 - i) * 3 + (2 - j)]);
  EXPECT_EQ(y.value()[0], 0.0);
}

TEST(Conv2d, MatchesSixLoopOracle) {
  std::mt19937_64 rng(11);
  const Tensor x = uniform_tensor({3, 8, 8}, rng, -1, 1, false);
  const Tensor k = uniform_tensor({4, 3, 3, 3}, rng, -1, 1, false);
  const Tensor b = uniform_tensor({4}, rng, -1, 1, false);
  const std::vector<double> bias = vec(b);
  for (const auto& [stride, pad] : {std::pair<std::size_t, std::size_t>{1, 0}, {1, 1}, {2, 1},
                                    {2, 0}, {3, 2}}) {
    Tape t(false);
    const Tensor y = ops::conv2d(t, x, k, b, {stride, pad});
    std::size_t oh = 0, ow = 0;
    const auto ref = oracle::conv2d(vec(x), 3, 8, 8, vec(k), 4, 3, 3, &bias, stride, pad, &oh, &ow);
    ASSERT_EQ(y.shape(), (Shape{4, oh, ow}));
    for (std::size_t i = 0; i < ref.size(); ++i) EXPECT_NEAR(y.value()[i], ref[i], 1e-12);
  }
}

TEST(Conv2d, RejectsEmptyOutputAndChannelMismatch) {
  Tape t;
  EXPECT_THROW(ops::conv2d(t, Tensor::zeros({1, 2, 2}), Tensor::zeros({1, 1, 3, 3}), Tensor(),
                           {1, 0}),
               ShapeError);
  EXPECT_THROW(ops::conv2d(t, Tensor::zeros({2, 4, 4}), Tensor::zeros({1, 1, 3, 3}), Tensor(),
                           {1, 0}),
               ShapeError);
  EXPECT_THROW(ops::conv2d(t, Tensor::zeros({1, 4, 4}), Tensor::zeros({1, 1, 3, 3}), Tensor(),
                           {0, 0}),
               ShapeError);
  EXPECT_EQ(ops::conv_out_extent(4, 3, 1, 0), 2u);
  EXPECT_EQ(ops::conv_out_extent(2, 3, 1, 0), 0u);
  EXPECT_EQ(ops::conv_out_extent(224, 7, 2, 3), 112u);
}

TEST(Elementwise, HandValues) {
  Tape t(false);
  EXPECT_EQ(ops::sigmoid(t, Tensor::scalar(0.0)).item(), 0.5);
  // Φ(1) and erf-form GELU at ±1, frozen from a reference evaluation.
  EXPECT_NEAR(ops::gelu(t, Tensor::scalar(1.0)).item(), 0.8413447460685429, 1e-15);
  EXPECT_NEAR(ops::gelu(t, Tensor::scalar(-1.0)).item(), -0.15865525393145707, 1e-15);
  const Tensor x = Tensor::from({2, 2}, {1, -2, 3, -4});
  EXPECT_EQ(vec(ops::hadamard(t, x, Tensor::full({2, 2}, 1.0))), vec(x));
  EXPECT_EQ(vec(ops::relu(t, x)), (std::vector<double>{1, 0, 3, 0}));
  EXPECT_EQ(vec(ops::add(t, x, Tensor::scalar(1.0))), (std::vector<double>{2, -1, 4, -3}));
  EXPECT_EQ(vec(ops::scale(t, x, -0.5)), (std::vector<double>{-0.5, 1, -1.5, 2}));
}

TEST(Elementwise, RejectsShapeMismatch) {
  Tape t;
  EXPECT_THROW(ops::add(t, Tensor::zeros({2, 3}), Tensor::zeros({3, 2})), ShapeError);
  EXPECT_THROW(ops::hadamard(t, Tensor::zeros({4}), Tensor::zeros({2})), ShapeError);
}

TEST(Sigmoid, StrictlyInsideUnitIntervalAndStable) {
  Tape t(false);
  const Tensor y = ops::sigmoid(t, Tensor::from({4}, {-30, -5, 5, 30}));
  for (double v : y.value()) {
    EXPECT_GT(v, 0.0);
    EXPECT_LT(v, 1.0);
  }
  const Tensor big = ops::sigmoid(t, Tensor::from({2}, {-800, 800}));
  EXPECT_EQ(big.value()[0], 0.0);  // underflows to zero without NaN
  EXPECT_EQ(big.value()[1], 1.0);
}

TEST(Softmax, RowsSumToOneAlongEveryAxis) {
  std::mt19937_64 rng(5);
  const Tensor x = uniform_tensor({3, 4, 5}, rng, -20, 20, false);
  for (std::size_t axis = 0; axis < 3; ++axis) {
    Tape t(false);
    const Tensor y = ops::softmax(t, x, axis);
    const Shape& s = x.shape();
    const std::size_t n = s[axis];
    std::size_t inner = 1;
    for (std::size_t a = axis + 1; a < 3; ++a) inner *= s[a];
    const std::size_t outer = x.size() / (n * inner);
    for (std::size_t o = 0; o < outer; ++o)
      for (std::size_t i = 0; i < inner; ++i) {
        double sum = 0;
        for (std::size_t k = 0; k < n; ++k) sum += y.value()[(o * n + k) * inner + i];
        EXPECT_NEAR(sum, 1.0, 1e-9);
      }
  }
  Tape t;
  EXPECT_THROW(ops::softmax(t, x, 3), ShapeError);
}

TEST(Pooling, ConstantAndHandValues) {
  Tape t(false);
  const Tensor c = Tensor::full({2, 3, 3}, 0.7);
  const Tensor avg = ops::global_avg_pool(t, c);
  const Tensor mx = ops::global_max_pool(t, c);
  for (double v : avg.value()) EXPECT_NEAR(v, 0.7, 1e-15);
  for (double v : mx.value()) EXPECT_EQ(v, 0.7);
  const Tensor x = Tensor::from({1, 2, 2}, {1, 2, 3, 4});
  EXPECT_EQ(ops::global_avg_pool(t, x).item(), 2.5);
  EXPECT_EQ(ops::global_max_pool(t, x).item(), 4.0);
}

TEST(Pooling, MaxRoutesGradientToFirstArgmaxOnly) {
  const Tensor x = Tensor::from({2, 2, 2}, {1, 5, 5, 0, -1, -3, -2, -1}, true);
  Tape t;
  t.backward(ops::sum(t, ops::global_max_pool(t, x)));
  EXPECT_EQ(vec(Tensor::from({8}, {x.grad().begin(), x.grad().end()})),
            (std::vector<double>{0, 1, 0, 0, 1, 0, 0, 0}));
}

TEST(Pooling, AvgPool2dTruncates) {
  Tape t(false);
  const Tensor x = Tensor::from({1, 3, 3}, {1, 2, 3, 4, 5, 6, 7, 8, 9});
  const Tensor y = ops::avg_pool2d(t, x, 2);
  EXPECT_EQ(y.shape(), (Shape{1, 1, 1}));
  EXPECT_EQ(y.item(), 3.0);
  EXPECT_THROW(ops::avg_pool2d(t, x, 4), ShapeError);
}

TEST(Dropout, IdentityCases) {
  std::mt19937_64 rng(1);
  const Tensor x = uniform_tensor({100}, rng, -1, 1, false);
  Tape t;
  EXPECT_TRUE(ops::dropout(t, x, 0.0, true, 7).same_node(x));
  EXPECT_TRUE(ops::dropout(t, x, 0.8, false, 7).same_node(x));
  EXPECT_THROW(ops::dropout(t, x, 1.0, true, 7), ConfigError);
  EXPECT_THROW(ops::dropout(t, x, -0.1, true, 7), ConfigError);
}

TEST(Dropout, SurvivorFractionAndMean) {
  const Tensor x = Tensor::full({100000}, 1.0);
  Tape t(false);
  const Tensor y = ops::dropout(t, x, 0.5, true, 2024);
  std::size_t alive = 0;
  double sum = 0;
  for (double v : y.value()) {
    if (v != 0.0) {
      ++alive;
      EXPECT_EQ(v, 2.0);
    }
    sum += v;
  }
  const double frac = alive / 1e5;
  EXPECT_GE(frac, 0.49);
  EXPECT_LE(frac, 0.51);
  EXPECT_NEAR(sum / 1e5, 1.0, 0.02);
  // Same seed, same mask.
  EXPECT_EQ(vec(y), vec(ops::dropout(t, x, 0.5, true, 2024)));
}

TEST(Shaping, StackConcatReshapeSumRows) {
  Tape t(false);
  const Tensor a = Tensor::from({2}, {1, 2});
  const Tensor b = Tensor::from({2}, {3, 4});
  const Tensor s = ops::stack(t, a, b);
  EXPECT_EQ(s.shape(), (Shape{2, 2}));
  EXPECT_EQ(vec(s), (std::vector<double>{1, 2, 3, 4}));
  EXPECT_EQ(vec(ops::concat(t, a, b)), (std::vector<double>{1, 2, 3, 4}));
  EXPECT_EQ(vec(ops::sum_rows(t, s)), (std::vector<double>{4, 6}));
  EXPECT_EQ(ops::reshape(t, s, {4}).shape(), (Shape{4}));
  EXPECT_THROW(ops::reshape(t, s, {3}), ShapeError);
  EXPECT_THROW(ops::stack(t, a, Tensor::zeros({3})), ShapeError);
}

TEST(CrossEntropy, MatchesLogSumExp) {
  Tape t(false);
  const Tensor logits = Tensor::from({3}, {1.0, 2.0, 0.5});
  const double lse = std::log(std::exp(1.0) + std::exp(2.0) + std::exp(0.5));
  EXPECT_NEAR(ops::cross_entropy(t, logits, 0).item(), lse - 1.0, 1e-14);
  EXPECT_THROW(ops::cross_entropy(t, logits, 3), ShapeError);
  // Large logits stay finite.
  EXPECT_NEAR(ops::cross_entropy(t, Tensor::from({2}, {1000, 0}), 0).item(), 0.0, 1e-12);
}

TEST(ScaleChannels, BroadcastsOverSpace) {
  Tape t(false);
  const Tensor x = Tensor::from({2, 1, 2}, {1, 2, 3, 4});
  const Tensor y = ops::scale_channels(t, x, Tensor::from({2}, {10, -1}));
  EXPECT_EQ(vec(y), (std::vector<double>{10, 20, -3, -4}));
  EXPECT_THROW(ops::scale_channels(t, x, Tensor::zeros({3})), ShapeError);
}

}  // namespace
}  // namespace csrrm
