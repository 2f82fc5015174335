// Copyright 2026 The CSRRM Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "csrrm/core/tensor.hpp"

#include <gtest/gtest.h>

#include "csrrm/core/error.hpp"
#include "csrrm/core/ops.hpp"

namespace csrrm {
namespace {

TEST(Tensor, GradIsZeroAfterCreationAndZeroGrad) {
  const Tensor t = Tensor::full({2, 3}, 1.5, true);
  ASSERT_EQ(t.grad().size(), 6u);
  for (double g : t.grad()) EXPECT_EQ(g, 0.0);
  t.grad()[4] = 2.0;
  t.zero_grad();
  for (double g : t.grad()) EXPECT_EQ(g, 0.0);
}

TEST(Tensor, ValueAndGradShareShape) {
  const Tensor t = Tensor::zeros({4, 1, 2}, true);
  EXPECT_EQ(t.size(), 8u);
  EXPECT_EQ(t.value().size(), t.grad().size());
  EXPECT_EQ(shape_str(t.shape()), "[4x1x2]");
}

TEST(Tensor, FromRejectsSizeMismatch) {
  EXPECT_THROW(Tensor::from({2, 2}, {1, 2, 3}), ShapeError);
}

TEST(Tensor, HandlesShareStorageAndCloneDoesNot) {
  const Tensor a = Tensor::from({2}, {1, 2});
  const Tensor b = a;
  const Tensor c = a.clone();
  b.value()[0] = 9;
  EXPECT_EQ(a.value()[0], 9);
  EXPECT_EQ(c.value()[0], 1);
  EXPECT_TRUE(a.same_node(b));
  EXPECT_FALSE(a.same_node(c));
}

TEST(Tape, VisitsEveryRecordedOpOnce) {
  const Tensor x = Tensor::from({3}, {1, -2, 3}, true);
  Tape tape;
  const Tensor y = ops::sum(tape, ops::relu(tape, ops::scale(tape, x, 2.0)));
  EXPECT_EQ(tape.size(), 3u);
  EXPECT_EQ(tape.op_name(0), "scale");
  EXPECT_EQ(tape.backward(y), 3u);
}

TEST(Tape, NoRecordingWithoutGradients) {
  const Tensor x = Tensor::from({3}, {1, 2, 3});
  Tape tape;
  ops::relu(tape, x);
  EXPECT_EQ(tape.size(), 0u);
  Tape off(false);
  const Tensor w = Tensor::from({3}, {1, 2, 3}, true);
  ops::relu(off, w);
  EXPECT_EQ(off.size(), 0u);
}

TEST(Tape, GradientAccumulationIsAdditive) {
  // y = f(x) + g(x): grad(x) must equal grad_f + grad_g exactly.
  const Tensor x = Tensor::from({4}, {0.3, -0.7, 1.1, 2.0}, true);
  Tape tf;
  tf.backward(ops::sum(tf, ops::sigmoid(tf, x)));
  const std::vector<double> gf(x.grad().begin(), x.grad().end());
  x.zero_grad();
  Tape tg;
  tg.backward(ops::sum(tg, ops::hadamard(tg, x, x)));
  const std::vector<double> gg(x.grad().begin(), x.grad().end());
  x.zero_grad();
  Tape both;
  both.backward(ops::add(both, ops::sum(both, ops::sigmoid(both, x)),
                         ops::sum(both, ops::hadamard(both, x, x))));
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(x.grad()[i], gf[i] + gg[i]);
}

TEST(Tape, BackwardRejectsSeedMismatch) {
  const Tensor x = Tensor::from({2}, {1, 2}, true);
  Tape tape;
  const Tensor y = ops::relu(tape, x);
  const std::vector<double> seed{1, 2, 3};
  EXPECT_THROW(tape.backward(y, seed), ShapeError);
  EXPECT_THROW(tape.backward(y, 1.0), ShapeError);  // non-scalar root
}

TEST(Tensor, ForwardIsBitDeterministic) {
  auto run = [] {
    const Tensor x = Tensor::from({2, 3}, {0.1, 0.2, -0.3, 0.4, 0.5, -0.6});
    const Tensor w = Tensor::from({4, 3}, {1, 2, 3, 4, 5, 6, 7, 8, 9, -1, -2, -3});
    Tape t(false);
    const Tensor y = ops::gelu(t, ops::linear(t, x, w, Tensor()));
    return std::vector<double>(y.value().begin(), y.value().end());
  };
  EXPECT_EQ(run(), run());
}

}  // namespace
}  // namespace csrrm
