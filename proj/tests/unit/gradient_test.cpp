// Copyright 2026 The CSRRM Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "gradcheck.hpp"

namespace csrrm::testing {
namespace {

class GradientSuite : public ::testing::TestWithParam<GradCase> {};

TEST_P(GradientSuite, CentralDifferencesAgree) {
  const auto out = run_grad_case(GetParam(), 20, 0xC0FFEE);
  EXPECT_EQ(out.shapes, 20u);
  EXPECT_LT(out.max_rel_err, 1e-4) << out.worst;
}

INSTANTIATE_TEST_SUITE_P(AllOps, GradientSuite, ::testing::ValuesIn(gradient_suite()),
                         [](const auto& info) { return info.param.name; });

TEST(GradCheck, DetectsAWrongGradient) {
  // A deliberately broken op: forward x², backward pretends 3x.
  std::mt19937_64 rng(1);
  const Tensor x = uniform_tensor({5}, rng);
  Builder broken = [](Tape& t, const std::vector<Tensor>& in) {
    const Tensor& a = in[0];
    Tensor y = Tensor::zeros(a.shape(), true);
    for (std::size_t i = 0; i < a.size(); ++i) y.value()[i] = a.value()[i] * a.value()[i];
    t.record("broken", [a, y] {
      for (std::size_t i = 0; i < a.size(); ++i) a.grad()[i] += 3 * a.value()[i] * y.grad()[i];
    });
    return y;
  };
  EXPECT_GT(gradcheck(broken, {x}, rng).max_rel_err, 0.1);
}

}  // namespace
}  // namespace csrrm::testing
