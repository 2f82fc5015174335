// Copyright 2026 The CSRRM Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "csrrm/core/tensor.hpp"

namespace csrrm::testing {

/// Builds the function under test from its inputs on the given tape.
using Builder = std::function<Tensor(Tape&, const std::vector<Tensor>&)>;

struct GradCheckResult {
  double max_rel_err = 0.0;
  std::size_t probes = 0;
  std::string worst;  // "input i, element j: analytic a vs numeric n"
};

/// |a − n| / (|n| + 1e-8).
double rel_err(double analytic, double numeric);

/// Central differences of L = <W, f(inputs)> for a random projection W,
/// against the reverse-mode gradient. Probes every element of every input
/// that requires a gradient, or `max_probes` of them drawn at random.
GradCheckResult gradcheck(const Builder& f, const std::vector<Tensor>& inputs,
                          std::mt19937_64& rng, std::size_t max_probes = 0, double h = 1e-5);

Tensor uniform_tensor(Shape shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0,
                      bool requires_grad = true);

/// One differentiable operation (or composite) and a generator of random
/// instances of it.
struct GradCase {
  std::string name;
  std::function<std::pair<Builder, std::vector<Tensor>>(std::mt19937_64&)> instance;
  std::size_t max_probes = 0;
};

/// Every differentiable operation in the library, primitives first.
std::vector<GradCase> gradient_suite();

struct SuiteOutcome {
  std::string name;
  std::size_t shapes = 0;
  double max_rel_err = 0.0;
  std::string worst;
};

/// Runs `shapes` random instances of `c` from a fixed seed.
SuiteOutcome run_grad_case(const GradCase& c, std::size_t shapes, std::uint64_t seed);

}  // namespace csrrm::testing
