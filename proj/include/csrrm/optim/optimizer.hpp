// Copyright 2026 The CSRRM Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "csrrm/nn/params.hpp"

namespace csrrm {

/// Hyperparameters, freeze mask and momentum buffers shared by the update
/// rules. Frozen parameters are skipped by every step and excluded from the
/// gradient norm.
struct OptimizerState {
  double max_lr = 0.1;
  double delta = 1e-8;
  double momentum = 0.0;
  std::set<std::string> frozen;
  std::map<std::string, std::vector<double>> velocity;

  void validate() const;

  OptimizerState& freeze(std::span<const std::string> names);
  OptimizerState& unfreeze(std::span<const std::string> names);
  bool is_frozen(const std::string& name) const { return frozen.contains(name); }
};

struct StepReport {
  double step = 0.0;            // scalar multiplier applied to the gradient
  double grad_norm_sq = 0.0;    // over trainable parameters
  double update_norm = 0.0;     // ‖Δθ‖ over trainable parameters
};

/// ALI-G: step = min(max_lr, loss / (‖g‖² + δ)), θ ← θ − step·g (heavy-ball
/// momentum when configured). Refuses non-finite loss or gradients with a
/// NumericError and leaves every parameter untouched.
StepReport alig_step(const ParamSet& params, double loss, OptimizerState& st);

/// θ ← θ − lr·g with the same freeze and momentum handling.
StepReport sgd_step(const ParamSet& params, double lr, OptimizerState& st);

}  // namespace csrrm
