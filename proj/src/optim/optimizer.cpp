// Copyright 2026 The CSRRM Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "csrrm/optim/optimizer.hpp"

#include <algorithm>
#include <cmath>

#include "csrrm/core/error.hpp"

namespace csrrm {

void OptimizerState::validate() const {
  if (!(max_lr > 0.0) || !std::isfinite(max_lr)) throw ConfigError("optimizer: max_lr must be > 0");
  if (!(delta > 0.0)) throw ConfigError("optimizer: delta must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("optimizer: momentum must lie in [0, 1)");
}

OptimizerState& OptimizerState::freeze(std::span<const std::string> names) {
  frozen.insert(names.begin(), names.end());
  return *this;
}

OptimizerState& OptimizerState::unfreeze(std::span<const std::string> names) {
  for (const auto& n : names) frozen.erase(n);
  return *this;
}

namespace {

// Squared gradient norm over trainable parameters; throws on non-finite input.
double trainable_grad_norm_sq(const ParamSet& params, const OptimizerState& st) {
  double acc = 0.0;
  for (const auto& e : params.entries()) {
    if (st.is_frozen(e.name)) continue;
    for (double g : e.tensor.grad()) {
      if (!std::isfinite(g)) throw NumericError("optimizer: non-finite gradient in '" + e.name + "'");
      acc += g * g;
    }
  }
  return acc;
}

double apply_update(const ParamSet& params, double step, OptimizerState& st) {
  double update_sq = 0.0;
  for (const auto& e : params.entries()) {
    if (st.is_frozen(e.name)) continue;
    auto v = e.tensor.value();
    auto g = e.tensor.grad();
    if (st.momentum > 0.0) {
      auto& vel = st.velocity[e.name];
      vel.resize(v.size(), 0.0);
      for (std::size_t i = 0; i < v.size(); ++i) {
        vel[i] = st.momentum * vel[i] + step * g[i];
        v[i] -= vel[i];
        update_sq += vel[i] * vel[i];
      }
    } else {
      for (std::size_t i = 0; i < v.size(); ++i) {
        const double d = step * g[i];
        v[i] -= d;
        update_sq += d * d;
      }
    }
  }
  return std::sqrt(update_sq);
}

}  // namespace

StepReport alig_step(const ParamSet& params, double loss, OptimizerState& st) {
  st.validate();
  if (!std::isfinite(loss)) throw NumericError("alig_step: non-finite loss");
  if (loss < 0.0) throw NumericError("alig_step: negative loss " + std::to_string(loss));
  StepReport r;
  r.grad_norm_sq = trainable_grad_norm_sq(params, st);
  r.step = std::min(st.max_lr, loss / (r.grad_norm_sq + st.delta));
  r.update_norm = apply_update(params, r.step, st);
  return r;
}

StepReport sgd_step(const ParamSet& params, double lr, OptimizerState& st) {
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw ConfigError("sgd_step: lr must be finite and >= 0");
  StepReport r;
  r.grad_norm_sq = trainable_grad_norm_sq(params, st);
  r.step = lr;
  r.update_norm = apply_update(params, lr, st);
  return r;
}

}  // namespace csrrm
