// Copyright 2026 The CSRRM Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <random>
#include <string>

#include "csrrm/core/tensor.hpp"
#include "csrrm/nn/params.hpp"

namespace csrrm {

/// Shared bottleneck MLP of the channel attention module.
struct ChamParams {
  Tensor w0;  // [l0/r × l0]
  Tensor w1;  // [l0 × l0/r]
  std::size_t reduction = 16;

  static ChamParams init(std::size_t channels, std::size_t reduction, std::mt19937_64& rng);
  std::size_t channels() const { return w0.dim(1); }
  void validate() const;
  void register_in(ParamSet& ps, const std::string& prefix) const;
};

/// Channel attention map σ(W1·relu(W0·avg(f)) + W1·relu(W0·max(f))) ∈ (0,1)^l0.
Tensor cham_map(Tape& tape, const Tensor& f, const ChamParams& p);

/// F + M_c ⊙ F, with M_c broadcast over the spatial axes.
Tensor cham_apply(Tape& tape, const Tensor& f, const Tensor& mc);

/// One convolution with its bias.
struct ConvParams {
  Tensor weight;  // [out × in × k × k]
  Tensor bias;    // [out]

  static ConvParams init(std::size_t in, std::size_t out, std::size_t kernel,
                         std::mt19937_64& rng);
  void register_in(ParamSet& ps, const std::string& prefix) const;
};

/// Bottleneck residual unit: 1×1 reduce → 3×3 (carries the stride) → 1×1
/// expand, added to the shortcut, then ReLU. The shortcut is a strided 1×1
/// projection whenever the stride or channel count changes.
struct BottleneckParams {
  ConvParams reduce;
  ConvParams conv;
  ConvParams expand;
  ConvParams projection;  // weight undefined for an identity shortcut
  std::size_t stride = 1;

  static BottleneckParams init(std::size_t in, std::size_t bottleneck, std::size_t out,
                               std::size_t stride, std::mt19937_64& rng);
  bool has_projection() const { return projection.weight.defined(); }
  std::size_t in_channels() const { return reduce.weight.dim(1); }
  std::size_t out_channels() const { return expand.weight.dim(0); }
  void register_in(ParamSet& ps, const std::string& prefix) const;
};

Tensor basic_block(Tape& tape, const Tensor& x, const BottleneckParams& p);

}  // namespace csrrm
