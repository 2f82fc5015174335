// Copyright 2026 The CSRRM Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "csrrm/fusion/fusion.hpp"
#include "csrrm/harness/config.hpp"
#include "csrrm/nn/backbone.hpp"

namespace csrrm {

/// Multiply-adds of a convolution producing an out_h×out_w map.
constexpr std::uint64_t conv_macs(std::uint64_t c_out, std::uint64_t c_in, std::uint64_t kh,
                                  std::uint64_t kw, std::uint64_t out_h, std::uint64_t out_w) {
  return c_out * c_in * kh * kw * out_h * out_w;
}
constexpr std::uint64_t linear_macs(std::uint64_t in, std::uint64_t out) { return in * out; }

struct FlopEntry {
  std::string name;
  std::uint64_t macs = 0;
};

struct FlopReport {
  std::vector<FlopEntry> entries;
  std::uint64_t total() const;
};

/// Per-layer multiply-adds of a backbone on an h×w input. Pooling and
/// elementwise work are not counted.
FlopReport count_backbone_flops(const BackboneConfig& cfg, std::size_t h, std::size_t w);

/// Fusion head cost. `head` covers what distinguishes the three heads (the
/// strip kernel or gate plus the classifier); the shared residual MLP is
/// reported separately.
struct FusionFlops {
  std::uint64_t head = 0;
  std::uint64_t mlp = 0;
};

FusionFlops count_fusion_flops(FusionKind kind, const FusionConfig& cfg);

struct ModelFlops {
  FlopReport semantic;
  FlopReport rgb;
  FusionFlops fusion;
  std::uint64_t total() const { return semantic.total() + rgb.total() + fusion.head + fusion.mlp; }
};

/// Cost of one view under `cfg`: crop, then filter, then both branches and
/// the fusion head.
ModelFlops count_flops(const ExperimentConfig& cfg);

nlohmann::json to_json(const FlopReport& r);

}  // namespace csrrm
