// Copyright 2026 The CSRRM Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "csrrm/core/tensor.hpp"
#include "csrrm/filter/score_filter.hpp"
#include "csrrm/nn/blocks.hpp"
#include "csrrm/nn/params.hpp"

namespace csrrm {

struct StageConfig {
  std::size_t width = 0;       // output channels of every block in the stage
  std::size_t bottleneck = 0;  // inner width of the 1×1/3×3/1×1 stack
  std::size_t blocks = 1;
  std::size_t stride = 1;  // applied by the first block
  bool cham = false;       // channel attention after the stage
};

/// Architecture of one branch: a k×k stem convolution, an optional entry
/// that average-pools the stem output onto a fixed grid and projects it with
/// a 1×1 convolution, then bottleneck stages and global average pooling.
struct BackboneConfig {
  std::size_t input_channels = 0;
  std::size_t stem_channels = 0;
  std::size_t stem_kernel = 7;
  std::size_t stem_stride = 1;
  std::size_t stem_padding = 3;
  std::size_t entry_grid = 0;  // 0 disables the entry
  std::size_t entry_channels = 0;
  std::vector<StageConfig> stages;
  std::size_t cham_reduction = 16;
  std::size_t feature_dim = 0;

  void validate() const;
  bool any_cham() const;
  std::size_t entry_width() const { return entry_grid ? entry_channels : stem_channels; }

  /// Semantic branch at desk scale: stride-2 stem, three single-block stages.
  static BackboneConfig desk_semantic(std::size_t labels, std::size_t feature_dim = 128);
  /// RGB stand-in at desk scale, no attention.
  static BackboneConfig desk_rgb(std::size_t feature_dim = 128);
  /// Semantic branch mirroring ResNet-50 stages 2–4 (4, 6, 3 blocks) at
  /// feature width 2048, with a stride-1 stem and a 56×56 entry grid.
  static BackboneConfig full_semantic(std::size_t labels = 150);
  /// ResNet-50 layout with the stem max-pool replaced by a strided first stage.
  static BackboneConfig full_rgb();
};

enum class FeatureSource { kSemantic, kRgb };

struct GlobalFeature {
  Tensor values;  // [c]
  FeatureSource source = FeatureSource::kSemantic;
};

/// A branch network: configuration plus its initialized parameters.
class Backbone {
 public:
  Backbone(BackboneConfig cfg, std::string prefix, std::uint64_t seed);

  const BackboneConfig& config() const noexcept { return cfg_; }
  const std::string& prefix() const noexcept { return prefix_; }
  const ParamSet& params() const noexcept { return params_; }
  ParamSet& params() noexcept { return params_; }

  /// x[C×H×W] → [feature_dim].
  Tensor forward(Tape& tape, const Tensor& x) const;

  /// Spatial extent entering the first stage for an H×W input (throws on
  /// geometry the architecture cannot process).
  std::pair<std::size_t, std::size_t> entry_extent(std::size_t h, std::size_t w) const;

 private:
  struct Stage {
    std::vector<BottleneckParams> blocks;
    std::optional<ChamParams> cham;
  };

  BackboneConfig cfg_;
  std::string prefix_;
  ConvParams stem_;
  std::optional<ConvParams> entry_;
  std::vector<Stage> stages_;
  ParamSet params_;
};

/// Semantic global feature from a (filtered) score tensor.
GlobalFeature srrm_forward(Tape& tape, const ScoreTensor& m_filtered, const Backbone& net);
/// Same, taking the score tensor already laid out channel-major.
GlobalFeature srrm_forward(Tape& tape, const Tensor& scores_chw, const Backbone& net);

/// RGB global feature from a [3×H×W] image.
GlobalFeature rgb_branch_forward(Tape& tape, const Tensor& image, const Backbone& net);

}  // namespace csrrm
