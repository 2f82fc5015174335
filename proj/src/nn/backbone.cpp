// Copyright 2026 The CSRRM Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "csrrm/nn/backbone.hpp"

#include <random>

#include "csrrm/core/error.hpp"
#include "csrrm/core/ops.hpp"

namespace csrrm {

void BackboneConfig::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError("BackboneConfig: " + what); };
  if (input_channels == 0) fail("input_channels must be positive");
  if (stem_channels == 0 || stem_kernel == 0 || stem_stride == 0) fail("stem must be non-empty");
  if (entry_grid != 0 && entry_channels == 0) fail("entry grid set without entry channels");
  if (stages.empty()) fail("at least one stage is required");
  for (std::size_t i = 0; i < stages.size(); ++i) {
    const auto& s = stages[i];
    if (s.width == 0 || s.bottleneck == 0 || s.blocks == 0 || s.stride == 0)
      fail("stage " + std::to_string(i) + " has a zero width, block count or stride");
    if (s.cham && (cham_reduction == 0 || s.width % cham_reduction != 0))
      fail("stage " + std::to_string(i) + " width " + std::to_string(s.width) +
           " is not divisible by the reduction ratio " + std::to_string(cham_reduction));
  }
  if (stages.back().width != feature_dim)
    fail("final stage width " + std::to_string(stages.back().width) + " differs from feature_dim " +
         std::to_string(feature_dim));
}

bool BackboneConfig::any_cham() const {
  for (const auto& s : stages)
    if (s.cham) return true;
  return false;
}

BackboneConfig BackboneConfig::desk_semantic(std::size_t labels, std::size_t feature_dim) {
  BackboneConfig c;
  c.input_channels = labels;
  c.stem_channels = 16;
  c.stem_stride = 2;
  c.stages = {{32, 8, 1, 1, true}, {64, 16, 1, 2, true}, {feature_dim, 32, 1, 2, true}};
  c.feature_dim = feature_dim;
  return c;
}

BackboneConfig BackboneConfig::desk_rgb(std::size_t feature_dim) {
  BackboneConfig c;
  c.input_channels = 3;
  c.stem_channels = 16;
  c.stem_stride = 2;
  c.stages = {{32, 8, 1, 2, false}, {64, 16, 1, 2, false}, {feature_dim, 32, 1, 2, false}};
  c.feature_dim = feature_dim;
  return c;
}

BackboneConfig BackboneConfig::full_semantic(std::size_t labels) {
  BackboneConfig c;
  c.input_channels = labels;
  c.stem_channels = 64;
  c.stem_stride = 1;
  c.entry_grid = 56;
  c.entry_channels = 256;
  c.stages = {{512, 128, 4, 2, true}, {1024, 256, 6, 2, true}, {2048, 512, 3, 2, true}};
  c.feature_dim = 2048;
  return c;
}

BackboneConfig BackboneConfig::full_rgb() {
  BackboneConfig c;
  c.input_channels = 3;
  c.stem_channels = 64;
  c.stem_stride = 2;
  c.stages = {{256, 64, 3, 2, false},
              {512, 128, 4, 2, false},
              {1024, 256, 6, 2, false},
              {2048, 512, 3, 2, false}};
  c.feature_dim = 2048;
  return c;
}

Backbone::Backbone(BackboneConfig cfg, std::string prefix, std::uint64_t seed)
    : cfg_(std::move(cfg)), prefix_(std::move(prefix)) {
  cfg_.validate();
  std::mt19937_64 rng(seed);
  stem_ = ConvParams::init(cfg_.input_channels, cfg_.stem_channels, cfg_.stem_kernel, rng);
  stem_.register_in(params_, prefix_ + ".stem");
  if (cfg_.entry_grid) {
    entry_ = ConvParams::init(cfg_.stem_channels, cfg_.entry_channels, 1, rng);
    entry_->register_in(params_, prefix_ + ".entry");
  }
  std::size_t in = cfg_.entry_width();
  for (std::size_t si = 0; si < cfg_.stages.size(); ++si) {
    const auto& sc = cfg_.stages[si];
    Stage stage;
    for (std::size_t bi = 0; bi < sc.blocks; ++bi) {
      stage.blocks.push_back(
          BottleneckParams::init(in, sc.bottleneck, sc.width, bi == 0 ? sc.stride : 1, rng));
      stage.blocks.back().register_in(
          params_, prefix_ + ".stage" + std::to_string(si) + ".block" + std::to_string(bi));
      in = sc.width;
    }
    if (sc.cham) {
      stage.cham = ChamParams::init(sc.width, cfg_.cham_reduction, rng);
      stage.cham->register_in(params_, prefix_ + ".stage" + std::to_string(si) + ".cham");
    }
    stages_.push_back(std::move(stage));
  }
}

std::pair<std::size_t, std::size_t> Backbone::entry_extent(std::size_t h, std::size_t w) const {
  const std::size_t sh = ops::conv_out_extent(h, cfg_.stem_kernel, cfg_.stem_stride, cfg_.stem_padding);
  const std::size_t sw = ops::conv_out_extent(w, cfg_.stem_kernel, cfg_.stem_stride, cfg_.stem_padding);
  if (sh == 0 || sw == 0) {
    throw ShapeError("backbone: " + std::to_string(h) + "x" + std::to_string(w) +
                     " input is too small for the stem");
  }
  if (!cfg_.entry_grid) return {sh, sw};
  if (sh != sw || sh % cfg_.entry_grid != 0) {
    throw ShapeError("backbone: stem output " + std::to_string(sh) + "x" + std::to_string(sw) +
                     " cannot be pooled onto a " + std::to_string(cfg_.entry_grid) + " grid");
  }
  return {cfg_.entry_grid, cfg_.entry_grid};
}

Tensor Backbone::forward(Tape& tape, const Tensor& x) const {
  if (!x.defined() || x.rank() != 3) throw ShapeError("backbone: input must be [C×H×W]");
  if (x.dim(0) != cfg_.input_channels) {
    throw ShapeError("backbone '" + prefix_ + "': input has " + std::to_string(x.dim(0)) +
                     " channels, configured for " + std::to_string(cfg_.input_channels));
  }
  entry_extent(x.dim(1), x.dim(2));

  Tensor h = ops::relu(tape, ops::conv2d(tape, x, stem_.weight, stem_.bias,
                                         {cfg_.stem_stride, cfg_.stem_padding}));
  if (entry_) {
    h = ops::avg_pool2d(tape, h, h.dim(1) / cfg_.entry_grid);
    h = ops::relu(tape, ops::conv2d(tape, h, entry_->weight, entry_->bias, {1, 0}));
  }
  for (const auto& stage : stages_) {
    for (const auto& block : stage.blocks) h = basic_block(tape, h, block);
    if (stage.cham) h = cham_apply(tape, h, cham_map(tape, h, *stage.cham));
  }
  return ops::global_avg_pool(tape, h);
}

GlobalFeature srrm_forward(Tape& tape, const Tensor& scores_chw, const Backbone& net) {
  return {net.forward(tape, scores_chw), FeatureSource::kSemantic};
}

GlobalFeature srrm_forward(Tape& tape, const ScoreTensor& m_filtered, const Backbone& net) {
  if (m_filtered.labels != net.config().input_channels) {
    throw ShapeError("srrm_forward: score tensor has " + std::to_string(m_filtered.labels) +
                     " labels, backbone expects " + std::to_string(net.config().input_channels));
  }
  return srrm_forward(tape, m_filtered.to_chw(), net);
}

GlobalFeature rgb_branch_forward(Tape& tape, const Tensor& image, const Backbone& net) {
  if (net.config().input_channels != 3)
    throw ConfigError("rgb branch: backbone must take 3 input channels");
  if (net.config().any_cham()) throw ConfigError("rgb branch: backbone must not use attention");
  return {net.forward(tape, image), FeatureSource::kRgb};
}

}  // namespace csrrm
