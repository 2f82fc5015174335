// Copyright 2026 The CSRRM Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "csrrm/harness/flops.hpp"

#include "csrrm/core/error.hpp"
#include "csrrm/core/ops.hpp"

namespace csrrm {

std::uint64_t FlopReport::total() const {
  std::uint64_t t = 0;
  for (const auto& e : entries) t += e.macs;
  return t;
}

FlopReport count_backbone_flops(const BackboneConfig& cfg, std::size_t h, std::size_t w) {
  cfg.validate();
  FlopReport r;
  std::size_t oh = ops::conv_out_extent(h, cfg.stem_kernel, cfg.stem_stride, cfg.stem_padding);
  std::size_t ow = ops::conv_out_extent(w, cfg.stem_kernel, cfg.stem_stride, cfg.stem_padding);
  if (oh == 0 || ow == 0) throw ShapeError("count_flops: input too small for the stem");
  r.entries.push_back({"stem", conv_macs(cfg.stem_channels, cfg.input_channels, cfg.stem_kernel,
                                         cfg.stem_kernel, oh, ow)});
  if (cfg.entry_grid) {
    if (oh != ow || oh % cfg.entry_grid != 0)
      throw ShapeError("count_flops: stem output cannot be pooled onto the entry grid");
    oh = ow = cfg.entry_grid;
    r.entries.push_back(
        {"entry", conv_macs(cfg.entry_channels, cfg.stem_channels, 1, 1, oh, ow)});
  }
  std::size_t in = cfg.entry_width();
  for (std::size_t si = 0; si < cfg.stages.size(); ++si) {
    const auto& sc = cfg.stages[si];
    const std::string stage = "stage" + std::to_string(si);
    for (std::size_t bi = 0; bi < sc.blocks; ++bi) {
      const std::size_t s = bi == 0 ? sc.stride : 1;
      const std::size_t nh = ops::conv_out_extent(oh, 3, s, 1);
      const std::size_t nw = ops::conv_out_extent(ow, 3, s, 1);
      std::uint64_t m = conv_macs(sc.bottleneck, in, 1, 1, oh, ow) +
                        conv_macs(sc.bottleneck, sc.bottleneck, 3, 3, nh, nw) +
                        conv_macs(sc.width, sc.bottleneck, 1, 1, nh, nw);
      if (s != 1 || in != sc.width) m += conv_macs(sc.width, in, 1, 1, nh, nw);
      r.entries.push_back({stage + ".block" + std::to_string(bi), m});
      oh = nh;
      ow = nw;
      in = sc.width;
    }
    if (sc.cham) {
      // Both pooled descriptors pass through W0 then W1.
      const std::uint64_t hidden = sc.width / cfg.cham_reduction;
      r.entries.push_back({stage + ".cham", 2 * (linear_macs(sc.width, hidden) +
                                                  linear_macs(hidden, sc.width))});
    }
  }
  return r;
}

FusionFlops count_fusion_flops(FusionKind kind, const FusionConfig& cfg) {
  cfg.validate();
  const std::uint64_t c = cfg.feature_dim, n = cfg.num_classes;
  FusionFlops f;
  switch (kind) {
    case FusionKind::kDepthwise:
      f.head = 2 * c + linear_macs(c, n);
      f.mlp = 2 * (linear_macs(c, cfg.hidden) + linear_macs(cfg.hidden, c));
      break;
    case FusionKind::kConcat:
      f.head = linear_macs(2 * c, n);
      break;
    case FusionKind::kGating:
      f.head = c + linear_macs(c, n);
      break;
  }
  return f;
}

ModelFlops count_flops(const ExperimentConfig& cfg) {
  cfg.validate();
  const std::size_t filtered = cfg.filter_window > 1 ? cfg.crop / cfg.filter_window : cfg.crop;
  return {count_backbone_flops(cfg.semantic, filtered, filtered),
          count_backbone_flops(cfg.rgb, cfg.crop, cfg.crop),
          count_fusion_flops(cfg.fusion, cfg.head)};
}

nlohmann::json to_json(const FlopReport& r) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& e : r.entries) layers.push_back({{"name", e.name}, {"macs", e.macs}});
  return {{"layers", layers}, {"total", r.total()}};
}

}  // namespace csrrm
