// Copyright 2026 The CSRRM Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <json.hpp>

#include "csrrm/harness/config.hpp"
#include "csrrm/harness/model.hpp"

namespace csrrm {

struct AblationMatrix {
  std::vector<std::size_t> windows{1, 2, 4};
  std::vector<bool> cham{true, false};
  std::vector<FusionKind> fusions{FusionKind::kDepthwise, FusionKind::kConcat,
                                  FusionKind::kGating};
  std::vector<std::size_t> keep_labels{0};  // 0 keeps the full vocabulary

  std::size_t cells() const {
    return windows.size() * cham.size() * fusions.size() * keep_labels.size();
  }
};

void from_json(const nlohmann::json& j, AblationMatrix& m);

struct AblationRow {
  std::size_t cell = 0;
  std::size_t window = 0;
  bool cham = false;
  FusionKind fusion = FusionKind::kDepthwise;
  std::size_t keep_labels = 0;
  SplitAccuracy train;
  SplitAccuracy test;
  std::uint64_t semantic_macs = 0;
  double wall_ms = 0.0;
};

nlohmann::json to_json(const AblationRow& r);

/// One config per cell, window-major. Every cell keeps the base seed so
/// cells differ only in the ablated option.
std::vector<ExperimentConfig> expand_matrix(const ExperimentConfig& base, const AblationMatrix& m);

/// Trains every cell and returns one row each; with base.outdir set, cell i
/// writes to outdir/cell_i and rows go to outdir/ablation.jsonl.
std::vector<AblationRow> ablate(const ExperimentConfig& base, const AblationMatrix& m);

}  // namespace csrrm
