// Copyright 2026 The CSRRM Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "csrrm/data/synth.hpp"
#include "csrrm/fusion/fusion.hpp"
#include "csrrm/nn/backbone.hpp"

namespace csrrm {

enum class OptimizerKind { kAlig, kSgd };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::kAlig;
  double max_lr = 0.1;  // ALI-G cap, or the SGD learning rate
  double delta = 1e-8;
  double momentum = 0.0;
};

/// Everything one training run depends on. Two runs with equal configs
/// produce identical metrics (wall-clock fields aside).
struct ExperimentConfig {
  SceneRecipe recipe;
  std::size_t train_scenes = 512;
  std::size_t test_scenes = 256;
  std::filesystem::path corpus;  // empty: generate scenes in memory from `recipe`

  std::size_t keep_labels = 0;  // vocabulary restriction, 0 keeps every label
  std::size_t filter_window = 2;  // 1 disables the filter
  std::size_t crop = 28;

  BackboneConfig semantic = BackboneConfig::desk_semantic(SceneRecipe{}.labels);
  BackboneConfig rgb = BackboneConfig::desk_rgb();
  FusionKind fusion = FusionKind::kDepthwise;
  // At c = 128 a 0.8 head dropout leaves ~26 live classifier inputs; 0.5
  // keeps the head trainable within the stage-2 budget.
  FusionConfig head{.head_dropout = 0.5};

  OptimizerConfig optimizer;
  std::size_t stage1_epochs = 60;
  std::size_t stage2_epochs = 120;
  std::size_t batch_size = 16;
  bool cache_features = true;  // stage 2 reuses frozen branch outputs per crop
  std::size_t eval_workers = 1;
  std::uint64_t seed = 7;

  std::filesystem::path outdir;  // empty: nothing written

  /// Label count the semantic branch sees after vocabulary restriction.
  std::size_t semantic_labels() const { return keep_labels ? keep_labels : recipe.labels; }
  void validate() const;

  /// 8-class, 512-scene configuration sized for a single core; the same as a
  /// default-constructed config.
  static ExperimentConfig desk();
};

std::string_view to_string(OptimizerKind kind);
OptimizerKind parse_optimizer_kind(std::string_view name);

void to_json(nlohmann::json& j, const StageConfig& s);
void from_json(const nlohmann::json& j, StageConfig& s);
void to_json(nlohmann::json& j, const BackboneConfig& c);
void from_json(const nlohmann::json& j, BackboneConfig& c);
void to_json(nlohmann::json& j, const FusionConfig& c);
void from_json(const nlohmann::json& j, FusionConfig& c);
void to_json(nlohmann::json& j, const OptimizerConfig& c);
void from_json(const nlohmann::json& j, OptimizerConfig& c);
void to_json(nlohmann::json& j, const ExperimentConfig& c);
/// Keys absent from `j` keep the values already in `c`.
void from_json(const nlohmann::json& j, ExperimentConfig& c);

ExperimentConfig load_experiment_config(const std::filesystem::path& path);

}  // namespace csrrm
