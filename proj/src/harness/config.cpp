// Copyright 2026 The CSRRM Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "csrrm/harness/config.hpp"

#include <fstream>

#include "csrrm/core/error.hpp"
#include "csrrm/data/fixture.hpp"

namespace csrrm {
namespace {

template <typename T>
void opt(const nlohmann::json& j, const char* key, T& field) {
  if (j.contains(key)) j.at(key).get_to(field);
}

}  // namespace

void ExperimentConfig::validate() const {
  recipe.validate();
  if (keep_labels && (keep_labels < 2 || keep_labels > recipe.labels))
    throw ConfigError("keep_labels must be 0 or in [2, labels]");
  if (filter_window == 0) throw ConfigError("filter_window must be at least 1");
  if (crop == 0 || crop > recipe.width || crop > recipe.height)
    throw ConfigError("crop must fit inside the scene");
  if (crop / filter_window == 0) throw ConfigError("filter window exceeds the crop");
  semantic.validate();
  rgb.validate();
  head.validate();
  if (semantic.input_channels != semantic_labels()) {
    throw ConfigError("semantic backbone takes " + std::to_string(semantic.input_channels) +
                      " channels but scenes carry " + std::to_string(semantic_labels()));
  }
  if (rgb.input_channels != 3 || rgb.any_cham())
    throw ConfigError("rgb backbone must take 3 channels and use no attention");
  if (semantic.feature_dim != head.feature_dim || rgb.feature_dim != head.feature_dim)
    throw ConfigError("branch feature widths must equal the fusion feature width");
  if (head.num_classes != recipe.num_classes)
    throw ConfigError("fusion classes must match the recipe");
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (train_scenes == 0) throw ConfigError("train_scenes must be positive");
  if (eval_workers == 0) throw ConfigError("eval_workers must be positive");
  if (optimizer.max_lr <= 0 || optimizer.delta <= 0 || optimizer.momentum < 0 ||
      optimizer.momentum >= 1) {
    throw ConfigError("optimizer hyperparameters out of range");
  }
}

ExperimentConfig ExperimentConfig::desk() { return {}; }

std::string_view to_string(OptimizerKind kind) {
  return kind == OptimizerKind::kAlig ? "alig" : "sgd";
}

OptimizerKind parse_optimizer_kind(std::string_view name) {
  if (name == "alig") return OptimizerKind::kAlig;
  if (name == "sgd") return OptimizerKind::kSgd;
  throw ConfigError("unknown optimizer '" + std::string(name) + "' (expected alig or sgd)");
}

void to_json(nlohmann::json& j, const StageConfig& s) {
  j = {{"width", s.width}, {"bottleneck", s.bottleneck}, {"blocks", s.blocks},
       {"stride", s.stride}, {"cham", s.cham}};
}

void from_json(const nlohmann::json& j, StageConfig& s) {
  opt(j, "width", s.width);
  opt(j, "bottleneck", s.bottleneck);
  opt(j, "blocks", s.blocks);
  opt(j, "stride", s.stride);
  opt(j, "cham", s.cham);
}

void to_json(nlohmann::json& j, const BackboneConfig& c) {
  j = {{"input_channels", c.input_channels}, {"stem_channels", c.stem_channels},
       {"stem_kernel", c.stem_kernel},       {"stem_stride", c.stem_stride},
       {"stem_padding", c.stem_padding},     {"entry_grid", c.entry_grid},
       {"entry_channels", c.entry_channels}, {"stages", c.stages},
       {"cham_reduction", c.cham_reduction}, {"feature_dim", c.feature_dim}};
}

void from_json(const nlohmann::json& j, BackboneConfig& c) {
  opt(j, "input_channels", c.input_channels);
  opt(j, "stem_channels", c.stem_channels);
  opt(j, "stem_kernel", c.stem_kernel);
  opt(j, "stem_stride", c.stem_stride);
  opt(j, "stem_padding", c.stem_padding);
  opt(j, "entry_grid", c.entry_grid);
  opt(j, "entry_channels", c.entry_channels);
  opt(j, "stages", c.stages);
  opt(j, "cham_reduction", c.cham_reduction);
  opt(j, "feature_dim", c.feature_dim);
}

void to_json(nlohmann::json& j, const FusionConfig& c) {
  j = {{"feature_dim", c.feature_dim}, {"hidden", c.hidden}, {"num_classes", c.num_classes},
       {"mlp_dropout", c.mlp_dropout}, {"head_dropout", c.head_dropout}};
}

void from_json(const nlohmann::json& j, FusionConfig& c) {
  opt(j, "feature_dim", c.feature_dim);
  opt(j, "hidden", c.hidden);
  opt(j, "num_classes", c.num_classes);
  opt(j, "mlp_dropout", c.mlp_dropout);
  opt(j, "head_dropout", c.head_dropout);
}

void to_json(nlohmann::json& j, const OptimizerConfig& c) {
  j = {{"kind", to_string(c.kind)}, {"max_lr", c.max_lr}, {"delta", c.delta},
       {"momentum", c.momentum}};
}

void from_json(const nlohmann::json& j, OptimizerConfig& c) {
  if (j.contains("kind")) c.kind = parse_optimizer_kind(j.at("kind").get<std::string>());
  opt(j, "max_lr", c.max_lr);
  opt(j, "delta", c.delta);
  opt(j, "momentum", c.momentum);
}

void to_json(nlohmann::json& j, const ExperimentConfig& c) {
  j = {{"recipe", c.recipe},
       {"train_scenes", c.train_scenes},
       {"test_scenes", c.test_scenes},
       {"corpus", c.corpus.string()},
       {"keep_labels", c.keep_labels},
       {"filter_window", c.filter_window},
       {"crop", c.crop},
       {"semantic", c.semantic},
       {"rgb", c.rgb},
       {"fusion", to_string(c.fusion)},
       {"head", c.head},
       {"optimizer", c.optimizer},
       {"stage1_epochs", c.stage1_epochs},
       {"stage2_epochs", c.stage2_epochs},
       {"batch_size", c.batch_size},
       {"cache_features", c.cache_features},
       {"eval_workers", c.eval_workers},
       {"seed", c.seed},
       {"outdir", c.outdir.string()}};
}

void from_json(const nlohmann::json& j, ExperimentConfig& c) {
  if (j.contains("recipe")) from_json(j.at("recipe"), c.recipe);
  opt(j, "train_scenes", c.train_scenes);
  opt(j, "test_scenes", c.test_scenes);
  if (j.contains("corpus")) c.corpus = j.at("corpus").get<std::string>();
  opt(j, "keep_labels", c.keep_labels);
  opt(j, "filter_window", c.filter_window);
  opt(j, "crop", c.crop);
  if (j.contains("semantic")) from_json(j.at("semantic"), c.semantic);
  if (j.contains("rgb")) from_json(j.at("rgb"), c.rgb);
  if (j.contains("fusion")) c.fusion = parse_fusion_kind(j.at("fusion").get<std::string>());
  if (j.contains("head")) from_json(j.at("head"), c.head);
  if (j.contains("optimizer")) from_json(j.at("optimizer"), c.optimizer);
  opt(j, "stage1_epochs", c.stage1_epochs);
  opt(j, "stage2_epochs", c.stage2_epochs);
  opt(j, "batch_size", c.batch_size);
  opt(j, "cache_features", c.cache_features);
  opt(j, "eval_workers", c.eval_workers);
  opt(j, "seed", c.seed);
  if (j.contains("outdir")) c.outdir = j.at("outdir").get<std::string>();
  // Derived widths follow the recipe unless stated explicitly.
  if (!(j.contains("semantic") && j.at("semantic").contains("input_channels")))
    c.semantic.input_channels = c.semantic_labels();
  if (!(j.contains("head") && j.at("head").contains("num_classes")))
    c.head.num_classes = c.recipe.num_classes;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  ExperimentConfig c = ExperimentConfig::desk();
  try {
    from_json(nlohmann::json::parse(in), c);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  return c;
}

}  // namespace csrrm
