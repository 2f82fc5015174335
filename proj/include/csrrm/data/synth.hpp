// Copyright 2026 The CSRRM Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "csrrm/core/tensor.hpp"
#include "csrrm/filter/score_filter.hpp"

namespace csrrm {

/// Generator parameters. Label 0 is background, labels 1..key_labels take
/// part in class rules, the last label is "clutter" (what a missed object is
/// segmented as) and everything in between is a distractor.
struct SceneRecipe {
  std::size_t width = 32;
  std::size_t height = 32;
  std::size_t labels = 12;
  std::size_t num_classes = 8;
  std::size_t key_labels = 4;
  std::size_t cell = 4;  // region rectangles snap to this grid
  std::size_t distractors = 1;

  double corruption_rate = 0.0;    // fraction of pixels given a wrong label
  double corruption_margin = 0.8;  // corrupted peak relative to its window's weakest clean peak
  std::size_t corruption_window = 2;
  double region_miss_rate = 0.0;  // chance one key object is segmented as clutter

  double clean_peak_min = 0.7;
  double clean_peak_max = 0.95;
  double rgb_pixel_noise = 0.1;   // σ of independent per-pixel noise
  double rgb_region_noise = 0.0;  // σ of a per-region colour shift
  double rgb_region_miss_rate = 0.0;  // chance one key object blends into the background

  std::uint64_t seed = 1;

  void validate() const;
  std::uint32_t clutter_label() const { return static_cast<std::uint32_t>(labels - 1); }
};

enum class Relation : std::uint8_t { kHorizontal, kVertical };

/// A class is an unordered pair of key labels in a given adjacency.
struct ClassRule {
  std::uint32_t a = 0;
  std::uint32_t b = 0;
  Relation relation = Relation::kHorizontal;
};

/// Class rules for a recipe; pairs are ordered so every key label is used
/// equally often. Throws ConfigError when the recipe cannot supply
/// num_classes distinct rules.
std::vector<ClassRule> class_rules(const SceneRecipe& recipe);

/// Class of a clean label map by its key-object relation, or nullopt when the
/// map does not contain exactly one adjacent key pair.
std::optional<std::size_t> rule_oracle(const LabelMap& clean, const SceneRecipe& recipe);

/// Channel-major [3×h×w] image.
struct RgbImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> data;

  double at(std::size_t c, std::size_t x, std::size_t y) const {
    return data[(c * height + y) * width + x];
  }
  Tensor to_tensor() const;
  bool operator==(const RgbImage&) const = default;
};

std::array<double, 3> label_color(std::uint32_t label);

struct SyntheticScene {
  ScoreTensor score;
  RgbImage rgb;
  std::uint32_t label = 0;
  LabelMap clean_labels;
  std::vector<std::uint8_t> corruption_mask;  // row-major, 1 where corrupted

  bool operator==(const SyntheticScene&) const = default;
};

/// The index-th scene of a recipe; pure in (recipe, index).
SyntheticScene generate_scene(const SceneRecipe& recipe, std::size_t index);

/// Scenes first_index .. first_index + n − 1. Class of scene i is i mod
/// num_classes, so any contiguous run is balanced within ±1.
std::vector<SyntheticScene> generate(const SceneRecipe& recipe, std::size_t n,
                                     std::size_t first_index = 0);

/// Keeps channels 0..keep_k−2 and folds channels keep_k−1.. into one "other"
/// channel; clean labels fold the same way and the corruption mask is
/// recomputed.
SyntheticScene vocabulary_restrict(const SyntheticScene& scene, std::size_t keep_k);

}  // namespace csrrm
