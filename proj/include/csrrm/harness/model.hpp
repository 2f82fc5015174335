// Copyright 2026 The CSRRM Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "csrrm/data/synth.hpp"
#include "csrrm/fusion/fusion.hpp"
#include "csrrm/harness/config.hpp"
#include "csrrm/harness/crops.hpp"
#include "csrrm/nn/backbone.hpp"

namespace csrrm {

/// Both branches, the per-branch classifiers used while training them
/// separately, and the fusion head.
struct CsrrmModel {
  explicit CsrrmModel(const ExperimentConfig& cfg);

  Backbone semantic;
  Backbone rgb;
  ClassifierParams semantic_head;
  ClassifierParams rgb_head;
  FusionHead fusion;

  ParamSet semantic_params() const;  // backbone + its classifier
  ParamSet rgb_params() const;
  ParamSet branch_params() const;    // both backbones, no classifiers
  ParamSet all_params() const;
};

struct Dataset {
  std::vector<SyntheticScene> train;
  std::vector<SyntheticScene> test;
};

/// Reads cfg.corpus when set, otherwise generates the scenes; applies the
/// vocabulary restriction.
Dataset load_dataset(const ExperimentConfig& cfg);

/// Branch inputs for one crop: the score crop after the confidence filter,
/// laid out [l×h×w], and the RGB crop [3×h×w].
struct SceneView {
  Tensor scores;
  Tensor image;
};

SceneView prepare_view(const SyntheticScene& scene, const CropSpec& crop,
                       std::size_t filter_window);

/// Global features of both branches for one view.
struct ViewFeatures {
  std::vector<double> semantic;
  std::vector<double> rgb;
};

ViewFeatures extract_features(const CsrrmModel& model, const SceneView& view);
std::array<ViewFeatures, kNumCrops> extract_ten_crop_features(const CsrrmModel& model,
                                                              const SyntheticScene& scene,
                                                              const ExperimentConfig& cfg);

/// Softmax probabilities averaged over crops, for each branch classifier and
/// the fused head (evaluation mode, no dropout).
struct ClassProbabilities {
  std::vector<double> semantic;
  std::vector<double> rgb;
  std::vector<double> fused;
};

ClassProbabilities average_probabilities(const CsrrmModel& model,
                                         std::span<const ViewFeatures> views);

/// Fused class of a scene under the ten-crop protocol.
std::size_t ten_crop_eval(const CsrrmModel& model, const SyntheticScene& scene,
                          const ExperimentConfig& cfg);

struct SplitAccuracy {
  double semantic = 0.0;
  double rgb = 0.0;
  double fused = 0.0;
};

/// Ten-crop accuracy over `scenes`, fanned out over cfg.eval_workers
/// threads. Parameters are only read.
SplitAccuracy evaluate(const CsrrmModel& model, std::span<const SyntheticScene> scenes,
                       const ExperimentConfig& cfg);

std::size_t argmax(std::span<const double> v);

}  // namespace csrrm
