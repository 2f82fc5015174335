// Copyright 2026 The CSRRM Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "csrrm/harness/config.hpp"
#include "csrrm/harness/flops.hpp"
#include "csrrm/harness/model.hpp"

namespace csrrm {

/// One line of metrics.jsonl.
struct EpochRecord {
  int stage = 1;
  std::size_t epoch = 0;
  std::string branch;  // "semantic", "rgb" or "fusion"
  std::string split = "train";
  double loss = 0.0;
  double accuracy = 0.0;  // on the training views, with dropout active
  double max_step = 0.0;
  double wall_ms = 0.0;
};

void to_json(nlohmann::json& j, const EpochRecord& r);

struct RunMetrics {
  std::vector<EpochRecord> records;
  std::vector<double> steps;  // every step size applied, in order
  SplitAccuracy train;        // ten-crop, evaluation mode, after stage 2
  SplitAccuracy test;
  std::uint64_t branch_checksum_before = 0;  // around stage 2
  std::uint64_t branch_checksum_after = 0;
  double stage2_branch_grad_max = 0.0;  // largest |grad| on any branch parameter
  ModelFlops flops;                     // per-view multiply-adds of the configured model
  double wall_ms = 0.0;

  /// Everything except wall-clock fields, for determinism comparisons.
  nlohmann::json deterministic_json() const;
};

struct TrainResult {
  CsrrmModel model;
  RunMetrics metrics;
};

/// Stage 1 trains each branch with its own classifier; stage 2 freezes both
/// branches and trains the fusion head from scratch. Writes metrics.jsonl,
/// final.json, config.json and stage1/ and stage2/ checkpoints when
/// cfg.outdir is set. Throws NumericError, with the stage and step, on a
/// non-finite loss or gradient.
TrainResult train_two_stage(const ExperimentConfig& cfg);
TrainResult train_two_stage(const ExperimentConfig& cfg, const Dataset& data);

/// Restores a trained model from a run directory.
CsrrmModel load_trained_model(const ExperimentConfig& cfg, const std::filesystem::path& outdir);

}  // namespace csrrm
