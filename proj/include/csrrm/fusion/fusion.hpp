// Copyright 2026 The CSRRM Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>

#include "csrrm/core/tensor.hpp"
#include "csrrm/nn/backbone.hpp"
#include "csrrm/nn/params.hpp"

namespace csrrm {

enum class FusionKind { kDepthwise, kConcat, kGating };

std::string_view to_string(FusionKind kind);
FusionKind parse_fusion_kind(std::string_view name);

struct FusionConfig {
  std::size_t feature_dim = 128;
  std::size_t hidden = 512;
  std::size_t num_classes = 8;
  double mlp_dropout = 0.1;
  double head_dropout = 0.8;

  void validate() const;
};

/// Linear classifier: logits = W·x + b.
struct ClassifierParams {
  Tensor w;  // [num_classes × in]
  Tensor b;  // [num_classes]

  static ClassifierParams init(std::size_t in, std::size_t num_classes, std::mt19937_64& rng);
  void register_in(ParamSet& ps, const std::string& prefix) const;
};

/// Residual MLP, depth-wise strip kernel and classifier of the integration
/// module.
struct FusionParams {
  Tensor wm;  // [hidden × c]
  Tensor bm;  // [hidden]
  Tensor wn;  // [c × hidden]
  Tensor bn;  // [c]
  Tensor dw_kernel;  // [2 × c], row 0 weights F_R, row 1 weights F_S
  ClassifierParams classifier;

  static FusionParams init(const FusionConfig& cfg, std::mt19937_64& rng);
  void register_in(ParamSet& ps, const std::string& prefix) const;
};

/// [2×c] with row 0 = F_R and row 1 = F_S.
Tensor stack_features(Tape& tape, const GlobalFeature& fr, const GlobalFeature& fs);

/// F' + gelu(Wn·drop(gelu(Wm·row + bm)) + bn), applied to each row with
/// shared weights.
Tensor residual_mlp(Tape& tape, const Tensor& fp, const FusionParams& p, double dropout_rate,
                    bool training, std::uint64_t seed);

/// F^o_m = K[0,m]·F''[0,m] + K[1,m]·F''[1,m].
Tensor strip_dw_conv(Tape& tape, const Tensor& fpp, const Tensor& kernel);

/// W·drop(x) + b.
Tensor classify(Tape& tape, const Tensor& fo, const ClassifierParams& p, double dropout_rate,
                bool training, std::uint64_t seed);

/// Classifier over [F_R ; F_S] (length 2c).
Tensor fuse_concat(Tape& tape, const GlobalFeature& fr, const GlobalFeature& fs,
                   const ClassifierParams& p, double dropout_rate, bool training,
                   std::uint64_t seed);

/// Classifier over F_R ⊙ σ(F_S) + F_R.
Tensor fuse_semantic_gating(Tape& tape, const GlobalFeature& fr, const GlobalFeature& fs,
                            const ClassifierParams& p, double dropout_rate, bool training,
                            std::uint64_t seed);

/// One of the three integration heads with its own parameters.
class FusionHead {
 public:
  FusionHead(FusionKind kind, FusionConfig cfg, std::string prefix, std::uint64_t seed);

  FusionKind kind() const noexcept { return kind_; }
  const FusionConfig& config() const noexcept { return cfg_; }
  const ParamSet& params() const noexcept { return params_; }
  ParamSet& params() noexcept { return params_; }

  /// Logits [num_classes]. `seed` drives both dropout layers in training.
  Tensor forward(Tape& tape, const GlobalFeature& fr, const GlobalFeature& fs, bool training,
                 std::uint64_t seed) const;

 private:
  FusionKind kind_;
  FusionConfig cfg_;
  std::optional<FusionParams> dw_;
  ClassifierParams classifier_;
  ParamSet params_;
};

}  // namespace csrrm
