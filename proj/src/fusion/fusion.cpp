// Copyright 2026 The CSRRM Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "csrrm/fusion/fusion.hpp"

#include "csrrm/core/error.hpp"
#include "csrrm/core/ops.hpp"
#include "csrrm/core/seed.hpp"

namespace csrrm {

std::string_view to_string(FusionKind kind) {
  switch (kind) {
    case FusionKind::kDepthwise: return "dw";
    case FusionKind::kConcat: return "concat";
    case FusionKind::kGating: return "gating";
  }
  return "?";
}

FusionKind parse_fusion_kind(std::string_view name) {
  if (name == "dw") return FusionKind::kDepthwise;
  if (name == "concat") return FusionKind::kConcat;
  if (name == "gating") return FusionKind::kGating;
  throw ConfigError("unknown fusion head '" + std::string(name) + "' (dw | concat | gating)");
}

void FusionConfig::validate() const {
  if (feature_dim == 0 || hidden == 0 || num_classes == 0)
    throw ConfigError("FusionConfig: feature_dim, hidden and num_classes must be positive");
  if (!(mlp_dropout >= 0 && mlp_dropout < 1) || !(head_dropout >= 0 && head_dropout < 1))
    throw ConfigError("FusionConfig: dropout rates must lie in [0, 1)");
}

ClassifierParams ClassifierParams::init(std::size_t in, std::size_t num_classes,
                                        std::mt19937_64& rng) {
  return {kaiming_uniform({num_classes, in}, in, rng), Tensor::zeros({num_classes}, true)};
}

void ClassifierParams::register_in(ParamSet& ps, const std::string& prefix) const {
  ps.add(prefix + ".w", w);
  ps.add(prefix + ".b", b);
}

FusionParams FusionParams::init(const FusionConfig& cfg, std::mt19937_64& rng) {
  cfg.validate();
  FusionParams p;
  p.wm = kaiming_uniform({cfg.hidden, cfg.feature_dim}, cfg.feature_dim, rng);
  p.bm = Tensor::zeros({cfg.hidden}, true);
  p.wn = kaiming_uniform({cfg.feature_dim, cfg.hidden}, cfg.hidden, rng);
  p.bn = Tensor::zeros({cfg.feature_dim}, true);
  p.dw_kernel = Tensor::full({2, cfg.feature_dim}, 0.5, true);
  p.classifier = ClassifierParams::init(cfg.feature_dim, cfg.num_classes, rng);
  return p;
}

void FusionParams::register_in(ParamSet& ps, const std::string& prefix) const {
  ps.add(prefix + ".mlp.wm", wm);
  ps.add(prefix + ".mlp.bm", bm);
  ps.add(prefix + ".mlp.wn", wn);
  ps.add(prefix + ".mlp.bn", bn);
  ps.add(prefix + ".dw_kernel", dw_kernel);
  classifier.register_in(ps, prefix + ".classifier");
}

namespace {

void require_pair(const char* op, const GlobalFeature& fr, const GlobalFeature& fs) {
  if (!fr.values.defined() || !fs.values.defined() || fr.values.rank() != 1 ||
      fs.values.rank() != 1) {
    throw ShapeError(std::string(op) + ": global features must be vectors");
  }
  if (fr.values.size() != fs.values.size()) {
    throw ShapeError(std::string(op) + ": F_R has length " + std::to_string(fr.values.size()) +
                     ", F_S has length " + std::to_string(fs.values.size()));
  }
}

}  // namespace

Tensor stack_features(Tape& tape, const GlobalFeature& fr, const GlobalFeature& fs) {
  require_pair("stack_features", fr, fs);
  return ops::stack(tape, fr.values, fs.values);
}

Tensor residual_mlp(Tape& tape, const Tensor& fp, const FusionParams& p, double dropout_rate,
                    bool training, std::uint64_t seed) {
  if (!fp.defined() || fp.rank() != 2 || fp.dim(0) != 2)
    throw ShapeError("residual_mlp: input must be [2×c]");
  if (fp.dim(1) != p.wm.dim(1) || p.wn.dim(0) != fp.dim(1)) {
    throw ShapeError("residual_mlp: input " + shape_str(fp.shape()) + " does not match Wm " +
                     shape_str(p.wm.shape()) + " / Wn " + shape_str(p.wn.shape()));
  }
  Tensor h = ops::gelu(tape, ops::linear(tape, fp, p.wm, p.bm));
  h = ops::dropout(tape, h, dropout_rate, training, seed);
  h = ops::gelu(tape, ops::linear(tape, h, p.wn, p.bn));
  return ops::add(tape, fp, h);
}

Tensor strip_dw_conv(Tape& tape, const Tensor& fpp, const Tensor& kernel) {
  if (!fpp.defined() || fpp.rank() != 2 || fpp.dim(0) != 2)
    throw ShapeError("strip_dw_conv: input must be [2×c]");
  if (!kernel.defined() || kernel.shape() != fpp.shape()) {
    throw ShapeError("strip_dw_conv: kernel " +
                     (kernel.defined() ? shape_str(kernel.shape()) : std::string("<undefined>")) +
                     " does not match input " + shape_str(fpp.shape()));
  }
  return ops::sum_rows(tape, ops::hadamard(tape, fpp, kernel));
}

Tensor classify(Tape& tape, const Tensor& fo, const ClassifierParams& p, double dropout_rate,
                bool training, std::uint64_t seed) {
  if (!fo.defined() || fo.rank() != 1 || fo.size() != p.w.dim(1)) {
    throw ShapeError("classify: feature " +
                     (fo.defined() ? shape_str(fo.shape()) : std::string("<undefined>")) +
                     " does not match classifier " + shape_str(p.w.shape()));
  }
  return ops::linear(tape, ops::dropout(tape, fo, dropout_rate, training, seed), p.w, p.b);
}

Tensor fuse_concat(Tape& tape, const GlobalFeature& fr, const GlobalFeature& fs,
                   const ClassifierParams& p, double dropout_rate, bool training,
                   std::uint64_t seed) {
  require_pair("fuse_concat", fr, fs);
  return classify(tape, ops::concat(tape, fr.values, fs.values), p, dropout_rate, training, seed);
}

Tensor fuse_semantic_gating(Tape& tape, const GlobalFeature& fr, const GlobalFeature& fs,
                            const ClassifierParams& p, double dropout_rate, bool training,
                            std::uint64_t seed) {
  require_pair("fuse_semantic_gating", fr, fs);
  const Tensor gated =
      ops::add(tape, ops::hadamard(tape, fr.values, ops::sigmoid(tape, fs.values)), fr.values);
  return classify(tape, gated, p, dropout_rate, training, seed);
}

FusionHead::FusionHead(FusionKind kind, FusionConfig cfg, std::string prefix, std::uint64_t seed)
    : kind_(kind), cfg_(cfg) {
  cfg_.validate();
  std::mt19937_64 rng(seed);
  switch (kind_) {
    case FusionKind::kDepthwise:
      dw_ = FusionParams::init(cfg_, rng);
      dw_->register_in(params_, prefix);
      classifier_ = dw_->classifier;
      break;
    case FusionKind::kConcat:
      classifier_ = ClassifierParams::init(2 * cfg_.feature_dim, cfg_.num_classes, rng);
      classifier_.register_in(params_, prefix + ".classifier");
      break;
    case FusionKind::kGating:
      classifier_ = ClassifierParams::init(cfg_.feature_dim, cfg_.num_classes, rng);
      classifier_.register_in(params_, prefix + ".classifier");
      break;
  }
}

Tensor FusionHead::forward(Tape& tape, const GlobalFeature& fr, const GlobalFeature& fs,
                           bool training, std::uint64_t seed) const {
  switch (kind_) {
    case FusionKind::kDepthwise: {
      const Tensor fp = stack_features(tape, fr, fs);
      const Tensor fpp = residual_mlp(tape, fp, *dw_, cfg_.mlp_dropout, training, substream(seed, 0));
      const Tensor fo = strip_dw_conv(tape, fpp, dw_->dw_kernel);
      return classify(tape, fo, classifier_, cfg_.head_dropout, training, substream(seed, 1));
    }
    case FusionKind::kConcat:
      return fuse_concat(tape, fr, fs, classifier_, cfg_.head_dropout, training,
                         substream(seed, 1));
    case FusionKind::kGating:
      return fuse_semantic_gating(tape, fr, fs, classifier_, cfg_.head_dropout, training,
                                  substream(seed, 1));
  }
  throw std::logic_error("unreachable fusion kind");
}

}  // namespace csrrm
