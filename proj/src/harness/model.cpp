// Copyright 2026 The CSRRM Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "csrrm/harness/model.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <thread>

#include "csrrm/core/error.hpp"
#include "csrrm/core/ops.hpp"
#include "csrrm/core/seed.hpp"
#include "csrrm/data/fixture.hpp"

namespace csrrm {
namespace {

ClassifierParams make_head(std::size_t in, std::size_t classes, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return ClassifierParams::init(in, classes, rng);
}

std::vector<double> softmax_of(const Tensor& logits) {
  Tape tape(false);
  const Tensor p = ops::softmax(tape, logits, 0);
  return {p.value().begin(), p.value().end()};
}

}  // namespace

CsrrmModel::CsrrmModel(const ExperimentConfig& cfg)
    : semantic((cfg.validate(), cfg.semantic), "semantic", substream(cfg.seed, 1)),
      rgb(cfg.rgb, "rgb", substream(cfg.seed, 2)),
      semantic_head(make_head(cfg.semantic.feature_dim, cfg.head.num_classes,
                              substream(cfg.seed, 3))),
      rgb_head(make_head(cfg.rgb.feature_dim, cfg.head.num_classes, substream(cfg.seed, 4))),
      fusion(cfg.fusion, cfg.head, "fusion", substream(cfg.seed, 5)) {}

ParamSet CsrrmModel::semantic_params() const {
  ParamSet ps;
  ps.merge(semantic.params());
  semantic_head.register_in(ps, "semantic_head");
  return ps;
}

ParamSet CsrrmModel::rgb_params() const {
  ParamSet ps;
  ps.merge(rgb.params());
  rgb_head.register_in(ps, "rgb_head");
  return ps;
}

ParamSet CsrrmModel::branch_params() const {
  ParamSet ps;
  ps.merge(semantic.params());
  ps.merge(rgb.params());
  return ps;
}

ParamSet CsrrmModel::all_params() const {
  ParamSet ps = branch_params();
  semantic_head.register_in(ps, "semantic_head");
  rgb_head.register_in(ps, "rgb_head");
  ps.merge(fusion.params());
  return ps;
}

Dataset load_dataset(const ExperimentConfig& cfg) {
  cfg.validate();
  Dataset d;
  if (!cfg.corpus.empty()) {
    const Corpus corpus = read_corpus_manifest(cfg.corpus);
    for (const auto& e : corpus.entries) {
      SyntheticScene s = read_fixture(cfg.corpus / e.path);
      if (s.label != e.label)
        throw FormatError(FormatError::Kind::kInvalid, e.path + ": label disagrees with manifest");
      (e.split == "train" ? d.train : d.test).push_back(std::move(s));
    }
  } else {
    d.train = generate(cfg.recipe, cfg.train_scenes, 0);
    d.test = generate(cfg.recipe, cfg.test_scenes, cfg.train_scenes);
  }
  if (cfg.keep_labels) {
    for (auto* split : {&d.train, &d.test})
      for (auto& s : *split) s = vocabulary_restrict(s, cfg.keep_labels);
  }
  if (d.train.empty()) throw ConfigError("dataset has no training scenes");
  return d;
}

SceneView prepare_view(const SyntheticScene& scene, const CropSpec& crop,
                       std::size_t filter_window) {
  ScoreTensor scores = crop_scores(scene.score, crop);
  if (filter_window > 1) scores = confidence_filter(scores, {filter_window});
  return {scores.to_chw(), crop_rgb(scene.rgb, crop).to_tensor()};
}

ViewFeatures extract_features(const CsrrmModel& model, const SceneView& view) {
  Tape tape(false);
  const Tensor fs = srrm_forward(tape, view.scores, model.semantic).values;
  const Tensor fr = rgb_branch_forward(tape, view.image, model.rgb).values;
  return {{fs.value().begin(), fs.value().end()}, {fr.value().begin(), fr.value().end()}};
}

std::array<ViewFeatures, kNumCrops> extract_ten_crop_features(const CsrrmModel& model,
                                                              const SyntheticScene& scene,
                                                              const ExperimentConfig& cfg) {
  const auto crops = ten_crops(scene.score.width, scene.score.height, cfg.crop);
  std::array<ViewFeatures, kNumCrops> out;
  for (std::size_t i = 0; i < kNumCrops; ++i)
    out[i] = extract_features(model, prepare_view(scene, crops[i], cfg.filter_window));
  return out;
}

ClassProbabilities average_probabilities(const CsrrmModel& model,
                                         std::span<const ViewFeatures> views) {
  if (views.empty()) throw ShapeError("average_probabilities: no views");
  const std::size_t n = model.fusion.config().num_classes;
  ClassProbabilities avg{std::vector<double>(n), std::vector<double>(n), std::vector<double>(n)};
  auto accumulate = [&views](std::vector<double>& dst, const std::vector<double>& p) {
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += p[k] / static_cast<double>(views.size());
  };
  for (const auto& v : views) {
    Tape tape(false);
    const Tensor fs = Tensor::from({v.semantic.size()}, v.semantic);
    const Tensor fr = Tensor::from({v.rgb.size()}, v.rgb);
    accumulate(avg.semantic,
               softmax_of(ops::linear(tape, fs, model.semantic_head.w, model.semantic_head.b)));
    accumulate(avg.rgb, softmax_of(ops::linear(tape, fr, model.rgb_head.w, model.rgb_head.b)));
    accumulate(avg.fused, softmax_of(model.fusion.forward(tape, {fr, FeatureSource::kRgb},
                                                          {fs, FeatureSource::kSemantic},
                                                          false, 0)));
  }
  return avg;
}

std::size_t ten_crop_eval(const CsrrmModel& model, const SyntheticScene& scene,
                          const ExperimentConfig& cfg) {
  const auto views = extract_ten_crop_features(model, scene, cfg);
  return argmax(average_probabilities(model, views).fused);
}

SplitAccuracy evaluate(const CsrrmModel& model, std::span<const SyntheticScene> scenes,
                       const ExperimentConfig& cfg) {
  if (scenes.empty()) return {};
  struct Hits {
    std::size_t semantic = 0, rgb = 0, fused = 0;
  };
  const std::size_t workers = std::min(cfg.eval_workers, scenes.size());
  std::vector<Hits> hits(workers);
  std::vector<std::exception_ptr> errors(workers);
  auto run = [&](std::size_t w) {
    // Strided partition; each worker owns its tapes and counters.
    try {
      for (std::size_t i = w; i < scenes.size(); i += workers) {
        const auto views = extract_ten_crop_features(model, scenes[i], cfg);
        const auto p = average_probabilities(model, views);
        hits[w].semantic += argmax(p.semantic) == scenes[i].label;
        hits[w].rgb += argmax(p.rgb) == scenes[i].label;
        hits[w].fused += argmax(p.fused) == scenes[i].label;
      }
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };
  if (workers == 1) {
    run(0);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(run, w);
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  Hits total;
  for (const auto& h : hits) {
    total.semantic += h.semantic;
    total.rgb += h.rgb;
    total.fused += h.fused;
  }
  const double n = static_cast<double>(scenes.size());
  return {total.semantic / n, total.rgb / n, total.fused / n};
}

std::size_t argmax(std::span<const double> v) {
  if (v.empty()) throw ShapeError("argmax of an empty vector");
  return static_cast<std::size_t>(std::ranges::max_element(v) - v.begin());
}

}  // namespace csrrm
