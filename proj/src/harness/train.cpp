// Copyright 2026 The CSRRM Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "csrrm/harness/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <optional>
#include <random>

#include "csrrm/core/error.hpp"
#include "csrrm/core/ops.hpp"
#include "csrrm/core/seed.hpp"
#include "csrrm/nn/checkpoint.hpp"
#include "csrrm/optim/optimizer.hpp"

namespace csrrm {
namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

class MetricsSink {
 public:
  explicit MetricsSink(const std::filesystem::path& outdir) {
    if (outdir.empty()) return;
    std::filesystem::create_directories(outdir);
    out_.emplace(outdir / "metrics.jsonl", std::ios::trunc);
    if (!*out_) throw FormatError(FormatError::Kind::kIo, "cannot write metrics.jsonl");
  }
  void write(const EpochRecord& r) {
    if (out_) *out_ << nlohmann::json(r).dump() << '\n' << std::flush;
  }

 private:
  std::optional<std::ofstream> out_;
};

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!(out << j.dump(2) << '\n')) throw FormatError(FormatError::Kind::kIo, "cannot write " + path.string());
}

OptimizerState make_state(const OptimizerConfig& oc) {
  OptimizerState st;
  st.max_lr = oc.max_lr;
  st.delta = oc.delta;
  st.momentum = oc.momentum;
  st.validate();
  return st;
}

/// Shared mini-batch loop: `sample` runs forward and backward for one scene
/// (the loss already scaled by 1/batch) and reports loss and correctness.
struct SampleResult {
  double loss = 0.0;
  bool correct = false;
};

template <typename SampleFn, typename AfterBackwardFn>
EpochRecord run_epoch(int stage, std::size_t epoch, const std::string& branch,
                      std::size_t n_scenes, const ExperimentConfig& cfg, std::uint64_t stream,
                      const ParamSet& params, OptimizerState& st, RunMetrics& metrics,
                      SampleFn&& sample, AfterBackwardFn&& after_backward) {
  const auto t0 = Clock::now();
  std::vector<std::size_t> order(n_scenes);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(substream(cfg.seed, {stream, epoch}));
  std::shuffle(order.begin(), order.end(), rng);

  EpochRecord rec{stage, epoch, branch, "train", 0.0, 0.0, 0.0, 0.0};
  std::size_t correct = 0;
  double loss_total = 0.0;
  std::size_t batches = 0;
  for (std::size_t start = 0; start < n_scenes; start += cfg.batch_size) {
    const std::size_t end = std::min(n_scenes, start + cfg.batch_size);
    const double inv = 1.0 / static_cast<double>(end - start);
    params.zero_grad();
    double batch_loss = 0.0;
    for (std::size_t i = start; i < end; ++i) {
      const auto r = sample(order[i], rng, inv, substream(cfg.seed, {stream, epoch, i}));
      batch_loss += r.loss * inv;
      correct += r.correct;
    }
    after_backward();
    StepReport rep;
    try {
      if (!std::isfinite(batch_loss)) throw NumericError("non-finite loss");
      rep = cfg.optimizer.kind == OptimizerKind::kAlig
                ? alig_step(params, batch_loss, st)
                : sgd_step(params, cfg.optimizer.max_lr, st);
    } catch (const NumericError& e) {
      throw NumericError("stage " + std::to_string(stage) + " " + branch + " epoch " +
                         std::to_string(epoch) + " batch " + std::to_string(batches) + ": " +
                         e.what());
    }
    metrics.steps.push_back(rep.step);
    rec.max_step = std::max(rec.max_step, rep.step);
    loss_total += batch_loss;
    ++batches;
  }
  rec.loss = loss_total / static_cast<double>(batches);
  rec.accuracy = static_cast<double>(correct) / static_cast<double>(n_scenes);
  rec.wall_ms = ms_since(t0);
  return rec;
}

double max_abs_grad(const ParamSet& ps) {
  double m = 0.0;
  for (const auto& e : ps.entries())
    for (const double g : e.tensor.grad()) m = std::max(m, std::abs(g));
  return m;
}

SampleResult classify_sample(Tape& tape, const Tensor& logits, std::uint32_t label,
                             double inv_batch) {
  const Tensor loss = ops::cross_entropy(tape, logits, label);
  tape.backward(loss, inv_batch);
  return {loss.item(), argmax(logits.value()) == label};
}

}  // namespace

void to_json(nlohmann::json& j, const EpochRecord& r) {
  j = {{"stage", r.stage},       {"epoch", r.epoch},       {"branch", r.branch},
       {"split", r.split},       {"loss", r.loss},         {"accuracy", r.accuracy},
       {"max_step", r.max_step}, {"wall_ms", r.wall_ms}};
}

nlohmann::json RunMetrics::deterministic_json() const {
  nlohmann::json records_json = nlohmann::json::array();
  for (const auto& r : records) {
    nlohmann::json j = r;
    j.erase("wall_ms");
    records_json.push_back(std::move(j));
  }
  auto acc = [](const SplitAccuracy& a) {
    return nlohmann::json{{"semantic", a.semantic}, {"rgb", a.rgb}, {"fused", a.fused}};
  };
  return {{"records", records_json},
          {"steps", steps},
          {"train", acc(train)},
          {"test", acc(test)},
          {"branch_checksum_before", branch_checksum_before},
          {"branch_checksum_after", branch_checksum_after},
          {"stage2_branch_grad_max", stage2_branch_grad_max},
          {"flops",
           {{"semantic", flops.semantic.total()},
            {"rgb", flops.rgb.total()},
            {"fusion_head", flops.fusion.head},
            {"fusion_mlp", flops.fusion.mlp}}}};
}

TrainResult train_two_stage(const ExperimentConfig& cfg) {
  return train_two_stage(cfg, load_dataset(cfg));
}

TrainResult train_two_stage(const ExperimentConfig& cfg, const Dataset& data) {
  cfg.validate();
  const auto t_run = Clock::now();
  TrainResult res{CsrrmModel(cfg), {}};
  CsrrmModel& model = res.model;
  RunMetrics& metrics = res.metrics;
  metrics.flops = count_flops(cfg);
  MetricsSink sink(cfg.outdir);
  if (!cfg.outdir.empty()) write_json(cfg.outdir / "config.json", cfg);

  const auto& train = data.train;
  const auto crops = ten_crops(cfg.recipe.width, cfg.recipe.height, cfg.crop);
  std::uniform_int_distribution<std::size_t> pick_crop(0, kNumCrops - 1);

  // Stage 1: each branch learns against its own classifier. Epochs are
  // interleaved only so records stay ordered; the branches share nothing.
  const ParamSet sem_ps = model.semantic_params();
  const ParamSet rgb_ps = model.rgb_params();
  OptimizerState sem_st = make_state(cfg.optimizer);
  OptimizerState rgb_st = make_state(cfg.optimizer);
  auto noop = [] {};
  for (std::size_t epoch = 0; epoch < cfg.stage1_epochs; ++epoch) {
    auto sem_sample = [&](std::size_t idx, std::mt19937_64& rng, double inv, std::uint64_t) {
      const auto& s = train[idx];
      ScoreTensor m = crop_scores(s.score, crops[pick_crop(rng)]);
      if (cfg.filter_window > 1) m = confidence_filter(m, {cfg.filter_window});
      Tape tape;
      const Tensor f = srrm_forward(tape, m, model.semantic).values;
      return classify_sample(
          tape, ops::linear(tape, f, model.semantic_head.w, model.semantic_head.b), s.label, inv);
    };
    auto rec = run_epoch(1, epoch, "semantic", train.size(), cfg, 11, sem_ps, sem_st, metrics,
                         sem_sample, noop);
    metrics.records.push_back(rec);
    sink.write(rec);

    auto rgb_sample = [&](std::size_t idx, std::mt19937_64& rng, double inv, std::uint64_t) {
      const auto& s = train[idx];
      const Tensor img = crop_rgb(s.rgb, crops[pick_crop(rng)]).to_tensor();
      Tape tape;
      const Tensor f = rgb_branch_forward(tape, img, model.rgb).values;
      return classify_sample(tape, ops::linear(tape, f, model.rgb_head.w, model.rgb_head.b),
                             s.label, inv);
    };
    rec = run_epoch(1, epoch, "rgb", train.size(), cfg, 12, rgb_ps, rgb_st, metrics, rgb_sample,
                    noop);
    metrics.records.push_back(rec);
    sink.write(rec);
  }
  if (!cfg.outdir.empty()) {
    write_checkpoint(sem_ps, cfg.outdir / "stage1" / "semantic.ckpt");
    write_checkpoint(rgb_ps, cfg.outdir / "stage1" / "rgb.ckpt");
  }

  // Stage 2: branches frozen twice over, by requires_grad (no gradient can
  // reach them) and by the optimizer's freeze set (no update can touch them).
  const ParamSet branches = model.branch_params();
  metrics.branch_checksum_before = branches.checksum();
  branches.set_requires_grad(false);
  ParamSet stage2_ps = branches;
  stage2_ps.merge(model.fusion.params());
  OptimizerState head_st = make_state(cfg.optimizer);
  head_st.freeze(branches.names());

  std::vector<std::array<ViewFeatures, kNumCrops>> cache;
  if (cfg.cache_features) {
    cache.reserve(train.size());
    for (const auto& s : train) cache.push_back(extract_ten_crop_features(model, s, cfg));
  }
  for (std::size_t epoch = 0; epoch < cfg.stage2_epochs; ++epoch) {
    auto head_sample = [&](std::size_t idx, std::mt19937_64& rng, double inv,
                           std::uint64_t dropout_seed) {
      const std::size_t v = pick_crop(rng);
      Tape tape;
      GlobalFeature fr, fs;
      if (cfg.cache_features) {
        const auto& f = cache[idx][v];
        fr = {Tensor::from({f.rgb.size()}, f.rgb), FeatureSource::kRgb};
        fs = {Tensor::from({f.semantic.size()}, f.semantic), FeatureSource::kSemantic};
      } else {
        const SceneView view = prepare_view(train[idx], crops[v], cfg.filter_window);
        fs = srrm_forward(tape, view.scores, model.semantic);
        fr = rgb_branch_forward(tape, view.image, model.rgb);
      }
      const Tensor logits = model.fusion.forward(tape, fr, fs, true, dropout_seed);
      return classify_sample(tape, logits, train[idx].label, inv);
    };
    auto check_branches = [&] {
      metrics.stage2_branch_grad_max =
          std::max(metrics.stage2_branch_grad_max, max_abs_grad(branches));
    };
    const auto rec = run_epoch(2, epoch, "fusion", train.size(), cfg, 21, stage2_ps, head_st,
                               metrics, head_sample, check_branches);
    metrics.records.push_back(rec);
    sink.write(rec);
  }
  metrics.branch_checksum_after = branches.checksum();
  if (!cfg.outdir.empty()) write_checkpoint(model.all_params(), cfg.outdir / "stage2" / "model.ckpt");

  if (cfg.cache_features) {
    std::size_t hs = 0, hr = 0, hf = 0;
    for (std::size_t i = 0; i < train.size(); ++i) {
      const auto p = average_probabilities(model, cache[i]);
      hs += argmax(p.semantic) == train[i].label;
      hr += argmax(p.rgb) == train[i].label;
      hf += argmax(p.fused) == train[i].label;
    }
    const double n = static_cast<double>(train.size());
    metrics.train = {hs / n, hr / n, hf / n};
  } else {
    metrics.train = evaluate(model, train, cfg);
  }
  metrics.test = evaluate(model, data.test, cfg);
  metrics.wall_ms = ms_since(t_run);

  if (!cfg.outdir.empty()) {
    nlohmann::json final_json = metrics.deterministic_json();
    final_json.erase("records");
    final_json.erase("steps");
    final_json["max_step"] =
        metrics.steps.empty() ? 0.0 : *std::ranges::max_element(metrics.steps);
    final_json["updates"] = metrics.steps.size();
    final_json["wall_ms"] = metrics.wall_ms;
    write_json(cfg.outdir / "final.json", final_json);
  }
  return res;
}

CsrrmModel load_trained_model(const ExperimentConfig& cfg, const std::filesystem::path& outdir) {
  CsrrmModel model(cfg);
  ParamSet all = model.all_params();
  load_checkpoint(all, outdir / "stage2" / "model.ckpt");
  return model;
}

}  // namespace csrrm
