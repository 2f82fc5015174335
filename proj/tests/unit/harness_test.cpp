// Copyright 2026 The CSRRM Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <thread>

#include "csrrm/core/error.hpp"
#include "csrrm/core/ops.hpp"
#include "csrrm/harness/ablate.hpp"
#include "csrrm/harness/crops.hpp"
#include "csrrm/harness/flops.hpp"
#include "csrrm/harness/train.hpp"
#include "csrrm/nn/checkpoint.hpp"
#include "oracles.hpp"

namespace csrrm {
namespace {

namespace fs = std::filesystem;

ExperimentConfig tiny_config() {
  ExperimentConfig c = ExperimentConfig::desk();
  c.semantic = BackboneConfig::desk_semantic(c.recipe.labels, 32);
  c.rgb = BackboneConfig::desk_rgb(32);
  c.head.feature_dim = 32;
  c.head.hidden = 64;
  c.train_scenes = 16;
  c.test_scenes = 8;
  c.stage1_epochs = 1;
  c.stage2_epochs = 2;
  c.batch_size = 4;
  return c;
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("csrrm_harness_test_" + name);
  fs::remove_all(p);
  return p;
}

TEST(Crops, StandardTenCropLayout) {
  const auto c = ten_crops(32, 30, 28);
  const std::array<std::pair<std::size_t, std::size_t>, 5> corners{
      {{0, 0}, {4, 0}, {0, 2}, {4, 2}, {2, 1}}};
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(c[i], (CropSpec{corners[i].first, corners[i].second, 28, false}));
    EXPECT_EQ(c[i + 5], (CropSpec{corners[i].first, corners[i].second, 28, true}));
  }
  EXPECT_THROW(ten_crops(32, 32, 33), ShapeError);
  EXPECT_THROW(ten_crops(32, 32, 0), ShapeError);
}

TEST(Crops, FlipMirrorsWithinTheCrop) {
  RgbImage img{4, 2, {}};
  for (std::size_t i = 0; i < 3 * 8; ++i) img.data.push_back(static_cast<double>(i));
  const RgbImage out = crop_rgb(img, {1, 0, 2, true});
  EXPECT_EQ(out.width, 2u);
  EXPECT_EQ(out.at(0, 0, 0), img.at(0, 2, 0));
  EXPECT_EQ(out.at(2, 1, 1), img.at(2, 1, 1));
  ScoreTensor m = ScoreTensor::zeros(3, 1, 2);
  m.data = {0.1, 0.9, 0.2, 0.8, 0.3, 0.7};
  const ScoreTensor sm = crop_scores(m, {0, 0, 1, false});
  EXPECT_EQ(sm.data, (std::vector<double>{0.1, 0.9}));
  EXPECT_THROW(crop_scores(m, {2, 0, 2, false}), ShapeError);
}

std::vector<double> probs(const Tensor& logits) {
  Tape tape(false);
  const Tensor p = ops::softmax(tape, logits, 0);
  return {p.value().begin(), p.value().end()};
}

// Materializes every crop with plain loops and averages the three heads.
ClassProbabilities ten_crop_oracle(const CsrrmModel& model, const SyntheticScene& scene,
                                   std::size_t size, std::size_t window) {
  const std::size_t w = scene.score.width, h = scene.score.height, l = scene.score.labels;
  const std::size_t r = w - size, b = h - size;
  const std::array<std::pair<std::size_t, std::size_t>, 5> origin{
      {{0, 0}, {r, 0}, {0, b}, {r, b}, {r / 2, b / 2}}};
  ClassProbabilities acc;
  const std::size_t k = model.fusion.config().num_classes;
  acc.semantic.assign(k, 0.0);
  acc.rgb.assign(k, 0.0);
  acc.fused.assign(k, 0.0);
  for (bool flip : {false, true}) {
    for (const auto& [ox, oy] : origin) {
      ScoreTensor m = ScoreTensor::zeros(size, size, l);
      std::vector<double> img(3 * size * size);
      for (std::size_t y = 0; y < size; ++y)
        for (std::size_t x = 0; x < size; ++x) {
          const std::size_t sx = ox + (flip ? size - 1 - x : x), sy = oy + y;
          for (std::size_t c = 0; c < l; ++c)
            m.data[(y * size + x) * l + c] = scene.score.data[(sy * w + sx) * l + c];
          for (std::size_t c = 0; c < 3; ++c)
            img[(c * size + y) * size + x] = scene.rgb.data[(c * h + sy) * w + sx];
        }
      const ScoreTensor f = window > 1 ? oracle::confidence_filter(m, window) : m;
      std::vector<double> chw(f.data.size());
      for (std::size_t y = 0; y < f.height; ++y)
        for (std::size_t x = 0; x < f.width; ++x)
          for (std::size_t c = 0; c < l; ++c)
            chw[(c * f.height + y) * f.width + x] = f.data[(y * f.width + x) * l + c];
      Tape tape(false);
      const GlobalFeature fs{model.semantic.forward(tape, Tensor::from({l, f.height, f.width}, chw)),
                             FeatureSource::kSemantic};
      const GlobalFeature fr{model.rgb.forward(tape, Tensor::from({3, size, size}, img)),
                             FeatureSource::kRgb};
      const auto ps = probs(ops::linear(tape, fs.values, model.semantic_head.w, model.semantic_head.b));
      const auto pr = probs(ops::linear(tape, fr.values, model.rgb_head.w, model.rgb_head.b));
      const auto pf = probs(model.fusion.forward(tape, fr, fs, false, 0));
      for (std::size_t c = 0; c < k; ++c) {
        acc.semantic[c] += ps[c] / 10;
        acc.rgb[c] += pr[c] / 10;
        acc.fused[c] += pf[c] / 10;
      }
    }
  }
  return acc;
}

TEST(TenCrop, MatchesExplicitCropOracle) {
  const ExperimentConfig cfg = tiny_config();
  const CsrrmModel model(cfg);
  SceneRecipe r = cfg.recipe;
  r.corruption_rate = 0.1;
  for (std::size_t i = 0; i < 5; ++i) {
    const auto scene = generate_scene(r, i);
    const auto feats = extract_ten_crop_features(model, scene, cfg);
    const auto got = average_probabilities(model, feats);
    const auto want = ten_crop_oracle(model, scene, cfg.crop, cfg.filter_window);
    for (std::size_t c = 0; c < 8; ++c) {
      EXPECT_NEAR(got.semantic[c], want.semantic[c], 1e-12);
      EXPECT_NEAR(got.rgb[c], want.rgb[c], 1e-12);
      EXPECT_NEAR(got.fused[c], want.fused[c], 1e-12);
    }
    EXPECT_EQ(ten_crop_eval(model, scene, cfg), argmax(want.fused));
  }
}

SyntheticScene constant_scene(std::size_t w, std::size_t h, std::size_t labels) {
  SyntheticScene s;
  s.score = ScoreTensor::zeros(w, h, labels);
  for (std::size_t p = 0; p < w * h; ++p)
    for (std::size_t c = 0; c < labels; ++c) s.score.data[p * labels + c] = c == 3 ? 0.5 : 0.5 / (labels - 1);
  s.rgb = RgbImage{w, h, std::vector<double>(3 * w * h, 0.25)};
  s.clean_labels = LabelMap{w, h, std::vector<std::uint32_t>(w * h, 3)};
  s.corruption_mask.assign(w * h, 0);
  return s;
}

TEST(TenCrop, ConstantSceneEqualsSingleCrop) {
  const ExperimentConfig cfg = tiny_config();
  const CsrrmModel model(cfg);
  const auto scene = constant_scene(32, 32, 12);
  const auto feats = extract_ten_crop_features(model, scene, cfg);
  const auto all = average_probabilities(model, feats);
  const auto one = average_probabilities(model, std::span(feats).first(1));
  for (std::size_t c = 0; c < 8; ++c) EXPECT_NEAR(all.fused[c], one.fused[c], 1e-15);
  EXPECT_EQ(ten_crop_eval(model, scene, cfg), argmax(one.fused));
}

TEST(TenCrop, MirrorSymmetricSceneDuplicatesPlainCrops) {
  const ExperimentConfig cfg = tiny_config();
  const CsrrmModel model(cfg);
  auto scene = generate_scene(cfg.recipe, 9);
  const std::size_t w = 32, h = 32, l = 12;
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = w / 2; x < w; ++x) {
      for (std::size_t c = 0; c < l; ++c)
        scene.score.data[(y * w + x) * l + c] = scene.score.data[(y * w + (w - 1 - x)) * l + c];
      for (std::size_t c = 0; c < 3; ++c)
        scene.rgb.data[(c * h + y) * w + x] = scene.rgb.data[(c * h + y) * w + (w - 1 - x)];
    }
  const auto f = extract_ten_crop_features(model, scene, cfg);
  // Mirrored TL is plain TR, mirrored BL is plain BR, centre maps to itself.
  const std::array<std::size_t, 5> partner{1, 0, 3, 2, 4};
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(f[5 + i].semantic, f[partner[i]].semantic) << i;
    EXPECT_EQ(f[5 + i].rgb, f[partner[i]].rgb) << i;
  }
  const auto all = average_probabilities(model, f);
  const auto plain = average_probabilities(model, std::span(f).first(5));
  for (std::size_t c = 0; c < 8; ++c) EXPECT_NEAR(all.fused[c], plain.fused[c], 1e-15);
}

TEST(Flops, TrivialCounts) {
  EXPECT_EQ(conv_macs(1, 1, 1, 1, 1, 1), 1u);
  EXPECT_EQ(linear_macs(3, 4), 12u);
  BackboneConfig c;
  c.input_channels = 1;
  c.stem_channels = 1;
  c.stem_kernel = 1;
  c.stem_padding = 0;
  c.stages = {{1, 1, 1, 1, false}};
  c.feature_dim = 1;
  // stem 1, reduce 1, 3×3 9, expand 1; identity shortcut.
  EXPECT_EQ(count_backbone_flops(c, 1, 1).total(), 12u);
}

TEST(Flops, DeskBlockByHand) {
  BackboneConfig c;
  c.input_channels = 2;
  c.stem_channels = 4;
  c.stem_kernel = 3;
  c.stem_stride = 2;
  c.stem_padding = 1;
  c.cham_reduction = 4;
  c.stages = {{8, 2, 1, 2, true}};
  c.feature_dim = 8;
  const std::uint64_t stem = 4 * 2 * 9 * 4 * 4;    // 8×8 → 4×4
  const std::uint64_t reduce = 2 * 4 * 4 * 4;       // 1×1 at 4×4
  const std::uint64_t conv = 2 * 2 * 9 * 2 * 2;     // strided 3×3 → 2×2
  const std::uint64_t expand = 8 * 2 * 2 * 2;
  const std::uint64_t proj = 8 * 4 * 2 * 2;
  const std::uint64_t cham = 2 * (8 * 2 + 2 * 8);
  EXPECT_EQ(count_backbone_flops(c, 8, 8).total(), stem + reduce + conv + expand + proj + cham);
}

TEST(Flops, FullSizeFilterRatioAndHeadOrdering) {
  const auto full = BackboneConfig::full_semantic(150);
  const double ratio = static_cast<double>(count_backbone_flops(full, 224, 224).total()) /
                       static_cast<double>(count_backbone_flops(full, 112, 112).total());
  EXPECT_GE(ratio, 2.7);
  EXPECT_LE(ratio, 3.1);
  FusionConfig head;
  head.feature_dim = 2048;
  head.num_classes = 67;
  const auto dw = count_fusion_flops(FusionKind::kDepthwise, head);
  const auto concat = count_fusion_flops(FusionKind::kConcat, head);
  const auto gating = count_fusion_flops(FusionKind::kGating, head);
  EXPECT_EQ(dw.head, 141312u);
  EXPECT_EQ(concat.head, 274432u);
  EXPECT_EQ(gating.head, 139264u);
  EXPECT_LT(dw.head, concat.head);
  EXPECT_EQ(dw.mlp, 2u * (2048 * 512 + 512 * 2048));  // both rows of the stack
}

TEST(Training, ZeroEpochsLeaveInitializationCheckpoints) {
  ExperimentConfig cfg = tiny_config();
  cfg.stage1_epochs = 0;
  cfg.stage2_epochs = 0;
  cfg.outdir = scratch("zero");
  const auto res = train_two_stage(cfg);
  EXPECT_TRUE(res.metrics.records.empty());
  EXPECT_TRUE(res.metrics.steps.empty());
  const CsrrmModel fresh(cfg);
  ParamSet loaded = CsrrmModel(cfg).all_params();
  for (const auto& e : loaded.entries()) std::ranges::fill(e.tensor.value(), 0.0);
  load_checkpoint(loaded, cfg.outdir / "stage2" / "model.ckpt");
  EXPECT_EQ(loaded.checksum(), fresh.all_params().checksum());
  ParamSet sem = CsrrmModel(cfg).semantic_params();
  for (const auto& e : sem.entries()) std::ranges::fill(e.tensor.value(), 0.0);
  load_checkpoint(sem, cfg.outdir / "stage1" / "semantic.ckpt");
  EXPECT_EQ(sem.checksum(), fresh.semantic_params().checksum());
  std::ifstream metrics(cfg.outdir / "metrics.jsonl");
  EXPECT_EQ(metrics.peek(), std::ifstream::traits_type::eof());
  fs::remove_all(cfg.outdir);
}

TEST(Training, RecordsAreOrderedAndBounded) {
  const auto res = train_two_stage(tiny_config());
  ASSERT_EQ(res.metrics.records.size(), 2u + 2u);
  EXPECT_EQ(res.metrics.records[0].branch, "semantic");
  EXPECT_EQ(res.metrics.records[1].branch, "rgb");
  EXPECT_EQ(res.metrics.records[2].branch, "fusion");
  EXPECT_EQ(res.metrics.records[3].epoch, 1u);
  for (const auto& r : res.metrics.records) {
    EXPECT_GE(r.accuracy, 0.0);
    EXPECT_LE(r.accuracy, 1.0);
    EXPECT_TRUE(std::isfinite(r.loss));
  }
  for (double s : res.metrics.steps) EXPECT_LE(s, 0.1);
  EXPECT_EQ(res.metrics.steps.size(), 2u * 4 + 2u * 4);
  EXPECT_EQ(res.metrics.branch_checksum_before, res.metrics.branch_checksum_after);
  EXPECT_EQ(res.metrics.stage2_branch_grad_max, 0.0);
}

TEST(Training, FixedSeedIsBitIdentical) {
  ExperimentConfig cfg = tiny_config();
  cfg.cache_features = false;
  const auto a = train_two_stage(cfg).metrics.deterministic_json();
  const auto b = train_two_stage(cfg).metrics.deterministic_json();
  EXPECT_EQ(a.dump(), b.dump());
  cfg.seed = 8;
  EXPECT_NE(train_two_stage(cfg).metrics.deterministic_json().dump(), a.dump());
}

TEST(Training, CachedAndUncachedStageTwoAgree) {
  ExperimentConfig cfg = tiny_config();
  const auto cached = train_two_stage(cfg).metrics.deterministic_json();
  cfg.cache_features = false;
  const auto direct = train_two_stage(cfg).metrics.deterministic_json();
  EXPECT_EQ(cached["records"].dump(), direct["records"].dump());
  EXPECT_EQ(cached["test"].dump(), direct["test"].dump());
}

TEST(Training, ParallelRunsOnSeparateTapesMatchSequential) {
  const ExperimentConfig a = tiny_config();
  ExperimentConfig b = tiny_config();
  b.seed = 21;
  const auto seq_a = train_two_stage(a).metrics.deterministic_json().dump();
  const auto seq_b = train_two_stage(b).metrics.deterministic_json().dump();
  std::string par_a, par_b;
  {
    std::jthread ta([&] { par_a = train_two_stage(a).metrics.deterministic_json().dump(); });
    std::jthread tb([&] { par_b = train_two_stage(b).metrics.deterministic_json().dump(); });
  }
  EXPECT_EQ(par_a, seq_a);
  EXPECT_EQ(par_b, seq_b);
}

TEST(Training, NonFiniteLossAbortsWithContext) {
  ExperimentConfig cfg = tiny_config();
  cfg.optimizer.kind = OptimizerKind::kSgd;
  cfg.optimizer.max_lr = 1e150;
  try {
    train_two_stage(cfg);
    FAIL() << "training with an exploding learning rate finished";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("stage 1"), std::string::npos) << e.what();
  }
}

TEST(Evaluation, DoesNotMutateParametersAndIgnoresWorkerCount) {
  ExperimentConfig cfg = tiny_config();
  const CsrrmModel model(cfg);
  const auto scenes = generate(cfg.recipe, 12);
  const auto before = model.all_params().checksum();
  const auto one = evaluate(model, scenes, cfg);
  cfg.eval_workers = 3;
  const auto three = evaluate(model, scenes, cfg);
  EXPECT_EQ(model.all_params().checksum(), before);
  EXPECT_EQ(one.fused, three.fused);
  EXPECT_EQ(one.semantic, three.semantic);
  EXPECT_EQ(one.rgb, three.rgb);
}

TEST(Evaluation, ArgmaxTakesFirstMaximum) {
  const std::vector<double> v{0.1, 0.4, 0.4, 0.1};
  EXPECT_EQ(argmax(v), 1u);
}

TEST(Ablation, RowCountIsProductOfOptions) {
  AblationMatrix m;
  m.keep_labels = {0, 6};
  const auto cells = expand_matrix(tiny_config(), m);
  EXPECT_EQ(cells.size(), 3u * 2 * 3 * 2);
  EXPECT_EQ(m.cells(), cells.size());
  for (const auto& c : cells) EXPECT_NO_THROW(c.validate());
}

TEST(Ablation, SingleCellEqualsOneTrainingRun) {
  const ExperimentConfig cfg = tiny_config();
  AblationMatrix m;
  m.windows = {2};
  m.cham = {true};
  m.fusions = {FusionKind::kDepthwise};
  const auto rows = ablate(cfg, m);
  ASSERT_EQ(rows.size(), 1u);
  const auto run = train_two_stage(cfg).metrics;
  EXPECT_EQ(rows[0].test.fused, run.test.fused);
  EXPECT_EQ(rows[0].train.fused, run.train.fused);
  EXPECT_EQ(rows[0].semantic_macs, run.flops.semantic.total());
}

TEST(Ablation, RerunReproducesAccuracies) {
  ExperimentConfig cfg = tiny_config();
  cfg.stage1_epochs = 0;
  AblationMatrix m;
  m.windows = {1, 4};
  m.cham = {false};
  m.fusions = {FusionKind::kConcat, FusionKind::kGating};
  const auto a = ablate(cfg, m);
  const auto b = ablate(cfg, m);
  ASSERT_EQ(a.size(), 4u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    auto ja = to_json(a[i]), jb = to_json(b[i]);
    ja.erase("wall_ms");
    jb.erase("wall_ms");
    EXPECT_EQ(ja, jb);
  }
  EXPECT_GT(a[0].semantic_macs, a[2].semantic_macs);
}

TEST(Config, JsonRoundTripAndValidation) {
  ExperimentConfig cfg = tiny_config();
  cfg.fusion = FusionKind::kGating;
  cfg.optimizer.kind = OptimizerKind::kSgd;
  const nlohmann::json j = cfg;
  const auto back = j.get<ExperimentConfig>();
  EXPECT_EQ(nlohmann::json(back), j);

  const auto partial = nlohmann::json{{"keep_labels", 6}}.get<ExperimentConfig>();
  EXPECT_EQ(partial.semantic.input_channels, 6u);
  EXPECT_NO_THROW(partial.validate());

  ExperimentConfig bad = tiny_config();
  bad.crop = 40;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = tiny_config();
  bad.head.feature_dim = 64;
  EXPECT_THROW(bad.validate(), ConfigError);
  EXPECT_THROW(parse_optimizer_kind("adam"), ConfigError);
}

}  // namespace
}  // namespace csrrm
