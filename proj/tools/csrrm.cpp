// Copyright 2026 The CSRRM Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

// Command-line front end: generate, train, eval, ablate, flops.

#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "csrrm/core/error.hpp"
#include "csrrm/data/fixture.hpp"
#include "csrrm/harness/ablate.hpp"
#include "csrrm/harness/config.hpp"
#include "csrrm/harness/flops.hpp"
#include "csrrm/harness/train.hpp"

namespace {

using csrrm::ExperimentConfig;

/// Flags shared by every verb; each overrides the matching config field.
struct Overrides {
  std::string config;
  std::optional<std::string> outdir, corpus, fusion, optimizer;
  std::optional<std::size_t> window, keep_labels, epochs1, epochs2, batch, train_scenes,
      test_scenes, workers, crop;
  std::optional<std::uint64_t> seed, recipe_seed;
  std::optional<double> lr, corruption, region_miss, rgb_noise, rgb_region_noise,
      rgb_region_miss;
  std::optional<bool> cham, cache;

  void attach(CLI::App* app) {
    app->add_option("--config", config, "JSON experiment config")->check(CLI::ExistingFile);
    app->add_option("--outdir", outdir, "output directory");
    app->add_option("--corpus", corpus, "corpus directory written by 'generate'");
    app->add_option("--fusion", fusion, "dw | concat | gating");
    app->add_option("--optimizer", optimizer, "alig | sgd");
    app->add_option("--lr", lr, "ALI-G maximal step, or the SGD learning rate");
    app->add_option("--window", window, "confidence filter window (1 disables)");
    app->add_option("--keep-labels", keep_labels, "vocabulary restriction (0 keeps all)");
    app->add_option("--crop", crop, "crop size");
    app->add_option("--stage1-epochs", epochs1);
    app->add_option("--stage2-epochs", epochs2);
    app->add_option("--batch", batch);
    app->add_option("--train-scenes", train_scenes);
    app->add_option("--test-scenes", test_scenes);
    app->add_option("--eval-workers", workers);
    app->add_option("--seed", seed, "model and training seed");
    app->add_option("--recipe-seed", recipe_seed, "scene generator seed");
    app->add_option("--corruption", corruption, "fraction of corrupted score pixels");
    app->add_option("--region-miss", region_miss, "chance a key object is segmented as clutter");
    app->add_option("--rgb-noise", rgb_noise, "per-pixel RGB noise sigma");
    app->add_option("--rgb-region-noise", rgb_region_noise, "per-region RGB colour shift sigma");
    app->add_option("--rgb-region-miss", rgb_region_miss,
                    "chance a key object blends into the RGB background");
    app->add_option("--cham", cham, "channel attention in the semantic branch");
    app->add_option("--cache-features", cache, "reuse frozen branch features in stage 2");
  }

  ExperimentConfig resolve() const {
    ExperimentConfig c =
        config.empty() ? ExperimentConfig::desk() : csrrm::load_experiment_config(config);
    if (outdir) c.outdir = *outdir;
    if (corpus) c.corpus = *corpus;
    if (fusion) c.fusion = csrrm::parse_fusion_kind(*fusion);
    if (optimizer) c.optimizer.kind = csrrm::parse_optimizer_kind(*optimizer);
    if (lr) c.optimizer.max_lr = *lr;
    if (window) c.filter_window = *window;
    if (keep_labels) c.keep_labels = *keep_labels;
    if (crop) c.crop = *crop;
    if (epochs1) c.stage1_epochs = *epochs1;
    if (epochs2) c.stage2_epochs = *epochs2;
    if (batch) c.batch_size = *batch;
    if (train_scenes) c.train_scenes = *train_scenes;
    if (test_scenes) c.test_scenes = *test_scenes;
    if (workers) c.eval_workers = *workers;
    if (seed) c.seed = *seed;
    if (recipe_seed) c.recipe.seed = *recipe_seed;
    if (corruption) c.recipe.corruption_rate = *corruption;
    if (region_miss) c.recipe.region_miss_rate = *region_miss;
    if (rgb_noise) c.recipe.rgb_pixel_noise = *rgb_noise;
    if (rgb_region_noise) c.recipe.rgb_region_noise = *rgb_region_noise;
    if (rgb_region_miss) c.recipe.rgb_region_miss_rate = *rgb_region_miss;
    if (cham)
      for (auto& s : c.semantic.stages) s.cham = *cham;
    if (cache) c.cache_features = *cache;
    c.semantic.input_channels = c.semantic_labels();
    c.validate();
    return c;
  }
};

nlohmann::json accuracy_json(const csrrm::SplitAccuracy& a) {
  return {{"semantic", a.semantic}, {"rgb", a.rgb}, {"fused", a.fused}};
}

int cmd_generate(const Overrides& o) {
  const ExperimentConfig c = o.resolve();
  if (c.corpus.empty()) throw csrrm::ConfigError("generate needs --corpus DIR");
  const auto corpus = csrrm::write_corpus(c.recipe, c.train_scenes, c.test_scenes, c.corpus);
  std::cout << nlohmann::json{{"corpus", c.corpus.string()},
                              {"scenes", corpus.entries.size()}}.dump()
            << '\n';
  return 0;
}

int cmd_train(const Overrides& o) {
  const ExperimentConfig c = o.resolve();
  const auto run = csrrm::train_two_stage(c);
  std::cout << nlohmann::json{{"train", accuracy_json(run.metrics.train)},
                              {"test", accuracy_json(run.metrics.test)},
                              {"wall_ms", run.metrics.wall_ms}}.dump()
            << '\n';
  return 0;
}

int cmd_eval(const Overrides& o, const std::string& run_dir) {
  ExperimentConfig c = csrrm::load_experiment_config(std::filesystem::path(run_dir) / "config.json");
  if (o.workers) c.eval_workers = *o.workers;
  if (o.corpus) c.corpus = *o.corpus;
  const auto model = csrrm::load_trained_model(c, run_dir);
  const auto data = csrrm::load_dataset(c);
  const nlohmann::json out = {{"test", accuracy_json(csrrm::evaluate(model, data.test, c))},
                              {"scenes", data.test.size()}};
  std::ofstream(std::filesystem::path(run_dir) / "eval.json") << out.dump(2) << '\n';
  std::cout << out.dump() << '\n';
  return 0;
}

int cmd_ablate(const Overrides& o, const std::string& matrix_path) {
  const ExperimentConfig base = o.resolve();
  csrrm::AblationMatrix m;
  if (!matrix_path.empty()) {
    std::ifstream in(matrix_path);
    if (!in) throw csrrm::ConfigError("cannot open matrix " + matrix_path);
    from_json(nlohmann::json::parse(in), m);
  }
  for (const auto& row : csrrm::ablate(base, m)) std::cout << to_json(row).dump() << '\n';
  return 0;
}

int cmd_flops(const Overrides& o, bool full) {
  nlohmann::json out;
  if (full) {
    const auto sem = csrrm::BackboneConfig::full_semantic();
    const auto unfiltered = csrrm::count_backbone_flops(sem, 224, 224).total();
    const auto filtered = csrrm::count_backbone_flops(sem, 112, 112).total();
    csrrm::FusionConfig fc{2048, 2048, 67, 0.1, 0.8};
    out = {{"semantic_unfiltered_224", unfiltered},
           {"semantic_filtered_112", filtered},
           {"ratio", static_cast<double>(unfiltered) / static_cast<double>(filtered)},
           {"rgb_224", csrrm::count_backbone_flops(csrrm::BackboneConfig::full_rgb(), 224, 224).total()}};
    for (const auto kind : {csrrm::FusionKind::kDepthwise, csrrm::FusionKind::kConcat,
                            csrrm::FusionKind::kGating}) {
      const auto f = csrrm::count_fusion_flops(kind, fc);
      out["fusion"][std::string(csrrm::to_string(kind))] = {{"head", f.head}, {"mlp", f.mlp}};
    }
  } else {
    const ExperimentConfig c = o.resolve();
    const auto f = csrrm::count_flops(c);
    out = {{"semantic", to_json(f.semantic)},
           {"rgb", to_json(f.rgb)},
           {"fusion", {{"head", f.fusion.head}, {"mlp", f.fusion.mlp}}},
           {"total", f.total()}};
  }
  std::cout << out.dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semantic-region scene recognition on synthetic scenes"};
  app.require_subcommand(1);
  Overrides o;

  auto* gen = app.add_subcommand("generate", "write a fixture corpus and manifest");
  o.attach(gen);
  auto* train = app.add_subcommand("train", "two-stage training with metrics and checkpoints");
  o.attach(train);
  auto* eval = app.add_subcommand("eval", "ten-crop test accuracy of a trained run");
  std::string run_dir;
  eval->add_option("run", run_dir, "run directory written by 'train'")->required();
  eval->add_option("--corpus", o.corpus);
  eval->add_option("--eval-workers", o.workers);
  auto* abl = app.add_subcommand("ablate", "train every cell of an option matrix");
  std::string matrix;
  abl->add_option("--matrix", matrix, "JSON with windows, cham, fusions, keep_labels");
  o.attach(abl);
  auto* flops = app.add_subcommand("flops", "analytic multiply-add counts");
  bool full = false;
  flops->add_flag("--full", full, "full-size backbones instead of the configured ones");
  o.attach(flops);

  CLI11_PARSE(app, argc, argv);
  try {
    if (gen->parsed()) return cmd_generate(o);
    if (train->parsed()) return cmd_train(o);
    if (eval->parsed()) return cmd_eval(o, run_dir);
    if (abl->parsed()) return cmd_ablate(o, matrix);
    if (flops->parsed()) return cmd_flops(o, full);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
