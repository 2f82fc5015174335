// Copyright 2026 The CSRRM Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "csrrm/harness/ablate.hpp"

#include <cstdio>
#include <fstream>
#include <optional>

#include "csrrm/core/error.hpp"
#include "csrrm/harness/flops.hpp"
#include "csrrm/harness/train.hpp"

namespace csrrm {

void from_json(const nlohmann::json& j, AblationMatrix& m) {
  if (j.contains("windows")) j.at("windows").get_to(m.windows);
  if (j.contains("cham")) m.cham = j.at("cham").get<std::vector<bool>>();
  if (j.contains("fusions")) {
    m.fusions.clear();
    for (const auto& f : j.at("fusions")) m.fusions.push_back(parse_fusion_kind(f.get<std::string>()));
  }
  if (j.contains("keep_labels")) j.at("keep_labels").get_to(m.keep_labels);
  if (m.cells() == 0) throw ConfigError("ablation matrix has an empty axis");
}

nlohmann::json to_json(const AblationRow& r) {
  auto acc = [](const SplitAccuracy& a) {
    return nlohmann::json{{"semantic", a.semantic}, {"rgb", a.rgb}, {"fused", a.fused}};
  };
  return {{"cell", r.cell},
          {"window", r.window},
          {"cham", r.cham},
          {"fusion", to_string(r.fusion)},
          {"keep_labels", r.keep_labels},
          {"train", acc(r.train)},
          {"test", acc(r.test)},
          {"semantic_macs", r.semantic_macs},
          {"wall_ms", r.wall_ms}};
}

std::vector<ExperimentConfig> expand_matrix(const ExperimentConfig& base, const AblationMatrix& m) {
  std::vector<ExperimentConfig> out;
  for (const std::size_t window : m.windows) {
    for (const bool cham : m.cham) {
      for (const FusionKind fusion : m.fusions) {
        for (const std::size_t keep : m.keep_labels) {
          ExperimentConfig c = base;
          c.filter_window = window;
          for (auto& stage : c.semantic.stages) stage.cham = cham;
          c.fusion = fusion;
          c.keep_labels = keep;
          c.semantic.input_channels = c.semantic_labels();
          if (!base.outdir.empty()) {
            char name[32];
            std::snprintf(name, sizeof name, "cell_%03zu", out.size());
            c.outdir = base.outdir / name;
          }
          c.validate();
          out.push_back(std::move(c));
        }
      }
    }
  }
  return out;
}

std::vector<AblationRow> ablate(const ExperimentConfig& base, const AblationMatrix& m) {
  const auto cells = expand_matrix(base, m);
  std::optional<std::ofstream> sink;
  if (!base.outdir.empty()) {
    std::filesystem::create_directories(base.outdir);
    sink.emplace(base.outdir / "ablation.jsonl", std::ios::trunc);
  }
  // Scenes depend only on the recipe; restriction happens per cell.
  ExperimentConfig unrestricted = base;
  unrestricted.keep_labels = 0;
  unrestricted.semantic.input_channels = unrestricted.semantic_labels();
  const Dataset full = load_dataset(unrestricted);

  std::vector<AblationRow> rows;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto& c = cells[i];
    Dataset data = full;
    if (c.keep_labels) {
      for (auto* split : {&data.train, &data.test})
        for (auto& s : *split) s = vocabulary_restrict(s, c.keep_labels);
    }
    const auto run = train_two_stage(c, data);
    AblationRow row{i,
                    c.filter_window,
                    c.semantic.any_cham(),
                    c.fusion,
                    c.keep_labels,
                    run.metrics.train,
                    run.metrics.test,
                    count_flops(c).semantic.total(),
                    run.metrics.wall_ms};
    if (sink) *sink << to_json(row).dump() << '\n' << std::flush;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace csrrm
