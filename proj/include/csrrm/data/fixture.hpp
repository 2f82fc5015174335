// Copyright 2026 The CSRRM Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "csrrm/data/synth.hpp"

namespace csrrm {

/// Scene fixture layout, little-endian throughout:
///
///   "SRRM" | u16 version | u32 width | u32 height | u32 labels | u32 class
///   f64 score[h·w·l] (pixel-major) | f64 rgb[3·h·w] (channel-major)
///   u32 clean_labels[h·w] | u8 corruption_mask[h·w] | u32 CRC-32 of all
///   preceding bytes
inline constexpr char kFixtureMagic[4] = {'S', 'R', 'R', 'M'};
inline constexpr std::uint16_t kFixtureVersion = 1;

std::vector<std::uint8_t> encode_fixture(const SyntheticScene& scene);
/// Throws FormatError with a kind matching the defect.
SyntheticScene decode_fixture(std::span<const std::uint8_t> bytes);

void write_fixture(const SyntheticScene& scene, const std::filesystem::path& path);
SyntheticScene read_fixture(const std::filesystem::path& path);

void to_json(nlohmann::json& j, const SceneRecipe& r);
void from_json(const nlohmann::json& j, SceneRecipe& r);

struct CorpusEntry {
  std::string path;  // relative to the corpus directory
  std::uint32_t label = 0;
  std::string split;
  std::size_t index = 0;
};

struct Corpus {
  SceneRecipe recipe;
  std::vector<CorpusEntry> entries;
};

/// Writes train scenes 0..n_train−1 and test scenes n_train..n_train+n_test−1
/// as fixtures plus a manifest.json listing path, label and split.
Corpus write_corpus(const SceneRecipe& recipe, std::size_t n_train, std::size_t n_test,
                    const std::filesystem::path& dir);
Corpus read_corpus_manifest(const std::filesystem::path& dir);

}  // namespace csrrm
