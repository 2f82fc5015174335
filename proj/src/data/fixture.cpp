// Copyright 2026 The CSRRM Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "csrrm/data/fixture.hpp"

#include <zlib.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <limits>

#include "csrrm/core/binary_io.hpp"
#include "csrrm/core/error.hpp"

namespace csrrm {
namespace {

using Kind = FormatError::Kind;

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in bounded chunks.
  constexpr std::size_t kChunk = 1u << 30;
  for (std::size_t off = 0; off < bytes.size(); off += kChunk) {
    const std::size_t n = std::min(kChunk, bytes.size() - off);
    crc = crc32(crc, bytes.data() + off, static_cast<uInt>(n));
  }
  return static_cast<std::uint32_t>(crc);
}

constexpr std::size_t kHeaderBytes = 4 + 2 + 4 * 4;

}  // namespace

std::vector<std::uint8_t> encode_fixture(const SyntheticScene& scene) {
  const auto& s = scene.score;
  const std::size_t pixels = s.width * s.height;
  if (scene.rgb.width != s.width || scene.rgb.height != s.height ||
      scene.rgb.data.size() != 3 * pixels || scene.clean_labels.labels.size() != pixels ||
      scene.corruption_mask.size() != pixels || s.data.size() != pixels * s.labels) {
    throw ShapeError("encode_fixture: scene components disagree on dimensions");
  }
  io::ByteWriter out;
  out.put_bytes(std::string_view(kFixtureMagic, 4));
  out.put(kFixtureVersion);
  out.put(static_cast<std::uint32_t>(s.width));
  out.put(static_cast<std::uint32_t>(s.height));
  out.put(static_cast<std::uint32_t>(s.labels));
  out.put(scene.label);
  out.put_array<double>(s.data);
  out.put_array<double>(scene.rgb.data);
  out.put_array<std::uint32_t>(scene.clean_labels.labels);
  out.put_array<std::uint8_t>(scene.corruption_mask);
  out.put(crc32_of(out.bytes()));
  return std::move(out.bytes());
}

SyntheticScene decode_fixture(std::span<const std::uint8_t> bytes) {
  io::ByteReader in(bytes, "fixture");
  if (bytes.size() < 4 || in.get_bytes(4) != std::string_view(kFixtureMagic, 4))
    throw FormatError(Kind::kBadMagic, "fixture: bad magic");
  if (const auto v = in.get<std::uint16_t>(); v != kFixtureVersion)
    throw FormatError(Kind::kBadVersion, "fixture: unsupported version " + std::to_string(v));
  const std::uint64_t w = in.get<std::uint32_t>();
  const std::uint64_t h = in.get<std::uint32_t>();
  const std::uint64_t l = in.get<std::uint32_t>();
  const std::uint32_t label = in.get<std::uint32_t>();
  if (w == 0 || h == 0 || l == 0) throw FormatError(Kind::kInvalid, "fixture: zero dimension");

  // Compute the expected size before allocating anything; dims are 32-bit so
  // the products below fit comfortably in 64 bits.
  const std::uint64_t pixels = w * h;
  const std::uint64_t expected =
      kHeaderBytes + 8 * pixels * l + 8 * 3 * pixels + 4 * pixels + pixels + 4;
  if (pixels > std::numeric_limits<std::uint32_t>::max() || l > (1u << 20) ||
      bytes.size() < expected) {
    throw FormatError(Kind::kTruncated, "fixture: " + std::to_string(bytes.size()) +
                                            " bytes, header implies " + std::to_string(expected));
  }
  if (bytes.size() > expected)
    throw FormatError(Kind::kInvalid, "fixture: trailing bytes after checksum");
  const std::uint32_t stored_crc = [&] {
    io::ByteReader tail(bytes.subspan(bytes.size() - 4), "fixture");
    return tail.get<std::uint32_t>();
  }();
  if (crc32_of(bytes.first(bytes.size() - 4)) != stored_crc)
    throw FormatError(Kind::kChecksum, "fixture: CRC-32 mismatch");

  SyntheticScene scene;
  scene.label = label;
  scene.score = ScoreTensor::zeros(w, h, l);
  in.get_array<double>(scene.score.data);
  scene.rgb = RgbImage{w, h, std::vector<double>(3 * pixels)};
  in.get_array<double>(scene.rgb.data);
  scene.clean_labels = LabelMap{w, h, std::vector<std::uint32_t>(pixels)};
  in.get_array<std::uint32_t>(scene.clean_labels.labels);
  scene.corruption_mask.resize(pixels);
  in.get_array<std::uint8_t>(scene.corruption_mask);
  return scene;
}

void write_fixture(const SyntheticScene& scene, const std::filesystem::path& path) {
  io::write_file(path, encode_fixture(scene));
}

SyntheticScene read_fixture(const std::filesystem::path& path) {
  return decode_fixture(io::read_file(path));
}

void to_json(nlohmann::json& j, const SceneRecipe& r) {
  j = {{"width", r.width},
       {"height", r.height},
       {"labels", r.labels},
       {"num_classes", r.num_classes},
       {"key_labels", r.key_labels},
       {"cell", r.cell},
       {"distractors", r.distractors},
       {"corruption_rate", r.corruption_rate},
       {"corruption_margin", r.corruption_margin},
       {"corruption_window", r.corruption_window},
       {"region_miss_rate", r.region_miss_rate},
       {"clean_peak_min", r.clean_peak_min},
       {"clean_peak_max", r.clean_peak_max},
       {"rgb_pixel_noise", r.rgb_pixel_noise},
       {"rgb_region_noise", r.rgb_region_noise},
       {"rgb_region_miss_rate", r.rgb_region_miss_rate},
       {"seed", r.seed}};
}

void from_json(const nlohmann::json& j, SceneRecipe& r) {
  // Absent keys keep their defaults.
  auto opt = [&j](const char* key, auto& field) {
    if (j.contains(key)) j.at(key).get_to(field);
  };
  opt("width", r.width);
  opt("height", r.height);
  opt("labels", r.labels);
  opt("num_classes", r.num_classes);
  opt("key_labels", r.key_labels);
  opt("cell", r.cell);
  opt("distractors", r.distractors);
  opt("corruption_rate", r.corruption_rate);
  opt("corruption_margin", r.corruption_margin);
  opt("corruption_window", r.corruption_window);
  opt("region_miss_rate", r.region_miss_rate);
  opt("clean_peak_min", r.clean_peak_min);
  opt("clean_peak_max", r.clean_peak_max);
  opt("rgb_pixel_noise", r.rgb_pixel_noise);
  opt("rgb_region_noise", r.rgb_region_noise);
  opt("rgb_region_miss_rate", r.rgb_region_miss_rate);
  opt("seed", r.seed);
}

Corpus write_corpus(const SceneRecipe& recipe, std::size_t n_train, std::size_t n_test,
                    const std::filesystem::path& dir) {
  recipe.validate();
  std::filesystem::create_directories(dir / "scenes");
  Corpus corpus{recipe, {}};
  nlohmann::json entries = nlohmann::json::array();
  for (std::size_t i = 0; i < n_train + n_test; ++i) {
    const SyntheticScene scene = generate_scene(recipe, i);
    char name[32];
    std::snprintf(name, sizeof name, "scene_%06zu.srrm", i);
    const std::string rel = std::string("scenes/") + name;
    write_fixture(scene, dir / rel);
    CorpusEntry e{rel, scene.label, i < n_train ? "train" : "test", i};
    entries.push_back({{"path", e.path}, {"label", e.label}, {"split", e.split}, {"index", e.index}});
    corpus.entries.push_back(std::move(e));
  }
  const nlohmann::json manifest = {{"recipe", recipe}, {"scenes", entries}};
  std::ofstream(dir / "manifest.json") << manifest.dump(2) << '\n';
  return corpus;
}

Corpus read_corpus_manifest(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw FormatError(Kind::kIo, "cannot open " + (dir / "manifest.json").string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(Kind::kInvalid, std::string("corpus manifest: ") + e.what());
  }
  Corpus c;
  c.recipe = j.at("recipe").get<SceneRecipe>();
  for (const auto& e : j.at("scenes")) {
    c.entries.push_back({e.at("path").get<std::string>(), e.at("label").get<std::uint32_t>(),
                         e.at("split").get<std::string>(), e.at("index").get<std::size_t>()});
  }
  return c;
}

}  // namespace csrrm
