// Copyright 2026 The CSRRM Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "csrrm/nn/checkpoint.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "csrrm/core/error.hpp"
#include "csrrm/nn/backbone.hpp"

namespace csrrm {
namespace {

FormatError::Kind decode_kind(std::span<const std::uint8_t> bytes) {
  try {
    decode_checkpoint(bytes);
  } catch (const FormatError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "decode succeeded";
  return FormatError::Kind::kIo;
}

TEST(Checkpoint, RoundTripIsBitExact) {
  const Backbone net(BackboneConfig::desk_semantic(12), "semantic", 11);
  const auto bytes = encode_checkpoint(net.params());
  const auto back = decode_checkpoint(bytes);
  ASSERT_EQ(back.size(), net.params().entries().size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    const auto& want = net.params().entries()[i];
    EXPECT_EQ(back[i].name, want.name);
    EXPECT_EQ(back[i].tensor.shape(), want.tensor.shape());
    EXPECT_TRUE(std::ranges::equal(back[i].tensor.value(), want.tensor.value()));
  }
  EXPECT_EQ(checkpoint_manifest(bytes).size(), back.size());
  EXPECT_EQ(checkpoint_manifest(bytes).front().offset, 0u);
}

TEST(Checkpoint, LoadRestoresParametersThroughFile) {
  const auto path = std::filesystem::temp_directory_path() / "csrrm_checkpoint_test.ckpt";
  const Backbone a(BackboneConfig::desk_rgb(), "rgb", 1);
  Backbone b(BackboneConfig::desk_rgb(), "rgb", 2);
  ASSERT_NE(a.params().checksum(), b.params().checksum());
  write_checkpoint(a.params(), path);
  load_checkpoint(b.params(), path);
  EXPECT_EQ(a.params().checksum(), b.params().checksum());
  std::filesystem::remove(path);
}

TEST(Checkpoint, LoadRejectsMissingOrMisshapenEntries) {
  const auto path = std::filesystem::temp_directory_path() / "csrrm_checkpoint_mismatch.ckpt";
  const Backbone small(BackboneConfig::desk_rgb(64), "rgb", 1);
  write_checkpoint(small.params(), path);
  Backbone wide(BackboneConfig::desk_rgb(128), "rgb", 1);
  EXPECT_THROW(load_checkpoint(wide.params(), path), FormatError);
  Backbone renamed(BackboneConfig::desk_rgb(64), "other", 1);
  EXPECT_THROW(load_checkpoint(renamed.params(), path), FormatError);
  std::filesystem::remove(path);
  EXPECT_THROW(read_checkpoint(path), FormatError);
}

TEST(Checkpoint, MalformedBytesGiveTypedErrors) {
  ParamSet ps;
  ps.add("a", Tensor::from({2, 2}, {1, 2, 3, 4}));
  ps.add("b", Tensor::from({3}, {5, 6, 7}));
  const auto good = encode_checkpoint(ps);

  auto bad = good;
  bad[0] = 'X';
  EXPECT_EQ(decode_kind(bad), FormatError::Kind::kBadMagic);
  bad = good;
  bad[4] = 9;
  EXPECT_EQ(decode_kind(bad), FormatError::Kind::kBadVersion);
  for (std::size_t n = 0; n < good.size(); ++n) {
    const std::span<const std::uint8_t> prefix(good.data(), n);
    EXPECT_THROW(decode_checkpoint(prefix), FormatError) << "prefix " << n;
  }
}

TEST(Checkpoint, RandomByteFlipsNeverCrash) {
  const Backbone net(BackboneConfig::desk_rgb(32), "rgb", 3);
  const auto good = encode_checkpoint(net.params());
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 500; ++trial) {
    auto bytes = good;
    // Header region is where structure lives; flip there most of the time.
    const std::size_t limit = trial % 4 ? std::min<std::size_t>(bytes.size(), 400) : bytes.size();
    for (int k = 0; k < 3; ++k) bytes[rng() % limit] ^= static_cast<std::uint8_t>(1 + rng() % 255);
    try {
      decode_checkpoint(bytes);
    } catch (const FormatError&) {
    }
  }
}

}  // namespace
}  // namespace csrrm
