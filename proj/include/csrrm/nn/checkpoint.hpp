// Copyright 2026 The CSRRM Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "csrrm/nn/params.hpp"

namespace csrrm {

/// Checkpoint layout (all integers and floats little-endian):
///
///   "SRCK" | u16 version | u32 entry count
///   manifest, per entry: u32 name length | name | u32 rank | u64 dims[rank]
///                        | u64 byte offset of the array within the payload
///   payload, per entry:  u64 element count | f64 values[count]
inline constexpr char kCheckpointMagic[4] = {'S', 'R', 'C', 'K'};
inline constexpr std::uint16_t kCheckpointVersion = 1;

struct CheckpointEntry {
  std::string name;
  Shape shape;
  std::uint64_t offset = 0;
};

std::vector<std::uint8_t> encode_checkpoint(const ParamSet& params);
std::vector<NamedTensor> decode_checkpoint(std::span<const std::uint8_t> bytes);
std::vector<CheckpointEntry> checkpoint_manifest(std::span<const std::uint8_t> bytes);

void write_checkpoint(const ParamSet& params, const std::filesystem::path& path);
std::vector<NamedTensor> read_checkpoint(const std::filesystem::path& path);

/// Copies checkpoint values into same-named, same-shaped parameters. Every
/// parameter in `params` must be present; extra checkpoint entries are
/// ignored.
void load_checkpoint(ParamSet& params, const std::filesystem::path& path);

}  // namespace csrrm
