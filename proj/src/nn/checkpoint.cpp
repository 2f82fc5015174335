// Copyright 2026 The CSRRM Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "csrrm/nn/checkpoint.hpp"

#include <algorithm>

#include "csrrm/core/binary_io.hpp"
#include "csrrm/core/error.hpp"

namespace csrrm {
namespace {

std::size_t manifest_bytes(const ParamSet& params) {
  std::size_t n = 0;
  for (const auto& e : params.entries())
    n += 4 + e.name.size() + 4 + 8 * e.tensor.rank() + 8;
  return n;
}

struct Header {
  std::vector<CheckpointEntry> entries;
  std::size_t payload_start = 0;
};

Header read_header(io::ByteReader& in) {
  if (in.get_bytes(4) != std::string_view(kCheckpointMagic, 4))
    throw FormatError(FormatError::Kind::kBadMagic, "checkpoint: bad magic");
  if (const auto v = in.get<std::uint16_t>(); v != kCheckpointVersion)
    throw FormatError(FormatError::Kind::kBadVersion,
                      "checkpoint: unsupported version " + std::to_string(v));
  Header h;
  const auto count = in.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < count; ++i) {
    CheckpointEntry e;
    e.name = in.get_bytes(in.get<std::uint32_t>());
    const auto rank = in.get<std::uint32_t>();
    if (rank > 8) throw FormatError(FormatError::Kind::kInvalid, "checkpoint: rank too large");
    for (std::uint32_t r = 0; r < rank; ++r) e.shape.push_back(in.get<std::uint64_t>());
    e.offset = in.get<std::uint64_t>();
    h.entries.push_back(std::move(e));
  }
  h.payload_start = in.position();
  return h;
}

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const ParamSet& params) {
  io::ByteWriter out;
  out.put_bytes(std::string_view(kCheckpointMagic, 4));
  out.put(kCheckpointVersion);
  out.put(static_cast<std::uint32_t>(params.entries().size()));

  std::uint64_t offset = 0;
  for (const auto& e : params.entries()) {
    out.put(static_cast<std::uint32_t>(e.name.size()));
    out.put_bytes(e.name);
    out.put(static_cast<std::uint32_t>(e.tensor.rank()));
    for (auto d : e.tensor.shape()) out.put(static_cast<std::uint64_t>(d));
    out.put(offset);
    offset += 8 + 8 * e.tensor.size();
  }
  const std::size_t expected_header = 4 + 2 + 4 + manifest_bytes(params);
  if (out.size() != expected_header) throw std::logic_error("checkpoint header size mismatch");

  for (const auto& e : params.entries()) {
    out.put(static_cast<std::uint64_t>(e.tensor.size()));
    out.put_array<double>(e.tensor.value());
  }
  return std::move(out.bytes());
}

std::vector<CheckpointEntry> checkpoint_manifest(std::span<const std::uint8_t> bytes) {
  io::ByteReader in(bytes, "checkpoint");
  return read_header(in).entries;
}

std::vector<NamedTensor> decode_checkpoint(std::span<const std::uint8_t> bytes) {
  io::ByteReader in(bytes, "checkpoint");
  const Header h = read_header(in);
  std::vector<NamedTensor> out;
  out.reserve(h.entries.size());
  for (const auto& e : h.entries) {
    in.seek(h.payload_start + e.offset);
    const auto count = in.get<std::uint64_t>();
    if (count != shape_size(e.shape)) {
      throw FormatError(FormatError::Kind::kInvalid,
                        "checkpoint: '" + e.name + "' length disagrees with its shape");
    }
    if (count * 8 > in.remaining())
      throw FormatError(FormatError::Kind::kTruncated, "checkpoint: '" + e.name + "' truncated");
    std::vector<double> values(count);
    in.get_array<double>(values);
    out.push_back({e.name, Tensor::from(e.shape, std::move(values))});
  }
  return out;
}

void write_checkpoint(const ParamSet& params, const std::filesystem::path& path) {
  io::write_file(path, encode_checkpoint(params));
}

std::vector<NamedTensor> read_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(io::read_file(path));
}

void load_checkpoint(ParamSet& params, const std::filesystem::path& path) {
  const auto stored = read_checkpoint(path);
  for (const auto& e : params.entries()) {
    const auto it = std::ranges::find(stored, e.name, &NamedTensor::name);
    if (it == stored.end())
      throw FormatError(FormatError::Kind::kInvalid, "checkpoint lacks '" + e.name + "'");
    if (it->tensor.shape() != e.tensor.shape()) {
      throw FormatError(FormatError::Kind::kInvalid,
                        "checkpoint shape " + shape_str(it->tensor.shape()) + " for '" + e.name +
                            "' but model expects " + shape_str(e.tensor.shape()));
    }
    std::ranges::copy(it->tensor.value(), e.tensor.value().begin());
  }
}

}  // namespace csrrm
