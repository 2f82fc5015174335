// Copyright 2026 The CSRRM Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <initializer_list>

namespace csrrm {

/// splitmix64 finalizer over seed + lane; independent streams from one seed.
constexpr std::uint64_t substream(std::uint64_t seed, std::uint64_t lane) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (lane + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Folds a path of lanes, e.g. {stage, epoch, step, sample}.
constexpr std::uint64_t substream(std::uint64_t seed, std::initializer_list<std::uint64_t> lanes) {
  for (const auto lane : lanes) seed = substream(seed, lane);
  return seed;
}

}  // namespace csrrm
