// Copyright 2026 The CSRRM Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>

#include "csrrm/data/synth.hpp"
#include "csrrm/filter/score_filter.hpp"

namespace csrrm {

/// Square crop with its top-left corner at (x, y), optionally mirrored
/// left to right after cropping.
struct CropSpec {
  std::size_t x = 0;
  std::size_t y = 0;
  std::size_t size = 0;
  bool flip = false;

  bool operator==(const CropSpec&) const = default;
};

inline constexpr std::size_t kNumCrops = 10;

/// Top-left, top-right, bottom-left, bottom-right, centre, then the same
/// five mirrored. Throws ShapeError when the crop exceeds the scene.
std::array<CropSpec, kNumCrops> ten_crops(std::size_t width, std::size_t height,
                                          std::size_t size);

ScoreTensor crop_scores(const ScoreTensor& m, const CropSpec& c);
RgbImage crop_rgb(const RgbImage& img, const CropSpec& c);

}  // namespace csrrm
