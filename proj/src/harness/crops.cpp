// Copyright 2026 The CSRRM Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "csrrm/harness/crops.hpp"

#include <algorithm>
#include <string>

#include "csrrm/core/error.hpp"

namespace csrrm {
namespace {

void check_fits(const CropSpec& c, std::size_t width, std::size_t height) {
  if (c.size == 0 || c.x + c.size > width || c.y + c.size > height) {
    throw ShapeError("crop of " + std::to_string(c.size) + " at (" + std::to_string(c.x) + "," +
                     std::to_string(c.y) + ") exceeds " + std::to_string(width) + "x" +
                     std::to_string(height));
  }
}

}  // namespace

std::array<CropSpec, kNumCrops> ten_crops(std::size_t width, std::size_t height,
                                          std::size_t size) {
  if (size == 0 || size > width || size > height) {
    throw ShapeError("crop " + std::to_string(size) + " does not fit " + std::to_string(width) +
                     "x" + std::to_string(height));
  }
  const std::size_t r = width - size;
  const std::size_t b = height - size;
  const std::array<CropSpec, 5> plain = {
      CropSpec{0, 0, size, false}, CropSpec{r, 0, size, false}, CropSpec{0, b, size, false},
      CropSpec{r, b, size, false}, CropSpec{r / 2, b / 2, size, false}};
  std::array<CropSpec, kNumCrops> out;
  for (std::size_t i = 0; i < plain.size(); ++i) {
    out[i] = plain[i];
    out[i + 5] = plain[i];
    out[i + 5].flip = true;
  }
  return out;
}

ScoreTensor crop_scores(const ScoreTensor& m, const CropSpec& c) {
  check_fits(c, m.width, m.height);
  ScoreTensor out = ScoreTensor::zeros(c.size, c.size, m.labels);
  for (std::size_t y = 0; y < c.size; ++y) {
    for (std::size_t x = 0; x < c.size; ++x) {
      const std::size_t sx = c.x + (c.flip ? c.size - 1 - x : x);
      const auto src = m.pixel(sx, c.y + y);
      std::ranges::copy(src, out.pixel(x, y).begin());
    }
  }
  return out;
}

RgbImage crop_rgb(const RgbImage& img, const CropSpec& c) {
  check_fits(c, img.width, img.height);
  RgbImage out{c.size, c.size, std::vector<double>(3 * c.size * c.size)};
  for (std::size_t ch = 0; ch < 3; ++ch) {
    for (std::size_t y = 0; y < c.size; ++y) {
      for (std::size_t x = 0; x < c.size; ++x) {
        const std::size_t sx = c.x + (c.flip ? c.size - 1 - x : x);
        out.data[(ch * c.size + y) * c.size + x] = img.at(ch, sx, c.y + y);
      }
    }
  }
  return out;
}

}  // namespace csrrm
