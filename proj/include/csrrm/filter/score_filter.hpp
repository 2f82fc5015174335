// Copyright 2026 The CSRRM Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "csrrm/core/tensor.hpp"

namespace csrrm {

/// Per-pixel semantic probability distributions, w×h pixels by l labels.
/// Storage is pixel-major: element (x, y, k) lives at (y·w + x)·l + k.
struct ScoreTensor {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t labels = 0;
  std::vector<double> data;

  static ScoreTensor zeros(std::size_t width, std::size_t height, std::size_t labels);

  std::size_t offset(std::size_t x, std::size_t y) const { return (y * width + x) * labels; }
  std::span<const double> pixel(std::size_t x, std::size_t y) const {
    return {data.data() + offset(x, y), labels};
  }
  std::span<double> pixel(std::size_t x, std::size_t y) {
    return {data.data() + offset(x, y), labels};
  }
  double peak(std::size_t x, std::size_t y) const;

  /// Throws ConfigError unless every value is in [0,1] and every pixel sums
  /// to 1 within `tolerance`.
  void validate(double tolerance = 1e-4) const;

  /// Channel-major [l×h×w] tensor for the convolutional backbone.
  Tensor to_chw() const;

  bool operator==(const ScoreTensor&) const = default;
};

/// Integer label per pixel, row-major (y·w + x).
struct LabelMap {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint32_t> labels;

  std::uint32_t at(std::size_t x, std::size_t y) const { return labels[y * width + x]; }
  std::uint32_t& at(std::size_t x, std::size_t y) { return labels[y * width + x]; }

  bool operator==(const LabelMap&) const = default;
};

/// Non-overlapping window, stride equal to the window; trailing rows and
/// columns that do not fill a whole window are dropped.
struct FilterConfig {
  std::size_t window = 2;
};

struct PixelPos {
  std::size_t x = 0;
  std::size_t y = 0;
  bool operator==(const PixelPos&) const = default;
};

struct FilterResult {
  ScoreTensor scores;
  /// Input position each output pixel was copied from, row-major.
  std::vector<PixelPos> sources;
};

/// Keeps, per window, the full distribution of the pixel whose peak channel
/// score is largest. Ties go to the first pixel in row-major order.
FilterResult confidence_filter_traced(const ScoreTensor& m, FilterConfig cfg);
ScoreTensor confidence_filter(const ScoreTensor& m, FilterConfig cfg);

/// Per-pixel argmax over channels, lowest index on ties.
LabelMap hard_labels(const ScoreTensor& m);

/// Most frequent label per window (lowest label on ties), truncating like
/// confidence_filter.
LabelMap majority_downsample(const LabelMap& labels, std::size_t window);

struct AmbiguityStats {
  double pre_error_rate = 0.0;
  double post_error_rate = 0.0;
};

/// Label error rate of `noisy` against `clean` before filtering, and of the
/// filtered tensor against the majority-downsampled clean map after it.
AmbiguityStats ambiguity_reduction_stats(const LabelMap& clean, const ScoreTensor& noisy,
                                         FilterConfig cfg);

}  // namespace csrrm
