// Copyright 2026 The CSRRM Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "csrrm/filter/score_filter.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "csrrm/core/error.hpp"

namespace csrrm {

ScoreTensor ScoreTensor::zeros(std::size_t width, std::size_t height, std::size_t labels) {
  return {width, height, labels, std::vector<double>(width * height * labels, 0.0)};
}

double ScoreTensor::peak(std::size_t x, std::size_t y) const {
  const auto p = pixel(x, y);
  return *std::ranges::max_element(p);
}

void ScoreTensor::validate(double tolerance) const {
  if (labels == 0 || width == 0 || height == 0) throw ConfigError("ScoreTensor: empty dimensions");
  if (data.size() != width * height * labels) {
    throw ConfigError("ScoreTensor: " + std::to_string(data.size()) + " values for " +
                      std::to_string(width) + "x" + std::to_string(height) + "x" +
                      std::to_string(labels));
  }
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      double total = 0.0;
      for (double v : pixel(x, y)) {
        if (!(v >= 0.0 && v <= 1.0)) {
          throw ConfigError("ScoreTensor: value " + std::to_string(v) + " outside [0,1] at (" +
                            std::to_string(x) + "," + std::to_string(y) + ")");
        }
        total += v;
      }
      if (std::abs(total - 1.0) > tolerance) {
        throw ConfigError("ScoreTensor: pixel (" + std::to_string(x) + "," + std::to_string(y) +
                          ") sums to " + std::to_string(total));
      }
    }
  }
}

Tensor ScoreTensor::to_chw() const {
  std::vector<double> out(data.size());
  const std::size_t plane = width * height;
  for (std::size_t y = 0; y < height; ++y)
    for (std::size_t x = 0; x < width; ++x)
      for (std::size_t k = 0; k < labels; ++k)
        out[k * plane + y * width + x] = data[offset(x, y) + k];
  return Tensor::from({labels, height, width}, std::move(out));
}

FilterResult confidence_filter_traced(const ScoreTensor& m, FilterConfig cfg) {
  const std::size_t win = cfg.window;
  if (win == 0) throw ConfigError("confidence_filter: window must be at least 1");
  if (m.width < win || m.height < win) {
    throw ShapeError("confidence_filter: " + std::to_string(m.width) + "x" +
                     std::to_string(m.height) + " input is smaller than a " +
                     std::to_string(win) + "x" + std::to_string(win) + " window");
  }
  const std::size_t ow = m.width / win, oh = m.height / win;
  FilterResult r{ScoreTensor::zeros(ow, oh, m.labels), {}};
  r.sources.reserve(ow * oh);
  for (std::size_t oy = 0; oy < oh; ++oy) {
    for (std::size_t ox = 0; ox < ow; ++ox) {
      PixelPos best{ox * win, oy * win};
      double best_peak = m.peak(best.x, best.y);
      for (std::size_t dy = 0; dy < win; ++dy) {
        for (std::size_t dx = 0; dx < win; ++dx) {
          const PixelPos p{ox * win + dx, oy * win + dy};
          const double pk = m.peak(p.x, p.y);
          if (pk > best_peak) {
            best_peak = pk;
            best = p;
          }
        }
      }
      std::ranges::copy(m.pixel(best.x, best.y), r.scores.pixel(ox, oy).begin());
      r.sources.push_back(best);
    }
  }
  return r;
}

ScoreTensor confidence_filter(const ScoreTensor& m, FilterConfig cfg) {
  return confidence_filter_traced(m, cfg).scores;
}

LabelMap hard_labels(const ScoreTensor& m) {
  LabelMap out{m.width, m.height, std::vector<std::uint32_t>(m.width * m.height)};
  for (std::size_t y = 0; y < m.height; ++y) {
    for (std::size_t x = 0; x < m.width; ++x) {
      const auto p = m.pixel(x, y);
      out.at(x, y) = static_cast<std::uint32_t>(std::ranges::max_element(p) - p.begin());
    }
  }
  return out;
}

LabelMap majority_downsample(const LabelMap& labels, std::size_t window) {
  if (window == 0) throw ConfigError("majority_downsample: window must be at least 1");
  const std::size_t ow = labels.width / window, oh = labels.height / window;
  LabelMap out{ow, oh, std::vector<std::uint32_t>(ow * oh)};
  std::map<std::uint32_t, std::size_t> votes;
  for (std::size_t oy = 0; oy < oh; ++oy) {
    for (std::size_t ox = 0; ox < ow; ++ox) {
      votes.clear();
      for (std::size_t dy = 0; dy < window; ++dy)
        for (std::size_t dx = 0; dx < window; ++dx)
          ++votes[labels.at(ox * window + dx, oy * window + dy)];
      // std::map iterates labels in ascending order, so max_element keeps the
      // lowest label among equal counts.
      out.at(ox, oy) =
          std::ranges::max_element(votes, {}, [](const auto& kv) { return kv.second; })->first;
    }
  }
  return out;
}

namespace {

double mismatch_rate(const LabelMap& a, const LabelMap& b) {
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < a.labels.size(); ++i) wrong += a.labels[i] != b.labels[i];
  return a.labels.empty() ? 0.0 : static_cast<double>(wrong) / static_cast<double>(a.labels.size());
}

}  // namespace

AmbiguityStats ambiguity_reduction_stats(const LabelMap& clean, const ScoreTensor& noisy,
                                         FilterConfig cfg) {
  if (clean.width != noisy.width || clean.height != noisy.height ||
      clean.labels.size() != clean.width * clean.height) {
    throw ShapeError("ambiguity_reduction_stats: clean map " + std::to_string(clean.width) + "x" +
                     std::to_string(clean.height) + " does not align with score tensor " +
                     std::to_string(noisy.width) + "x" + std::to_string(noisy.height));
  }
  AmbiguityStats s;
  s.pre_error_rate = mismatch_rate(hard_labels(noisy), clean);
  s.post_error_rate = mismatch_rate(hard_labels(confidence_filter(noisy, cfg)),
                                    majority_downsample(clean, cfg.window));
  return s;
}

}  // namespace csrrm
