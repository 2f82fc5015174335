// Copyright 2026 The CSRRM Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "csrrm/data/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "csrrm/core/error.hpp"

namespace csrrm {
namespace {

struct Rect {
  std::size_t x = 0, y = 0, w = 0, h = 0;  // in pixels; [x, x+w) × [y, y+h)
};

std::size_t distractor_count(const SceneRecipe& r) {
  return r.labels >= r.key_labels + 2 ? r.labels - r.key_labels - 2 : 0;
}

std::size_t uniform_index(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

// Softmax over logits whose non-peak entries are N(0,1) and whose peak logit
// is solved so the peak probability equals `peak`.
void fill_distribution(std::span<double> out, std::uint32_t hot, double peak,
                       std::mt19937_64& rng) {
  const std::size_t l = out.size();
  std::normal_distribution<double> logit(0.0, 1.0);
  std::vector<double> z(l);
  double rest = 0.0;
  for (std::size_t k = 0; k < l; ++k) {
    z[k] = logit(rng);
    if (k != hot) rest += std::exp(z[k]);
  }
  if (peak >= 1.0) {
    std::ranges::fill(out, 0.0);
    out[hot] = 1.0;
    return;
  }
  z[hot] = std::log(peak / (1.0 - peak) * rest);
  const double mx = *std::ranges::max_element(z);
  double total = 0.0;
  for (std::size_t k = 0; k < l; ++k) total += (out[k] = std::exp(z[k] - mx));
  for (auto& v : out) v /= total;
  // The hot label must stay the argmax; fall back to an even split otherwise.
  bool dominant = true;
  for (std::size_t k = 0; k < l; ++k)
    if (k != hot && out[k] >= out[hot]) dominant = false;
  if (!dominant) {
    std::ranges::fill(out, (1.0 - peak) / static_cast<double>(l - 1));
    out[hot] = peak;
  }
}

}  // namespace

void SceneRecipe::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError("SceneRecipe: " + what); };
  if (cell == 0 || width % cell != 0 || height % cell != 0)
    fail("width and height must be multiples of cell");
  if (width / cell < 4 || height / cell < 4) fail("grid must hold at least 4x4 cells");
  if (key_labels < 2) fail("at least two key labels are required");
  if (labels < key_labels + 2) fail("labels must cover background, key labels and clutter");
  if (distractors > 0 && distractor_count(*this) == 0)
    fail("distractor regions requested but no distractor labels are available");
  if (!(corruption_rate >= 0.0 && corruption_rate < 1.0)) fail("corruption_rate must lie in [0,1)");
  if (!(corruption_margin > 0.0)) fail("corruption_margin must be positive");
  if (corruption_window == 0) fail("corruption_window must be positive");
  if (corruption_rate > 0.0 &&
      corruption_rate > 1.0 - 1.0 / static_cast<double>(corruption_window * corruption_window))
    fail("corruption_rate leaves no clean pixel per window");
  if (!(region_miss_rate >= 0.0 && region_miss_rate <= 1.0)) fail("region_miss_rate must lie in [0,1]");
  if (!(rgb_region_miss_rate >= 0.0 && rgb_region_miss_rate <= 1.0))
    fail("rgb_region_miss_rate must lie in [0,1]");
  if (!(clean_peak_min > 0.0 && clean_peak_min <= clean_peak_max && clean_peak_max < 1.0))
    fail("clean peak band must satisfy 0 < min <= max < 1");
  if (clean_peak_min * static_cast<double>(labels) <= 1.0) fail("clean peak band is not a clear argmax");
  if (corruption_rate > 0.0 &&
      std::min(1.0, corruption_margin * clean_peak_min) * static_cast<double>(labels) <= 1.0)
    fail("corruption_margin too small for corrupted pixels to carry their wrong label");
  if (rgb_pixel_noise < 0.0 || rgb_region_noise < 0.0) fail("noise levels must be non-negative");
  class_rules(*this);
}

std::vector<ClassRule> class_rules(const SceneRecipe& recipe) {
  const std::size_t k = recipe.key_labels;
  const std::size_t n = k % 2 == 0 ? k : k + 1;  // odd counts get a bye slot
  std::vector<ClassRule> rules;
  for (std::size_t round = 0; round + 1 < n; ++round) {
    for (std::size_t i = 0; i < n / 2; ++i) {
      const std::size_t a = (round + i) % (n - 1);
      const std::size_t b = i == 0 ? n - 1 : (n - 1 - i + round) % (n - 1);
      if (a >= k || b >= k) continue;
      const auto la = static_cast<std::uint32_t>(std::min(a, b) + 1);
      const auto lb = static_cast<std::uint32_t>(std::max(a, b) + 1);
      rules.push_back({la, lb, Relation::kHorizontal});
      rules.push_back({la, lb, Relation::kVertical});
    }
  }
  if (recipe.num_classes < 2 || recipe.num_classes > rules.size()) {
    throw ConfigError("SceneRecipe: " + std::to_string(recipe.num_classes) +
                      " classes requested but " + std::to_string(recipe.key_labels) +
                      " key labels support between 2 and " + std::to_string(rules.size()));
  }
  rules.resize(recipe.num_classes);
  return rules;
}

std::optional<std::size_t> rule_oracle(const LabelMap& clean, const SceneRecipe& recipe) {
  struct Box {
    std::size_t x0 = SIZE_MAX, y0 = SIZE_MAX, x1 = 0, y1 = 0;  // exclusive ends
    bool seen = false;
  };
  std::vector<Box> boxes(recipe.key_labels + 1);
  for (std::size_t y = 0; y < clean.height; ++y) {
    for (std::size_t x = 0; x < clean.width; ++x) {
      const auto l = clean.at(x, y);
      if (l == 0 || l > recipe.key_labels) continue;
      auto& b = boxes[l];
      b.seen = true;
      b.x0 = std::min(b.x0, x);
      b.y0 = std::min(b.y0, y);
      b.x1 = std::max(b.x1, x + 1);
      b.y1 = std::max(b.y1, y + 1);
    }
  }
  std::vector<std::uint32_t> present;
  for (std::uint32_t l = 1; l <= recipe.key_labels; ++l)
    if (boxes[l].seen) present.push_back(l);
  if (present.size() != 2) return std::nullopt;

  const Box& a = boxes[present[0]];
  const Box& b = boxes[present[1]];
  const bool rows_overlap = a.y0 < b.y1 && b.y0 < a.y1;
  const bool cols_overlap = a.x0 < b.x1 && b.x0 < a.x1;
  const bool side_by_side = rows_overlap && (a.x1 == b.x0 || b.x1 == a.x0);
  const bool stacked = cols_overlap && (a.y1 == b.y0 || b.y1 == a.y0);
  if (side_by_side == stacked) return std::nullopt;

  const Relation rel = side_by_side ? Relation::kHorizontal : Relation::kVertical;
  const auto rules = class_rules(recipe);
  for (std::size_t c = 0; c < rules.size(); ++c)
    if (rules[c].a == present[0] && rules[c].b == present[1] && rules[c].relation == rel) return c;
  return std::nullopt;
}

Tensor RgbImage::to_tensor() const { return Tensor::from({3, height, width}, data); }

std::array<double, 3> label_color(std::uint32_t label) {
  if (label == 0) return {0.5, 0.5, 0.5};
  // Hues spread by the golden ratio; fixed saturation and value.
  const double hue = std::fmod(0.13 + 0.6180339887498949 * label, 1.0) * 6.0;
  const double s = 0.75, v = 0.85;
  const double c = v * s;
  const double x = c * (1.0 - std::abs(std::fmod(hue, 2.0) - 1.0));
  const double m = v - c;
  std::array<double, 3> rgb{};
  switch (static_cast<int>(hue)) {
    case 0: rgb = {c, x, 0}; break;
    case 1: rgb = {x, c, 0}; break;
    case 2: rgb = {0, c, x}; break;
    case 3: rgb = {0, x, c}; break;
    case 4: rgb = {x, 0, c}; break;
    default: rgb = {c, 0, x}; break;
  }
  for (auto& ch : rgb) ch += m;
  return rgb;
}

SyntheticScene generate_scene(const SceneRecipe& recipe, std::size_t index) {
  recipe.validate();
  std::seed_seq seq{static_cast<std::uint32_t>(recipe.seed), static_cast<std::uint32_t>(recipe.seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  std::mt19937_64 rng(seq);

  const auto rules = class_rules(recipe);
  const std::size_t cls = index % recipe.num_classes;
  const ClassRule& rule = rules[cls];
  const std::size_t gw = recipe.width / recipe.cell, gh = recipe.height / recipe.cell;
  const std::size_t w = recipe.width, h = recipe.height;

  // Key regions on the cell grid, laid out along the rule's axis.
  const bool horizontal = rule.relation == Relation::kHorizontal;
  const std::size_t along = horizontal ? gw : gh, across = horizontal ? gh : gw;
  const std::size_t len_a = uniform_index(rng, 2, std::min<std::size_t>(3, along - 2));
  const std::size_t len_b = uniform_index(rng, 2, std::min<std::size_t>(3, along - len_a));
  const std::size_t thick_a = uniform_index(rng, 2, std::min<std::size_t>(3, across));
  const std::size_t thick_b = uniform_index(rng, 2, std::min<std::size_t>(3, across));
  const std::size_t start = uniform_index(rng, 0, along - len_a - len_b);
  const std::size_t off_a = uniform_index(rng, 0, across - thick_a);
  const std::size_t lo = off_a + 1 > thick_b ? off_a + 1 - thick_b : 0;
  const std::size_t hi = std::min(off_a + thick_a - 1, across - thick_b);
  const std::size_t off_b = uniform_index(rng, lo, hi);

  auto make_rect = [&](std::size_t pos, std::size_t len, std::size_t off, std::size_t thick) {
    const std::size_t c = recipe.cell;
    return horizontal ? Rect{pos * c, off * c, len * c, thick * c}
                      : Rect{off * c, pos * c, thick * c, len * c};
  };
  const bool a_first = std::bernoulli_distribution(0.5)(rng);
  const Rect first = make_rect(start, len_a, off_a, thick_a);
  const Rect second = make_rect(start + len_a, len_b, off_b, thick_b);
  struct Region {
    Rect rect;
    std::uint32_t label;
  };
  std::vector<Region> regions = {{first, a_first ? rule.a : rule.b},
                                 {second, a_first ? rule.b : rule.a}};

  LabelMap clean{w, h, std::vector<std::uint32_t>(w * h, 0)};
  std::vector<int> region_of(w * h, -1);  // -1 is background
  auto paint = [&](const Region& r, int id) {
    for (std::size_t y = r.rect.y; y < r.rect.y + r.rect.h; ++y)
      for (std::size_t x = r.rect.x; x < r.rect.x + r.rect.w; ++x) {
        clean.at(x, y) = r.label;
        region_of[y * w + x] = id;
      }
  };
  paint(regions[0], 0);
  paint(regions[1], 1);

  // Distractor objects go on free cells only, so key regions stay intact.
  const std::size_t n_distract_labels = distractor_count(recipe);
  for (std::size_t d = 0; d < recipe.distractors; ++d) {
    for (int attempt = 0; attempt < 32; ++attempt) {
      const std::size_t dw = uniform_index(rng, 1, 2), dh = uniform_index(rng, 1, 2);
      const std::size_t cx = uniform_index(rng, 0, gw - dw), cy = uniform_index(rng, 0, gh - dh);
      const Rect r{cx * recipe.cell, cy * recipe.cell, dw * recipe.cell, dh * recipe.cell};
      bool free = true;
      for (std::size_t y = r.y; y < r.y + r.h && free; ++y)
        for (std::size_t x = r.x; x < r.x + r.w && free; ++x) free = clean.at(x, y) == 0;
      if (!free) continue;
      const auto label = static_cast<std::uint32_t>(
          recipe.key_labels + 1 + uniform_index(rng, 0, n_distract_labels - 1));
      regions.push_back({r, label});
      paint(regions.back(), static_cast<int>(regions.size() - 1));
      break;
    }
  }

  // What the segmenter reports before pixel-level corruption.
  std::vector<std::uint32_t> observed = clean.labels;
  std::vector<std::uint8_t> mask(w * h, 0);
  if (std::bernoulli_distribution(recipe.region_miss_rate)(rng)) {
    const int missed = std::bernoulli_distribution(0.5)(rng) ? 0 : 1;
    for (std::size_t i = 0; i < w * h; ++i) {
      if (region_of[i] == missed) {
        observed[i] = recipe.clutter_label();
        mask[i] = 1;
      }
    }
  }

  ScoreTensor score = ScoreTensor::zeros(w, h, recipe.labels);
  std::uniform_real_distribution<double> clean_peak(recipe.clean_peak_min, recipe.clean_peak_max);
  std::vector<double> peak(w * h);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      peak[y * w + x] = clean_peak(rng);
      fill_distribution(score.pixel(x, y), observed[y * w + x], peak[y * w + x], rng);
    }

  // Pixel corruption: exactly round(ρ·w·h) pixels, never a whole window.
  const auto n_corrupt =
      static_cast<std::size_t>(std::llround(recipe.corruption_rate * static_cast<double>(w * h)));
  if (n_corrupt > 0) {
    const std::size_t win = recipe.corruption_window;
    const std::size_t per_window_cap = win * win - 1;
    const std::size_t wins_x = (w + win - 1) / win;
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < w * h; ++i)
      if (!mask[i]) candidates.push_back(i);
    std::ranges::shuffle(candidates, rng);
    std::vector<std::size_t> per_window(wins_x * ((h + win - 1) / win), 0);
    std::vector<std::size_t> chosen;
    for (std::size_t i : candidates) {
      if (chosen.size() == n_corrupt) break;
      const std::size_t wi = (i / w / win) * wins_x + (i % w) / win;
      if (per_window[wi] == per_window_cap) continue;
      ++per_window[wi];
      chosen.push_back(i);
      mask[i] = 1;
    }
    if (chosen.size() != n_corrupt)
      throw ConfigError("SceneRecipe: cannot place the requested number of corrupted pixels");

    for (std::size_t i : chosen) {
      const std::size_t x = i % w, y = i / w;
      const std::size_t wx = x / win * win, wy = y / win * win;
      double weakest = 1.0;
      for (std::size_t yy = wy; yy < std::min(h, wy + win); ++yy)
        for (std::size_t xx = wx; xx < std::min(w, wx + win); ++xx)
          if (!mask[yy * w + xx]) weakest = std::min(weakest, peak[yy * w + xx]);
      const double p = std::min(1.0, recipe.corruption_margin * weakest);
      auto wrong = static_cast<std::uint32_t>(uniform_index(rng, 0, recipe.labels - 2));
      if (wrong >= clean.labels[i]) ++wrong;
      observed[i] = wrong;
      fill_distribution(score.pixel(x, y), wrong, p, rng);
    }
  }

  RgbImage rgb{w, h, std::vector<double>(3 * w * h)};
  std::normal_distribution<double> region_shift(0.0, 1.0), pixel_noise(0.0, 1.0);
  std::vector<std::array<double, 3>> shift(regions.size() + 1);
  for (auto& s : shift)
    for (auto& ch : s) ch = recipe.rgb_region_noise * region_shift(rng);
  // Drawn only when enabled so recipes without it keep their scenes.
  int rgb_missed = -1;
  if (recipe.rgb_region_miss_rate > 0.0 &&
      std::bernoulli_distribution(recipe.rgb_region_miss_rate)(rng))
    rgb_missed = std::bernoulli_distribution(0.5)(rng) ? 0 : 1;
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      const auto base =
          label_color(rgb_missed >= 0 && region_of[y * w + x] == rgb_missed ? 0 : clean.at(x, y));
      const auto& sh = shift[static_cast<std::size_t>(region_of[y * w + x] + 1)];
      for (std::size_t c = 0; c < 3; ++c)
        rgb.data[(c * h + y) * w + x] = base[c] + sh[c] + recipe.rgb_pixel_noise * pixel_noise(rng);
    }

  SyntheticScene scene{std::move(score), std::move(rgb), static_cast<std::uint32_t>(cls),
                       std::move(clean), std::move(mask)};
  const LabelMap hard = hard_labels(scene.score);
  for (std::size_t i = 0; i < w * h; ++i) {
    if ((hard.labels[i] != scene.clean_labels.labels[i]) != (scene.corruption_mask[i] != 0))
      throw std::logic_error("generate_scene: corruption mask disagrees with hard labels");
  }
  return scene;
}

std::vector<SyntheticScene> generate(const SceneRecipe& recipe, std::size_t n,
                                     std::size_t first_index) {
  recipe.validate();
  std::vector<SyntheticScene> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(generate_scene(recipe, first_index + i));
  return out;
}

SyntheticScene vocabulary_restrict(const SyntheticScene& scene, std::size_t keep_k) {
  const std::size_t l = scene.score.labels;
  if (keep_k == 0 || keep_k > l) {
    throw ConfigError("vocabulary_restrict: keep_k " + std::to_string(keep_k) +
                      " must lie in [1, " + std::to_string(l) + "]");
  }
  if (keep_k == l) return scene;
  SyntheticScene out = scene;
  const std::size_t w = scene.score.width, h = scene.score.height;
  out.score = ScoreTensor::zeros(w, h, keep_k);
  const auto other = static_cast<std::uint32_t>(keep_k - 1);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const auto src = scene.score.pixel(x, y);
      auto dst = out.score.pixel(x, y);
      std::copy_n(src.begin(), keep_k - 1, dst.begin());
      dst[other] = std::accumulate(src.begin() + other, src.end(), 0.0);
      const double total = std::accumulate(dst.begin(), dst.end(), 0.0);
      for (auto& v : dst) v /= total;
    }
  }
  for (auto& lbl : out.clean_labels.labels) lbl = std::min(lbl, other);
  const LabelMap hard = hard_labels(out.score);
  for (std::size_t i = 0; i < w * h; ++i)
    out.corruption_mask[i] = hard.labels[i] != out.clean_labels.labels[i];
  return out;
}

}  // namespace csrrm
