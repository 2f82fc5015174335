// Copyright 2026 The CSRRM Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "csrrm/nn/blocks.hpp"

#include <cmath>

#include "csrrm/core/error.hpp"
#include "csrrm/core/ops.hpp"

namespace csrrm {

ChamParams ChamParams::init(std::size_t channels, std::size_t reduction, std::mt19937_64& rng) {
  if (reduction == 0 || channels % reduction != 0 || channels / reduction == 0) {
    throw ConfigError("ChAM: reduction " + std::to_string(reduction) + " must divide " +
                      std::to_string(channels) + " channels");
  }
  const std::size_t hidden = channels / reduction;
  return {kaiming_uniform({hidden, channels}, channels, rng),
          kaiming_uniform({channels, hidden}, hidden, rng), reduction};
}

void ChamParams::validate() const {
  if (!w0.defined() || !w1.defined() || w0.rank() != 2 || w1.rank() != 2)
    throw ConfigError("ChAM: weights must be matrices");
  const std::size_t l0 = w0.dim(1), hidden = w0.dim(0);
  if (w1.dim(0) != l0 || w1.dim(1) != hidden)
    throw ConfigError("ChAM: W1 " + shape_str(w1.shape()) + " does not invert W0 " +
                      shape_str(w0.shape()));
  if (reduction == 0 || l0 % reduction != 0 || l0 / reduction != hidden)
    throw ConfigError("ChAM: hidden width " + std::to_string(hidden) + " is not " +
                      std::to_string(l0) + "/" + std::to_string(reduction));
  for (const Tensor* t : {&w0, &w1})
    for (double v : t->value())
      if (!std::isfinite(v)) throw ConfigError("ChAM: non-finite weight");
}

void ChamParams::register_in(ParamSet& ps, const std::string& prefix) const {
  ps.add(prefix + ".w0", w0);
  ps.add(prefix + ".w1", w1);
}

Tensor cham_map(Tape& tape, const Tensor& f, const ChamParams& p) {
  if (!f.defined() || f.rank() != 3) throw ShapeError("cham_map: feature map must be [C×H×W]");
  if (f.dim(0) != p.channels()) {
    throw ShapeError("cham_map: feature map has " + std::to_string(f.dim(0)) +
                     " channels, attention expects " + std::to_string(p.channels()));
  }
  // Both pooled descriptors go through the same MLP as the two rows of one
  // matrix; summing the rows afterwards gives MLP(avg) + MLP(max).
  const Tensor pooled = ops::stack(tape, ops::global_avg_pool(tape, f), ops::global_max_pool(tape, f));
  const Tensor hidden = ops::relu(tape, ops::linear(tape, pooled, p.w0, Tensor{}));
  const Tensor mixed = ops::linear(tape, hidden, p.w1, Tensor{});
  return ops::sigmoid(tape, ops::sum_rows(tape, mixed));
}

Tensor cham_apply(Tape& tape, const Tensor& f, const Tensor& mc) {
  return ops::add(tape, f, ops::scale_channels(tape, f, mc));
}

ConvParams ConvParams::init(std::size_t in, std::size_t out, std::size_t kernel,
                            std::mt19937_64& rng) {
  return {kaiming_uniform({out, in, kernel, kernel}, in * kernel * kernel, rng),
          Tensor::zeros({out}, true)};
}

void ConvParams::register_in(ParamSet& ps, const std::string& prefix) const {
  ps.add(prefix + ".weight", weight);
  ps.add(prefix + ".bias", bias);
}

BottleneckParams BottleneckParams::init(std::size_t in, std::size_t bottleneck, std::size_t out,
                                        std::size_t stride, std::mt19937_64& rng) {
  if (in == 0 || bottleneck == 0 || out == 0 || stride == 0)
    throw ConfigError("bottleneck: widths and stride must be positive");
  BottleneckParams p;
  p.reduce = ConvParams::init(in, bottleneck, 1, rng);
  p.conv = ConvParams::init(bottleneck, bottleneck, 3, rng);
  p.expand = ConvParams::init(bottleneck, out, 1, rng);
  if (stride != 1 || in != out) p.projection = ConvParams::init(in, out, 1, rng);
  p.stride = stride;
  return p;
}

void BottleneckParams::register_in(ParamSet& ps, const std::string& prefix) const {
  reduce.register_in(ps, prefix + ".reduce");
  conv.register_in(ps, prefix + ".conv");
  expand.register_in(ps, prefix + ".expand");
  if (has_projection()) projection.register_in(ps, prefix + ".projection");
}

Tensor basic_block(Tape& tape, const Tensor& x, const BottleneckParams& p) {
  if (!x.defined() || x.rank() != 3) throw ShapeError("basic_block: input must be [C×H×W]");
  if (x.dim(0) != p.in_channels()) {
    throw ShapeError("basic_block: input has " + std::to_string(x.dim(0)) +
                     " channels, block expects " + std::to_string(p.in_channels()));
  }
  if (!p.has_projection() && (p.stride != 1 || p.in_channels() != p.out_channels()))
    throw ShapeError("basic_block: identity shortcut needs stride 1 and equal widths");

  Tensor h = ops::relu(tape, ops::conv2d(tape, x, p.reduce.weight, p.reduce.bias, {1, 0}));
  h = ops::relu(tape, ops::conv2d(tape, h, p.conv.weight, p.conv.bias, {p.stride, 1}));
  h = ops::conv2d(tape, h, p.expand.weight, p.expand.bias, {1, 0});
  const Tensor shortcut =
      p.has_projection()
          ? ops::conv2d(tape, x, p.projection.weight, p.projection.bias, {p.stride, 0})
          : x;
  if (shortcut.shape() != h.shape()) {
    throw ShapeError("basic_block: residual " + shape_str(h.shape()) + " and shortcut " +
                     shape_str(shortcut.shape()) + " disagree");
  }
  return ops::relu(tape, ops::add(tape, h, shortcut));
}

}  // namespace csrrm
