// Copyright 2026 The CSRRM Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>

#include "csrrm/core/tensor.hpp"

/// Differentiable primitives. Every op validates shapes (throwing ShapeError),
/// computes its output eagerly and, when an input requires a gradient,
/// records a backward closure on the tape.
namespace csrrm::ops {

struct ConvGeometry {
  std::size_t stride = 1;
  std::size_t padding = 0;
};

/// Output extent of a strided window sweep, or 0 when the window does not fit.
std::size_t conv_out_extent(std::size_t in, std::size_t kernel, std::size_t stride,
                            std::size_t padding);

Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b);

/// x·Wᵀ + b for x of shape [in] or [n×in], W of shape [out×in], b of shape
/// [out] (b may be undefined).
Tensor linear(Tape& tape, const Tensor& x, const Tensor& w, const Tensor& b);

/// Cross-correlation of x[C_in×H×W] with k[C_out×C_in×kh×kw], plus an
/// optional per-output-channel bias.
Tensor conv2d(Tape& tape, const Tensor& x, const Tensor& k, const Tensor& bias,
              ConvGeometry geom);

// Elementwise. `b` may be a single-element tensor, broadcast over `a`.
Tensor add(Tape& tape, const Tensor& a, const Tensor& b);
Tensor hadamard(Tape& tape, const Tensor& a, const Tensor& b);
Tensor scale(Tape& tape, const Tensor& a, double s);
Tensor relu(Tape& tape, const Tensor& x);
Tensor gelu(Tape& tape, const Tensor& x);
Tensor sigmoid(Tape& tape, const Tensor& x);
Tensor softmax(Tape& tape, const Tensor& x, std::size_t axis);

/// [C×H×W] → [C]. Max routes its gradient to the first maximal cell.
Tensor global_avg_pool(Tape& tape, const Tensor& x);
Tensor global_max_pool(Tape& tape, const Tensor& x);

/// Non-overlapping average pooling (kernel = stride = window), truncating
/// trailing rows and columns.
Tensor avg_pool2d(Tape& tape, const Tensor& x, std::size_t window);

/// Inverted dropout: survivors are scaled by 1/(1−rate). Identity when not
/// training or when rate is 0.
Tensor dropout(Tape& tape, const Tensor& x, double rate, bool training, std::uint64_t seed);

/// x[C×H×W] ⊙ s[C] broadcast over space.
Tensor scale_channels(Tape& tape, const Tensor& x, const Tensor& s);

/// Stacks equal-shape tensors along a new leading axis.
Tensor stack(Tape& tape, const Tensor& a, const Tensor& b);
/// Joins two vectors end to end.
Tensor concat(Tape& tape, const Tensor& a, const Tensor& b);
Tensor reshape(Tape& tape, const Tensor& x, Shape shape);

Tensor sum(Tape& tape, const Tensor& x);
/// [n×c] → [c], summing over the leading axis.
Tensor sum_rows(Tape& tape, const Tensor& x);
/// Mean negative log-likelihood of `label` under softmax(logits[n]).
Tensor cross_entropy(Tape& tape, const Tensor& logits, std::size_t label);

}  // namespace csrrm::ops
