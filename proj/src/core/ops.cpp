// Copyright 2026 The CSRRM Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "csrrm/core/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>

#include "csrrm/core/error.hpp"
#include "csrrm/core/gemm.hpp"

namespace csrrm::ops {
namespace {

using detail::gemm;

bool needs_grad(const Tensor& a) { return a.defined() && a.requires_grad(); }

Tensor output(Shape shape, bool requires_grad) {
  return Tensor::zeros(std::move(shape), requires_grad);
}

[[noreturn]] void shape_fail(const char* op, const std::string& detail) {
  throw ShapeError(std::string(op) + ": " + detail);
}

void require_rank(const char* op, const Tensor& t, std::size_t rank, const char* what) {
  if (!t.defined()) shape_fail(op, std::string(what) + " is undefined");
  if (t.rank() != rank) {
    shape_fail(op, std::string(what) + " must have rank " + std::to_string(rank) + ", got " +
                       shape_str(t.shape()));
  }
}

// Shared shape check for elementwise binaries: equal shapes, or scalar `b`.
bool check_binary(const char* op, const Tensor& a, const Tensor& b) {
  if (!a.defined() || !b.defined()) shape_fail(op, "undefined operand");
  if (a.shape() == b.shape()) return false;
  if (b.size() == 1) return true;
  shape_fail(op, "operand shapes differ: " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
}

double gelu_value(double x) { return 0.5 * x * (1.0 + std::erf(x * std::numbers::sqrt2 / 2.0)); }

double gelu_slope(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x * std::numbers::sqrt2 / 2.0));
  const double pdf = std::exp(-0.5 * x * x) * std::numbers::inv_sqrtpi / std::numbers::sqrt2;
  return cdf + x * pdf;
}

double sigmoid_value(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// Geometry of one conv call, precomputed once and shared with backward.
struct ConvPlan {
  std::size_t cin, h, w, cout, kh, kw, ho, wo, stride, pad;
  std::size_t patch() const { return cin * kh * kw; }
  bool direct() const { return kh == 1 && kw == 1 && stride == 1 && pad == 0; }
  // Output rows per im2col tile, bounded so the column buffer stays small.
  std::size_t tile_rows() const {
    constexpr std::size_t kMaxColumnBuffer = std::size_t{1} << 22;
    const std::size_t per_row = std::max<std::size_t>(1, patch() * wo);
    return std::clamp<std::size_t>(kMaxColumnBuffer / per_row, 1, ho);
  }
};

void im2col(const ConvPlan& p, const double* x, std::size_t r0, std::size_t r1, double* col) {
  const std::size_t t = (r1 - r0) * p.wo;
  for (std::size_t ci = 0; ci < p.cin; ++ci) {
    for (std::size_t ky = 0; ky < p.kh; ++ky) {
      for (std::size_t kx = 0; kx < p.kw; ++kx) {
        double* dst = col + ((ci * p.kh + ky) * p.kw + kx) * t;
        for (std::size_t oy = r0; oy < r1; ++oy) {
          const auto iy = static_cast<std::ptrdiff_t>(oy * p.stride + ky) -
                          static_cast<std::ptrdiff_t>(p.pad);
          double* drow = dst + (oy - r0) * p.wo;
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(p.h)) {
            std::fill_n(drow, p.wo, 0.0);
            continue;
          }
          const double* srow = x + (ci * p.h + static_cast<std::size_t>(iy)) * p.w;
          for (std::size_t ox = 0; ox < p.wo; ++ox) {
            const auto ix = static_cast<std::ptrdiff_t>(ox * p.stride + kx) -
                            static_cast<std::ptrdiff_t>(p.pad);
            drow[ox] = (ix < 0 || ix >= static_cast<std::ptrdiff_t>(p.w))
                           ? 0.0
                           : srow[static_cast<std::size_t>(ix)];
          }
        }
      }
    }
  }
}

void col2im_add(const ConvPlan& p, const double* col, std::size_t r0, std::size_t r1,
                double* dx) {
  const std::size_t t = (r1 - r0) * p.wo;
  for (std::size_t ci = 0; ci < p.cin; ++ci) {
    for (std::size_t ky = 0; ky < p.kh; ++ky) {
      for (std::size_t kx = 0; kx < p.kw; ++kx) {
        const double* src = col + ((ci * p.kh + ky) * p.kw + kx) * t;
        for (std::size_t oy = r0; oy < r1; ++oy) {
          const auto iy = static_cast<std::ptrdiff_t>(oy * p.stride + ky) -
                          static_cast<std::ptrdiff_t>(p.pad);
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(p.h)) continue;
          double* drow = dx + (ci * p.h + static_cast<std::size_t>(iy)) * p.w;
          const double* srow = src + (oy - r0) * p.wo;
          for (std::size_t ox = 0; ox < p.wo; ++ox) {
            const auto ix = static_cast<std::ptrdiff_t>(ox * p.stride + kx) -
                            static_cast<std::ptrdiff_t>(p.pad);
            if (ix >= 0 && ix < static_cast<std::ptrdiff_t>(p.w))
              drow[static_cast<std::size_t>(ix)] += srow[ox];
          }
        }
      }
    }
  }
}

}  // namespace

std::size_t conv_out_extent(std::size_t in, std::size_t kernel, std::size_t stride,
                            std::size_t padding) {
  if (stride == 0 || in + 2 * padding < kernel) return 0;
  return (in + 2 * padding - kernel) / stride + 1;
}

Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b) {
  require_rank("matmul", a, 2, "lhs");
  require_rank("matmul", b, 2, "rhs");
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k) {
    shape_fail("matmul", "inner dimensions disagree: " + shape_str(a.shape()) + " @ " +
                             shape_str(b.shape()));
  }
  Tensor y = output({m, n}, needs_grad(a) || needs_grad(b));
  gemm(false, false, m, n, k, a.value().data(), k, b.value().data(), n, y.value().data(), n,
       false);
  if (y.requires_grad()) {
    tape.record("matmul", [a, b, y, m, n, k] {
      const double* dy = y.grad().data();
      if (needs_grad(a))
        gemm(false, true, m, k, n, dy, n, b.value().data(), n, a.grad().data(), k, true);
      if (needs_grad(b))
        gemm(true, false, k, n, m, a.value().data(), k, dy, n, b.grad().data(), n, true);
    });
  }
  return y;
}

Tensor linear(Tape& tape, const Tensor& x, const Tensor& w, const Tensor& b) {
  require_rank("linear", w, 2, "weight");
  if (!x.defined() || (x.rank() != 1 && x.rank() != 2))
    shape_fail("linear", "input must be a vector or a matrix");
  const std::size_t out = w.dim(0), in = w.dim(1);
  const std::size_t rows = x.rank() == 1 ? 1 : x.dim(0);
  if (x.shape().back() != in) {
    shape_fail("linear", "input " + shape_str(x.shape()) + " does not match weight " +
                             shape_str(w.shape()));
  }
  if (b.defined() && (b.rank() != 1 || b.dim(0) != out)) {
    shape_fail("linear", "bias " + shape_str(b.shape()) + " does not match weight " +
                             shape_str(w.shape()));
  }
  Shape ys = x.rank() == 1 ? Shape{out} : Shape{rows, out};
  Tensor y = output(std::move(ys), needs_grad(x) || needs_grad(w) || needs_grad(b));
  gemm(false, true, rows, out, in, x.value().data(), in, w.value().data(), in,
       y.value().data(), out, false);
  if (b.defined()) {
    auto yv = y.value();
    auto bv = b.value();
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t o = 0; o < out; ++o) yv[r * out + o] += bv[o];
  }
  if (y.requires_grad()) {
    tape.record("linear", [x, w, b, y, rows, out, in] {
      const double* dy = y.grad().data();
      if (needs_grad(x))
        gemm(false, false, rows, in, out, dy, out, w.value().data(), in, x.grad().data(), in,
             true);
      if (needs_grad(w))
        gemm(true, false, out, in, rows, dy, out, x.value().data(), in, w.grad().data(), in,
             true);
      if (needs_grad(b)) {
        auto db = b.grad();
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t o = 0; o < out; ++o) db[o] += dy[r * out + o];
      }
    });
  }
  return y;
}

Tensor conv2d(Tape& tape, const Tensor& x, const Tensor& k, const Tensor& bias,
              ConvGeometry geom) {
  require_rank("conv2d", x, 3, "input");
  require_rank("conv2d", k, 4, "kernel");
  if (k.dim(1) != x.dim(0)) {
    shape_fail("conv2d", "kernel " + shape_str(k.shape()) + " expects " +
                             std::to_string(k.dim(1)) + " input channels, input is " +
                             shape_str(x.shape()));
  }
  if (bias.defined() && (bias.rank() != 1 || bias.dim(0) != k.dim(0)))
    shape_fail("conv2d", "bias " + shape_str(bias.shape()) + " does not match kernel");
  if (geom.stride == 0) shape_fail("conv2d", "stride must be positive");

  ConvPlan p{x.dim(0), x.dim(1), x.dim(2), k.dim(0), k.dim(2), k.dim(3), 0, 0,
             geom.stride, geom.padding};
  p.ho = conv_out_extent(p.h, p.kh, p.stride, p.pad);
  p.wo = conv_out_extent(p.w, p.kw, p.stride, p.pad);
  if (p.ho == 0 || p.wo == 0) {
    shape_fail("conv2d", "non-positive output size for input " + shape_str(x.shape()) +
                             ", kernel " + shape_str(k.shape()) + ", stride " +
                             std::to_string(p.stride) + ", padding " + std::to_string(p.pad));
  }

  Tensor y = output({p.cout, p.ho, p.wo}, needs_grad(x) || needs_grad(k) || needs_grad(bias));
  const std::size_t plane = p.ho * p.wo;
  const std::size_t patch = p.patch();
  double* yv = y.value().data();
  if (p.direct()) {
    gemm(false, false, p.cout, plane, patch, k.value().data(), patch, x.value().data(), plane,
         yv, plane, false);
  } else {
    const std::size_t rows = p.tile_rows();
    std::vector<double> col(patch * rows * p.wo);
    for (std::size_t r0 = 0; r0 < p.ho; r0 += rows) {
      const std::size_t r1 = std::min(p.ho, r0 + rows);
      const std::size_t t = (r1 - r0) * p.wo;
      im2col(p, x.value().data(), r0, r1, col.data());
      gemm(false, false, p.cout, t, patch, k.value().data(), patch, col.data(), t,
           yv + r0 * p.wo, plane, false);
    }
  }
  if (bias.defined()) {
    auto bv = bias.value();
    for (std::size_t co = 0; co < p.cout; ++co)
      for (std::size_t i = 0; i < plane; ++i) yv[co * plane + i] += bv[co];
  }

  if (y.requires_grad()) {
    tape.record("conv2d", [x, k, bias, y, p] {
      const std::size_t plane = p.ho * p.wo;
      const std::size_t patch = p.patch();
      const double* dy = y.grad().data();
      if (needs_grad(bias)) {
        auto db = bias.grad();
        for (std::size_t co = 0; co < p.cout; ++co)
          for (std::size_t i = 0; i < plane; ++i) db[co] += dy[co * plane + i];
      }
      const bool dx_on = needs_grad(x);
      const bool dk_on = needs_grad(k);
      if (!dx_on && !dk_on) return;
      if (p.direct()) {
        if (dk_on)
          gemm(false, true, p.cout, patch, plane, dy, plane, x.value().data(), plane,
               k.grad().data(), patch, true);
        if (dx_on)
          gemm(true, false, patch, plane, p.cout, k.value().data(), patch, dy, plane,
               x.grad().data(), plane, true);
        return;
      }
      const std::size_t rows = p.tile_rows();
      std::vector<double> col(patch * rows * p.wo);
      std::vector<double> dcol(dx_on ? col.size() : 0);
      for (std::size_t r0 = 0; r0 < p.ho; r0 += rows) {
        const std::size_t r1 = std::min(p.ho, r0 + rows);
        const std::size_t t = (r1 - r0) * p.wo;
        if (dk_on) {
          im2col(p, x.value().data(), r0, r1, col.data());
          gemm(false, true, p.cout, patch, t, dy + r0 * p.wo, plane, col.data(), t,
               k.grad().data(), patch, true);
        }
        if (dx_on) {
          gemm(true, false, patch, t, p.cout, k.value().data(), patch, dy + r0 * p.wo, plane,
               dcol.data(), t, false);
          col2im_add(p, dcol.data(), r0, r1, x.grad().data());
        }
      }
    });
  }
  return y;
}

Tensor add(Tape& tape, const Tensor& a, const Tensor& b) {
  const bool bcast = check_binary("add", a, b);
  Tensor y = output(a.shape(), needs_grad(a) || needs_grad(b));
  auto av = a.value(), bv = b.value(), yv = y.value();
  for (std::size_t i = 0; i < yv.size(); ++i) yv[i] = av[i] + bv[bcast ? 0 : i];
  if (y.requires_grad()) {
    tape.record("add", [a, b, y, bcast] {
      auto dy = y.grad();
      if (needs_grad(a)) {
        auto da = a.grad();
        for (std::size_t i = 0; i < dy.size(); ++i) da[i] += dy[i];
      }
      if (needs_grad(b)) {
        auto db = b.grad();
        for (std::size_t i = 0; i < dy.size(); ++i) db[bcast ? 0 : i] += dy[i];
      }
    });
  }
  return y;
}

Tensor hadamard(Tape& tape, const Tensor& a, const Tensor& b) {
  const bool bcast = check_binary("hadamard", a, b);
  Tensor y = output(a.shape(), needs_grad(a) || needs_grad(b));
  auto av = a.value(), bv = b.value(), yv = y.value();
  for (std::size_t i = 0; i < yv.size(); ++i) yv[i] = av[i] * bv[bcast ? 0 : i];
  if (y.requires_grad()) {
    tape.record("hadamard", [a, b, y, bcast] {
      auto dy = y.grad();
      auto av = a.value(), bv = b.value();
      if (needs_grad(a)) {
        auto da = a.grad();
        for (std::size_t i = 0; i < dy.size(); ++i) da[i] += dy[i] * bv[bcast ? 0 : i];
      }
      if (needs_grad(b)) {
        auto db = b.grad();
        for (std::size_t i = 0; i < dy.size(); ++i) db[bcast ? 0 : i] += dy[i] * av[i];
      }
    });
  }
  return y;
}

Tensor scale(Tape& tape, const Tensor& a, double s) {
  if (!a.defined()) shape_fail("scale", "undefined operand");
  Tensor y = output(a.shape(), needs_grad(a));
  auto av = a.value(), yv = y.value();
  for (std::size_t i = 0; i < yv.size(); ++i) yv[i] = s * av[i];
  if (y.requires_grad()) {
    tape.record("scale", [a, y, s] {
      auto dy = y.grad(), da = a.grad();
      for (std::size_t i = 0; i < dy.size(); ++i) da[i] += s * dy[i];
    });
  }
  return y;
}

namespace {

// Elementwise unary op with derivative expressed through input and output.
template <typename Fwd, typename Slope>
Tensor unary(Tape& tape, const char* name, const Tensor& x, Fwd fwd, Slope slope) {
  if (!x.defined()) shape_fail(name, "undefined operand");
  Tensor y = output(x.shape(), needs_grad(x));
  auto xv = x.value(), yv = y.value();
  for (std::size_t i = 0; i < yv.size(); ++i) yv[i] = fwd(xv[i]);
  if (y.requires_grad()) {
    tape.record(name, [x, y, slope] {
      auto dy = y.grad(), dx = x.grad();
      auto xv = x.value(), yv = y.value();
      for (std::size_t i = 0; i < dy.size(); ++i) dx[i] += dy[i] * slope(xv[i], yv[i]);
    });
  }
  return y;
}

}  // namespace

Tensor relu(Tape& tape, const Tensor& x) {
  return unary(
      tape, "relu", x, [](double v) { return v > 0.0 ? v : 0.0; },
      [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Tensor gelu(Tape& tape, const Tensor& x) {
  return unary(tape, "gelu", x, gelu_value, [](double v, double) { return gelu_slope(v); });
}

Tensor sigmoid(Tape& tape, const Tensor& x) {
  return unary(tape, "sigmoid", x, sigmoid_value,
               [](double, double s) { return s * (1.0 - s); });
}

Tensor softmax(Tape& tape, const Tensor& x, std::size_t axis) {
  if (!x.defined() || axis >= x.rank())
    shape_fail("softmax", "axis " + std::to_string(axis) + " out of range");
  const auto& s = x.shape();
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= s[i];
  for (std::size_t i = axis + 1; i < s.size(); ++i) inner *= s[i];
  const std::size_t n = s[axis];

  Tensor y = output(s, needs_grad(x));
  auto xv = x.value(), yv = y.value();
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t in = 0; in < inner; ++in) {
      const std::size_t base = o * n * inner + in;
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < n; ++j) mx = std::max(mx, xv[base + j * inner]);
      double z = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        yv[base + j * inner] = std::exp(xv[base + j * inner] - mx);
        z += yv[base + j * inner];
      }
      for (std::size_t j = 0; j < n; ++j) yv[base + j * inner] /= z;
    }
  }
  if (y.requires_grad()) {
    tape.record("softmax", [x, y, outer, inner, n] {
      auto dy = y.grad(), dx = x.grad();
      auto yv = y.value();
      for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t in = 0; in < inner; ++in) {
          const std::size_t base = o * n * inner + in;
          double dot = 0.0;
          for (std::size_t j = 0; j < n; ++j) dot += yv[base + j * inner] * dy[base + j * inner];
          for (std::size_t j = 0; j < n; ++j) {
            const std::size_t i = base + j * inner;
            dx[i] += yv[i] * (dy[i] - dot);
          }
        }
      }
    });
  }
  return y;
}

Tensor global_avg_pool(Tape& tape, const Tensor& x) {
  require_rank("global_avg_pool", x, 3, "input");
  const std::size_t c = x.dim(0), plane = x.dim(1) * x.dim(2);
  if (plane == 0) shape_fail("global_avg_pool", "empty spatial extent");
  Tensor y = output({c}, needs_grad(x));
  auto xv = x.value(), yv = y.value();
  for (std::size_t ch = 0; ch < c; ++ch) {
    double acc = 0.0;
    for (std::size_t i = 0; i < plane; ++i) acc += xv[ch * plane + i];
    yv[ch] = acc / static_cast<double>(plane);
  }
  if (y.requires_grad()) {
    tape.record("global_avg_pool", [x, y, c, plane] {
      auto dy = y.grad(), dx = x.grad();
      const double inv = 1.0 / static_cast<double>(plane);
      for (std::size_t ch = 0; ch < c; ++ch)
        for (std::size_t i = 0; i < plane; ++i) dx[ch * plane + i] += dy[ch] * inv;
    });
  }
  return y;
}

Tensor global_max_pool(Tape& tape, const Tensor& x) {
  require_rank("global_max_pool", x, 3, "input");
  const std::size_t c = x.dim(0), plane = x.dim(1) * x.dim(2);
  if (plane == 0) shape_fail("global_max_pool", "empty spatial extent");
  Tensor y = output({c}, needs_grad(x));
  std::vector<std::size_t> argmax(c);
  auto xv = x.value(), yv = y.value();
  for (std::size_t ch = 0; ch < c; ++ch) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < plane; ++i)
      if (xv[ch * plane + i] > xv[ch * plane + best]) best = i;
    argmax[ch] = best;
    yv[ch] = xv[ch * plane + best];
  }
  if (y.requires_grad()) {
    tape.record("global_max_pool", [x, y, plane, argmax = std::move(argmax)] {
      auto dy = y.grad(), dx = x.grad();
      for (std::size_t ch = 0; ch < argmax.size(); ++ch) dx[ch * plane + argmax[ch]] += dy[ch];
    });
  }
  return y;
}

Tensor avg_pool2d(Tape& tape, const Tensor& x, std::size_t window) {
  require_rank("avg_pool2d", x, 3, "input");
  if (window == 0) shape_fail("avg_pool2d", "window must be positive");
  const std::size_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
  const std::size_t oh = h / window, ow = w / window;
  if (oh == 0 || ow == 0) {
    shape_fail("avg_pool2d", "input " + shape_str(x.shape()) + " smaller than window " +
                                 std::to_string(window));
  }
  Tensor y = output({c, oh, ow}, needs_grad(x));
  const double inv = 1.0 / static_cast<double>(window * window);
  auto xv = x.value(), yv = y.value();
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t iy = 0; iy < oh * window; ++iy)
      for (std::size_t ix = 0; ix < ow * window; ++ix)
        yv[(ch * oh + iy / window) * ow + ix / window] += inv * xv[(ch * h + iy) * w + ix];
  if (y.requires_grad()) {
    tape.record("avg_pool2d", [x, y, window, c, h, w, oh, ow, inv] {
      auto dy = y.grad(), dx = x.grad();
      for (std::size_t ch = 0; ch < c; ++ch)
        for (std::size_t iy = 0; iy < oh * window; ++iy)
          for (std::size_t ix = 0; ix < ow * window; ++ix)
            dx[(ch * h + iy) * w + ix] += inv * dy[(ch * oh + iy / window) * ow + ix / window];
    });
  }
  return y;
}

Tensor dropout(Tape& tape, const Tensor& x, double rate, bool training, std::uint64_t seed) {
  if (!x.defined()) shape_fail("dropout", "undefined operand");
  if (!(rate >= 0.0 && rate < 1.0))
    throw ConfigError("dropout: rate must lie in [0, 1), got " + std::to_string(rate));
  if (!training || rate == 0.0) return x;

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double keep_scale = 1.0 / (1.0 - rate);
  std::vector<double> mask(x.size());
  for (auto& m : mask) m = unit(rng) < rate ? 0.0 : keep_scale;

  Tensor y = output(x.shape(), needs_grad(x));
  auto xv = x.value(), yv = y.value();
  for (std::size_t i = 0; i < yv.size(); ++i) yv[i] = xv[i] * mask[i];
  if (y.requires_grad()) {
    tape.record("dropout", [x, y, mask = std::move(mask)] {
      auto dy = y.grad(), dx = x.grad();
      for (std::size_t i = 0; i < dy.size(); ++i) dx[i] += dy[i] * mask[i];
    });
  }
  return y;
}

Tensor scale_channels(Tape& tape, const Tensor& x, const Tensor& s) {
  require_rank("scale_channels", x, 3, "input");
  require_rank("scale_channels", s, 1, "scale");
  if (s.dim(0) != x.dim(0)) {
    shape_fail("scale_channels", "channel counts disagree: " + shape_str(x.shape()) + " vs " +
                                     shape_str(s.shape()));
  }
  const std::size_t c = x.dim(0), plane = x.dim(1) * x.dim(2);
  Tensor y = output(x.shape(), needs_grad(x) || needs_grad(s));
  auto xv = x.value(), sv = s.value(), yv = y.value();
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t i = 0; i < plane; ++i) yv[ch * plane + i] = xv[ch * plane + i] * sv[ch];
  if (y.requires_grad()) {
    tape.record("scale_channels", [x, s, y, c, plane] {
      auto dy = y.grad();
      auto xv = x.value(), sv = s.value();
      if (needs_grad(x)) {
        auto dx = x.grad();
        for (std::size_t ch = 0; ch < c; ++ch)
          for (std::size_t i = 0; i < plane; ++i) dx[ch * plane + i] += dy[ch * plane + i] * sv[ch];
      }
      if (needs_grad(s)) {
        auto ds = s.grad();
        for (std::size_t ch = 0; ch < c; ++ch) {
          double acc = 0.0;
          for (std::size_t i = 0; i < plane; ++i) acc += dy[ch * plane + i] * xv[ch * plane + i];
          ds[ch] += acc;
        }
      }
    });
  }
  return y;
}

Tensor stack(Tape& tape, const Tensor& a, const Tensor& b) {
  if (!a.defined() || !b.defined()) shape_fail("stack", "undefined operand");
  if (a.shape() != b.shape()) {
    shape_fail("stack", "operand shapes differ: " + shape_str(a.shape()) + " vs " +
                            shape_str(b.shape()));
  }
  Shape s{2};
  s.insert(s.end(), a.shape().begin(), a.shape().end());
  Tensor y = output(std::move(s), needs_grad(a) || needs_grad(b));
  const std::size_t n = a.size();
  std::ranges::copy(a.value(), y.value().begin());
  std::ranges::copy(b.value(), y.value().begin() + static_cast<std::ptrdiff_t>(n));
  if (y.requires_grad()) {
    tape.record("stack", [a, b, y, n] {
      auto dy = y.grad();
      if (needs_grad(a)) {
        auto da = a.grad();
        for (std::size_t i = 0; i < n; ++i) da[i] += dy[i];
      }
      if (needs_grad(b)) {
        auto db = b.grad();
        for (std::size_t i = 0; i < n; ++i) db[i] += dy[n + i];
      }
    });
  }
  return y;
}

Tensor concat(Tape& tape, const Tensor& a, const Tensor& b) {
  require_rank("concat", a, 1, "lhs");
  require_rank("concat", b, 1, "rhs");
  const std::size_t na = a.size(), nb = b.size();
  Tensor y = output({na + nb}, needs_grad(a) || needs_grad(b));
  std::ranges::copy(a.value(), y.value().begin());
  std::ranges::copy(b.value(), y.value().begin() + static_cast<std::ptrdiff_t>(na));
  if (y.requires_grad()) {
    tape.record("concat", [a, b, y, na, nb] {
      auto dy = y.grad();
      if (needs_grad(a)) {
        auto da = a.grad();
        for (std::size_t i = 0; i < na; ++i) da[i] += dy[i];
      }
      if (needs_grad(b)) {
        auto db = b.grad();
        for (std::size_t i = 0; i < nb; ++i) db[i] += dy[na + i];
      }
    });
  }
  return y;
}

Tensor reshape(Tape& tape, const Tensor& x, Shape shape) {
  if (!x.defined()) shape_fail("reshape", "undefined operand");
  if (shape_size(shape) != x.size()) {
    shape_fail("reshape", "cannot view " + shape_str(x.shape()) + " as " + shape_str(shape));
  }
  Tensor y = Tensor::from(std::move(shape), std::vector<double>(x.value().begin(), x.value().end()),
                          needs_grad(x));
  if (y.requires_grad()) {
    tape.record("reshape", [x, y] {
      auto dy = y.grad(), dx = x.grad();
      for (std::size_t i = 0; i < dy.size(); ++i) dx[i] += dy[i];
    });
  }
  return y;
}

Tensor sum(Tape& tape, const Tensor& x) {
  if (!x.defined()) shape_fail("sum", "undefined operand");
  Tensor y = output({1}, needs_grad(x));
  double acc = 0.0;
  for (double v : x.value()) acc += v;
  y.value()[0] = acc;
  if (y.requires_grad()) {
    tape.record("sum", [x, y] {
      const double g = y.grad()[0];
      for (auto& d : x.grad()) d += g;
    });
  }
  return y;
}

Tensor sum_rows(Tape& tape, const Tensor& x) {
  require_rank("sum_rows", x, 2, "input");
  const std::size_t rows = x.dim(0), cols = x.dim(1);
  Tensor y = output({cols}, needs_grad(x));
  auto xv = x.value(), yv = y.value();
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) yv[c] += xv[r * cols + c];
  if (y.requires_grad()) {
    tape.record("sum_rows", [x, y, rows, cols] {
      auto dy = y.grad(), dx = x.grad();
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) dx[r * cols + c] += dy[c];
    });
  }
  return y;
}

Tensor cross_entropy(Tape& tape, const Tensor& logits, std::size_t label) {
  require_rank("cross_entropy", logits, 1, "logits");
  const std::size_t n = logits.dim(0);
  if (label >= n) {
    shape_fail("cross_entropy", "label " + std::to_string(label) + " outside " +
                                    std::to_string(n) + " classes");
  }
  auto z = logits.value();
  const double mx = *std::ranges::max_element(z);
  double denom = 0.0;
  for (double v : z) denom += std::exp(v - mx);
  const double lse = mx + std::log(denom);

  Tensor y = output({1}, needs_grad(logits));
  y.value()[0] = lse - z[label];
  if (y.requires_grad()) {
    tape.record("cross_entropy", [logits, y, label, lse] {
      const double g = y.grad()[0];
      auto z = logits.value();
      auto dz = logits.grad();
      for (std::size_t i = 0; i < z.size(); ++i)
        dz[i] += g * (std::exp(z[i] - lse) - (i == label ? 1.0 : 0.0));
    });
  }
  return y;
}

}  // namespace csrrm::ops
