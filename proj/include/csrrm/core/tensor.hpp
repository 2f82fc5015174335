// Copyright 2026 The CSRRM Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace csrrm {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_str(const Shape& shape);

/// Dense row-major array of doubles with an attached gradient buffer.
///
/// A Tensor is a handle: copies share the same storage, which is what lets a
/// computation graph refer back to its inputs. Use clone() for a deep copy.
/// The gradient buffer is allocated lazily and reads as zeros until touched.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double fill, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false);
  static Tensor scalar(double v);

  bool defined() const noexcept { return static_cast<bool>(node_); }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t dim(std::size_t axis) const { return shape().at(axis); }
  std::size_t size() const;

  std::span<double> value() const;
  std::span<double> grad() const;
  double item() const;

  bool requires_grad() const;
  void set_requires_grad(bool on) const;
  void zero_grad() const;

  /// New leaf holding a copy of the value, detached from any graph.
  Tensor detach() const;
  Tensor clone() const { return detach(); }

  bool same_node(const Tensor& other) const noexcept { return node_ == other.node_; }

 private:
  struct Node {
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad;
    bool requires_grad = false;
  };

  explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}
  Node& node() const;

  std::shared_ptr<Node> node_;
};

/// Ordered record of differentiable operations for one forward pass.
///
/// Ops append a backward closure when any input requires a gradient. The
/// tape is single-writer; use one tape per thread.
class Tape {
 public:
  Tape() = default;
  explicit Tape(bool recording) : recording_(recording) {}

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const noexcept { return recording_; }
  void record(std::string_view op, std::function<void()> backward);

  std::size_t size() const noexcept { return records_.size(); }
  std::string_view op_name(std::size_t i) const { return records_.at(i).op; }
  void clear() noexcept { records_.clear(); }

  /// Seeds d(root) with `seed` (scalar root) and replays the tape in reverse.
  /// Returns the number of operations visited.
  std::size_t backward(const Tensor& root, double seed = 1.0);
  std::size_t backward(const Tensor& root, std::span<const double> seed);

 private:
  struct Record {
    std::string_view op;
    std::function<void()> backward;
  };

  std::size_t replay();

  std::vector<Record> records_;
  bool recording_ = true;
};

}  // namespace csrrm
