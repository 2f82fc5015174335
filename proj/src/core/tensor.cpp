// Copyright 2026 The CSRRM Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "csrrm/core/tensor.hpp"

#include <algorithm>
#include <ranges>

#include "csrrm/core/error.hpp"

namespace csrrm {

std::size_t shape_size(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(Shape shape, double fill, bool requires_grad) {
  auto node = std::make_shared<Node>();
  node->value.assign(shape_size(shape), fill);
  node->shape = std::move(shape);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::from(Shape shape, std::vector<double> values, bool requires_grad) {
  if (values.size() != shape_size(shape)) {
    throw ShapeError("Tensor::from: " + std::to_string(values.size()) +
                     " values for shape " + shape_str(shape));
  }
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::scalar(double v) { return from({1}, {v}); }

Tensor::Node& Tensor::node() const {
  if (!node_) throw std::logic_error("use of an undefined Tensor");
  return *node_;
}

const Shape& Tensor::shape() const { return node().shape; }
std::size_t Tensor::size() const { return node().value.size(); }
std::span<double> Tensor::value() const { return node().value; }

std::span<double> Tensor::grad() const {
  auto& n = node();
  if (n.grad.size() != n.value.size()) n.grad.assign(n.value.size(), 0.0);
  return n.grad;
}

double Tensor::item() const {
  if (size() != 1) throw ShapeError("item() on tensor of shape " + shape_str(shape()));
  return node().value[0];
}

bool Tensor::requires_grad() const { return node().requires_grad; }
void Tensor::set_requires_grad(bool on) const { node().requires_grad = on; }

void Tensor::zero_grad() const {
  auto& n = node();
  std::ranges::fill(n.grad, 0.0);
}

Tensor Tensor::detach() const {
  return from(shape(), std::vector<double>(node().value), false);
}

void Tape::record(std::string_view op, std::function<void()> backward) {
  if (!recording_) return;
  records_.push_back({op, std::move(backward)});
}

std::size_t Tape::backward(const Tensor& root, double seed) {
  if (root.size() != 1) {
    throw ShapeError("Tape::backward: scalar seed for non-scalar root " +
                     shape_str(root.shape()));
  }
  root.grad()[0] += seed;
  return replay();
}

std::size_t Tape::backward(const Tensor& root, std::span<const double> seed) {
  if (seed.size() != root.size()) {
    throw ShapeError("Tape::backward: seed of " + std::to_string(seed.size()) +
                     " values for root " + shape_str(root.shape()));
  }
  auto g = root.grad();
  for (std::size_t i = 0; i < g.size(); ++i) g[i] += seed[i];
  return replay();
}

std::size_t Tape::replay() {
  std::size_t visited = 0;
  for (auto& rec : records_ | std::views::reverse) {
    rec.backward();
    ++visited;
  }
  return visited;
}

}  // namespace csrrm
