// Copyright 2026 The CSRRM Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "csrrm/core/tensor.hpp"

namespace csrrm {

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

/// Ordered collection of uniquely named learnable tensors.
class ParamSet {
 public:
  /// Registers `t` under `name`; throws ConfigError on a duplicate name.
  const Tensor& add(std::string name, Tensor t);
  void merge(const ParamSet& other);

  const Tensor& get(std::string_view name) const;
  const Tensor* find(std::string_view name) const;
  bool contains(std::string_view name) const { return find(name) != nullptr; }

  std::span<const NamedTensor> entries() const { return entries_; }
  std::vector<std::string> names() const;
  std::size_t scalar_count() const;

  void zero_grad() const;
  void set_requires_grad(bool on) const;

  /// Deep copy of every value, for snapshot comparisons.
  std::vector<std::vector<double>> snapshot() const;

  /// FNV-1a over names, shapes and the raw bytes of every value.
  std::uint64_t checksum() const;

 private:
  std::vector<NamedTensor> entries_;
};

/// Kaiming-uniform over fan-in: U(−b, b) with b = sqrt(6 / fan_in).
Tensor kaiming_uniform(Shape shape, std::size_t fan_in, std::mt19937_64& rng);

}  // namespace csrrm
