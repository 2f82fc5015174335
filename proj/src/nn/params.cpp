// Copyright 2026 The CSRRM Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "csrrm/nn/params.hpp"

#include <cmath>
#include <cstring>

#include "csrrm/core/error.hpp"

namespace csrrm {

const Tensor& ParamSet::add(std::string name, Tensor t) {
  if (contains(name)) throw ConfigError("ParamSet: duplicate parameter '" + name + "'");
  if (!t.defined()) throw ConfigError("ParamSet: parameter '" + name + "' is undefined");
  entries_.push_back({std::move(name), std::move(t)});
  return entries_.back().tensor;
}

void ParamSet::merge(const ParamSet& other) {
  for (const auto& e : other.entries_) add(e.name, e.tensor);
}

const Tensor* ParamSet::find(std::string_view name) const {
  for (const auto& e : entries_)
    if (e.name == name) return &e.tensor;
  return nullptr;
}

const Tensor& ParamSet::get(std::string_view name) const {
  if (const Tensor* t = find(name)) return *t;
  throw ConfigError("ParamSet: no parameter named '" + std::string(name) + "'");
}

std::vector<std::string> ParamSet::names() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e.name);
  return out;
}

std::size_t ParamSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.tensor.size();
  return n;
}

void ParamSet::zero_grad() const {
  for (const auto& e : entries_) e.tensor.zero_grad();
}

void ParamSet::set_requires_grad(bool on) const {
  for (const auto& e : entries_) e.tensor.set_requires_grad(on);
}

std::vector<std::vector<double>> ParamSet::snapshot() const {
  std::vector<std::vector<double>> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.emplace_back(e.tensor.value().begin(), e.tensor.value().end());
  return out;
}

namespace {

constexpr std::uint64_t kFnvOffset = 14695981039346656037ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

void fnv_mix(std::uint64_t& h, const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= kFnvPrime;
  }
}

}  // namespace

std::uint64_t ParamSet::checksum() const {
  std::uint64_t h = kFnvOffset;
  for (const auto& e : entries_) {
    fnv_mix(h, e.name.data(), e.name.size());
    for (auto d : e.tensor.shape()) {
      const auto d64 = static_cast<std::uint64_t>(d);
      fnv_mix(h, &d64, sizeof d64);
    }
    const auto v = e.tensor.value();
    fnv_mix(h, v.data(), v.size_bytes());
  }
  return h;
}

Tensor kaiming_uniform(Shape shape, std::size_t fan_in, std::mt19937_64& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  std::vector<double> v(shape_size(shape));
  for (auto& x : v) x = dist(rng);
  return Tensor::from(std::move(shape), std::move(v), true);
}

}  // namespace csrrm
