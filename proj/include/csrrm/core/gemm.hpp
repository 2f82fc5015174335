// Copyright 2026 The CSRRM Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>

namespace csrrm::detail {

/// C[m×n] (+)= op(A)[m×k] · op(B)[k×n], row-major with leading dimensions.
/// op(A) = Aᵀ when trans_a (A stored k×m), likewise for B (stored n×k).
void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n, std::size_t k,
          const double* a, std::size_t lda, const double* b, std::size_t ldb, double* c,
          std::size_t ldc, bool accumulate);

}  // namespace csrrm::detail
