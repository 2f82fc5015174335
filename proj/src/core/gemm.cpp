// Copyright 2026 The CSRRM Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "csrrm/core/gemm.hpp"

#include <algorithm>
#include <vector>

namespace csrrm::detail {
namespace {

// C[m×n] += A[m×k] · B[k×n], all non-transposed. Inner loop is a contiguous
// axpy so it vectorizes; k is blocked to keep B rows warm.
void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda,
             const double* b, std::size_t ldb, double* c, std::size_t ldc) {
  constexpr std::size_t kBlock = 64;
  for (std::size_t p0 = 0; p0 < k; p0 += kBlock) {
    const std::size_t p1 = std::min(k, p0 + kBlock);
    for (std::size_t i = 0; i < m; ++i) {
      double* crow = c + i * ldc;
      const double* arow = a + i * lda;
      for (std::size_t p = p0; p < p1; ++p) {
        const double aip = arow[p];
        const double* brow = b + p * ldb;
        for (std::size_t j = 0; j < n; ++j) crow[j] += aip * brow[j];
      }
    }
  }
}

std::vector<double> transposed(const double* src, std::size_t rows, std::size_t cols,
                               std::size_t ld) {
  std::vector<double> out(rows * cols);
  constexpr std::size_t kTile = 32;
  for (std::size_t r0 = 0; r0 < rows; r0 += kTile) {
    for (std::size_t c0 = 0; c0 < cols; c0 += kTile) {
      const std::size_t r1 = std::min(rows, r0 + kTile);
      const std::size_t c1 = std::min(cols, c0 + kTile);
      for (std::size_t r = r0; r < r1; ++r)
        for (std::size_t cc = c0; cc < c1; ++cc) out[cc * rows + r] = src[r * ld + cc];
    }
  }
  return out;
}

}  // namespace

void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n, std::size_t k,
          const double* a, std::size_t lda, const double* b, std::size_t ldb, double* c,
          std::size_t ldc, bool accumulate) {
  if (!accumulate) {
    for (std::size_t i = 0; i < m; ++i) std::fill_n(c + i * ldc, n, 0.0);
  }
  if (m == 0 || n == 0 || k == 0) return;

  std::vector<double> a_buf;
  std::vector<double> b_buf;
  if (trans_a) {
    a_buf = transposed(a, k, m, lda);
    a = a_buf.data();
    lda = k;
  }
  if (trans_b) {
    b_buf = transposed(b, n, k, ldb);
    b = b_buf.data();
    ldb = n;
  }
  gemm_nn(m, n, k, a, lda, b, ldb, c, ldc);
}

}  // namespace csrrm::detail
