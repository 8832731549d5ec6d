#pragma once

#include <cstddef>

#include "parallel.hpp"

namespace lapseg {

// Row-major matrix products. All variants accumulate into C (callers zero it
// when needed) and parallelize over disjoint output rows with a fixed inner
// summation order, so results are identical for any thread count.

// C[M x N] += A[M x K] * B[K x N]
template <typename T>
void gemm_nn(const T* A, const T* B, T* C, size_t M, size_t K, size_t N) {
  parallel_for(M, [&](size_t m0, size_t m1) {
    for (size_t m = m0; m < m1; ++m) {
      T* crow = C + m * N;
      const T* arow = A + m * K;
      for (size_t k = 0; k < K; ++k) {
        T a = arow[k];
        if (a == T(0)) continue;
        const T* brow = B + k * N;
        for (size_t n = 0; n < N; ++n) crow[n] += a * brow[n];
      }
    }
  });
}

// C[M x J] += A[M x K] * B[J x K]^T   (dot products of rows)
template <typename T>
void gemm_nt(const T* A, const T* B, T* C, size_t M, size_t K, size_t J) {
  parallel_for(M, [&](size_t m0, size_t m1) {
    for (size_t m = m0; m < m1; ++m) {
      const T* arow = A + m * K;
      T* crow = C + m * J;
      for (size_t j = 0; j < J; ++j) {
        const T* brow = B + j * K;
        T acc = 0;
        for (size_t k = 0; k < K; ++k) acc += arow[k] * brow[k];
        crow[j] += acc;
      }
    }
  });
}

// C[K x N] += A[M x K]^T * B[M x N]
template <typename T>
void gemm_tn(const T* A, const T* B, T* C, size_t M, size_t K, size_t N) {
  parallel_for(K, [&](size_t k0, size_t k1) {
    for (size_t m = 0; m < M; ++m) {
      const T* arow = A + m * K;
      const T* brow = B + m * N;
      for (size_t k = k0; k < k1; ++k) {
        T a = arow[k];
        if (a == T(0)) continue;
        T* crow = C + k * N;
        for (size_t n = 0; n < N; ++n) crow[n] += a * brow[n];
      }
    }
  });
}

}  // namespace lapseg
