#pragma once

#include <cstddef>

namespace eegfuse {

// Small row-major matrix kernels. `accumulate` adds into c instead of
// overwriting; loops are ordered so the inner dimension is contiguous and
// auto-vectorizes.

// c [m x n] (+)= a [m x k] * b [k x n]
template <typename T>
void gemm_nn(size_t m, size_t n, size_t k, const T* a, const T* b, T* c,
             bool accumulate) {
  if (!accumulate)
    for (size_t i = 0; i < m * n; ++i) c[i] = T(0);
  for (size_t i = 0; i < m; ++i) {
    const T* ai = a + i * k;
    T* ci = c + i * n;
    for (size_t p = 0; p < k; ++p) {
      const T aip = ai[p];
      const T* bp = b + p * n;
      for (size_t j = 0; j < n; ++j) ci[j] += aip * bp[j];
    }
  }
}

// c [m x n] (+)= a^T * b where a is [k x m], b is [k x n]
template <typename T>
void gemm_tn(size_t m, size_t n, size_t k, const T* a, const T* b, T* c,
             bool accumulate) {
  if (!accumulate)
    for (size_t i = 0; i < m * n; ++i) c[i] = T(0);
  for (size_t p = 0; p < k; ++p) {
    const T* ap = a + p * m;
    const T* bp = b + p * n;
    for (size_t i = 0; i < m; ++i) {
      const T api = ap[i];
      T* ci = c + i * n;
      for (size_t j = 0; j < n; ++j) ci[j] += api * bp[j];
    }
  }
}

// c [m x n] (+)= a * b^T where a is [m x k], b is [n x k]
template <typename T>
void gemm_nt(size_t m, size_t n, size_t k, const T* a, const T* b, T* c,
             bool accumulate) {
  for (size_t i = 0; i < m; ++i) {
    const T* ai = a + i * k;
    T* ci = c + i * n;
    for (size_t j = 0; j < n; ++j) {
      const T* bj = b + j * k;
      T acc = accumulate ? ci[j] : T(0);
      for (size_t p = 0; p < k; ++p) acc += ai[p] * bj[p];
      ci[j] = acc;
    }
  }
}

}  // namespace eegfuse
