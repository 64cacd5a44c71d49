#pragma once

#include <algorithm>
#include <cstddef>

namespace cscn::detail {

// Sixteen independent accumulator lanes with a fixed reduction order: fast to
// vectorize, reproducible run to run. Buffers must not alias.
template <typename T>
inline T dot(const T* __restrict a, const T* __restrict b, std::size_t n) {
  constexpr std::size_t L = 16;
  T acc[L] = {};
  std::size_t k = 0;
  for (; k + L <= n; k += L)
    for (std::size_t j = 0; j < L; ++j) acc[j] += a[k + j] * b[k + j];
  T tail{0};
  for (; k < n; ++k) tail += a[k] * b[k];
  T lanes{0};
  for (std::size_t j = 0; j < L; ++j) lanes += acc[j];
  return lanes + tail;
}

// c[MxN] = a[MxK] * b[KxN], all row-major. accumulate=true adds into c.
template <typename T>
void gemm(std::size_t M, std::size_t K, std::size_t N, const T* __restrict a,
          const T* __restrict b, T* __restrict c, bool accumulate = false) {
  for (std::size_t i = 0; i < M; ++i) {
    T* __restrict crow = c + i * N;
    if (!accumulate) std::fill(crow, crow + N, T{0});
    const T* arow = a + i * K;
    for (std::size_t k = 0; k < K; ++k) {
      const T av = arow[k];
      const T* __restrict brow = b + k * N;
      for (std::size_t j = 0; j < N; ++j) crow[j] += av * brow[j];
    }
  }
}

// c[MxN] = a^T * b with a stored KxM, b stored KxN.
template <typename T>
void gemm_atb(std::size_t M, std::size_t K, std::size_t N, const T* __restrict a,
              const T* __restrict b, T* __restrict c, bool accumulate = false) {
  if (!accumulate) std::fill(c, c + M * N, T{0});
  for (std::size_t k = 0; k < K; ++k) {
    const T* arow = a + k * M;
    const T* __restrict brow = b + k * N;
    for (std::size_t i = 0; i < M; ++i) {
      const T av = arow[i];
      T* __restrict crow = c + i * N;
      for (std::size_t j = 0; j < N; ++j) crow[j] += av * brow[j];
    }
  }
}

// c[MxN] = a * b^T with a stored MxK, b stored NxK.
template <typename T>
void gemm_abt(std::size_t M, std::size_t K, std::size_t N, const T* __restrict a,
              const T* __restrict b, T* __restrict c, bool accumulate = false) {
  for (std::size_t i = 0; i < M; ++i) {
    const T* arow = a + i * K;
    T* crow = c + i * N;
    for (std::size_t j = 0; j < N; ++j) {
      const T d = dot(arow, b + j * K, K);
      crow[j] = accumulate ? crow[j] + d : d;
    }
  }
}

// Patch-matrix expansion for a CxHxW input with an odd k and (k-1)/2 zero
// padding: col is (C*k*k) x (H*W), column index = spatial position.
template <typename T>
void im2col(const T* __restrict in, std::size_t C, std::size_t H, std::size_t W,
            std::size_t k, T* __restrict col) {
  const std::ptrdiff_t pad = static_cast<std::ptrdiff_t>((k - 1) / 2);
  const std::ptrdiff_t sH = static_cast<std::ptrdiff_t>(H);
  const std::ptrdiff_t sW = static_cast<std::ptrdiff_t>(W);
  T* dst = col;
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t u = 0; u < k; ++u) {
      for (std::size_t v = 0; v < k; ++v) {
        const std::ptrdiff_t dv = static_cast<std::ptrdiff_t>(v) - pad;
        const std::ptrdiff_t j0 = std::max<std::ptrdiff_t>(0, -dv);
        const std::ptrdiff_t j1 = std::min<std::ptrdiff_t>(sW, sW - dv);
        for (std::size_t i = 0; i < H; ++i, dst += W) {
          const std::ptrdiff_t si = static_cast<std::ptrdiff_t>(i + u) - pad;
          if (si < 0 || si >= sH || j0 >= j1) {
            std::fill(dst, dst + W, T{0});
            continue;
          }
          const T* src = in + (c * H + static_cast<std::size_t>(si)) * W + (j0 + dv);
          if (j0 > 0) std::fill(dst, dst + j0, T{0});
          std::copy(src, src + (j1 - j0), dst + j0);
          if (j1 < sW) std::fill(dst + j1, dst + W, T{0});
        }
      }
    }
  }
}

// Adjoint of im2col: scatter-adds a (C*k*k) x (H*W) patch matrix back onto a
// CxHxW grid. `grad` must be zero-initialized by the caller.
template <typename T>
void col2im_add(const T* __restrict col, std::size_t C, std::size_t H, std::size_t W,
                std::size_t k, T* __restrict grad) {
  const std::ptrdiff_t pad = static_cast<std::ptrdiff_t>((k - 1) / 2);
  const std::ptrdiff_t sH = static_cast<std::ptrdiff_t>(H);
  const std::ptrdiff_t sW = static_cast<std::ptrdiff_t>(W);
  const T* src = col;
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t u = 0; u < k; ++u) {
      for (std::size_t v = 0; v < k; ++v) {
        const std::ptrdiff_t dv = static_cast<std::ptrdiff_t>(v) - pad;
        const std::ptrdiff_t j0 = std::max<std::ptrdiff_t>(0, -dv);
        const std::ptrdiff_t j1 = std::min<std::ptrdiff_t>(sW, sW - dv);
        for (std::size_t i = 0; i < H; ++i, src += W) {
          const std::ptrdiff_t si = static_cast<std::ptrdiff_t>(i + u) - pad;
          if (si < 0 || si >= sH || j0 >= j1) continue;
          T* __restrict dst = grad + (c * H + static_cast<std::size_t>(si)) * W + (j0 + dv);
          const T* __restrict s = src + j0;
          for (std::ptrdiff_t j = 0; j < j1 - j0; ++j) dst[j] += s[j];
        }
      }
    }
  }
}

}  // namespace cscn::detail
