#pragma once

#include <cstddef>

namespace redpanda::numerics {

// C[M,N] += A[M,K] * B[K,N], all row-major.
//
// i-k-j loop order: the inner j loop runs over contiguous rows of B and C and
// autovectorizes to FMAs. Each C element is produced by exactly one thread
// with k ascending, so results are bitwise identical for any thread count.
template <typename T>
void gemm_acc(const T* __restrict a, const T* __restrict b, T* __restrict c,
              std::size_t m, std::size_t k, std::size_t n) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (m * k * n > 16384)
#endif
    for (long long ii = 0; ii < static_cast<long long>(m); ++ii) {
        const std::size_t i = static_cast<std::size_t>(ii);
        T* __restrict crow = c + i * n;
        const T* __restrict arow = a + i * k;
        for (std::size_t kk = 0; kk < k; ++kk) {
            const T aik = arow[kk];
            if (aik == T(0)) continue;
            const T* __restrict brow = b + kk * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += aik * brow[j];
        }
    }
}

// out[N,M] = in[M,N]
template <typename T>
void transpose(const T* __restrict in, T* __restrict out, std::size_t m, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out[j * m + i] = in[i * n + j];
}

}  // namespace redpanda::numerics
