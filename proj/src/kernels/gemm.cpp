#include <algorithm>
#include <cstring>
#include <vector>

#include "parallel.hpp"
#include "scnet/kernels/kernels.hpp"

namespace scnet::kernels {
namespace {

// Register tile: kMR rows of C by two SIMD vectors of columns. The packed
// K slice (kKC deep) of both operands stays in L1/L2.
template <typename T>
struct Tile {
    typedef T Vec __attribute__((vector_size(64)));
    static constexpr int kLanes = static_cast<int>(64 / sizeof(T));
    static constexpr int kMR = 6;
    static constexpr int kNR = 2 * kLanes;
};
constexpr int kKC = 256;

template <typename T>
void pack_a(MatrixRef<T> a, int m, int k0, int kc, T* out) {
    constexpr int kMR = Tile<T>::kMR;
    const int panels = (m + kMR - 1) / kMR;
    SCNET_PARALLEL_FOR
    for (int p = 0; p < panels; ++p) {
        T* dst = out + static_cast<std::ptrdiff_t>(p) * kc * kMR;
        for (int kk = 0; kk < kc; ++kk) {
            for (int r = 0; r < kMR; ++r) {
                const int row = p * kMR + r;
                dst[kk * kMR + r] = row < m ? a.at(row, k0 + kk) : T{};
            }
        }
    }
}

template <typename T>
void pack_b(MatrixRef<T> b, int n0, int n, int k0, int kc, T* out) {
    constexpr int kNR = Tile<T>::kNR;
    const int cols = std::min(kNR, n - n0);
    for (int kk = 0; kk < kc; ++kk) {
        T* dst = out + kk * kNR;
        int j = 0;
        if (b.col_stride == 1) {
            const T* src = b.data + (k0 + kk) * b.row_stride + n0;
            for (; j < cols; ++j) dst[j] = src[j];
        } else {
            for (; j < cols; ++j) dst[j] = b.at(k0 + kk, n0 + j);
        }
        for (; j < kNR; ++j) dst[j] = T{};
    }
}

template <typename T>
void micro_kernel(int kc, const T* __restrict ap, const T* __restrict bp, T* c,
                  std::ptrdiff_t ldc, int rows, int cols) {
    using Vec = typename Tile<T>::Vec;
    constexpr int kMR = Tile<T>::kMR;
    constexpr int kNR = Tile<T>::kNR;
    constexpr int kLanes = Tile<T>::kLanes;
    Vec acc0[kMR] = {};
    Vec acc1[kMR] = {};
    for (int kk = 0; kk < kc; ++kk) {
        Vec b0;
        Vec b1;
        std::memcpy(&b0, bp + kk * kNR, sizeof(Vec));
        std::memcpy(&b1, bp + kk * kNR + kLanes, sizeof(Vec));
        const T* a = ap + kk * kMR;
        for (int r = 0; r < kMR; ++r) {
            acc0[r] += a[r] * b0;
            acc1[r] += a[r] * b1;
        }
    }
    T tile[kMR][kNR];
    for (int r = 0; r < kMR; ++r) {
        std::memcpy(&tile[r][0], &acc0[r], sizeof(Vec));
        std::memcpy(&tile[r][kLanes], &acc1[r], sizeof(Vec));
    }
    for (int r = 0; r < rows; ++r) {
        T* crow = c + r * ldc;
        for (int j = 0; j < cols; ++j) crow[j] += tile[r][j];
    }
}

}  // namespace

template <typename T>
void gemm(int m, int n, int k, MatrixRef<T> a, MatrixRef<T> b, T* c, std::ptrdiff_t ldc,
          bool accumulate) {
    if (m <= 0 || n <= 0) return;
    if (!accumulate) {
        SCNET_PARALLEL_FOR
        for (int i = 0; i < m; ++i) std::fill_n(c + i * ldc, n, T{});
    }
    if (k <= 0) return;

    constexpr int kMR = Tile<T>::kMR;
    constexpr int kNR = Tile<T>::kNR;
    const int m_panels = (m + kMR - 1) / kMR;
    const int n_panels = (n + kNR - 1) / kNR;
    std::vector<T> a_pack(static_cast<std::size_t>(m_panels) * kMR * kKC);

    for (int k0 = 0; k0 < k; k0 += kKC) {
        const int kc = std::min(kKC, k - k0);
        pack_a(a, m, k0, kc, a_pack.data());
        SCNET_PARALLEL
        {
            std::vector<T> b_pack(static_cast<std::size_t>(kKC) * kNR);
            SCNET_FOR
            for (int jp = 0; jp < n_panels; ++jp) {
                const int n0 = jp * kNR;
                const int cols = std::min(kNR, n - n0);
                pack_b(b, n0, n, k0, kc, b_pack.data());
                for (int ip = 0; ip < m_panels; ++ip) {
                    const int m0 = ip * kMR;
                    micro_kernel(kc, a_pack.data() + static_cast<std::ptrdiff_t>(ip) * kc * kMR,
                                 b_pack.data(), c + m0 * ldc + n0, ldc, std::min(kMR, m - m0),
                                 cols);
                }
            }
        }
    }
}

template void gemm<float>(int, int, int, MatrixRef<float>, MatrixRef<float>, float*,
                          std::ptrdiff_t, bool);
template void gemm<double>(int, int, int, MatrixRef<double>, MatrixRef<double>, double*,
                           std::ptrdiff_t, bool);

}  // namespace scnet::kernels
