#pragma once

// Low-level neural-net ops. Everything here is written from scratch on
// purpose: 3x3 same-padding convolution via im2col + a register-blocked
// GEMM, plus the pool/upsample/concat/activation pieces the net needs.
// All ops are templated on the scalar type; production code uses float,
// the test suite also instantiates double to run finite-difference
// gradient checks on the exact same code path.

#include <algorithm>
#include <cstring>
#include <vector>

#include "scarseg/error.hpp"
#include "scarseg/tensor.hpp"

namespace scarseg {

// ---------------------------------------------------------------------------
// GEMM: C (M x N) = A (M x K) * B (K x N), all row-major.
// accumulate=false zeroes C first, accumulate=true adds into it.
// ---------------------------------------------------------------------------

namespace detail {

// MR x 16 register tile, k innermost. NR fixed at 16 so the accumulator
// block fits the vector register file; callers peel N tails separately.
template <typename T, int MR>
inline void gemm_tile16(const T* a, std::size_t lda, const T* b,
                        std::size_t ldb, T* c, std::size_t ldc, int kn) {
    constexpr int NR = 16;
    T acc[MR][NR] = {};
    for (int k = 0; k < kn; ++k) {
        const T* brow = b + static_cast<std::size_t>(k) * ldb;
        for (int r = 0; r < MR; ++r) {
            const T av = a[static_cast<std::size_t>(r) * lda + k];
            for (int j = 0; j < NR; ++j) acc[r][j] += av * brow[j];
        }
    }
    for (int r = 0; r < MR; ++r) {
        T* crow = c + static_cast<std::size_t>(r) * ldc;
        for (int j = 0; j < NR; ++j) crow[j] += acc[r][j];
    }
}

// Generic tail: any mr x nj block, scalar inner loop.
template <typename T>
inline void gemm_tail(const T* a, std::size_t lda, const T* b, std::size_t ldb,
                      T* c, std::size_t ldc, int mr, int nj, int kn) {
    for (int r = 0; r < mr; ++r) {
        T* crow = c + static_cast<std::size_t>(r) * ldc;
        const T* arow = a + static_cast<std::size_t>(r) * lda;
        for (int k = 0; k < kn; ++k) {
            const T av = arow[k];
            const T* brow = b + static_cast<std::size_t>(k) * ldb;
            for (int j = 0; j < nj; ++j) crow[j] += av * brow[j];
        }
    }
}

}  // namespace detail

template <typename T>
void gemm(int M, int N, int K, const T* A, const T* B, T* C,
          bool accumulate = false) {
    if (!accumulate) std::fill(C, C + static_cast<std::size_t>(M) * N, T(0));
    if (M <= 0 || N <= 0 || K <= 0) return;

    constexpr int MR = 6;
    constexpr int NR = 16;
    constexpr int KB = 512;  // k panel, keeps the B slab hot in L2

    for (int k0 = 0; k0 < K; k0 += KB) {
        const int kn = std::min(KB, K - k0);
        const T* bp = B + static_cast<std::size_t>(k0) * N;
        int j = 0;
        for (; j + NR <= N; j += NR) {
            int i = 0;
            for (; i + MR <= M; i += MR)
                detail::gemm_tile16<T, MR>(A + static_cast<std::size_t>(i) * K + k0,
                                           K, bp + j, N,
                                           C + static_cast<std::size_t>(i) * N + j,
                                           N, kn);
            switch (M - i) {
                case 5: detail::gemm_tile16<T, 5>(A + static_cast<std::size_t>(i) * K + k0, K, bp + j, N, C + static_cast<std::size_t>(i) * N + j, N, kn); break;
                case 4: detail::gemm_tile16<T, 4>(A + static_cast<std::size_t>(i) * K + k0, K, bp + j, N, C + static_cast<std::size_t>(i) * N + j, N, kn); break;
                case 3: detail::gemm_tile16<T, 3>(A + static_cast<std::size_t>(i) * K + k0, K, bp + j, N, C + static_cast<std::size_t>(i) * N + j, N, kn); break;
                case 2: detail::gemm_tile16<T, 2>(A + static_cast<std::size_t>(i) * K + k0, K, bp + j, N, C + static_cast<std::size_t>(i) * N + j, N, kn); break;
                case 1: detail::gemm_tile16<T, 1>(A + static_cast<std::size_t>(i) * K + k0, K, bp + j, N, C + static_cast<std::size_t>(i) * N + j, N, kn); break;
                default: break;
            }
        }
        if (j < N)
            detail::gemm_tail(A + k0, K, bp + j, N, C + j, N, M, N - j, kn);
    }
}

// ---------------------------------------------------------------------------
// im2col / col2im for 3x3 kernels with same (zero) padding, stride 1.
// col is (c_in * 9) x (h * w), row ci*9 + ky*3 + kx.
// ---------------------------------------------------------------------------

template <typename T>
void im2col_3x3(const T* src, int c_in, int h, int w, T* col) {
    const std::size_t hw = static_cast<std::size_t>(h) * w;
    for (int ci = 0; ci < c_in; ++ci) {
        const T* plane = src + static_cast<std::size_t>(ci) * hw;
        for (int ky = 0; ky < 3; ++ky) {
            for (int kx = 0; kx < 3; ++kx) {
                T* row = col + (static_cast<std::size_t>(ci) * 9 + ky * 3 + kx) * hw;
                const int dy = ky - 1, dx = kx - 1;
                for (int y = 0; y < h; ++y) {
                    T* out = row + static_cast<std::size_t>(y) * w;
                    const int sy = y + dy;
                    if (sy < 0 || sy >= h) {
                        std::fill(out, out + w, T(0));
                        continue;
                    }
                    const T* in = plane + static_cast<std::size_t>(sy) * w;
                    const int x0 = std::max(0, -dx);        // first valid out col
                    const int x1 = std::min(w, w - dx);     // one past last
                    if (x0 > 0) std::fill(out, out + x0, T(0));
                    if (x1 > x0)
                        std::memcpy(out + x0, in + x0 + dx,
                                    static_cast<std::size_t>(x1 - x0) * sizeof(T));
                    if (x1 < w) std::fill(out + x1, out + w, T(0));
                }
            }
        }
    }
}

// Scatter-add of a col-format gradient back to image layout.
template <typename T>
void col2im_3x3(const T* col, int c_in, int h, int w, T* dst_accum) {
    const std::size_t hw = static_cast<std::size_t>(h) * w;
    for (int ci = 0; ci < c_in; ++ci) {
        T* plane = dst_accum + static_cast<std::size_t>(ci) * hw;
        for (int ky = 0; ky < 3; ++ky) {
            for (int kx = 0; kx < 3; ++kx) {
                const T* row =
                    col + (static_cast<std::size_t>(ci) * 9 + ky * 3 + kx) * hw;
                const int dy = ky - 1, dx = kx - 1;
                for (int y = 0; y < h; ++y) {
                    const int sy = y + dy;
                    if (sy < 0 || sy >= h) continue;
                    const T* in = row + static_cast<std::size_t>(y) * w;
                    T* out = plane + static_cast<std::size_t>(sy) * w;
                    const int x0 = std::max(0, -dx);
                    const int x1 = std::min(w, w - dx);
                    for (int x = x0; x < x1; ++x) out[x + dx] += in[x];
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// 3x3 same conv, stride 1. Kernel tensor layout is (c_in, c_out, 3, 3),
// bias has c_out entries.
// ---------------------------------------------------------------------------

// Reusable scratch so the hot loop does not allocate per call.
template <typename T>
struct ConvScratch {
    std::vector<T> col;    // (9*c_in) x (h*w)
    std::vector<T> packA;  // repacked kernel matrix
    std::vector<T> packB;  // transposed grad for the weight GEMM
};

template <typename T>
void conv2d_3x3_same_fwd(const Tens4<T>& x, const Tens4<T>& kernel,
                         const std::vector<T>& bias, Tens4<T>& out,
                         ConvScratch<T>& scratch) {
    const int c_in = x.c, c_out = kernel.c;
    if (kernel.n != c_in || kernel.h != 3 || kernel.w != 3)
        throw Error("nn_engine", "conv kernel shape " + kernel.shape_str() +
                                     " does not match input " + x.shape_str());
    if (static_cast<int>(bias.size()) != c_out)
        throw Error("nn_engine", "conv bias size mismatch");
    const int h = x.h, w = x.w;
    const std::size_t hw = static_cast<std::size_t>(h) * w;
    if (out.n != x.n || out.c != c_out || out.h != h || out.w != w)
        out = Tens4<T>(x.n, c_out, h, w);

    scratch.col.resize(static_cast<std::size_t>(9) * c_in * hw);
    // A = kernel as (c_out) x (9*c_in): A[co][ci*9+k] = kernel(ci, co, k)
    scratch.packA.resize(static_cast<std::size_t>(c_out) * 9 * c_in);
    for (int ci = 0; ci < c_in; ++ci)
        for (int co = 0; co < c_out; ++co) {
            const T* src = kernel.plane_ptr(ci, co);
            T* dst = scratch.packA.data() +
                     static_cast<std::size_t>(co) * 9 * c_in + ci * 9;
            std::memcpy(dst, src, 9 * sizeof(T));
        }

    for (int i = 0; i < x.n; ++i) {
        im2col_3x3(x.sample_ptr(i), c_in, h, w, scratch.col.data());
        gemm<T>(c_out, static_cast<int>(hw), 9 * c_in, scratch.packA.data(),
                scratch.col.data(), out.sample_ptr(i), false);
        for (int co = 0; co < c_out; ++co) {
            T* plane = out.plane_ptr(i, co);
            const T b = bias[co];
            for (std::size_t p = 0; p < hw; ++p) plane[p] += b;
        }
    }
}

// Backward pass. grad_kernel / grad_bias are accumulated into (callers zero
// them once per batch), grad_x is overwritten.
template <typename T>
void conv2d_3x3_same_bwd(const Tens4<T>& grad_out, const Tens4<T>& x,
                         const Tens4<T>& kernel, Tens4<T>& grad_x,
                         Tens4<T>& grad_kernel, std::vector<T>& grad_bias,
                         ConvScratch<T>& scratch) {
    const int c_in = x.c, c_out = kernel.c;
    const int h = x.h, w = x.w;
    const std::size_t hw = static_cast<std::size_t>(h) * w;
    if (grad_out.n != x.n || grad_out.c != c_out || grad_out.h != h ||
        grad_out.w != w)
        throw Error("nn_engine", "conv grad_out shape mismatch");
    if (!grad_kernel.same_shape(kernel))
        throw Error("nn_engine", "conv grad_kernel shape mismatch");
    if (static_cast<int>(grad_bias.size()) != c_out)
        throw Error("nn_engine", "conv grad_bias size mismatch");
    if (!grad_x.same_shape(x)) grad_x = Tens4<T>(x.n, c_in, h, w);
    std::fill(grad_x.data.begin(), grad_x.data.end(), T(0));

    scratch.col.resize(static_cast<std::size_t>(9) * c_in * hw);
    scratch.packA.resize(static_cast<std::size_t>(9) * c_in *
                         std::max(c_out, 1));
    scratch.packB.resize(hw * c_out);
    std::vector<T> gcol(static_cast<std::size_t>(9) * c_in * hw);
    std::vector<T> gkmat(static_cast<std::size_t>(9) * c_in * c_out);

    // A = kernel as (9*c_in) x (c_out) for the data gradient
    for (int ci = 0; ci < c_in; ++ci)
        for (int co = 0; co < c_out; ++co) {
            const T* src = kernel.plane_ptr(ci, co);
            for (int k = 0; k < 9; ++k)
                scratch.packA[(static_cast<std::size_t>(ci) * 9 + k) * c_out +
                              co] = src[k];
        }

    for (int i = 0; i < x.n; ++i) {
        const T* go = grad_out.sample_ptr(i);

        // bias: plain reduction per output channel
        for (int co = 0; co < c_out; ++co) {
            const T* plane = go + static_cast<std::size_t>(co) * hw;
            T s = 0;
            for (std::size_t p = 0; p < hw; ++p) s += plane[p];
            grad_bias[co] += s;
        }

        // weights: gkmat (9*c_in x c_out) = col (9*c_in x hw) * goT (hw x c_out)
        im2col_3x3(x.sample_ptr(i), c_in, h, w, scratch.col.data());
        for (int co = 0; co < c_out; ++co) {
            const T* plane = go + static_cast<std::size_t>(co) * hw;
            for (std::size_t p = 0; p < hw; ++p)
                scratch.packB[p * c_out + co] = plane[p];
        }
        gemm<T>(9 * c_in, c_out, static_cast<int>(hw), scratch.col.data(),
                scratch.packB.data(), gkmat.data(), false);
        for (int ci = 0; ci < c_in; ++ci)
            for (int co = 0; co < c_out; ++co) {
                T* dst = grad_kernel.plane_ptr(ci, co);
                for (int k = 0; k < 9; ++k)
                    dst[k] +=
                        gkmat[(static_cast<std::size_t>(ci) * 9 + k) * c_out + co];
            }

        // data: gcol = A (9*c_in x c_out) * grad_out (c_out x hw), then fold
        gemm<T>(9 * c_in, static_cast<int>(hw), c_out, scratch.packA.data(), go,
                gcol.data(), false);
        col2im_3x3(gcol.data(), c_in, h, w, grad_x.sample_ptr(i));
    }
}

// ---------------------------------------------------------------------------
// 1x1 conv (the output head). Kernel layout (c_in, c_out, 1, 1).
// ---------------------------------------------------------------------------

template <typename T>
void conv1x1_fwd(const Tens4<T>& x, const Tens4<T>& kernel,
                    const std::vector<T>& bias, Tens4<T>& out) {
    const int c_in = x.c, c_out = kernel.c;
    if (kernel.n != c_in || kernel.h != 1 || kernel.w != 1)
        throw Error("nn_engine", "1x1 kernel shape mismatch");
    const std::size_t hw = x.plane();
    if (out.n != x.n || out.c != c_out || out.h != x.h || out.w != x.w)
        out = Tens4<T>(x.n, c_out, x.h, x.w);
    for (int i = 0; i < x.n; ++i)
        for (int co = 0; co < c_out; ++co) {
            T* op = out.plane_ptr(i, co);
            std::fill(op, op + hw, bias[co]);
            for (int ci = 0; ci < c_in; ++ci) {
                const T kv = kernel.at(ci, co, 0, 0);
                const T* ip = x.plane_ptr(i, ci);
                for (std::size_t p = 0; p < hw; ++p) op[p] += kv * ip[p];
            }
        }
}

template <typename T>
void conv1x1_bwd(const Tens4<T>& grad_out, const Tens4<T>& x,
                    const Tens4<T>& kernel, Tens4<T>& grad_x,
                    Tens4<T>& grad_kernel, std::vector<T>& grad_bias) {
    const int c_in = x.c, c_out = kernel.c;
    const std::size_t hw = x.plane();
    if (!grad_x.same_shape(x)) grad_x = Tens4<T>(x.n, c_in, x.h, x.w);
    std::fill(grad_x.data.begin(), grad_x.data.end(), T(0));
    for (int i = 0; i < x.n; ++i)
        for (int co = 0; co < c_out; ++co) {
            const T* go = grad_out.plane_ptr(i, co);
            T bsum = 0;
            for (std::size_t p = 0; p < hw; ++p) bsum += go[p];
            grad_bias[co] += bsum;
            for (int ci = 0; ci < c_in; ++ci) {
                const T* ip = x.plane_ptr(i, ci);
                T* gx = grad_x.plane_ptr(i, ci);
                const T kv = kernel.at(ci, co, 0, 0);
                T ksum = 0;
                for (std::size_t p = 0; p < hw; ++p) {
                    ksum += go[p] * ip[p];
                    gx[p] += kv * go[p];
                }
                grad_kernel.at(ci, co, 0, 0) += ksum;
            }
        }
}

// ---------------------------------------------------------------------------
// Activations
// ---------------------------------------------------------------------------

template <typename T>
void relu_fwd(Tens4<T>& x) {
    for (T& v : x.data) v = v > T(0) ? v : T(0);
}

// grad_x in place from saved output (y > 0 iff input was > 0)
template <typename T>
void relu_bwd(Tens4<T>& grad, const Tens4<T>& y) {
    for (std::size_t p = 0; p < grad.data.size(); ++p)
        if (!(y.data[p] > T(0))) grad.data[p] = T(0);
}

template <typename T>
void sigmoid_fwd(const Tens4<T>& x, Tens4<T>& out) {
    if (!out.same_shape(x)) out = Tens4<T>(x.n, x.c, x.h, x.w);
    for (std::size_t p = 0; p < x.data.size(); ++p)
        out.data[p] = T(1) / (T(1) + std::exp(-x.data[p]));
}

// ---------------------------------------------------------------------------
// 2x2 max pool, stride 2 (spatial dims must be even)
// ---------------------------------------------------------------------------

template <typename T>
void maxpool2x2_fwd(const Tens4<T>& x, Tens4<T>& out) {
    if (x.h % 2 != 0 || x.w % 2 != 0)
        throw Error("nn_engine",
                    "maxpool input " + x.shape_str() + " has odd spatial dims");
    const int oh = x.h / 2, ow = x.w / 2;
    if (out.n != x.n || out.c != x.c || out.h != oh || out.w != ow)
        out = Tens4<T>(x.n, x.c, oh, ow);
    for (int i = 0; i < x.n; ++i)
        for (int j = 0; j < x.c; ++j) {
            const T* ip = x.plane_ptr(i, j);
            T* op = out.plane_ptr(i, j);
            for (int y = 0; y < oh; ++y)
                for (int xq = 0; xq < ow; ++xq) {
                    const T* p0 = ip + static_cast<std::size_t>(2 * y) * x.w + 2 * xq;
                    const T* p1 = p0 + x.w;
                    T m = p0[0];
                    if (p0[1] > m) m = p0[1];
                    if (p1[0] > m) m = p1[0];
                    if (p1[1] > m) m = p1[1];
                    op[static_cast<std::size_t>(y) * ow + xq] = m;
                }
        }
}

// Routes each gradient to the first occurrence of the max in scan order,
// so ties are broken deterministically.
template <typename T>
void maxpool2x2_bwd(const Tens4<T>& grad_out, const Tens4<T>& x,
                    Tens4<T>& grad_x) {
    const int oh = x.h / 2, ow = x.w / 2;
    if (!grad_x.same_shape(x)) grad_x = Tens4<T>(x.n, x.c, x.h, x.w);
    std::fill(grad_x.data.begin(), grad_x.data.end(), T(0));
    for (int i = 0; i < x.n; ++i)
        for (int j = 0; j < x.c; ++j) {
            const T* ip = x.plane_ptr(i, j);
            const T* gp = grad_out.plane_ptr(i, j);
            T* gx = grad_x.plane_ptr(i, j);
            for (int y = 0; y < oh; ++y)
                for (int xq = 0; xq < ow; ++xq) {
                    const std::size_t base =
                        static_cast<std::size_t>(2 * y) * x.w + 2 * xq;
                    const std::size_t idx[4] = {base, base + 1, base + x.w,
                                                base + x.w + 1};
                    std::size_t best = idx[0];
                    for (int q = 1; q < 4; ++q)
                        if (ip[idx[q]] > ip[best]) best = idx[q];
                    gx[best] += gp[static_cast<std::size_t>(y) * ow + xq];
                }
        }
}

// ---------------------------------------------------------------------------
// 2x 2 nearest-neighbour upsample
// ---------------------------------------------------------------------------

template <typename T>
void upsample2x2_nearest_fwd(const Tens4<T>& x, Tens4<T>& out) {
    const int oh = x.h * 2, ow = x.w * 2;
    if (out.n != x.n || out.c != x.c || out.h != oh || out.w != ow)
        out = Tens4<T>(x.n, x.c, oh, ow);
    for (int i = 0; i < x.n; ++i)
        for (int j = 0; j < x.c; ++j) {
            const T* ip = x.plane_ptr(i, j);
            T* op = out.plane_ptr(i, j);
            for (int y = 0; y < x.h; ++y) {
                T* r0 = op + static_cast<std::size_t>(2 * y) * ow;
                T* r1 = r0 + ow;
                const T* in = ip + static_cast<std::size_t>(y) * x.w;
                for (int xq = 0; xq < x.w; ++xq) {
                    r0[2 * xq] = in[xq];
                    r0[2 * xq + 1] = in[xq];
                }
                std::memcpy(r1, r0, static_cast<std::size_t>(ow) * sizeof(T));
            }
        }
}

template <typename T>
void upsample2x2_nearest_bwd(const Tens4<T>& grad_out, Tens4<T>& grad_x) {
    const int ih = grad_out.h / 2, iw = grad_out.w / 2;
    if (grad_x.n != grad_out.n || grad_x.c != grad_out.c || grad_x.h != ih ||
        grad_x.w != iw)
        grad_x = Tens4<T>(grad_out.n, grad_out.c, ih, iw);
    for (int i = 0; i < grad_out.n; ++i)
        for (int j = 0; j < grad_out.c; ++j) {
            const T* gp = grad_out.plane_ptr(i, j);
            T* gx = grad_x.plane_ptr(i, j);
            for (int y = 0; y < ih; ++y) {
                const T* r0 = gp + static_cast<std::size_t>(2 * y) * grad_out.w;
                const T* r1 = r0 + grad_out.w;
                T* out = gx + static_cast<std::size_t>(y) * iw;
                for (int xq = 0; xq < iw; ++xq)
                    out[xq] = r0[2 * xq] + r0[2 * xq + 1] + r1[2 * xq] +
                              r1[2 * xq + 1];
            }
        }
}

// ---------------------------------------------------------------------------
// Channel concat (skip connection first, upsampled path second)
// ---------------------------------------------------------------------------

template <typename T>
void concat_channels_fwd(const Tens4<T>& a, const Tens4<T>& b, Tens4<T>& out) {
    if (a.n != b.n || a.h != b.h || a.w != b.w)
        throw Error("nn_engine", "concat shape mismatch: " + a.shape_str() +
                                     " vs " + b.shape_str());
    if (out.n != a.n || out.c != a.c + b.c || out.h != a.h || out.w != a.w)
        out = Tens4<T>(a.n, a.c + b.c, a.h, a.w);
    const std::size_t hw = a.plane();
    for (int i = 0; i < a.n; ++i) {
        std::memcpy(out.plane_ptr(i, 0), a.sample_ptr(i),
                    hw * a.c * sizeof(T));
        std::memcpy(out.plane_ptr(i, a.c), b.sample_ptr(i),
                    hw * b.c * sizeof(T));
    }
}

template <typename T>
void concat_channels_bwd(const Tens4<T>& grad_out, int c_a, Tens4<T>& grad_a,
                         Tens4<T>& grad_b) {
    const int c_b = grad_out.c - c_a;
    if (grad_a.n != grad_out.n || grad_a.c != c_a || grad_a.h != grad_out.h ||
        grad_a.w != grad_out.w)
        grad_a = Tens4<T>(grad_out.n, c_a, grad_out.h, grad_out.w);
    if (grad_b.n != grad_out.n || grad_b.c != c_b || grad_b.h != grad_out.h ||
        grad_b.w != grad_out.w)
        grad_b = Tens4<T>(grad_out.n, c_b, grad_out.h, grad_out.w);
    const std::size_t hw = grad_out.plane();
    for (int i = 0; i < grad_out.n; ++i) {
        std::memcpy(grad_a.sample_ptr(i), grad_out.plane_ptr(i, 0),
                    hw * c_a * sizeof(T));
        std::memcpy(grad_b.sample_ptr(i), grad_out.plane_ptr(i, c_a),
                    hw * c_b * sizeof(T));
    }
}

}  // namespace scarseg
