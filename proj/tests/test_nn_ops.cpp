#include <doctest.h>

#include <cmath>
#include <vector>

#include "scarseg/error.hpp"
#include "scarseg/nn_ops.hpp"
#include "scarseg/rng.hpp"

using namespace scarseg;

namespace {

template <typename T>
Tens4<T> rand_tensor(int n, int c, int h, int w, std::uint64_t seed,
                     double lo = -1.0, double hi = 1.0) {
    Tens4<T> t(n, c, h, w);
    Rng rng(seed);
    for (auto& v : t.data) v = static_cast<T>(rng.uniform(lo, hi));
    return t;
}

// reference GEMM: plain triple loop
template <typename T>
std::vector<T> naive_gemm(int M, int N, int K, const std::vector<T>& A,
                          const std::vector<T>& B) {
    std::vector<T> C(static_cast<std::size_t>(M) * N, T(0));
    for (int i = 0; i < M; ++i)
        for (int k = 0; k < K; ++k) {
            const T a = A[static_cast<std::size_t>(i) * K + k];
            for (int j = 0; j < N; ++j)
                C[static_cast<std::size_t>(i) * N + j] +=
                    a * B[static_cast<std::size_t>(k) * N + j];
        }
    return C;
}

// reference 3x3 same conv: direct 7-loop sum, kernel layout (c_in,c_out,3,3)
template <typename T>
Tens4<T> naive_conv3x3(const Tens4<T>& x, const Tens4<T>& k,
                       const std::vector<T>& bias) {
    Tens4<T> out(x.n, k.c, x.h, x.w);
    for (int i = 0; i < x.n; ++i)
        for (int co = 0; co < k.c; ++co)
            for (int y = 0; y < x.h; ++y)
                for (int xx = 0; xx < x.w; ++xx) {
                    double acc = bias[co];
                    for (int ci = 0; ci < x.c; ++ci)
                        for (int ky = 0; ky < 3; ++ky)
                            for (int kx = 0; kx < 3; ++kx) {
                                const int sy = y + ky - 1, sx = xx + kx - 1;
                                if (sy < 0 || sy >= x.h || sx < 0 ||
                                    sx >= x.w)
                                    continue;
                                acc += static_cast<double>(
                                           x.at(i, ci, sy, sx)) *
                                       k.at(ci, co, ky, kx);
                            }
                    out.at(i, co, y, xx) = static_cast<T>(acc);
                }
    return out;
}

bool rel_ok(double analytic, double numeric, double tol = 1e-3) {
    const double scale = std::max({1.0, std::fabs(analytic),
                                   std::fabs(numeric)});
    return std::fabs(analytic - numeric) <= tol * scale;
}

}  // namespace

TEST_CASE("gemm matches the naive triple loop across tail shapes") {
    Rng seeds(1);
    // covers MR/NR tails, tiny N, and K panels beyond the 512 blocking
    for (auto [M, N, K] : {std::tuple{1, 1, 1}, {6, 16, 9}, {7, 17, 54},
                           {5, 3, 11}, {13, 33, 600}, {2, 16, 513}}) {
        std::vector<double> A(static_cast<std::size_t>(M) * K),
            B(static_cast<std::size_t>(K) * N);
        for (auto& v : A) v = seeds.uniform(-1, 1);
        for (auto& v : B) v = seeds.uniform(-1, 1);
        std::vector<double> C(static_cast<std::size_t>(M) * N, 7.0);
        gemm<double>(M, N, K, A.data(), B.data(), C.data(), false);
        const auto ref = naive_gemm(M, N, K, A, B);
        for (std::size_t i = 0; i < C.size(); ++i)
            CHECK(C[i] == doctest::Approx(ref[i]).epsilon(1e-12));

        // accumulate mode adds on top of what is there
        std::vector<double> C2(C.size(), 1.0);
        gemm<double>(M, N, K, A.data(), B.data(), C2.data(), true);
        for (std::size_t i = 0; i < C.size(); ++i)
            CHECK(C2[i] == doctest::Approx(ref[i] + 1.0).epsilon(1e-12));
    }
}

TEST_CASE("im2col and col2im are adjoint") {
    const auto x = rand_tensor<double>(1, 3, 5, 6, 2);
    const std::size_t cols = static_cast<std::size_t>(9) * 3 * 5 * 6;
    std::vector<double> col(cols);
    im2col_3x3(x.sample_ptr(0), 3, 5, 6, col.data());
    Rng rng(3);
    std::vector<double> w(cols);
    for (auto& v : w) v = rng.uniform(-1, 1);
    double lhs = 0;  // <im2col(x), w>
    for (std::size_t i = 0; i < cols; ++i) lhs += col[i] * w[i];
    Tens4<double> back(1, 3, 5, 6);
    col2im_3x3(w.data(), 3, 5, 6, back.sample_ptr(0));
    double rhs = 0;  // <x, col2im(w)>
    for (std::size_t i = 0; i < x.data.size(); ++i)
        rhs += x.data[i] * back.data[i];
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}

TEST_CASE("conv3x3: centered delta kernel is the identity") {
    const auto x = rand_tensor<float>(2, 3, 5, 5, 4);
    Tens4<float> k(3, 3, 3, 3);  // c_in = c_out = 3
    for (int c = 0; c < 3; ++c) k.at(c, c, 1, 1) = 1.0f;
    std::vector<float> bias = {0.25f, -0.5f, 0.0f};
    Tens4<float> out;
    ConvScratch<float> scratch;
    conv2d_3x3_same_fwd(x, k, bias, out, scratch);
    for (int i = 0; i < 2; ++i)
        for (int c = 0; c < 3; ++c)
            for (int y = 0; y < 5; ++y)
                for (int xx = 0; xx < 5; ++xx)
                    CHECK(out.at(i, c, y, xx) ==
                          doctest::Approx(x.at(i, c, y, xx) + bias[c]));
}

TEST_CASE("conv3x3: all-ones kernel sums the 9-neighborhood") {
    Tens4<float> x(1, 1, 4, 4);
    std::fill(x.data.begin(), x.data.end(), 1.0f);
    Tens4<float> k(1, 1, 3, 3);
    std::fill(k.data.begin(), k.data.end(), 1.0f);
    std::vector<float> bias = {0.0f};
    Tens4<float> out;
    ConvScratch<float> scratch;
    conv2d_3x3_same_fwd(x, k, bias, out, scratch);
    // zero padding: corners see 4 ones, edges 6, interior 9
    CHECK(out.at(0, 0, 0, 0) == 4.0f);
    CHECK(out.at(0, 0, 0, 1) == 6.0f);
    CHECK(out.at(0, 0, 1, 0) == 6.0f);
    CHECK(out.at(0, 0, 1, 1) == 9.0f);
    CHECK(out.at(0, 0, 1, 2) == 9.0f);
    CHECK(out.at(0, 0, 3, 3) == 4.0f);
}

TEST_CASE("conv3x3 forward matches the direct reference") {
    const auto x = rand_tensor<double>(2, 3, 6, 7, 5);
    const auto k = rand_tensor<double>(3, 4, 3, 3, 6);
    std::vector<double> bias(4);
    Rng rng(7);
    for (auto& b : bias) b = rng.uniform(-1, 1);
    Tens4<double> out;
    ConvScratch<double> scratch;
    conv2d_3x3_same_fwd(x, k, bias, out, scratch);
    const auto ref = naive_conv3x3(x, k, bias);
    for (std::size_t i = 0; i < out.data.size(); ++i)
        CHECK(out.data[i] == doctest::Approx(ref.data[i]).epsilon(1e-10));

    Tens4<double> badk(2, 4, 3, 3);
    CHECK_THROWS_AS(conv2d_3x3_same_fwd(x, badk, bias, out, scratch), Error);
}

TEST_CASE("conv3x3 backward matches central finite differences") {
    auto x = rand_tensor<double>(2, 3, 6, 6, 8);
    auto k = rand_tensor<double>(3, 4, 3, 3, 9);
    std::vector<double> bias(4);
    Rng rng(10);
    for (auto& b : bias) b = rng.uniform(-1, 1);
    const auto W = rand_tensor<double>(2, 4, 6, 6, 11);  // loss weights

    auto loss = [&]() {
        Tens4<double> out;
        ConvScratch<double> s;
        conv2d_3x3_same_fwd(x, k, bias, out, s);
        double acc = 0;
        for (std::size_t i = 0; i < out.data.size(); ++i)
            acc += out.data[i] * W.data[i];
        return acc;
    };

    Tens4<double> gx, gk(3, 4, 3, 3);
    std::vector<double> gb(4, 0.0);
    ConvScratch<double> s;
    conv2d_3x3_same_bwd(W, x, k, gx, gk, gb, s);

    const double h = 1e-3;
    auto fd = [&](double& slot) {
        const double keep = slot;
        slot = keep + h;
        const double up = loss();
        slot = keep - h;
        const double dn = loss();
        slot = keep;
        return (up - dn) / (2 * h);
    };
    for (std::size_t i = 0; i < x.data.size(); i += 17)
        CHECK(rel_ok(gx.data[i], fd(x.data[i])));
    for (std::size_t i = 0; i < k.data.size(); i += 5)
        CHECK(rel_ok(gk.data[i], fd(k.data[i])));
    for (auto& b : bias) CHECK(rel_ok(gb[&b - bias.data()], fd(b)));
}

TEST_CASE("conv backward accumulates weight grads, overwrites data grads") {
    const auto x = rand_tensor<double>(1, 2, 4, 4, 12);
    const auto k = rand_tensor<double>(2, 2, 3, 3, 13);
    const auto go = rand_tensor<double>(1, 2, 4, 4, 14);
    Tens4<double> gx, gk(2, 2, 3, 3);
    std::vector<double> gb(2, 0.0);
    ConvScratch<double> s;
    conv2d_3x3_same_bwd(go, x, k, gx, gk, gb, s);
    const auto gk_once = gk.data;
    const auto gb_once = gb;
    const auto gx_once = gx.data;
    conv2d_3x3_same_bwd(go, x, k, gx, gk, gb, s);
    for (std::size_t i = 0; i < gk.data.size(); ++i)
        CHECK(gk.data[i] == doctest::Approx(2 * gk_once[i]));
    CHECK(gb[0] == doctest::Approx(2 * gb_once[0]));
    CHECK(gx.data == gx_once);  // overwritten, not doubled
}

TEST_CASE("conv1x1 forward/backward") {
    const auto x = rand_tensor<double>(2, 3, 4, 5, 15);
    const auto k = rand_tensor<double>(3, 2, 1, 1, 16);
    std::vector<double> bias = {0.1, -0.2};
    Tens4<double> out;
    conv1x1_fwd(x, k, bias, out);
    for (int i = 0; i < 2; ++i)
        for (int co = 0; co < 2; ++co)
            for (int y = 0; y < 4; ++y)
                for (int xx = 0; xx < 5; ++xx) {
                    double acc = bias[co];
                    for (int ci = 0; ci < 3; ++ci)
                        acc += x.at(i, ci, y, xx) * k.at(ci, co, 0, 0);
                    CHECK(out.at(i, co, y, xx) == doctest::Approx(acc));
                }

    auto xm = x;
    auto km = k;
    auto bm = bias;
    const auto W = rand_tensor<double>(2, 2, 4, 5, 17);
    auto loss = [&]() {
        Tens4<double> o;
        conv1x1_fwd(xm, km, bm, o);
        double acc = 0;
        for (std::size_t i = 0; i < o.data.size(); ++i)
            acc += o.data[i] * W.data[i];
        return acc;
    };
    Tens4<double> gx, gk(3, 2, 1, 1);
    std::vector<double> gb(2, 0.0);
    conv1x1_bwd(W, xm, km, gx, gk, gb);
    const double h = 1e-3;
    auto fd = [&](double& slot) {
        const double keep = slot;
        slot = keep + h;
        const double up = loss();
        slot = keep - h;
        const double dn = loss();
        slot = keep;
        return (up - dn) / (2 * h);
    };
    for (std::size_t i = 0; i < xm.data.size(); i += 7)
        CHECK(rel_ok(gx.data[i], fd(xm.data[i])));
    for (std::size_t i = 0; i < km.data.size(); ++i)
        CHECK(rel_ok(gk.data[i], fd(km.data[i])));
    CHECK(rel_ok(gb[0], fd(bm[0])));
    CHECK(rel_ok(gb[1], fd(bm[1])));
}

TEST_CASE("relu forward and backward") {
    Tens4<float> x(1, 1, 1, 4);
    x.data = {-2.0f, -0.5f, 0.5f, 3.0f};
    auto y = x;
    relu_fwd(y);
    CHECK(y.data == std::vector<float>{0.0f, 0.0f, 0.5f, 3.0f});
    Tens4<float> g(1, 1, 1, 4);
    g.data = {1, 1, 1, 1};
    relu_bwd(g, y);
    CHECK(g.data == std::vector<float>{0.0f, 0.0f, 1.0f, 1.0f});
}

TEST_CASE("maxpool2x2: hand value and argmax routing") {
    Tens4<float> x(1, 1, 2, 2);
    x.data = {1, 2, 3, 4};
    Tens4<float> out;
    maxpool2x2_fwd(x, out);
    REQUIRE(out.data.size() == 1);
    CHECK(out.data[0] == 4.0f);

    Tens4<float> go(1, 1, 1, 1);
    go.data = {5.0f};
    Tens4<float> gx;
    maxpool2x2_bwd(go, x, gx);
    CHECK(gx.data == std::vector<float>{0, 0, 0, 5.0f});

    // ties route to the first occurrence in scan order
    Tens4<float> flat(1, 1, 2, 2);
    flat.data = {7, 7, 7, 7};
    maxpool2x2_bwd(go, flat, gx);
    CHECK(gx.data == std::vector<float>{5.0f, 0, 0, 0});

    Tens4<float> odd(1, 1, 3, 4);
    CHECK_THROWS_AS(maxpool2x2_fwd(odd, out), Error);
}

TEST_CASE("upsample2x2: replication forward, summed adjoint backward") {
    Tens4<float> x(1, 1, 1, 1);
    x.data = {2.5f};
    Tens4<float> out;
    upsample2x2_nearest_fwd(x, out);
    CHECK(out.data == std::vector<float>{2.5f, 2.5f, 2.5f, 2.5f});

    Tens4<float> go(1, 1, 2, 2);
    go.data = {1, 2, 3, 4};
    Tens4<float> gx;
    upsample2x2_nearest_bwd(go, gx);
    REQUIRE(gx.data.size() == 1);
    CHECK(gx.data[0] == 10.0f);

    // adjoint identity on random tensors: <up(x), y> == <x, up_bwd(y)>
    const auto xr = rand_tensor<double>(2, 3, 4, 5, 20);
    const auto yr = rand_tensor<double>(2, 3, 8, 10, 21);
    Tens4<double> up;
    upsample2x2_nearest_fwd(xr, up);
    double lhs = 0;
    for (std::size_t i = 0; i < up.data.size(); ++i)
        lhs += up.data[i] * yr.data[i];
    Tens4<double> down;
    upsample2x2_nearest_bwd(yr, down);
    double rhs = 0;
    for (std::size_t i = 0; i < xr.data.size(); ++i)
        rhs += xr.data[i] * down.data[i];
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}

TEST_CASE("concat stacks skip first; backward splits exactly") {
    const auto a = rand_tensor<float>(2, 3, 4, 4, 22);
    const auto b = rand_tensor<float>(2, 5, 4, 4, 23);
    Tens4<float> cat;
    concat_channels_fwd(a, b, cat);
    REQUIRE(cat.c == 8);
    for (int i = 0; i < 2; ++i) {
        for (int c = 0; c < 3; ++c)
            for (int p = 0; p < 16; ++p)
                CHECK(cat.plane_ptr(i, c)[p] == a.plane_ptr(i, c)[p]);
        for (int c = 0; c < 5; ++c)
            for (int p = 0; p < 16; ++p)
                CHECK(cat.plane_ptr(i, 3 + c)[p] == b.plane_ptr(i, c)[p]);
    }
    Tens4<float> ga, gb;
    concat_channels_bwd(cat, 3, ga, gb);
    CHECK(ga.data == a.data);
    CHECK(gb.data == b.data);

    Tens4<float> wrong(2, 3, 5, 4);
    Tens4<float> out;
    CHECK_THROWS_AS(concat_channels_fwd(a, wrong, out), Error);
}

TEST_CASE("sigmoid values") {
    Tens4<float> x(1, 1, 1, 3);
    x.data = {0.0f, 2.0f, -2.0f};
    Tens4<float> out;
    sigmoid_fwd(x, out);
    CHECK(out.data[0] == doctest::Approx(0.5));
    CHECK(out.data[1] == doctest::Approx(1.0 / (1.0 + std::exp(-2.0))));
    CHECK(out.data[2] == doctest::Approx(1.0 / (1.0 + std::exp(2.0))));
}

TEST_CASE("tensors reject non-finite values") {
    Tens4<float> x(1, 1, 1, 2);
    x.data = {1.0f, std::numeric_limits<float>::infinity()};
    CHECK_FALSE(all_finite(x));
    CHECK_THROWS_AS(require_finite(x, "unit"), Error);
}
