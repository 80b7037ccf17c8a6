#pragma once

// U-net graph: encoder/decoder with two 3x3 ReLU convs per block, 2x2 max
// pooling down, 2x2 nearest upsampling + skip concat up, 1x1 sigmoid head.
// Forward keeps a trace of activations; backward consumes it and produces
// exact gradients for every kernel and bias.

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "scarseg/error.hpp"
#include "scarseg/nn_ops.hpp"
#include "scarseg/rng.hpp"
#include "scarseg/tensor.hpp"

namespace scarseg {

struct UNetConfig {
    int in_channels = 6;
    int init_filters = 16;
    int depth = 4;  // number of down-sampling levels
    int out_channels = 1;

    void validate() const {
        if (in_channels < 1 || init_filters < 1 || depth < 0 ||
            out_channels != 1)
            throw Error("nn_engine",
                        "invalid UNetConfig: in_channels=" +
                            std::to_string(in_channels) + " init_filters=" +
                            std::to_string(init_filters) + " depth=" +
                            std::to_string(depth) + " out_channels=" +
                            std::to_string(out_channels));
    }
    // encoder block n emits init_filters * 2^n channels
    int level_channels(int level) const { return init_filters << level; }
};

template <typename T>
struct ConvParamT {
    Tens4<T> kernel;      // (c_in, c_out, kh, kw)
    std::vector<T> bias;  // c_out
};

template <typename T>
struct UNetParamsT {
    std::vector<std::array<ConvParamT<T>, 2>> enc;  // [level][conv]
    std::array<ConvParamT<T>, 2> bottleneck;
    std::vector<std::array<ConvParamT<T>, 2>> dec;  // [level][conv]
    ConvParamT<T> out;                              // 1x1 head
};

using UNetParams = UNetParamsT<float>;

namespace detail {
template <typename T>
ConvParamT<T> make_conv(int c_in, int c_out, int k) {
    ConvParamT<T> p;
    p.kernel = Tens4<T>(c_in, c_out, k, k);
    p.bias.assign(static_cast<std::size_t>(c_out), T(0));
    return p;
}
}  // namespace detail

// Allocate zero-filled parameters with the shapes the config implies.
template <typename T>
UNetParamsT<T> build_params(const UNetConfig& cfg) {
    cfg.validate();
    UNetParamsT<T> p;
    p.enc.resize(cfg.depth);
    p.dec.resize(cfg.depth);
    int c_prev = cfg.in_channels;
    for (int l = 0; l < cfg.depth; ++l) {
        const int c = cfg.level_channels(l);
        p.enc[l][0] = detail::make_conv<T>(c_prev, c, 3);
        p.enc[l][1] = detail::make_conv<T>(c, c, 3);
        c_prev = c;
    }
    const int cb = cfg.level_channels(cfg.depth);
    p.bottleneck[0] = detail::make_conv<T>(c_prev, cb, 3);
    p.bottleneck[1] = detail::make_conv<T>(cb, cb, 3);
    for (int l = cfg.depth - 1; l >= 0; --l) {
        const int c = cfg.level_channels(l);
        const int c_below = cfg.level_channels(l + 1);
        p.dec[l][0] = detail::make_conv<T>(c + c_below, c, 3);  // skip + upsample
        p.dec[l][1] = detail::make_conv<T>(c, c, 3);
    }
    // head input: dec0 output, or the bottleneck itself when depth == 0
    p.out = detail::make_conv<T>(cfg.level_channels(0), cfg.out_channels, 1);
    return p;
}

// Visit every parameter tensor (kernels and biases) in a fixed order:
// encoder top-down, bottleneck, decoder in execution order (deepest first),
// output head. Biases visit as 1-D shapes. F is
// f(const std::string& name, std::vector<T>& data, const std::vector<int>& shape).
template <typename P, typename F>
void visit_tensors(P& p, F&& f) {
    auto conv = [&](const std::string& prefix, auto& cp) {
        f(prefix + ".kernel", cp.kernel.data,
          std::vector<int>{cp.kernel.n, cp.kernel.c, cp.kernel.h, cp.kernel.w});
        f(prefix + ".bias", cp.bias,
          std::vector<int>{static_cast<int>(cp.bias.size())});
    };
    for (std::size_t l = 0; l < p.enc.size(); ++l) {
        conv("enc" + std::to_string(l) + ".conv1", p.enc[l][0]);
        conv("enc" + std::to_string(l) + ".conv2", p.enc[l][1]);
    }
    conv("bottleneck.conv1", p.bottleneck[0]);
    conv("bottleneck.conv2", p.bottleneck[1]);
    for (std::size_t i = p.dec.size(); i-- > 0;) {
        conv("dec" + std::to_string(i) + ".conv1", p.dec[i][0]);
        conv("dec" + std::to_string(i) + ".conv2", p.dec[i][1]);
    }
    conv("out", p.out);
}

template <typename T>
std::size_t num_params(const UNetParamsT<T>& p) {
    std::size_t total = 0;
    visit_tensors(const_cast<UNetParamsT<T>&>(p),
                  [&](const std::string&, const std::vector<T>& d,
                      const std::vector<int>&) { total += d.size(); });
    return total;
}

// Glorot uniform: a = sqrt(6 / (fan_in + fan_out)) with fans counted over
// the full receptive field. Biases stay zero. Deterministic per seed.
template <typename T>
UNetParamsT<T> init_weights(const UNetConfig& cfg, std::uint64_t seed) {
    UNetParamsT<T> p = build_params<T>(cfg);
    Rng rng(seed);
    visit_tensors(p, [&](const std::string& name, std::vector<T>& data,
                         const std::vector<int>& shape) {
        if (shape.size() != 4) return;  // biases stay zero
        const double rf = static_cast<double>(shape[2]) * shape[3];
        const double fan_in = shape[0] * rf, fan_out = shape[1] * rf;
        const double a = std::sqrt(6.0 / (fan_in + fan_out));
        for (T& v : data) v = static_cast<T>(rng.uniform(-a, a));
    });
    return p;
}

template <typename T>
void zero_params(UNetParamsT<T>& p) {
    visit_tensors(p, [](const std::string&, std::vector<T>& data,
                        const std::vector<int>&) {
        std::fill(data.begin(), data.end(), T(0));
    });
}

// Saved activations for one forward pass (post-ReLU outputs a/b per block).
template <typename T>
struct UNetTrace {
    struct EncLevel {
        Tens4<T> a, b, pooled;
    };
    struct DecLevel {
        Tens4<T> cat, a, b;
    };
    Tens4<T> x;
    std::vector<EncLevel> enc;
    Tens4<T> bott_a, bott_b;
    std::vector<DecLevel> dec;  // indexed by level, executed deepest-first
    Tens4<T> probs;
};

template <typename T>
Tens4<T> unet_forward(const UNetConfig& cfg, const UNetParamsT<T>& p,
                      const Tens4<T>& x, UNetTrace<T>* trace = nullptr) {
    cfg.validate();
    if (x.c != cfg.in_channels)
        throw Error("nn_engine", "input has " + std::to_string(x.c) +
                                     " channels, config expects " +
                                     std::to_string(cfg.in_channels));
    const int div = 1 << cfg.depth;
    if (x.h % div != 0 || x.w % div != 0)
        throw Error("nn_engine", "input " + x.shape_str() +
                                     " not divisible by 2^depth = " +
                                     std::to_string(div));

    ConvScratch<T> ws;
    UNetTrace<T> local;
    UNetTrace<T>& tr = trace ? *trace : local;
    tr.enc.assign(cfg.depth, {});
    tr.dec.assign(cfg.depth, {});
    tr.x = x;

    const Tens4<T>* cur = &tr.x;
    for (int l = 0; l < cfg.depth; ++l) {
        auto& lv = tr.enc[l];
        conv2d_3x3_same_fwd(*cur, p.enc[l][0].kernel, p.enc[l][0].bias, lv.a, ws);
        relu_fwd(lv.a);
        conv2d_3x3_same_fwd(lv.a, p.enc[l][1].kernel, p.enc[l][1].bias, lv.b, ws);
        relu_fwd(lv.b);
        maxpool2x2_fwd(lv.b, lv.pooled);
        cur = &lv.pooled;
    }
    conv2d_3x3_same_fwd(*cur, p.bottleneck[0].kernel, p.bottleneck[0].bias,
                        tr.bott_a, ws);
    relu_fwd(tr.bott_a);
    conv2d_3x3_same_fwd(tr.bott_a, p.bottleneck[1].kernel, p.bottleneck[1].bias,
                        tr.bott_b, ws);
    relu_fwd(tr.bott_b);
    cur = &tr.bott_b;

    Tens4<T> up;
    for (int l = cfg.depth - 1; l >= 0; --l) {
        auto& lv = tr.dec[l];
        upsample2x2_nearest_fwd(*cur, up);
        concat_channels_fwd(tr.enc[l].b, up, lv.cat);  // skip first
        conv2d_3x3_same_fwd(lv.cat, p.dec[l][0].kernel, p.dec[l][0].bias, lv.a, ws);
        relu_fwd(lv.a);
        conv2d_3x3_same_fwd(lv.a, p.dec[l][1].kernel, p.dec[l][1].bias, lv.b, ws);
        relu_fwd(lv.b);
        cur = &lv.b;
    }

    Tens4<T> z;
    conv1x1_fwd(*cur, p.out.kernel, p.out.bias, z);
    sigmoid_fwd(z, tr.probs);
    require_finite(tr.probs, "unet_forward output");
    return tr.probs;
}

// Backpropagate d(loss)/d(probs) through the traced graph. Gradients are
// accumulated into `grads` (zero it once per batch). The sigmoid backward is
// fused here: grad_z = grad_p * p * (1-p).
template <typename T>
void unet_backward(const UNetConfig& cfg, const UNetParamsT<T>& p,
                   const UNetTrace<T>& tr, const Tens4<T>& grad_probs,
                   UNetParamsT<T>& grads) {
    if (!grad_probs.same_shape(tr.probs))
        throw Error("nn_engine", "grad_probs shape mismatch");
    ConvScratch<T> ws;

    Tens4<T> gz(tr.probs.n, tr.probs.c, tr.probs.h, tr.probs.w);
    for (std::size_t i = 0; i < gz.data.size(); ++i) {
        const T pr = tr.probs.data[i];
        gz.data[i] = grad_probs.data[i] * pr * (T(1) - pr);
    }

    const Tens4<T>& head_in = cfg.depth > 0 ? tr.dec[0].b : tr.bott_b;
    Tens4<T> gcur, ga, gcat, gskip, gup, gbelow;
    conv1x1_bwd(gz, head_in, p.out.kernel, gcur, grads.out.kernel,
                grads.out.bias);

    std::vector<Tens4<T>> skip_grads(cfg.depth);
    for (int l = 0; l < cfg.depth; ++l) {  // reverse of deepest-first execution
        const auto& lv = tr.dec[l];
        relu_bwd(gcur, lv.b);
        conv2d_3x3_same_bwd(gcur, lv.a, p.dec[l][1].kernel, ga,
                            grads.dec[l][1].kernel, grads.dec[l][1].bias, ws);
        relu_bwd(ga, lv.a);
        conv2d_3x3_same_bwd(ga, lv.cat, p.dec[l][0].kernel, gcat,
                            grads.dec[l][0].kernel, grads.dec[l][0].bias, ws);
        concat_channels_bwd(gcat, tr.enc[l].b.c, gskip, gup);
        skip_grads[l] = gskip;
        upsample2x2_nearest_bwd(gup, gbelow);
        gcur = gbelow;
    }

    relu_bwd(gcur, tr.bott_b);
    conv2d_3x3_same_bwd(gcur, tr.bott_a, p.bottleneck[1].kernel, ga,
                        grads.bottleneck[1].kernel, grads.bottleneck[1].bias,
                        ws);
    relu_bwd(ga, tr.bott_a);
    const Tens4<T>& bott_in = cfg.depth > 0 ? tr.enc[cfg.depth - 1].pooled : tr.x;
    conv2d_3x3_same_bwd(ga, bott_in, p.bottleneck[0].kernel, gcur,
                        grads.bottleneck[0].kernel, grads.bottleneck[0].bias,
                        ws);

    Tens4<T> gb;
    for (int l = cfg.depth - 1; l >= 0; --l) {
        const auto& lv = tr.enc[l];
        maxpool2x2_bwd(gcur, lv.b, gb);
        for (std::size_t i = 0; i < gb.data.size(); ++i)
            gb.data[i] += skip_grads[l].data[i];  // second consumer via skip
        relu_bwd(gb, lv.b);
        conv2d_3x3_same_bwd(gb, lv.a, p.enc[l][1].kernel, ga,
                            grads.enc[l][1].kernel, grads.enc[l][1].bias, ws);
        relu_bwd(ga, lv.a);
        const Tens4<T>& in = l > 0 ? tr.enc[l - 1].pooled : tr.x;
        conv2d_3x3_same_bwd(ga, in, p.enc[l][0].kernel, gcur,
                            grads.enc[l][0].kernel, grads.enc[l][0].bias, ws);
    }
}

// Mean binary cross-entropy with probabilities clamped to [1e-7, 1-1e-7];
// accumulation and the clamp happen in double regardless of T. When
// grad_probs is given it receives the exact gradient of the clamped
// expression (zero where the clamp is active).
template <typename T>
double bce_loss(const Tens4<T>& probs, const Tens4<T>& targets,
                Tens4<T>* grad_probs = nullptr) {
    if (!probs.same_shape(targets))
        throw Error("nn_engine", "bce shapes differ: " + probs.shape_str() +
                                     " vs " + targets.shape_str());
    if (probs.data.empty()) throw Error("nn_engine", "bce on empty tensor");
    if (grad_probs && !grad_probs->same_shape(probs))
        *grad_probs = Tens4<T>(probs.n, probs.c, probs.h, probs.w);
    constexpr double kEps = 1e-7;
    const double inv_n = 1.0 / static_cast<double>(probs.data.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < probs.data.size(); ++i) {
        const double praw = static_cast<double>(probs.data[i]);
        const double t = static_cast<double>(targets.data[i]);
        const double pc = std::min(1.0 - kEps, std::max(kEps, praw));
        acc -= t * std::log(pc) + (1.0 - t) * std::log(1.0 - pc);
        if (grad_probs) {
            const bool clamped = praw <= kEps || praw >= 1.0 - kEps;
            grad_probs->data[i] =
                clamped ? T(0)
                        : static_cast<T>((pc - t) / (pc * (1.0 - pc)) * inv_n);
        }
    }
    const double loss = acc * inv_n;
    if (!std::isfinite(loss)) throw Error("nn_engine", "bce loss is not finite");
    return loss;
}

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

struct AdamConfig {
    double lr = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-7;
};

// Moments are kept in double so the float32 engine follows the same
// trajectory as the double one up to storage rounding.
template <typename T>
struct AdamStateT {
    long long t = 0;
    std::vector<std::vector<double>> m, v;  // visit_tensors order
};

using AdamState = AdamStateT<float>;

template <typename T>
void adam_step(UNetParamsT<T>& params, UNetParamsT<T>& grads,
               AdamStateT<T>& st, const AdamConfig& cfg) {
    std::vector<std::vector<T>*> ws, gs;
    visit_tensors(params, [&](const std::string&, std::vector<T>& d,
                              const std::vector<int>&) { ws.push_back(&d); });
    visit_tensors(grads, [&](const std::string&, std::vector<T>& d,
                             const std::vector<int>&) { gs.push_back(&d); });
    if (ws.size() != gs.size())
        throw Error("nn_engine", "adam: gradient structure mismatch");
    if (st.m.empty()) {
        st.m.resize(ws.size());
        st.v.resize(ws.size());
        for (std::size_t i = 0; i < ws.size(); ++i) {
            st.m[i].assign(ws[i]->size(), 0.0);
            st.v[i].assign(ws[i]->size(), 0.0);
        }
    }
    st.t += 1;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(st.t));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(st.t));
    for (std::size_t i = 0; i < ws.size(); ++i) {
        auto& w = *ws[i];
        const auto& g = *gs[i];
        if (w.size() != g.size() || w.size() != st.m[i].size())
            throw Error("nn_engine", "adam: tensor size mismatch");
        auto& m = st.m[i];
        auto& v = st.v[i];
        for (std::size_t k = 0; k < w.size(); ++k) {
            const double gk = static_cast<double>(g[k]);
            m[k] = cfg.beta1 * m[k] + (1.0 - cfg.beta1) * gk;
            v[k] = cfg.beta2 * v[k] + (1.0 - cfg.beta2) * gk * gk;
            const double mhat = m[k] / bc1;
            const double vhat = v[k] / bc2;
            const double wk = static_cast<double>(w[k]) -
                              cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
            if (!std::isfinite(wk))
                throw Error("nn_engine", "adam produced a non-finite weight");
            w[k] = static_cast<T>(wk);
        }
    }
}

}  // namespace scarseg
