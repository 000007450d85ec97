#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "upsr/errors.hpp"
#include "upsr/image.hpp"
#include "upsr/rng.hpp"

namespace upsr {

enum class ModelRole : uint32_t { denoiser = 0, predictor = 1 };

/// Net-internal raster, templated so gradient checks can run the identical
/// code path in double precision.
template <typename T>
struct Tensor {
    int h = 0, w = 0, c = 0;
    std::vector<T> v;

    Tensor() = default;
    Tensor(int h_, int w_, int c_) : h(h_), w(w_), c(c_), v(static_cast<size_t>(h_) * w_ * c_, T(0)) {}

    T& at(int y, int x, int ch) { return v[(static_cast<size_t>(y) * w + x) * c + ch]; }
    const T& at(int y, int x, int ch) const { return v[(static_cast<size_t>(y) * w + x) * c + ch]; }
    size_t size() const { return v.size(); }
};

template <typename T>
struct ConvLayer {
    int in_ch = 0, out_ch = 0, k = 3;
    std::vector<T> w;  // [oc][ic][ky][kx]
    std::vector<T> b;  // [oc]
};

/// Small fully-convolutional denoiser: inputs (x_t, y0, g(y0)) concatenated,
/// pixel-unshuffled by r, a stack of 3x3 convs with leaky-rectifier
/// activations and a learned per-timestep bias after the first layer, then
/// pixel-shuffled back; the net output is a delta added to x_t.
template <typename T>
struct NetT {
    uint32_t format_version = 1;
    ModelRole role = ModelRole::denoiser;
    int channels = 3;  // image channels C; net input is 3*C
    int r = 2;
    int hidden = 16;
    int steps = 5;
    std::vector<ConvLayer<T>> layers;
    std::vector<T> t_table;  // steps x hidden, bias added after layer 0

    size_t param_count() const {
        size_t n = t_table.size();
        for (const auto& l : layers) n += l.w.size() + l.b.size();
        return n;
    }
};

using TinyNetModel = NetT<float>;

constexpr double kLeakySlope = 0.1;

TinyNetModel make_tinynet(int channels, int steps, ModelRole role, int hidden = 16,
                          int n_layers = 4, int r = 2);

/// He-style random init; the final layer stays zero so an untrained net is
/// the identity on x_t.
void randomize_params(TinyNetModel& m, Rng& rng);

NetT<double> widen(const TinyNetModel& m);

// ---------------------------------------------------------------------------
// kernels

template <typename T>
Tensor<T> tensor_unshuffle(const Tensor<T>& in, int r) {
    if (in.h % r != 0 || in.w % r != 0)
        throw ShapeError("tensor_unshuffle: dims " + std::to_string(in.h) + "x" +
                         std::to_string(in.w) + " not divisible by " + std::to_string(r));
    if (r == 1) return in;
    Tensor<T> out(in.h / r, in.w / r, in.c * r * r);
#pragma omp parallel for schedule(static)
    for (int oy = 0; oy < out.h; ++oy)
        for (int ox = 0; ox < out.w; ++ox)
            for (int c = 0; c < in.c; ++c)
                for (int dy = 0; dy < r; ++dy)
                    for (int dx = 0; dx < r; ++dx)
                        out.at(oy, ox, c * r * r + dy * r + dx) = in.at(oy * r + dy, ox * r + dx, c);
    return out;
}

template <typename T>
Tensor<T> tensor_shuffle(const Tensor<T>& in, int r) {
    if (in.c % (r * r) != 0) throw ShapeError("tensor_shuffle: channels not divisible by r^2");
    if (r == 1) return in;
    Tensor<T> out(in.h * r, in.w * r, in.c / (r * r));
#pragma omp parallel for schedule(static)
    for (int iy = 0; iy < in.h; ++iy)
        for (int ix = 0; ix < in.w; ++ix)
            for (int c = 0; c < out.c; ++c)
                for (int dy = 0; dy < r; ++dy)
                    for (int dx = 0; dx < r; ++dx)
                        out.at(iy * r + dy, ix * r + dx, c) = in.at(iy, ix, c * r * r + dy * r + dx);
    return out;
}

namespace detail {

template <typename T>
inline void conv_forward_row(const ConvLayer<T>& l, const Tensor<T>& in, Tensor<T>& out, int y) {
    const int p = l.k / 2;
    for (int x = 0; x < in.w; ++x)
        for (int oc = 0; oc < l.out_ch; ++oc) {
            T acc = l.b[static_cast<size_t>(oc)];
            for (int ky = 0; ky < l.k; ++ky) {
                const int sy = y + ky - p;
                if (sy < 0 || sy >= in.h) continue;
                for (int kx = 0; kx < l.k; ++kx) {
                    const int sx = x + kx - p;
                    if (sx < 0 || sx >= in.w) continue;
                    const T* wrow = &l.w[((static_cast<size_t>(oc) * l.in_ch) * l.k + ky) * l.k + kx];
                    const size_t wstride = static_cast<size_t>(l.k) * l.k;
                    for (int ic = 0; ic < l.in_ch; ++ic)
                        acc += wrow[static_cast<size_t>(ic) * wstride] * in.at(sy, sx, ic);
                }
            }
            out.at(y, x, oc) = acc;
        }
}

template <typename T>
inline void conv_dinput_row(const ConvLayer<T>& l, const Tensor<T>& d_out, Tensor<T>& d_in, int iy) {
    const int p = l.k / 2;
    for (int ix = 0; ix < d_in.w; ++ix)
        for (int ic = 0; ic < l.in_ch; ++ic) {
            T acc = T(0);
            for (int ky = 0; ky < l.k; ++ky) {
                const int oy = iy - ky + p;
                if (oy < 0 || oy >= d_out.h) continue;
                for (int kx = 0; kx < l.k; ++kx) {
                    const int ox = ix - kx + p;
                    if (ox < 0 || ox >= d_out.w) continue;
                    for (int oc = 0; oc < l.out_ch; ++oc)
                        acc += l.w[((static_cast<size_t>(oc) * l.in_ch + ic) * l.k + ky) * l.k + kx] *
                               d_out.at(oy, ox, oc);
                }
            }
            d_in.at(iy, ix, ic) = acc;
        }
}

// One output channel's weight/bias gradients; the pixel sum runs serially
// per weight slot, so the result is independent of thread count.
template <typename T>
inline void conv_dweights_oc(const ConvLayer<T>& l, const Tensor<T>& in, const Tensor<T>& d_out,
                             ConvLayer<T>& d_l, int oc) {
    const int p = l.k / 2;
    T db = T(0);
    for (int y = 0; y < d_out.h; ++y)
        for (int x = 0; x < d_out.w; ++x) db += d_out.at(y, x, oc);
    d_l.b[static_cast<size_t>(oc)] += db;
    for (int ic = 0; ic < l.in_ch; ++ic)
        for (int ky = 0; ky < l.k; ++ky)
            for (int kx = 0; kx < l.k; ++kx) {
                T acc = T(0);
                const int y_lo = std::max(0, p - ky);
                const int y_hi = std::min(d_out.h, in.h + p - ky);
                const int x_lo = std::max(0, p - kx);
                const int x_hi = std::min(d_out.w, in.w + p - kx);
                for (int y = y_lo; y < y_hi; ++y)
                    for (int x = x_lo; x < x_hi; ++x)
                        acc += d_out.at(y, x, oc) * in.at(y + ky - p, x + kx - p, ic);
                d_l.w[((static_cast<size_t>(oc) * l.in_ch + ic) * l.k + ky) * l.k + kx] += acc;
            }
}

}  // namespace detail

template <typename T>
Tensor<T> conv_forward(const ConvLayer<T>& l, const Tensor<T>& in) {
    if (in.c != l.in_ch)
        throw ShapeError("conv_forward: input channels " + std::to_string(in.c) + " != layer in_ch " +
                         std::to_string(l.in_ch));
    Tensor<T> out(in.h, in.w, l.out_ch);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < in.h; ++y) detail::conv_forward_row(l, in, out, y);
    return out;
}

/// Accumulates parameter gradients into d_l and writes input gradients.
template <typename T>
void conv_backward(const ConvLayer<T>& l, const Tensor<T>& in, const Tensor<T>& d_out,
                   Tensor<T>& d_in, ConvLayer<T>& d_l) {
    d_in = Tensor<T>(in.h, in.w, l.in_ch);
#pragma omp parallel for schedule(static)
    for (int iy = 0; iy < in.h; ++iy) detail::conv_dinput_row(l, d_out, d_in, iy);
#pragma omp parallel for schedule(static)
    for (int oc = 0; oc < l.out_ch; ++oc) detail::conv_dweights_oc(l, in, d_out, d_l, oc);
}

namespace serial {

template <typename T>
Tensor<T> conv_forward(const ConvLayer<T>& l, const Tensor<T>& in) {
    if (in.c != l.in_ch) throw ShapeError("conv_forward: channel mismatch");
    Tensor<T> out(in.h, in.w, l.out_ch);
    for (int y = 0; y < in.h; ++y) upsr::detail::conv_forward_row(l, in, out, y);
    return out;
}

template <typename T>
void conv_backward(const ConvLayer<T>& l, const Tensor<T>& in, const Tensor<T>& d_out,
                   Tensor<T>& d_in, ConvLayer<T>& d_l) {
    d_in = Tensor<T>(in.h, in.w, l.in_ch);
    for (int iy = 0; iy < in.h; ++iy) upsr::detail::conv_dinput_row(l, d_out, d_in, iy);
    for (int oc = 0; oc < l.out_ch; ++oc) upsr::detail::conv_dweights_oc(l, in, d_out, d_l, oc);
}

}  // namespace serial

// ---------------------------------------------------------------------------
// network forward / backward

template <typename T>
struct ForwardTrace {
    int t = 1;
    Tensor<T> input;               // unshuffled concat of (x_t, y0, g)
    std::vector<Tensor<T>> pre;    // pre-activation outputs per layer
    std::vector<Tensor<T>> post;   // post-activation (post.back() == pre.back(), linear head)
    Tensor<T> out;                 // x_t + shuffled delta
};

template <typename T>
struct NetGrads {
    std::vector<ConvLayer<T>> layers;
    std::vector<T> t_table;
};

template <typename T>
NetGrads<T> zero_grads(const NetT<T>& m) {
    NetGrads<T> g;
    g.layers.resize(m.layers.size());
    for (size_t i = 0; i < m.layers.size(); ++i) {
        g.layers[i].in_ch = m.layers[i].in_ch;
        g.layers[i].out_ch = m.layers[i].out_ch;
        g.layers[i].k = m.layers[i].k;
        g.layers[i].w.assign(m.layers[i].w.size(), T(0));
        g.layers[i].b.assign(m.layers[i].b.size(), T(0));
    }
    g.t_table.assign(m.t_table.size(), T(0));
    return g;
}

template <typename T>
inline T leaky(T x) {
    return x > T(0) ? x : T(kLeakySlope) * x;
}

template <typename T>
inline T leaky_grad(T x) {
    return x > T(0) ? T(1) : T(kLeakySlope);
}

template <typename T>
void check_net_inputs(const NetT<T>& m, const Tensor<T>& x_t, const Tensor<T>& y0,
                      const Tensor<T>& g, int t) {
    if (x_t.h != y0.h || x_t.w != y0.w || x_t.c != y0.c || x_t.h != g.h || x_t.w != g.w || x_t.c != g.c)
        throw ShapeError("net_forward: conditioning images must share x_t's shape");
    if (x_t.c != m.channels)
        throw ShapeError("net_forward: model expects " + std::to_string(m.channels) +
                         " channels, got " + std::to_string(x_t.c));
    if (x_t.h % m.r != 0 || x_t.w % m.r != 0)
        throw ShapeError("net_forward: dims " + std::to_string(x_t.h) + "x" + std::to_string(x_t.w) +
                         " not divisible by unshuffle factor " + std::to_string(m.r));
    if (t < 1 || t > m.steps)
        throw ParamError("net_forward: t=" + std::to_string(t) + " outside [1, " +
                         std::to_string(m.steps) + "]");
}

template <typename T>
ForwardTrace<T> net_forward_trace(const NetT<T>& m, const Tensor<T>& x_t, const Tensor<T>& y0,
                                  const Tensor<T>& g, int t) {
    check_net_inputs(m, x_t, y0, g, t);
    ForwardTrace<T> tr;
    tr.t = t;

    Tensor<T> concat(x_t.h, x_t.w, 3 * x_t.c);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < x_t.h; ++y)
        for (int x = 0; x < x_t.w; ++x)
            for (int c = 0; c < x_t.c; ++c) {
                concat.at(y, x, c) = x_t.at(y, x, c);
                concat.at(y, x, x_t.c + c) = y0.at(y, x, c);
                concat.at(y, x, 2 * x_t.c + c) = g.at(y, x, c);
            }
    tr.input = tensor_unshuffle(concat, m.r);

    const size_t L = m.layers.size();
    tr.pre.resize(L);
    tr.post.resize(L);
    const Tensor<T>* cur = &tr.input;
    for (size_t l = 0; l < L; ++l) {
        tr.pre[l] = conv_forward(m.layers[l], *cur);
        if (l == 0) {
            const T* row = &m.t_table[static_cast<size_t>(t - 1) * m.hidden];
            const int64_t n = static_cast<int64_t>(tr.pre[0].size());
            const int hc = m.hidden;
#pragma omp parallel for schedule(static)
            for (int64_t i = 0; i < n; ++i)
                tr.pre[0].v[static_cast<size_t>(i)] += row[i % hc];
        }
        if (l + 1 < L) {
            tr.post[l] = tr.pre[l];
            for (auto& v : tr.post[l].v) v = leaky(v);
        } else {
            tr.post[l] = tr.pre[l];  // linear head
        }
        cur = &tr.post[l];
    }

    Tensor<T> delta = tensor_shuffle(tr.post.back(), m.r);
    tr.out = x_t;
    const int64_t n = static_cast<int64_t>(tr.out.size());
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < n; ++i) tr.out.v[static_cast<size_t>(i)] += delta.v[static_cast<size_t>(i)];
    return tr;
}

template <typename T>
Tensor<T> net_forward(const NetT<T>& m, const Tensor<T>& x_t, const Tensor<T>& y0,
                      const Tensor<T>& g, int t) {
    return net_forward_trace(m, x_t, y0, g, t).out;
}

/// Accumulates parameter gradients for one sample into `grads`.
template <typename T>
void net_backward(const NetT<T>& m, const ForwardTrace<T>& tr, const Tensor<T>& d_out,
                  NetGrads<T>& grads) {
    const size_t L = m.layers.size();
    // residual head: delta path only, x_t is data
    Tensor<T> d_cur = tensor_unshuffle(d_out, m.r);
    for (size_t l = L; l-- > 0;) {
        if (l + 1 < L) {
            const int64_t n = static_cast<int64_t>(d_cur.size());
#pragma omp parallel for schedule(static)
            for (int64_t i = 0; i < n; ++i)
                d_cur.v[static_cast<size_t>(i)] *= leaky_grad(tr.pre[l].v[static_cast<size_t>(i)]);
        }
        if (l == 0) {
            // timestep bias grads: per-channel sums in fixed pixel order
            T* trow = &grads.t_table[static_cast<size_t>(tr.t - 1) * m.hidden];
            const int hc = m.hidden;
#pragma omp parallel for schedule(static)
            for (int ch = 0; ch < hc; ++ch) {
                T acc = T(0);
                for (size_t i = static_cast<size_t>(ch); i < d_cur.size(); i += static_cast<size_t>(hc))
                    acc += d_cur.v[i];
                trow[ch] += acc;
            }
        }
        const Tensor<T>& layer_in = l == 0 ? tr.input : tr.post[l - 1];
        Tensor<T> d_in;
        conv_backward(m.layers[l], layer_in, d_cur, d_in, grads.layers[l]);
        d_cur = std::move(d_in);
    }
}

template <typename T>
void sgd_step(NetT<T>& m, const NetGrads<T>& g, T step) {
    for (size_t l = 0; l < m.layers.size(); ++l) {
        for (size_t i = 0; i < m.layers[l].w.size(); ++i) m.layers[l].w[i] -= step * g.layers[l].w[i];
        for (size_t i = 0; i < m.layers[l].b.size(); ++i) m.layers[l].b[i] -= step * g.layers[l].b[i];
    }
    for (size_t i = 0; i < m.t_table.size(); ++i) m.t_table[i] -= step * g.t_table[i];
}

// ---------------------------------------------------------------------------
// losses

template <typename T>
struct LossResult {
    double total = 0.0, mse = 0.0, perceptual = 0.0;
    Tensor<T> grad;  // d total / d pred
};

namespace detail {

/// Sobel gradient magnitudes with replicated borders; magnitude smoothed by
/// a tiny epsilon inside the sqrt so it is defined at zero gradient.
template <typename T>
void sobel_magnitude(const Tensor<T>& img, Tensor<T>& mag, Tensor<T>& gx, Tensor<T>& gy) {
    mag = Tensor<T>(img.h, img.w, img.c);
    gx = Tensor<T>(img.h, img.w, img.c);
    gy = Tensor<T>(img.h, img.w, img.c);
    auto clamped = [&](int y, int x, int c) {
        y = y < 0 ? 0 : (y >= img.h ? img.h - 1 : y);
        x = x < 0 ? 0 : (x >= img.w ? img.w - 1 : x);
        return img.at(y, x, c);
    };
    for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x)
            for (int c = 0; c < img.c; ++c) {
                const T a = clamped(y - 1, x - 1, c), b = clamped(y - 1, x, c), d = clamped(y - 1, x + 1, c);
                const T e = clamped(y, x - 1, c), f = clamped(y, x + 1, c);
                const T g = clamped(y + 1, x - 1, c), h = clamped(y + 1, x, c), i = clamped(y + 1, x + 1, c);
                const T sx = (d + T(2) * f + i) - (a + T(2) * e + g);
                const T sy = (g + T(2) * h + i) - (a + T(2) * b + d);
                gx.at(y, x, c) = sx;
                gy.at(y, x, c) = sy;
                mag.at(y, x, c) = std::sqrt(sx * sx + sy * sy + T(1e-12));
            }
}

/// Adjoint of the clamped-border Sobel operator: scatter d_gx/d_gy back to
/// the image. Serial: scatter with border clamping crosses rows.
template <typename T>
void sobel_backward(const Tensor<T>& d_gx, const Tensor<T>& d_gy, Tensor<T>& d_img) {
    d_img = Tensor<T>(d_gx.h, d_gx.w, d_gx.c);
    auto add = [&](int y, int x, int c, T v) {
        y = y < 0 ? 0 : (y >= d_img.h ? d_img.h - 1 : y);
        x = x < 0 ? 0 : (x >= d_img.w ? d_img.w - 1 : x);
        d_img.at(y, x, c) += v;
    };
    for (int y = 0; y < d_gx.h; ++y)
        for (int x = 0; x < d_gx.w; ++x)
            for (int c = 0; c < d_gx.c; ++c) {
                const T dx = d_gx.at(y, x, c);
                const T dy = d_gy.at(y, x, c);
                if (dx != T(0)) {
                    add(y - 1, x + 1, c, dx);
                    add(y, x + 1, c, T(2) * dx);
                    add(y + 1, x + 1, c, dx);
                    add(y - 1, x - 1, c, -dx);
                    add(y, x - 1, c, T(-2) * dx);
                    add(y + 1, x - 1, c, -dx);
                }
                if (dy != T(0)) {
                    add(y + 1, x - 1, c, dy);
                    add(y + 1, x, c, T(2) * dy);
                    add(y + 1, x + 1, c, dy);
                    add(y - 1, x - 1, c, -dy);
                    add(y - 1, x, c, T(-2) * dy);
                    add(y - 1, x + 1, c, -dy);
                }
            }
}

}  // namespace detail

/// Mean squared error plus lambda times a perceptual proxy (L1 distance of
/// Sobel gradient magnitudes), with the exact analytic gradient.
template <typename T>
LossResult<T> mixed_loss_t(const Tensor<T>& pred, const Tensor<T>& target, double lambda) {
    if (pred.h != target.h || pred.w != target.w || pred.c != target.c)
        throw ShapeError("mixed_loss: shape mismatch");
    LossResult<T> res;
    res.grad = Tensor<T>(pred.h, pred.w, pred.c);
    const size_t n = pred.size();
    const double inv_n = 1.0 / static_cast<double>(n);

    double mse = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double d = static_cast<double>(pred.v[i]) - static_cast<double>(target.v[i]);
        mse += d * d;
        res.grad.v[i] = static_cast<T>(2.0 * inv_n * d);
    }
    mse *= inv_n;
    res.mse = mse;

    if (lambda != 0.0) {
        Tensor<T> mp, gxp, gyp, mt, gxt, gyt;
        detail::sobel_magnitude(pred, mp, gxp, gyp);
        detail::sobel_magnitude(target, mt, gxt, gyt);
        double per = 0.0;
        Tensor<T> d_gx(pred.h, pred.w, pred.c), d_gy(pred.h, pred.w, pred.c);
        for (size_t i = 0; i < n; ++i) {
            const double diff = static_cast<double>(mp.v[i]) - static_cast<double>(mt.v[i]);
            per += std::abs(diff);
            const T s = static_cast<T>((diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0)) * inv_n * lambda);
            d_gx.v[i] = s * gxp.v[i] / mp.v[i];
            d_gy.v[i] = s * gyp.v[i] / mp.v[i];
        }
        per *= inv_n;
        res.perceptual = per;
        Tensor<T> d_img;
        detail::sobel_backward(d_gx, d_gy, d_img);
        for (size_t i = 0; i < n; ++i) res.grad.v[i] += d_img.v[i];
    }
    res.total = res.mse + lambda * res.perceptual;
    return res;
}

/// Mean absolute error with its (sign) gradient; the predictor trainer's loss.
template <typename T>
LossResult<T> l1_loss_t(const Tensor<T>& pred, const Tensor<T>& target) {
    if (pred.h != target.h || pred.w != target.w || pred.c != target.c)
        throw ShapeError("l1_loss: shape mismatch");
    LossResult<T> res;
    res.grad = Tensor<T>(pred.h, pred.w, pred.c);
    const size_t n = pred.size();
    const double inv_n = 1.0 / static_cast<double>(n);
    double acc = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double d = static_cast<double>(pred.v[i]) - static_cast<double>(target.v[i]);
        acc += std::abs(d);
        res.grad.v[i] = static_cast<T>((d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0)) * inv_n);
    }
    res.total = res.mse = acc * inv_n;  // mse field doubles as the pixel term
    return res;
}

// ---------------------------------------------------------------------------
// Image bridge (float path used by the pipeline)

Tensor<float> to_tensor(const Image& img);
Image to_image(const Tensor<float>& t);

/// Float-path forward on Images. Dims must be divisible by the model's r;
/// TinyNetDenoiser handles padding for arbitrary sizes.
Image tinynet_forward(const TinyNetModel& m, const Image& x_t, const Image& y0, const Image& g_y0,
                      int t);

struct MixedLoss {
    double total = 0.0, mse = 0.0, perceptual = 0.0;
    Image grad;
};

MixedLoss mixed_loss(const Image& pred, const Image& x0, double lambda);

// ---------------------------------------------------------------------------
// model container

/// Writes the UPSR container: magic, format version, role tag, layer-spec
/// table, little-endian float32 parameter block, trailing CRC32.
void save_model(const TinyNetModel& m, const std::string& path);
TinyNetModel load_model(const std::string& path);

}  // namespace upsr
