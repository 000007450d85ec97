#include "upsr/resample.hpp"

#include <algorithm>
#include <cmath>

namespace upsr {

namespace detail {

TapPlan bicubic_taps(int in_n, int out_n) {
    TapPlan plan;
    plan.idx.resize(static_cast<size_t>(out_n) * 4);
    plan.wgt.resize(static_cast<size_t>(out_n) * 4);
    const double scale = static_cast<double>(in_n) / out_n;
    for (int o = 0; o < out_n; ++o) {
        const double src = (o + 0.5) * scale - 0.5;
        const double base = std::floor(src);
        const double t = src - base;
        double w[4];
        catmull_rom_weights(t, w);
        for (int k = 0; k < 4; ++k) {
            const int raw = static_cast<int>(base) + k - 1;
            plan.idx[static_cast<size_t>(o) * 4 + k] = std::clamp(raw, 0, in_n - 1);
            plan.wgt[static_cast<size_t>(o) * 4 + k] = w[k];
        }
    }
    return plan;
}

}  // namespace detail

namespace {

void check_unshuffle(const Image& img, int r) {
    if (r < 1) throw ParamError("pixel_unshuffle: factor must be >= 1, got " + std::to_string(r));
    if (img.height % r != 0)
        throw ShapeError("pixel_unshuffle: height " + std::to_string(img.height) +
                         " not divisible by factor " + std::to_string(r));
    if (img.width % r != 0)
        throw ShapeError("pixel_unshuffle: width " + std::to_string(img.width) +
                         " not divisible by factor " + std::to_string(r));
}

void check_shuffle(const Image& img, int r) {
    if (r < 1) throw ParamError("pixel_shuffle: factor must be >= 1, got " + std::to_string(r));
    if (img.channels % (r * r) != 0)
        throw ShapeError("pixel_shuffle: channels " + std::to_string(img.channels) +
                         " not divisible by factor^2 = " + std::to_string(r * r));
}

inline void unshuffle_row(const Image& in, Image& out, int r, int oy) {
    const int c_in = in.channels;
    for (int ox = 0; ox < out.width; ++ox)
        for (int c = 0; c < c_in; ++c)
            for (int dy = 0; dy < r; ++dy)
                for (int dx = 0; dx < r; ++dx)
                    out.at(oy, ox, c * r * r + dy * r + dx) = in.at(oy * r + dy, ox * r + dx, c);
}

inline void shuffle_row(const Image& in, Image& out, int r, int iy) {
    const int c_out = in.channels / (r * r);
    for (int ix = 0; ix < in.width; ++ix)
        for (int c = 0; c < c_out; ++c)
            for (int dy = 0; dy < r; ++dy)
                for (int dx = 0; dx < r; ++dx)
                    out.at(iy * r + dy, ix * r + dx, c) = in.at(iy, ix, c * r * r + dy * r + dx);
}

inline void nearest_row(const Image& in, Image& out, int r, int oy) {
    for (int ox = 0; ox < out.width; ++ox)
        for (int c = 0; c < in.channels; ++c)
            out.at(oy, ox, c) = in.at(oy / r, ox / r, c);
}

// Horizontal then vertical pass over precomputed taps.
inline void bicubic_h_row(const Image& in, Image& tmp, const detail::TapPlan& px, int y) {
    for (int x = 0; x < tmp.width; ++x) {
        const int* idx = &px.idx[static_cast<size_t>(x) * 4];
        const double* w = &px.wgt[static_cast<size_t>(x) * 4];
        for (int c = 0; c < in.channels; ++c) {
            double acc = 0.0;
            for (int k = 0; k < 4; ++k) acc += w[k] * in.at(y, idx[k], c);
            tmp.at(y, x, c) = static_cast<float>(acc);
        }
    }
}

inline void bicubic_v_row(const Image& tmp, Image& out, const detail::TapPlan& py, int y) {
    const int* idx = &py.idx[static_cast<size_t>(y) * 4];
    const double* w = &py.wgt[static_cast<size_t>(y) * 4];
    for (int x = 0; x < out.width; ++x)
        for (int c = 0; c < out.channels; ++c) {
            double acc = 0.0;
            for (int k = 0; k < 4; ++k) acc += w[k] * tmp.at(idx[k], x, c);
            out.at(y, x, c) = static_cast<float>(acc);
        }
}

void check_resize(int out_h, int out_w) {
    if (out_h < 1 || out_w < 1)
        throw ParamError("bicubic_resize: output dims must be >= 1, got " +
                         std::to_string(out_h) + "x" + std::to_string(out_w));
}

}  // namespace

Image pixel_unshuffle(const Image& img, int r) {
    check_unshuffle(img, r);
    if (r == 1) return img;
    Image out(img.height / r, img.width / r, img.channels * r * r);
#pragma omp parallel for schedule(static)
    for (int oy = 0; oy < out.height; ++oy) unshuffle_row(img, out, r, oy);
    return out;
}

Image pixel_shuffle(const Image& img, int r) {
    check_shuffle(img, r);
    if (r == 1) return img;
    Image out(img.height * r, img.width * r, img.channels / (r * r));
#pragma omp parallel for schedule(static)
    for (int iy = 0; iy < img.height; ++iy) shuffle_row(img, out, r, iy);
    return out;
}

Image nearest_upsample(const Image& img, int r) {
    if (r < 1) throw ParamError("nearest_upsample: factor must be >= 1, got " + std::to_string(r));
    if (r == 1) return img;
    Image out(img.height * r, img.width * r, img.channels);
#pragma omp parallel for schedule(static)
    for (int oy = 0; oy < out.height; ++oy) nearest_row(img, out, r, oy);
    return out;
}

Image bicubic_resize(const Image& img, int out_h, int out_w) {
    check_resize(out_h, out_w);
    const detail::TapPlan px = detail::bicubic_taps(img.width, out_w);
    const detail::TapPlan py = detail::bicubic_taps(img.height, out_h);
    Image tmp(img.height, out_w, img.channels);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < img.height; ++y) bicubic_h_row(img, tmp, px, y);
    Image out(out_h, out_w, img.channels);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < out_h; ++y) bicubic_v_row(tmp, out, py, y);
    return out;
}

namespace serial {

Image pixel_unshuffle(const Image& img, int r) {
    check_unshuffle(img, r);
    if (r == 1) return img;
    Image out(img.height / r, img.width / r, img.channels * r * r);
    for (int oy = 0; oy < out.height; ++oy) unshuffle_row(img, out, r, oy);
    return out;
}

Image pixel_shuffle(const Image& img, int r) {
    check_shuffle(img, r);
    if (r == 1) return img;
    Image out(img.height * r, img.width * r, img.channels / (r * r));
    for (int iy = 0; iy < img.height; ++iy) shuffle_row(img, out, r, iy);
    return out;
}

Image nearest_upsample(const Image& img, int r) {
    if (r < 1) throw ParamError("nearest_upsample: factor must be >= 1, got " + std::to_string(r));
    if (r == 1) return img;
    Image out(img.height * r, img.width * r, img.channels);
    for (int oy = 0; oy < out.height; ++oy) nearest_row(img, out, r, oy);
    return out;
}

Image bicubic_resize(const Image& img, int out_h, int out_w) {
    check_resize(out_h, out_w);
    const detail::TapPlan px = detail::bicubic_taps(img.width, out_w);
    const detail::TapPlan py = detail::bicubic_taps(img.height, out_h);
    Image tmp(img.height, out_w, img.channels);
    for (int y = 0; y < img.height; ++y) bicubic_h_row(img, tmp, px, y);
    Image out(out_h, out_w, img.channels);
    for (int y = 0; y < out_h; ++y) bicubic_v_row(tmp, out, py, y);
    return out;
}

}  // namespace serial

}  // namespace upsr
