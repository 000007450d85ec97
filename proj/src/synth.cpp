#include "upsr/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace upsr {

Image synth_patch(int h, int w, int c, Rng& rng) {
    Image img(h, w, c, 0.5f);

    // low-frequency background, shared across channels with per-channel tint
    struct Wave {
        double fx, fy, phase, amp;
    };
    Wave waves[3];
    for (Wave& wv : waves) {
        wv.fx = rng.uniform_range(0.5, 2.5);
        wv.fy = rng.uniform_range(0.5, 2.5);
        wv.phase = rng.uniform_range(0.0, 2.0 * std::numbers::pi);
        wv.amp = rng.uniform_range(0.05, 0.15);
    }
    std::vector<double> tint(static_cast<size_t>(c));
    for (auto& t : tint) t = rng.uniform_range(-0.08, 0.08);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double base = 0.0;
            for (const Wave& wv : waves)
                base += wv.amp * std::cos(2.0 * std::numbers::pi *
                                              (wv.fx * x / w + wv.fy * y / h) +
                                          wv.phase);
            for (int ch = 0; ch < c; ++ch)
                img.at(y, x, ch) += static_cast<float>(base + tint[static_cast<size_t>(ch)]);
        }

    // random step edges: add a signed offset on one side of a random line
    const int n_edges = rng.uniform_int(2, 4);
    for (int e = 0; e < n_edges; ++e) {
        const double px = rng.uniform_range(0.2, 0.8) * w;
        const double py = rng.uniform_range(0.2, 0.8) * h;
        const double theta = rng.uniform_range(0.0, std::numbers::pi);
        const double nx = std::cos(theta), ny = std::sin(theta);
        const float delta = static_cast<float>(rng.uniform_range(0.25, 0.45) *
                                               (rng.uniform() < 0.5 ? -1.0 : 1.0));
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                if ((x - px) * nx + (y - py) * ny > 0.0)
                    for (int ch = 0; ch < c; ++ch) img.at(y, x, ch) += delta;
    }

    // one textured rectangle
    const int th = std::max(2, h / rng.uniform_int(3, 5));
    const int tw = std::max(2, w / rng.uniform_int(3, 5));
    const int ty = rng.uniform_int(0, h - th);
    const int tx = rng.uniform_int(0, w - tw);
    for (int y = ty; y < ty + th; ++y)
        for (int x = tx; x < tx + tw; ++x)
            for (int ch = 0; ch < c; ++ch)
                img.at(y, x, ch) += static_cast<float>(rng.uniform_range(-0.18, 0.18));

    return clamp01(img);
}

Image half_flat_half_texture(int h, int w, int c, Rng& rng) {
    Image img(h, w, c, 0.5f);
    for (int y = 0; y < h; ++y)
        for (int x = w / 2; x < w; ++x) {
            const float checker = ((x + y) % 2 == 0) ? 0.42f : -0.42f;
            for (int ch = 0; ch < c; ++ch)
                img.at(y, x, ch) += checker + static_cast<float>(rng.uniform_range(-0.05, 0.05));
        }
    return clamp01(img);
}

Image random_image(int h, int w, int c, Rng& rng) {
    Image img(h, w, c);
    for (auto& v : img.data) v = static_cast<float>(rng.uniform());
    return img;
}

}  // namespace upsr
