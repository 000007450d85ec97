#pragma once

#include "upsr/image.hpp"

namespace upsr {

/// Space-to-depth: (H, W, C) -> (H/r, W/r, C*r^2). Lossless rearrangement;
/// block offset (dy, dx) of channel c lands in output channel c*r^2 + dy*r + dx.
Image pixel_unshuffle(const Image& img, int r);

/// Depth-to-space, exact inverse of pixel_unshuffle with the same r.
Image pixel_shuffle(const Image& img, int r);

/// Replicate every pixel into an r x r block.
Image nearest_upsample(const Image& img, int r);

/// Catmull-Rom bicubic resize (a = -0.5), half-pixel center mapping,
/// edge-clamped taps. Output is not clamped to [0,1]: the kernel overshoots.
Image bicubic_resize(const Image& img, int out_h, int out_w);

// Serial reference implementations, kept for testing the OpenMP kernels
// (same arithmetic, no threading) and for the benchmark target.
namespace serial {
Image pixel_unshuffle(const Image& img, int r);
Image pixel_shuffle(const Image& img, int r);
Image nearest_upsample(const Image& img, int r);
Image bicubic_resize(const Image& img, int out_h, int out_w);
}  // namespace serial

namespace detail {

/// Catmull-Rom kernel weights for the four taps around a sample at
/// fractional offset t in [0,1) from tap 1.
inline void catmull_rom_weights(double t, double w[4]) {
    // a = -0.5 convolution kernel evaluated at t+1, t, 1-t, 2-t.
    const double t2 = t * t;
    const double t3 = t2 * t;
    w[0] = -0.5 * t3 + t2 - 0.5 * t;
    w[1] = 1.5 * t3 - 2.5 * t2 + 1.0;
    w[2] = -1.5 * t3 + 2.0 * t2 + 0.5 * t;
    w[3] = 0.5 * t3 - 0.5 * t2;
}

struct TapPlan {
    std::vector<int> idx;     // 4 clamped source indices per output coordinate
    std::vector<double> wgt;  // 4 weights per output coordinate
};

/// Precompute taps for one axis of a bicubic resize (half-pixel centers).
TapPlan bicubic_taps(int in_n, int out_n);

}  // namespace detail

}  // namespace upsr
