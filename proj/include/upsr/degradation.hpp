#pragma once

#include <cstdint>

#include "upsr/image.hpp"
#include "upsr/rng.hpp"

namespace upsr {

/// Parameters for the simplified first-order degradation pipeline
/// (blur -> box downsample -> noise -> optional DCT compression, with an
/// optional lighter second blur+noise pass).
struct DegradationConfig {
    int scale = 4;
    double blur_lo = 0.2, blur_hi = 2.0;
    double noise_lo = 0.0, noise_hi = 0.06;
    int quality_lo = 30, quality_hi = 95;
    bool jpeg_enabled = true;
    bool second_pass = false;
    uint64_t seed = 0;

    void validate() const;
};

/// Separable Gaussian convolution, kernel radius ceil(3*sigma), edge-clamped.
/// sigma = 0 is the identity.
Image gaussian_blur(const Image& img, double sigma);

/// Box-mean downsample; dims must be divisible by scale.
Image downsample(const Image& img, int scale);

/// Add iid Gaussian noise with the given std. No clamping.
Image add_noise(const Image& img, double sigma, Rng& rng);

/// DCT-domain compression: per 8x8 block per channel, orthonormal DCT-II,
/// quantization by the standard luminance table scaled for the quality
/// factor, rounding, inverse transform. Non-multiple-of-8 dims are
/// reflect-padded and cropped back. Deterministic.
Image jpeg_like(const Image& img, int quality);

struct DegradedPair {
    Image lr;
    Image y0;  // clamp01(bicubic upsample of lr back to hr dims)
    // parameters drawn for this pair, recorded in batch manifests
    double blur_sigma = 0.0;
    double noise_sigma = 0.0;
    int quality = 0;           // -1 when compression disabled
    double blur_sigma2 = 0.0;  // second pass, 0 when disabled
    double noise_sigma2 = 0.0;
};

/// Run the full pipeline on one HR image with parameters drawn uniformly
/// from the config ranges.
DegradedPair degrade_pair(const Image& hr, const DegradationConfig& cfg, Rng& rng);

namespace serial {
Image gaussian_blur(const Image& img, double sigma);
Image downsample(const Image& img, int scale);
Image jpeg_like(const Image& img, int quality);
}  // namespace serial

}  // namespace upsr
