#include "upsr/degradation.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "upsr/resample.hpp"

namespace upsr {

void DegradationConfig::validate() const {
    if (scale < 1) throw ParamError("degradation: scale must be >= 1");
    if (blur_lo < 0.0 || blur_lo > blur_hi) throw ParamError("degradation: bad blur sigma range");
    if (noise_lo < 0.0 || noise_lo > noise_hi) throw ParamError("degradation: bad noise sigma range");
    if (quality_lo < 1 || quality_hi > 100 || quality_lo > quality_hi)
        throw ParamError("degradation: quality range must be ordered within [1, 100]");
}

namespace {

std::vector<double> gaussian_kernel(double sigma) {
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> k(static_cast<size_t>(2 * radius) + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        const double v = std::exp(-0.5 * (i * i) / (sigma * sigma));
        k[static_cast<size_t>(i + radius)] = v;
        sum += v;
    }
    for (double& v : k) v /= sum;
    return k;
}

inline void blur_h_row(const Image& in, Image& out, const std::vector<double>& k, int radius, int y) {
    for (int x = 0; x < in.width; ++x)
        for (int c = 0; c < in.channels; ++c) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i) {
                const int xx = std::clamp(x + i, 0, in.width - 1);
                acc += k[static_cast<size_t>(i + radius)] * in.at(y, xx, c);
            }
            out.at(y, x, c) = static_cast<float>(acc);
        }
}

inline void blur_v_row(const Image& in, Image& out, const std::vector<double>& k, int radius, int y) {
    for (int x = 0; x < in.width; ++x)
        for (int c = 0; c < in.channels; ++c) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i) {
                const int yy = std::clamp(y + i, 0, in.height - 1);
                acc += k[static_cast<size_t>(i + radius)] * in.at(yy, x, c);
            }
            out.at(y, x, c) = static_cast<float>(acc);
        }
}

inline void box_row(const Image& in, Image& out, int scale, int oy) {
    const double inv = 1.0 / (static_cast<double>(scale) * scale);
    for (int ox = 0; ox < out.width; ++ox)
        for (int c = 0; c < in.channels; ++c) {
            double acc = 0.0;
            for (int dy = 0; dy < scale; ++dy)
                for (int dx = 0; dx < scale; ++dx) acc += in.at(oy * scale + dy, ox * scale + dx, c);
            out.at(oy, ox, c) = static_cast<float>(acc * inv);
        }
}

void check_blur(double sigma) {
    if (sigma < 0.0) throw ParamError("gaussian_blur: sigma must be >= 0");
}

void check_downsample(const Image& img, int scale) {
    if (scale < 1) throw ParamError("downsample: scale must be >= 1");
    if (img.height % scale != 0)
        throw ShapeError("downsample: height " + std::to_string(img.height) +
                         " not divisible by scale " + std::to_string(scale));
    if (img.width % scale != 0)
        throw ShapeError("downsample: width " + std::to_string(img.width) +
                         " not divisible by scale " + std::to_string(scale));
}

// --- DCT compression -------------------------------------------------------

// JPEG Annex K luminance quantization table.
constexpr std::array<int, 64> kLumaQuant = {
    16, 11, 10, 16, 24,  40,  51,  61,   //
    12, 12, 14, 19, 26,  58,  60,  55,   //
    14, 13, 16, 24, 40,  57,  69,  56,   //
    14, 17, 22, 29, 51,  87,  80,  62,   //
    18, 22, 37, 56, 68,  109, 103, 77,   //
    24, 35, 55, 64, 81,  104, 113, 92,   //
    49, 64, 78, 87, 103, 121, 120, 101,  //
    72, 92, 95, 98, 112, 100, 103, 99,
};

std::array<double, 64> quant_steps(int quality) {
    // libjpeg quality scaling: table entries clamped to [1, 255].
    const int scale = quality < 50 ? 5000 / quality : 200 - 2 * quality;
    std::array<double, 64> q;
    for (int i = 0; i < 64; ++i) {
        int v = (kLumaQuant[static_cast<size_t>(i)] * scale + 50) / 100;
        q[static_cast<size_t>(i)] = static_cast<double>(std::clamp(v, 1, 255));
    }
    return q;
}

struct DctBasis {
    // basis[k][n] = c_k * cos(pi*(2n+1)*k/16), orthonormal rows.
    double b[8][8];
    DctBasis() {
        const double pi = 3.14159265358979323846;
        for (int k = 0; k < 8; ++k) {
            const double ck = k == 0 ? std::sqrt(1.0 / 8.0) : std::sqrt(2.0 / 8.0);
            for (int n = 0; n < 8; ++n) b[k][n] = ck * std::cos(pi * (2 * n + 1) * k / 16.0);
        }
    }
};

const DctBasis& dct_basis() {
    static const DctBasis basis;
    return basis;
}

// Rounds the quantized ratios of one 8x8 block in place.
void compress_block(double blk[8][8], const std::array<double, 64>& q) {
    const DctBasis& B = dct_basis();
    double tmp[8][8], coef[8][8];
    // rows then columns
    for (int y = 0; y < 8; ++y)
        for (int k = 0; k < 8; ++k) {
            double acc = 0.0;
            for (int n = 0; n < 8; ++n) acc += B.b[k][n] * blk[y][n];
            tmp[y][k] = acc;
        }
    for (int x = 0; x < 8; ++x)
        for (int k = 0; k < 8; ++k) {
            double acc = 0.0;
            for (int n = 0; n < 8; ++n) acc += B.b[k][n] * tmp[n][x];
            coef[k][x] = acc;
        }
    for (int v = 0; v < 8; ++v)
        for (int u = 0; u < 8; ++u) {
            const double step = q[static_cast<size_t>(v) * 8 + u];
            coef[v][u] = std::nearbyint(coef[v][u] / step) * step;
        }
    // inverse: transpose of the orthonormal transform
    for (int x = 0; x < 8; ++x)
        for (int n = 0; n < 8; ++n) {
            double acc = 0.0;
            for (int k = 0; k < 8; ++k) acc += B.b[k][n] * coef[k][x];
            tmp[n][x] = acc;
        }
    for (int y = 0; y < 8; ++y)
        for (int n = 0; n < 8; ++n) {
            double acc = 0.0;
            for (int k = 0; k < 8; ++k) acc += B.b[k][n] * tmp[y][k];
            blk[y][n] = acc;
        }
}

inline int mirror_index(int i, int n) {
    if (n == 1) return 0;
    const int period = 2 * n - 2;
    i = ((i % period) + period) % period;
    return i < n ? i : period - i;
}

void jpeg_block_row(const Image& in, Image& out, const std::array<double, 64>& q, int by) {
    const int bw = (in.width + 7) / 8;
    for (int bx = 0; bx < bw; ++bx)
        for (int c = 0; c < in.channels; ++c) {
            double blk[8][8];
            for (int y = 0; y < 8; ++y)
                for (int x = 0; x < 8; ++x) {
                    const int sy = mirror_index(by * 8 + y, in.height);
                    const int sx = mirror_index(bx * 8 + x, in.width);
                    blk[y][x] = in.at(sy, sx, c) * 255.0 - 128.0;
                }
            compress_block(blk, q);
            for (int y = 0; y < 8; ++y) {
                const int oy = by * 8 + y;
                if (oy >= in.height) continue;
                for (int x = 0; x < 8; ++x) {
                    const int ox = bx * 8 + x;
                    if (ox >= in.width) continue;
                    out.at(oy, ox, c) = static_cast<float>((blk[y][x] + 128.0) / 255.0);
                }
            }
        }
}

void check_quality(int quality) {
    if (quality < 1 || quality > 100)
        throw ParamError("jpeg_like: quality must be in [1, 100], got " + std::to_string(quality));
}

}  // namespace

Image gaussian_blur(const Image& img, double sigma) {
    check_blur(sigma);
    if (sigma == 0.0) return img;
    const std::vector<double> k = gaussian_kernel(sigma);
    const int radius = static_cast<int>(k.size() / 2);
    Image tmp(img.height, img.width, img.channels);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < img.height; ++y) blur_h_row(img, tmp, k, radius, y);
    Image out(img.height, img.width, img.channels);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < img.height; ++y) blur_v_row(tmp, out, k, radius, y);
    return out;
}

Image downsample(const Image& img, int scale) {
    check_downsample(img, scale);
    if (scale == 1) return img;
    Image out(img.height / scale, img.width / scale, img.channels);
#pragma omp parallel for schedule(static)
    for (int oy = 0; oy < out.height; ++oy) box_row(img, out, scale, oy);
    return out;
}

Image add_noise(const Image& img, double sigma, Rng& rng) {
    if (sigma < 0.0) throw ParamError("add_noise: sigma must be >= 0");
    if (sigma == 0.0) return img;
    Image out = img;
    std::vector<float> noise(img.data.size());
    rng.fill_normal(noise);
    const int64_t n = static_cast<int64_t>(out.data.size());
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < n; ++i)
        out.data[i] += static_cast<float>(sigma) * noise[static_cast<size_t>(i)];
    return out;
}

Image jpeg_like(const Image& img, int quality) {
    check_quality(quality);
    const std::array<double, 64> q = quant_steps(quality);
    Image out(img.height, img.width, img.channels);
    const int bh = (img.height + 7) / 8;
#pragma omp parallel for schedule(static)
    for (int by = 0; by < bh; ++by) jpeg_block_row(img, out, q, by);
    return out;
}

DegradedPair degrade_pair(const Image& hr, const DegradationConfig& cfg, Rng& rng) {
    cfg.validate();
    if (hr.height % cfg.scale != 0 || hr.width % cfg.scale != 0)
        throw ShapeError("degrade_pair: hr dims " + hr.shape_string() + " not divisible by scale " +
                         std::to_string(cfg.scale));

    DegradedPair out;
    out.blur_sigma = rng.uniform_range(cfg.blur_lo, cfg.blur_hi);
    out.noise_sigma = rng.uniform_range(cfg.noise_lo, cfg.noise_hi);
    out.quality = cfg.jpeg_enabled ? rng.uniform_int(cfg.quality_lo, cfg.quality_hi) : -1;
    if (cfg.second_pass) {
        out.blur_sigma2 = rng.uniform_range(0.0, cfg.blur_hi / 4.0);
        out.noise_sigma2 = rng.uniform_range(0.0, cfg.noise_hi / 2.0);
    }

    Image lr = gaussian_blur(hr, out.blur_sigma);
    lr = downsample(lr, cfg.scale);
    lr = add_noise(lr, out.noise_sigma, rng);
    if (cfg.jpeg_enabled) lr = jpeg_like(lr, out.quality);
    if (cfg.second_pass) {
        lr = gaussian_blur(lr, out.blur_sigma2);
        lr = add_noise(lr, out.noise_sigma2, rng);
    }
    out.y0 = clamp01(bicubic_resize(lr, hr.height, hr.width));
    out.lr = std::move(lr);
    return out;
}

namespace serial {

Image gaussian_blur(const Image& img, double sigma) {
    check_blur(sigma);
    if (sigma == 0.0) return img;
    const std::vector<double> k = gaussian_kernel(sigma);
    const int radius = static_cast<int>(k.size() / 2);
    Image tmp(img.height, img.width, img.channels);
    for (int y = 0; y < img.height; ++y) blur_h_row(img, tmp, k, radius, y);
    Image out(img.height, img.width, img.channels);
    for (int y = 0; y < img.height; ++y) blur_v_row(tmp, out, k, radius, y);
    return out;
}

Image downsample(const Image& img, int scale) {
    check_downsample(img, scale);
    if (scale == 1) return img;
    Image out(img.height / scale, img.width / scale, img.channels);
    for (int oy = 0; oy < out.height; ++oy) box_row(img, out, scale, oy);
    return out;
}

Image jpeg_like(const Image& img, int quality) {
    check_quality(quality);
    const std::array<double, 64> q = quant_steps(quality);
    Image out(img.height, img.width, img.channels);
    const int bh = (img.height + 7) / 8;
    for (int by = 0; by < bh; ++by) jpeg_block_row(img, out, q, by);
    return out;
}

}  // namespace serial

}  // namespace upsr
