#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "upsr/errors.hpp"

namespace upsr {

/// Dense H x W x C float raster, row-major with interleaved channels.
/// Nominal range is [0,1]; diffusion intermediates are allowed to exceed it.
struct Image {
    int height = 0;
    int width = 0;
    int channels = 0;
    std::vector<float> data;

    Image() = default;

    Image(int h, int w, int c, float fill = 0.0f) : height(h), width(w), channels(c) {
        if (h < 1 || w < 1 || c < 1)
            throw ShapeError("image dimensions must be >= 1, got " + shape_string(h, w, c));
        data.assign(static_cast<size_t>(h) * w * c, fill);
    }

    static Image zeros(int h, int w, int c) { return Image(h, w, c, 0.0f); }
    static Image constant(int h, int w, int c, float v) { return Image(h, w, c, v); }

    float& at(int y, int x, int c) { return data[(static_cast<size_t>(y) * width + x) * channels + c]; }
    float at(int y, int x, int c) const { return data[(static_cast<size_t>(y) * width + x) * channels + c]; }

    size_t sample_count() const { return data.size(); }
    size_t pixel_count() const { return static_cast<size_t>(height) * width; }

    bool same_shape(const Image& o) const {
        return height == o.height && width == o.width && channels == o.channels;
    }

    std::string shape_string() const { return shape_string(height, width, channels); }

    static std::string shape_string(int h, int w, int c) {
        return std::to_string(h) + "x" + std::to_string(w) + "x" + std::to_string(c);
    }
};

inline void require_same_shape(const Image& a, const Image& b, const char* what) {
    if (!a.same_shape(b))
        throw ShapeError(std::string(what) + ": shape mismatch, " + a.shape_string() + " vs " +
                         b.shape_string());
}

/// Clip every sample to [0,1].
Image clamp01(const Image& img);

double min_sample(const Image& img);
double max_sample(const Image& img);
double sum_samples(const Image& img);

}  // namespace upsr
