#include "upsr/uncertainty.hpp"

#include <algorithm>
#include <cmath>

namespace upsr {

UncertaintyMap estimate_uncertainty(const Image& y0, const Image& g_y0) {
    require_same_shape(y0, g_y0, "estimate_uncertainty");
    UncertaintyMap u;
    u.height = y0.height;
    u.width = y0.width;
    u.values.resize(y0.pixel_count());
    const int C = y0.channels;
#pragma omp parallel for schedule(static)
    for (int y = 0; y < y0.height; ++y)
        for (int x = 0; x < y0.width; ++x) {
            double acc = 0.0;
            for (int c = 0; c < C; ++c) acc += std::abs(static_cast<double>(g_y0.at(y, x, c)) - y0.at(y, x, c));
            u.values[static_cast<size_t>(y) * y0.width + x] = static_cast<float>(0.5 * acc / C);
        }
    return u;
}

UncertaintyMap box_smooth(const UncertaintyMap& u, int radius) {
    if (radius < 0) throw ParamError("box_smooth: radius must be >= 0");
    if (radius == 0) return u;
    UncertaintyMap out = u;
#pragma omp parallel for schedule(static)
    for (int y = 0; y < u.height; ++y)
        for (int x = 0; x < u.width; ++x) {
            double acc = 0.0;
            int n = 0;
            for (int dy = -radius; dy <= radius; ++dy)
                for (int dx = -radius; dx <= radius; ++dx) {
                    const int yy = std::clamp(y + dy, 0, u.height - 1);
                    const int xx = std::clamp(x + dx, 0, u.width - 1);
                    acc += u.at(yy, xx);
                    ++n;
                }
            out.values[static_cast<size_t>(y) * u.width + x] = static_cast<float>(acc / n);
        }
    return out;
}

static void check_weight_params(double b_u, double psi_max) {
    if (!(b_u > 0.0 && b_u <= 1.0))
        throw ParamError("weight_coefficient: b_u must be in (0, 1], got " + std::to_string(b_u));
    if (!(psi_max > 0.0))
        throw ParamError("weight_coefficient: psi_max must be > 0, got " + std::to_string(psi_max));
}

double weight_coefficient(double psi, double b_u, double psi_max) {
    check_weight_params(b_u, psi_max);
    if (!(psi >= 0.0))
        throw ParamError("weight_coefficient: psi must be >= 0, got " + std::to_string(psi));
    if (psi >= psi_max) return 1.0;
    return (1.0 - b_u) / psi_max * psi + b_u;
}

WeightMap build_weight_map(const UncertaintyMap& u, double b_u, double psi_max) {
    check_weight_params(b_u, psi_max);
    WeightMap w;
    w.height = u.height;
    w.width = u.width;
    w.b_u = static_cast<float>(b_u);
    w.psi_max = static_cast<float>(psi_max);
    w.values.resize(u.values.size());
    const int64_t n = static_cast<int64_t>(u.values.size());
    const double slope = (1.0 - b_u) / psi_max;
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < n; ++i) {
        const double psi = u.values[i];
        w.values[i] = psi >= psi_max ? 1.0f : static_cast<float>(slope * psi + b_u);
    }
    return w;
}

WeightMap uniform_weight_map(int height, int width, float value) {
    WeightMap w;
    w.height = height;
    w.width = width;
    w.b_u = value;
    w.values.assign(static_cast<size_t>(height) * width, value);
    return w;
}

Image uncertainty_heatmap(const UncertaintyMap& u) {
    Image img(u.height, u.width, 1);
    const float peak = u.values.empty() ? 0.0f : *std::max_element(u.values.begin(), u.values.end());
    const float inv = peak > 0.0f ? 1.0f / peak : 0.0f;
    for (size_t i = 0; i < u.values.size(); ++i) img.data[i] = u.values[i] * inv;
    return img;
}

Image weight_heatmap(const WeightMap& w) {
    Image img(w.height, w.width, 1);
    const float span = 1.0f - w.b_u;
    const float inv = span > 0.0f ? 1.0f / span : 0.0f;
    for (size_t i = 0; i < w.values.size(); ++i) img.data[i] = (w.values[i] - w.b_u) * inv;
    return img;
}

}  // namespace upsr
