#pragma once

#include <vector>

#include "upsr/image.hpp"

namespace upsr {

/// Per-pixel nonnegative uncertainty estimate, spatial dims of the source.
struct UncertaintyMap {
    int height = 0;
    int width = 0;
    std::vector<float> values;

    float at(int y, int x) const { return values[static_cast<size_t>(y) * width + x]; }
};

/// Per-pixel noise weighting coefficients, all in [b_u, 1].
struct WeightMap {
    int height = 0;
    int width = 0;
    std::vector<float> values;
    float b_u = 0.4f;
    float psi_max = 0.05f;

    float at(int y, int x) const { return values[static_cast<size_t>(y) * width + x]; }
};

struct WeightingDefaults {
    static constexpr double b_u = 0.4;
    static constexpr double psi_max = 0.05;
};

/// Half the channel-mean absolute residual between a prediction and its
/// input: psi = 0.5 * mean_c |g_y0 - y0| per pixel.
UncertaintyMap estimate_uncertainty(const Image& y0, const Image& g_y0);

/// Optional box blur over an uncertainty map (radius 0 = no-op), exposed as
/// an experiment knob for smoothing raw residual maps.
UncertaintyMap box_smooth(const UncertaintyMap& u, int radius);

/// Piecewise-linear weighting: ((1-b_u)/psi_max)*psi + b_u on [0, psi_max],
/// saturating at 1 above. Continuous at psi_max, monotone nondecreasing.
double weight_coefficient(double psi, double b_u, double psi_max);

/// Elementwise weight_coefficient over a map.
WeightMap build_weight_map(const UncertaintyMap& u, double b_u, double psi_max);

/// All-ones map (the isotropic process, b_u = 1 ablation).
WeightMap uniform_weight_map(int height, int width, float value = 1.0f);

/// Grayscale renderings for heatmap export: uncertainty maps scale [0,max]
/// to [0,1], weight maps scale [b_u,1] to [0,1].
Image uncertainty_heatmap(const UncertaintyMap& u);
Image weight_heatmap(const WeightMap& w);

}  // namespace upsr
