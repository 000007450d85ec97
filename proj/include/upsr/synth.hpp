#pragma once

#include "upsr/image.hpp"
#include "upsr/rng.hpp"

namespace upsr {

/// Procedural HR test patch: smooth low-frequency background plus a few
/// step edges and one textured region, clamped to [0,1]. Degrading these
/// yields the flat-dominated, long-tailed residual statistics the pipeline
/// is tuned for.
Image synth_patch(int h, int w, int c, Rng& rng);

/// Left half constant, right half high-amplitude checkerboard texture with
/// jitter. Used for flat-vs-textured noise weighting measurements.
Image half_flat_half_texture(int h, int w, int c, Rng& rng);

/// Uniform [0,1] noise image.
Image random_image(int h, int w, int c, Rng& rng);

}  // namespace upsr
