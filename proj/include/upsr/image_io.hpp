#pragma once

#include <string>

#include "upsr/image.hpp"

namespace upsr {

/// Read an 8-bit PNG as gray (1 channel) or RGB (3 channels); palette images
/// are expanded, alpha is stripped, 16-bit files are rejected. Samples map
/// byte/255 into [0,1].
Image read_png(const std::string& path);

/// Write a 1- or 3-channel image as an 8-bit PNG; samples are clamped to
/// [0,1] and rounded to byte values.
void write_png(const Image& img, const std::string& path);

}  // namespace upsr
