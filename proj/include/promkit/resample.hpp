#pragma once

#include <cstddef>

#include "promkit/image.hpp"

namespace promkit {

// Catmull-Rom cubic kernel (a = -0.5).
double cubic_weight(double t);

// Bicubic upscaling by an integer factor with pixel-centre alignment and
// edge-clamped sampling. Output is clamped to [0,1].
Image upscale_bicubic(const Image& src, std::size_t scale);

}  // namespace promkit
