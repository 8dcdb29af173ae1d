#pragma once

#include <cstddef>

#include "promkit/image.hpp"

namespace promkit {

inline constexpr double kSsimC1 = 0.01 * 0.01;
inline constexpr double kSsimC2 = 0.03 * 0.03;

// Per-pixel SSIM on luma with a Gaussian window (`window` taps, odd).
// Near the border the window is truncated to the image and its weights
// renormalised, so every pixel gets a value. Result lies in [-1,1].
Heatmap ssim_map(const Image& test, const Image& reference, std::size_t window = 11,
                 double sigma = 1.5);

// Baseline detector response: (1 - ssim) / 2, higher = more different.
Heatmap ssim_dissimilarity(const Heatmap& ssim);

}  // namespace promkit
