#pragma once

#include <cstddef>

#include "promkit/image.hpp"

namespace promkit {

inline constexpr double kSsmJupEpsilon = 1e-6;

// Residual-statistics artifact map against a bicubic reference.
//
// With R = sr - bicubic(lr, scale) per channel:
//   map(x) = mean_c |R_c(x)| * sigma_local_c(x) / (sigma_global_c + eps)
// where sigma_local is the population standard deviation of R_c over a
// window x window neighbourhood truncated at the image border and
// sigma_global the standard deviation of R_c over the whole image.
//
// Requires sr to be exactly `scale` times lr in both axes with the same
// channel count, and an odd window.
Heatmap ssm_jup_map(const Image& sr, const Image& lr, std::size_t window = 7, std::size_t scale = 4);

}  // namespace promkit
