#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "promkit/image.hpp"

namespace promkit {

// Sobel gradient magnitude of a single-channel image, replicate border.
std::vector<double> sobel_magnitude(const Image& gray);

// Otsu threshold over a 256-bin histogram of `values` on [0, max].
// Returns the last background bin; values whose bin index exceeds it
// are foreground. Returns 255 (nothing above) for a constant input.
int otsu_bin(std::span<const double> values, double* max_value = nullptr);

// Edge map: Sobel magnitude above the image's own Otsu threshold.
BinaryMask detect_edges(const Image& image);

struct Point {
  int x = 0;
  int y = 0;
};

// Greedy matching: each test point, in the given order, takes the nearest
// unmatched reference point with squared distance <= radius^2 (ties go to
// the earlier reference point). Returns the number of matched pairs.
std::size_t greedy_edge_matches(std::span<const Point> test, std::span<const Point> reference,
                                double radius);

// Edge-restoration fidelity per block: F1 of matched edge pixels, 1.0 for
// blocks without edges in either image, broadcast to block pixels.
// Edges are detected on luma over the whole image; matching stays inside
// each block.
Heatmap erqa_map(const Image& test, const Image& reference, const BlockGrid& grid,
                 double radius = 2.0);

}  // namespace promkit
