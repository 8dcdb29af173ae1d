#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "promkit/image.hpp"

namespace promkit {

enum class ElementShape { kSquare, kDisc };

// Centred structuring element. Even sizes are rounded up to the next odd
// size; `requested_size` keeps the original request for reporting.
class StructuringElement {
 public:
  static StructuringElement square(std::size_t size) { return {ElementShape::kSquare, size}; }
  // Disc of the given diameter: (dx,dy) is inside iff dx^2 + dy^2 <= r^2
  // with r = (size - 1) / 2.
  static StructuringElement disc(std::size_t diameter) { return {ElementShape::kDisc, diameter}; }

  ElementShape shape() const { return shape_; }
  std::size_t size() const { return size_; }
  std::size_t requested_size() const { return requested_; }
  bool adjusted() const { return size_ != requested_; }
  std::size_t radius() const { return size_ / 2; }

  // Horizontal half-extent of the element on row dy (|dy| <= radius).
  std::size_t half_width(long dy) const;
  bool contains(long dx, long dy) const;

 private:
  StructuringElement(ElementShape shape, std::size_t size);

  ElementShape shape_;
  std::size_t requested_;
  std::size_t size_;
  std::vector<std::size_t> half_widths_;  // indexed by dy + radius
};

// Map value >= threshold.
BinaryMask binarize(const Heatmap& map, double threshold);

// Set morphology with everything outside the image treated as background.
// Erosion therefore removes a border ring of `radius` pixels.
BinaryMask dilate(const BinaryMask& mask, const StructuringElement& se);
BinaryMask erode(const BinaryMask& mask, const StructuringElement& se);
// Opening and closing are evaluated on the unbounded plane and cropped,
// which keeps them idempotent (open anti-extensive, close extensive).
BinaryMask open(const BinaryMask& mask, const StructuringElement& se);
BinaryMask close(const BinaryMask& mask, const StructuringElement& se);

struct PostprocessSettings {
  std::size_t open_size = 25;
  std::size_t dilate_diameter = 63;
  std::size_t close_size = 25;
};

// Open with a square, dilate with a disc, close with a square.
BinaryMask postprocess_mask(const BinaryMask& mask, const PostprocessSettings& settings = {});

struct BoundingBox {
  std::size_t x0 = 0;
  std::size_t y0 = 0;
  std::size_t x1 = 0;  // inclusive
  std::size_t y1 = 0;  // inclusive
};

struct Component {
  std::vector<std::size_t> pixels;  // row-major indices, ascending
  BoundingBox bbox;
  std::size_t area = 0;
  double strength = 0.0;
};

// 8-connected components with area >= min_area, strongest first. Strength
// is the sum of `strength_map` over the component, or its area without a
// map. Ties go to the component whose box starts first in row-major order.
std::vector<Component> components(const BinaryMask& mask, const Heatmap* strength_map = nullptr,
                                  std::size_t min_area = 1);

}  // namespace promkit
