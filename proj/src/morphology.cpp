#include "promkit/morphology.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "promkit/error.hpp"

namespace promkit {

StructuringElement::StructuringElement(ElementShape shape, std::size_t size)
    : shape_(shape), requested_(size), size_(size % 2 == 0 ? size + 1 : size) {
  if (size == 0) throw ContractError("structuring element size must be positive");
  const auto r = static_cast<long>(radius());
  half_widths_.resize(size_);
  for (long dy = -r; dy <= r; ++dy) {
    std::size_t hw = static_cast<std::size_t>(r);
    if (shape_ == ElementShape::kDisc) {
      // Largest dx with dx^2 + dy^2 <= r^2, in integers.
      long dx = static_cast<long>(std::sqrt(static_cast<double>(r * r - dy * dy)));
      while (dx * dx + dy * dy > r * r) --dx;
      while ((dx + 1) * (dx + 1) + dy * dy <= r * r) ++dx;
      hw = static_cast<std::size_t>(dx);
    }
    half_widths_[static_cast<std::size_t>(dy + r)] = hw;
  }
}

std::size_t StructuringElement::half_width(long dy) const {
  return half_widths_[static_cast<std::size_t>(dy + static_cast<long>(radius()))];
}

bool StructuringElement::contains(long dx, long dy) const {
  const auto r = static_cast<long>(radius());
  if (dy < -r || dy > r) return false;
  return std::labs(dx) <= static_cast<long>(half_width(dy));
}

BinaryMask binarize(const Heatmap& map, double threshold) {
  BinaryMask out(map.width(), map.height());
  for (std::size_t i = 0; i < map.size(); ++i) out.set(i, static_cast<double>(map[i]) >= threshold);
  return out;
}

namespace {

// Per-row prefix counts: prefix[y * (w + 1) + x] = set pixels in row y before x.
std::vector<std::uint32_t> row_prefix(const BinaryMask& m) {
  const std::size_t w = m.width();
  std::vector<std::uint32_t> prefix(m.height() * (w + 1), 0);
  for (std::size_t y = 0; y < m.height(); ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      prefix[y * (w + 1) + x + 1] = prefix[y * (w + 1) + x] + (m.at(x, y) ? 1u : 0u);
    }
  }
  return prefix;
}

BinaryMask pad(const BinaryMask& m, std::size_t by) {
  BinaryMask out(m.width() + 2 * by, m.height() + 2 * by);
  for (std::size_t y = 0; y < m.height(); ++y) {
    for (std::size_t x = 0; x < m.width(); ++x) out.set(x + by, y + by, m.at(x, y));
  }
  return out;
}

BinaryMask crop(const BinaryMask& m, std::size_t by, std::size_t w, std::size_t h) {
  BinaryMask out(w, h);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) out.set(x, y, m.at(x + by, y + by));
  }
  return out;
}

}  // namespace

BinaryMask dilate(const BinaryMask& mask, const StructuringElement& se) {
  const auto w = static_cast<long>(mask.width());
  const auto h = static_cast<long>(mask.height());
  const auto r = static_cast<long>(se.radius());
  const auto prefix = row_prefix(mask);
  const auto stride = static_cast<std::size_t>(w + 1);
  BinaryMask out(mask.width(), mask.height());
  for (long y = 0; y < h; ++y) {
    for (long x = 0; x < w; ++x) {
      bool hit = false;
      for (long dy = -r; dy <= r && !hit; ++dy) {
        const long yy = y + dy;
        if (yy < 0 || yy >= h) continue;
        const auto hw = static_cast<long>(se.half_width(dy));
        const long x0 = std::max(0L, x - hw);
        const long x1 = std::min(w, x + hw + 1);
        const std::size_t row = static_cast<std::size_t>(yy) * stride;
        hit = prefix[row + static_cast<std::size_t>(x1)] > prefix[row + static_cast<std::size_t>(x0)];
      }
      out.set(static_cast<std::size_t>(x), static_cast<std::size_t>(y), hit);
    }
  }
  return out;
}

BinaryMask erode(const BinaryMask& mask, const StructuringElement& se) {
  const auto w = static_cast<long>(mask.width());
  const auto h = static_cast<long>(mask.height());
  const auto r = static_cast<long>(se.radius());
  const auto prefix = row_prefix(mask);
  const auto stride = static_cast<std::size_t>(w + 1);
  BinaryMask out(mask.width(), mask.height());
  for (long y = 0; y < h; ++y) {
    if (y - r < 0 || y + r >= h) continue;
    for (long x = 0; x < w; ++x) {
      bool all = true;
      for (long dy = -r; dy <= r && all; ++dy) {
        const auto hw = static_cast<long>(se.half_width(dy));
        if (x - hw < 0 || x + hw >= w) {
          all = false;
          break;
        }
        const std::size_t row = static_cast<std::size_t>(y + dy) * stride;
        const auto n = prefix[row + static_cast<std::size_t>(x + hw + 1)] - prefix[row + static_cast<std::size_t>(x - hw)];
        all = n == static_cast<std::uint32_t>(2 * hw + 1);
      }
      out.set(static_cast<std::size_t>(x), static_cast<std::size_t>(y), all);
    }
  }
  return out;
}

BinaryMask open(const BinaryMask& mask, const StructuringElement& se) {
  return dilate(erode(mask, se), se);
}

BinaryMask close(const BinaryMask& mask, const StructuringElement& se) {
  const std::size_t r = se.radius();
  return crop(erode(dilate(pad(mask, r), se), se), r, mask.width(), mask.height());
}

BinaryMask postprocess_mask(const BinaryMask& mask, const PostprocessSettings& settings) {
  const auto opened = open(mask, StructuringElement::square(settings.open_size));
  const auto grown = dilate(opened, StructuringElement::disc(settings.dilate_diameter));
  return close(grown, StructuringElement::square(settings.close_size));
}

std::vector<Component> components(const BinaryMask& mask, const Heatmap* strength_map,
                                  std::size_t min_area) {
  if (strength_map && !same_dims(*strength_map, mask)) {
    throw ContractError("components: strength map does not match mask");
  }
  const auto w = static_cast<long>(mask.width());
  const auto h = static_cast<long>(mask.height());
  std::vector<std::uint8_t> seen(mask.size(), 0);
  std::vector<std::size_t> stack;
  std::vector<Component> out;

  for (std::size_t start = 0; start < mask.size(); ++start) {
    if (!mask[start] || seen[start]) continue;
    Component comp;
    comp.bbox = {mask.width(), mask.height(), 0, 0};
    seen[start] = 1;
    stack.push_back(start);
    while (!stack.empty()) {
      const std::size_t idx = stack.back();
      stack.pop_back();
      comp.pixels.push_back(idx);
      const long x = static_cast<long>(idx) % w;
      const long y = static_cast<long>(idx) / w;
      for (long dy = -1; dy <= 1; ++dy) {
        for (long dx = -1; dx <= 1; ++dx) {
          const long nx = x + dx;
          const long ny = y + dy;
          if ((dx == 0 && dy == 0) || nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
          const auto n = static_cast<std::size_t>(ny * w + nx);
          if (mask[n] && !seen[n]) {
            seen[n] = 1;
            stack.push_back(n);
          }
        }
      }
    }
    std::sort(comp.pixels.begin(), comp.pixels.end());
    comp.area = comp.pixels.size();
    if (comp.area < min_area) continue;
    for (std::size_t idx : comp.pixels) {
      const auto x = idx % mask.width();
      const auto y = idx / mask.width();
      comp.bbox.x0 = std::min(comp.bbox.x0, x);
      comp.bbox.y0 = std::min(comp.bbox.y0, y);
      comp.bbox.x1 = std::max(comp.bbox.x1, x);
      comp.bbox.y1 = std::max(comp.bbox.y1, y);
      comp.strength += strength_map ? static_cast<double>((*strength_map)[idx]) : 1.0;
    }
    out.push_back(std::move(comp));
  }

  std::stable_sort(out.begin(), out.end(), [](const Component& a, const Component& b) {
    if (a.strength != b.strength) return a.strength > b.strength;
    return std::tie(a.bbox.y0, a.bbox.x0) < std::tie(b.bbox.y0, b.bbox.x0);
  });
  return out;
}

}  // namespace promkit
