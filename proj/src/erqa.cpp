#include "promkit/erqa.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "promkit/error.hpp"

namespace promkit {

std::vector<double> sobel_magnitude(const Image& gray) {
  const auto w = static_cast<long>(gray.width());
  const auto h = static_cast<long>(gray.height());
  auto px = [&](long x, long y) -> double {
    x = std::clamp(x, 0L, w - 1);
    y = std::clamp(y, 0L, h - 1);
    return gray.at(static_cast<std::size_t>(x), static_cast<std::size_t>(y));
  };
  std::vector<double> mag(gray.pixel_count());
  for (long y = 0; y < h; ++y) {
    for (long x = 0; x < w; ++x) {
      const double gx = (px(x + 1, y - 1) + 2.0 * px(x + 1, y) + px(x + 1, y + 1)) -
                        (px(x - 1, y - 1) + 2.0 * px(x - 1, y) + px(x - 1, y + 1));
      const double gy = (px(x - 1, y + 1) + 2.0 * px(x, y + 1) + px(x + 1, y + 1)) -
                        (px(x - 1, y - 1) + 2.0 * px(x, y - 1) + px(x + 1, y - 1));
      mag[static_cast<std::size_t>(y * w + x)] = std::sqrt(gx * gx + gy * gy);
    }
  }
  return mag;
}

namespace {

int bin_of(double v, double max_value) {
  if (max_value <= 0.0) return 0;
  return std::min(255, static_cast<int>(v / max_value * 256.0));
}

}  // namespace

int otsu_bin(std::span<const double> values, double* max_value) {
  double maxv = 0.0;
  for (double v : values) maxv = std::max(maxv, v);
  if (max_value) *max_value = maxv;
  if (values.empty() || maxv <= 0.0) return 255;

  std::array<double, 256> hist{};
  for (double v : values) hist[static_cast<std::size_t>(bin_of(v, maxv))] += 1.0;

  const double total = static_cast<double>(values.size());
  double sum_all = 0.0;
  for (int i = 0; i < 256; ++i) sum_all += i * hist[static_cast<std::size_t>(i)];

  double weight_bg = 0.0;
  double sum_bg = 0.0;
  double best = -1.0;
  int best_bin = 255;
  for (int k = 0; k < 255; ++k) {
    weight_bg += hist[static_cast<std::size_t>(k)];
    sum_bg += k * hist[static_cast<std::size_t>(k)];
    const double weight_fg = total - weight_bg;
    if (weight_bg == 0.0 || weight_fg == 0.0) continue;
    const double mean_bg = sum_bg / weight_bg;
    const double mean_fg = (sum_all - sum_bg) / weight_fg;
    const double between = weight_bg * weight_fg * (mean_bg - mean_fg) * (mean_bg - mean_fg);
    if (between > best) {
      best = between;
      best_bin = k;
    }
  }
  return best_bin;
}

BinaryMask detect_edges(const Image& image) {
  const Image gray = to_luma(image);
  const auto mag = sobel_magnitude(gray);
  double maxv = 0.0;
  const int threshold_bin = otsu_bin(mag, &maxv);
  BinaryMask edges(gray.width(), gray.height());
  for (std::size_t i = 0; i < mag.size(); ++i) {
    edges.set(i, bin_of(mag[i], maxv) > threshold_bin);
  }
  return edges;
}

std::size_t greedy_edge_matches(std::span<const Point> test, std::span<const Point> reference,
                                double radius) {
  const double r2 = radius * radius;
  std::vector<bool> used(reference.size(), false);
  std::size_t matches = 0;
  for (const Point& t : test) {
    std::size_t best = reference.size();
    double best_d2 = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < reference.size(); ++j) {
      if (used[j]) continue;
      const double dx = t.x - reference[j].x;
      const double dy = t.y - reference[j].y;
      const double d2 = dx * dx + dy * dy;
      if (d2 <= r2 && d2 < best_d2) {
        best_d2 = d2;
        best = j;
      }
    }
    if (best < reference.size()) {
      used[best] = true;
      ++matches;
    }
  }
  return matches;
}

Heatmap erqa_map(const Image& test, const Image& reference, const BlockGrid& grid, double radius) {
  if (!same_dims(test, reference)) throw ContractError("erqa_map: images differ in size");
  const BinaryMask test_edges = detect_edges(test);
  const BinaryMask ref_edges = detect_edges(reference);

  const auto blocks = grid.blocks(test.width(), test.height());
  std::vector<double> scores;
  scores.reserve(blocks.size());
  std::vector<Point> tp;
  std::vector<Point> rp;
  for (const Block& b : blocks) {
    tp.clear();
    rp.clear();
    for (std::size_t y = b.y; y < b.y + b.h; ++y) {
      for (std::size_t x = b.x; x < b.x + b.w; ++x) {
        if (test_edges.at(x, y)) tp.push_back({static_cast<int>(x), static_cast<int>(y)});
        if (ref_edges.at(x, y)) rp.push_back({static_cast<int>(x), static_cast<int>(y)});
      }
    }
    if (tp.empty() && rp.empty()) {
      scores.push_back(1.0);
      continue;
    }
    const auto m = static_cast<double>(greedy_edge_matches(tp, rp, radius));
    scores.push_back(2.0 * m / static_cast<double>(tp.size() + rp.size()));
  }
  return broadcast_blocks(grid, test.width(), test.height(), scores);
}

}  // namespace promkit
