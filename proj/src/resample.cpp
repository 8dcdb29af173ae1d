#include "promkit/resample.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "promkit/error.hpp"

namespace promkit {

double cubic_weight(double t) {
  constexpr double a = -0.5;
  t = std::abs(t);
  if (t <= 1.0) return ((a + 2.0) * t - (a + 3.0)) * t * t + 1.0;
  if (t < 2.0) return ((a * t - 5.0 * a) * t + 8.0 * a) * t - 4.0 * a;
  return 0.0;
}

namespace {

struct Taps {
  std::array<std::size_t, 4> index;
  std::array<double, 4> weight;
};

// Source taps for each destination coordinate along one axis.
std::vector<Taps> axis_taps(std::size_t src_len, std::size_t scale) {
  std::vector<Taps> taps(src_len * scale);
  const auto last = static_cast<long>(src_len) - 1;
  for (std::size_t d = 0; d < taps.size(); ++d) {
    const double s = (static_cast<double>(d) + 0.5) / static_cast<double>(scale) - 0.5;
    const double base = std::floor(s);
    const double frac = s - base;
    for (int k = 0; k < 4; ++k) {
      const long i = static_cast<long>(base) - 1 + k;
      taps[d].index[k] = static_cast<std::size_t>(std::clamp(i, 0L, last));
      taps[d].weight[k] = cubic_weight(frac - (k - 1));
    }
  }
  return taps;
}

}  // namespace

Image upscale_bicubic(const Image& src, std::size_t scale) {
  if (scale == 0) throw ContractError("upscale factor must be positive");
  if (src.width() == 0 || src.height() == 0) throw ContractError("cannot upscale an empty image");
  const std::size_t c = src.channels();
  const std::size_t out_w = src.width() * scale;
  const std::size_t out_h = src.height() * scale;
  const auto tx = axis_taps(src.width(), scale);
  const auto ty = axis_taps(src.height(), scale);

  // Horizontal pass into a double buffer, then vertical.
  std::vector<double> rows(out_w * src.height() * c);
  for (std::size_t y = 0; y < src.height(); ++y) {
    for (std::size_t x = 0; x < out_w; ++x) {
      for (std::size_t ch = 0; ch < c; ++ch) {
        double acc = 0.0;
        for (int k = 0; k < 4; ++k) acc += tx[x].weight[k] * src.at(tx[x].index[k], y, ch);
        rows[(y * out_w + x) * c + ch] = acc;
      }
    }
  }
  Image out(out_w, out_h, c);
  for (std::size_t y = 0; y < out_h; ++y) {
    for (std::size_t x = 0; x < out_w; ++x) {
      for (std::size_t ch = 0; ch < c; ++ch) {
        double acc = 0.0;
        for (int k = 0; k < 4; ++k) acc += ty[y].weight[k] * rows[(ty[y].index[k] * out_w + x) * c + ch];
        out.at(x, y, ch) = static_cast<float>(std::clamp(acc, 0.0, 1.0));
      }
    }
  }
  return out;
}

}  // namespace promkit
