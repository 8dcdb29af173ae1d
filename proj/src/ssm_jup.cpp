#include "promkit/ssm_jup.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "promkit/error.hpp"
#include "promkit/resample.hpp"

namespace promkit {
namespace {

// Summed-area table with a zero row/column in front.
class IntegralImage {
 public:
  IntegralImage(const std::vector<double>& v, std::size_t w, std::size_t h)
      : w_(w + 1), sums_((w + 1) * (h + 1), 0.0) {
    for (std::size_t y = 0; y < h; ++y) {
      double row = 0.0;
      for (std::size_t x = 0; x < w; ++x) {
        row += v[y * w + x];
        sums_[(y + 1) * w_ + (x + 1)] = sums_[y * w_ + (x + 1)] + row;
      }
    }
  }

  // Sum over [x0, x1) x [y0, y1).
  double sum(std::size_t x0, std::size_t y0, std::size_t x1, std::size_t y1) const {
    return sums_[y1 * w_ + x1] - sums_[y0 * w_ + x1] - sums_[y1 * w_ + x0] + sums_[y0 * w_ + x0];
  }

 private:
  std::size_t w_;
  std::vector<double> sums_;
};

}  // namespace

Heatmap ssm_jup_map(const Image& sr, const Image& lr, std::size_t window, std::size_t scale) {
  if (window == 0 || window % 2 == 0) throw ContractError("ssm_jup: window must be odd");
  if (scale == 0 || sr.width() != lr.width() * scale || sr.height() != lr.height() * scale) {
    throw ContractError("ssm_jup: sr is " + std::to_string(sr.width()) + "x" +
                        std::to_string(sr.height()) + ", expected exactly " + std::to_string(scale) +
                        "x the " + std::to_string(lr.width()) + "x" + std::to_string(lr.height()) +
                        " input");
  }
  if (sr.channels() != lr.channels()) throw ContractError("ssm_jup: channel count mismatch");

  const Image reference = upscale_bicubic(lr, scale);
  const std::size_t w = sr.width();
  const std::size_t h = sr.height();
  const std::size_t n = w * h;
  const std::size_t channels = sr.channels();
  const std::size_t half = window / 2;

  std::vector<double> acc(n, 0.0);
  std::vector<double> r(n), r2(n);
  for (std::size_t c = 0; c < channels; ++c) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      r[i] = static_cast<double>(sr.data()[i * channels + c]) -
             static_cast<double>(reference.data()[i * channels + c]);
      r2[i] = r[i] * r[i];
      mean += r[i];
    }
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) var += (r[i] - mean) * (r[i] - mean);
    const double sigma_global = std::sqrt(var / static_cast<double>(n));

    const IntegralImage s1(r, w, h);
    const IntegralImage s2(r2, w, h);
    for (std::size_t y = 0; y < h; ++y) {
      const std::size_t y0 = y >= half ? y - half : 0;
      const std::size_t y1 = std::min(h, y + half + 1);
      for (std::size_t x = 0; x < w; ++x) {
        const std::size_t i = y * w + x;
        if (r[i] == 0.0) continue;
        const std::size_t x0 = x >= half ? x - half : 0;
        const std::size_t x1 = std::min(w, x + half + 1);
        const double count = static_cast<double>((x1 - x0) * (y1 - y0));
        const double m = s1.sum(x0, y0, x1, y1) / count;
        const double local_var = std::max(0.0, s2.sum(x0, y0, x1, y1) / count - m * m);
        acc[i] += std::abs(r[i]) * std::sqrt(local_var) / (sigma_global + kSsmJupEpsilon);
      }
    }
  }

  Heatmap out(w, h);
  for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<float>(acc[i] / static_cast<double>(channels));
  return out;
}

}  // namespace promkit
