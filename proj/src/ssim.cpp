#include "promkit/ssim.hpp"

#include <cmath>
#include <vector>

#include "promkit/error.hpp"

namespace promkit {
namespace {

std::vector<double> gaussian_taps(std::size_t window, double sigma) {
  std::vector<double> taps(window);
  const auto half = static_cast<long>(window / 2);
  for (long i = -half; i <= half; ++i) {
    taps[static_cast<std::size_t>(i + half)] = std::exp(-(i * i) / (2.0 * sigma * sigma));
  }
  return taps;
}

// Truncated, renormalised separable blur of a plane.
std::vector<double> blur(const std::vector<double>& in, std::size_t w, std::size_t h,
                         const std::vector<double>& taps) {
  const auto half = static_cast<long>(taps.size() / 2);
  std::vector<double> tmp(in.size());
  std::vector<double> out(in.size());
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      double acc = 0.0;
      double norm = 0.0;
      for (long k = -half; k <= half; ++k) {
        const long xx = static_cast<long>(x) + k;
        if (xx < 0 || xx >= static_cast<long>(w)) continue;
        const double wt = taps[static_cast<std::size_t>(k + half)];
        acc += wt * in[y * w + static_cast<std::size_t>(xx)];
        norm += wt;
      }
      tmp[y * w + x] = acc / norm;
    }
  }
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      double acc = 0.0;
      double norm = 0.0;
      for (long k = -half; k <= half; ++k) {
        const long yy = static_cast<long>(y) + k;
        if (yy < 0 || yy >= static_cast<long>(h)) continue;
        const double wt = taps[static_cast<std::size_t>(k + half)];
        acc += wt * tmp[static_cast<std::size_t>(yy) * w + x];
        norm += wt;
      }
      out[y * w + x] = acc / norm;
    }
  }
  return out;
}

}  // namespace

Heatmap ssim_map(const Image& test, const Image& reference, std::size_t window, double sigma) {
  if (!test.same_shape(reference)) throw ContractError("ssim_map: images differ in shape");
  if (window == 0 || window % 2 == 0) throw ContractError("ssim_map: window must be odd");
  if (!(sigma > 0.0)) throw ContractError("ssim_map: sigma must be positive");

  const Image a = to_luma(test);
  const Image b = to_luma(reference);
  const std::size_t w = a.width();
  const std::size_t h = a.height();
  const std::size_t n = w * h;

  std::vector<double> x(n), y(n), xx(n), yy(n), xy(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = a.data()[i];
    y[i] = b.data()[i];
    xx[i] = x[i] * x[i];
    yy[i] = y[i] * y[i];
    xy[i] = x[i] * y[i];
  }
  const auto taps = gaussian_taps(window, sigma);
  const auto mx = blur(x, w, h, taps);
  const auto my = blur(y, w, h, taps);
  const auto sxx = blur(xx, w, h, taps);
  const auto syy = blur(yy, w, h, taps);
  const auto sxy = blur(xy, w, h, taps);

  Heatmap out(w, h);
  for (std::size_t i = 0; i < n; ++i) {
    const double var_x = sxx[i] - mx[i] * mx[i];
    const double var_y = syy[i] - my[i] * my[i];
    const double cov = sxy[i] - mx[i] * my[i];
    const double num = (2.0 * mx[i] * my[i] + kSsimC1) * (2.0 * cov + kSsimC2);
    const double den = (mx[i] * mx[i] + my[i] * my[i] + kSsimC1) * (var_x + var_y + kSsimC2);
    out[i] = static_cast<float>(num / den);
  }
  return out;
}

Heatmap ssim_dissimilarity(const Heatmap& ssim) {
  Heatmap out(ssim.width(), ssim.height());
  for (std::size_t i = 0; i < ssim.size(); ++i) {
    out[i] = static_cast<float>((1.0 - static_cast<double>(ssim[i])) / 2.0);
  }
  return out;
}

}  // namespace promkit
