#include "promkit/image.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "promkit/error.hpp"

namespace promkit {

Image::Image(std::size_t width, std::size_t height, std::size_t channels, float fill)
    : Image(width, height, channels, std::vector<float>(width * height * channels, fill)) {}

Image::Image(std::size_t width, std::size_t height, std::size_t channels, std::vector<float> data)
    : width_(width), height_(height), channels_(channels), data_(std::move(data)) {
  if (channels != 1 && channels != 3) {
    throw ContractError("image must have 1 or 3 channels, got " + std::to_string(channels));
  }
  if (data_.size() != width * height * channels) {
    throw ContractError("image data length does not match width*height*channels");
  }
}

Heatmap::Heatmap(std::size_t width, std::size_t height, float fill)
    : width_(width), height_(height), data_(width * height, fill) {}

Heatmap::Heatmap(std::size_t width, std::size_t height, std::vector<float> data)
    : width_(width), height_(height), data_(std::move(data)) {
  if (data_.size() != width * height) {
    throw ContractError("heatmap data length does not match width*height");
  }
}

BinaryMask::BinaryMask(std::size_t width, std::size_t height, bool fill)
    : width_(width), height_(height), bits_(width * height, fill ? 1 : 0) {}

std::size_t BinaryMask::count() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

Image to_luma(const Image& image) {
  if (image.channels() == 1) return image;
  Image out(image.width(), image.height(), 1);
  auto src = image.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < image.pixel_count(); ++i) {
    const double r = src[3 * i];
    const double g = src[3 * i + 1];
    const double b = src[3 * i + 2];
    dst[i] = static_cast<float>(0.299 * r + 0.587 * g + 0.114 * b);
  }
  return out;
}

void BlockGrid::validate() const {
  if (block_w == 0 || block_h == 0 || stride_x == 0 || stride_y == 0) {
    throw ContractError("block grid sizes and strides must be positive");
  }
}

std::vector<Block> BlockGrid::blocks(std::size_t width, std::size_t height) const {
  validate();
  std::vector<Block> out;
  for (std::size_t y = 0; y + block_h <= height; y += stride_y) {
    for (std::size_t x = 0; x + block_w <= width; x += stride_x) {
      out.push_back({x, y, block_w, block_h});
    }
  }
  return out;
}

Heatmap broadcast_blocks(const BlockGrid& grid, std::size_t width, std::size_t height,
                         std::span<const double> scores) {
  const auto blocks = grid.blocks(width, height);
  if (blocks.empty()) {
    throw ContractError("image " + std::to_string(width) + "x" + std::to_string(height) +
                        " is smaller than one " + std::to_string(grid.block_w) + "x" +
                        std::to_string(grid.block_h) + " block");
  }
  if (scores.size() != blocks.size()) {
    throw ContractError("block score count does not match grid");
  }

  std::vector<double> sum(width * height, 0.0);
  std::vector<std::uint32_t> hits(width * height, 0);
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const Block& blk = blocks[b];
    for (std::size_t y = blk.y; y < blk.y + blk.h; ++y) {
      for (std::size_t x = blk.x; x < blk.x + blk.w; ++x) {
        sum[y * width + x] += scores[b];
        ++hits[y * width + x];
      }
    }
  }

  // Covered area is the rectangle [0, cover_w) x [0, cover_h) whenever
  // stride <= block size; clamping to it picks the nearest covered pixel.
  std::size_t cover_w = 0;
  std::size_t cover_h = 0;
  for (const Block& blk : blocks) {
    cover_w = std::max(cover_w, blk.x + blk.w);
    cover_h = std::max(cover_h, blk.y + blk.h);
  }

  Heatmap out(width, height);
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      std::size_t sx = std::min(x, cover_w - 1);
      std::size_t sy = std::min(y, cover_h - 1);
      std::size_t idx = sy * width + sx;
      if (hits[idx] == 0) {
        // Gap between strided blocks: fall back to the enclosing block origin.
        sx = (sx / grid.stride_x) * grid.stride_x;
        sy = (sy / grid.stride_y) * grid.stride_y;
        idx = sy * width + sx;
      }
      out.at(x, y) = hits[idx] ? static_cast<float>(sum[idx] / hits[idx]) : 0.0f;
    }
  }
  return out;
}

}  // namespace promkit
