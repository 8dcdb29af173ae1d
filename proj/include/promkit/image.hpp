#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace promkit {

// Float image in [0,1], row-major, channel-interleaved. 1 or 3 channels.
class Image {
 public:
  Image() = default;
  Image(std::size_t width, std::size_t height, std::size_t channels, float fill = 0.0f);
  Image(std::size_t width, std::size_t height, std::size_t channels, std::vector<float> data);

  std::size_t width() const { return width_; }
  std::size_t height() const { return height_; }
  std::size_t channels() const { return channels_; }
  std::size_t pixel_count() const { return width_ * height_; }

  float at(std::size_t x, std::size_t y, std::size_t c = 0) const {
    return data_[(y * width_ + x) * channels_ + c];
  }
  float& at(std::size_t x, std::size_t y, std::size_t c = 0) {
    return data_[(y * width_ + x) * channels_ + c];
  }

  std::span<const float> data() const { return data_; }
  std::span<float> data() { return data_; }

  bool same_shape(const Image& other) const {
    return width_ == other.width_ && height_ == other.height_ && channels_ == other.channels_;
  }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::size_t channels_ = 1;
  std::vector<float> data_;
};

// Single-channel float map: feature maps and prominence predictions.
class Heatmap {
 public:
  Heatmap() = default;
  Heatmap(std::size_t width, std::size_t height, float fill = 0.0f);
  Heatmap(std::size_t width, std::size_t height, std::vector<float> data);

  std::size_t width() const { return width_; }
  std::size_t height() const { return height_; }
  std::size_t size() const { return data_.size(); }

  float at(std::size_t x, std::size_t y) const { return data_[y * width_ + x]; }
  float& at(std::size_t x, std::size_t y) { return data_[y * width_ + x]; }
  float operator[](std::size_t i) const { return data_[i]; }
  float& operator[](std::size_t i) { return data_[i]; }

  std::span<const float> data() const { return data_; }
  std::span<float> data() { return data_; }

  friend bool operator==(const Heatmap&, const Heatmap&) = default;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<float> data_;
};

class BinaryMask {
 public:
  BinaryMask() = default;
  BinaryMask(std::size_t width, std::size_t height, bool fill = false);

  std::size_t width() const { return width_; }
  std::size_t height() const { return height_; }
  std::size_t size() const { return bits_.size(); }

  bool at(std::size_t x, std::size_t y) const { return bits_[y * width_ + x] != 0; }
  void set(std::size_t x, std::size_t y, bool v) { bits_[y * width_ + x] = v ? 1 : 0; }
  bool operator[](std::size_t i) const { return bits_[i] != 0; }
  void set(std::size_t i, bool v) { bits_[i] = v ? 1 : 0; }

  std::size_t count() const;
  bool empty() const { return count() == 0; }

  std::span<const std::uint8_t> bits() const { return bits_; }

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<std::uint8_t> bits_;
};

template <typename A, typename B>
bool same_dims(const A& a, const B& b) {
  return a.width() == b.width() && a.height() == b.height();
}

// Rec. 601 luma of an RGB image; single-channel images are copied.
Image to_luma(const Image& image);

// Axis-aligned block: top-left corner plus extent.
struct Block {
  std::size_t x = 0;
  std::size_t y = 0;
  std::size_t w = 0;
  std::size_t h = 0;
};

// Block layout anchored at (0,0). Blocks that would cross the right or
// bottom border are dropped.
struct BlockGrid {
  std::size_t block_w = 8;
  std::size_t block_h = 8;
  std::size_t stride_x = 8;
  std::size_t stride_y = 8;

  static BlockGrid square(std::size_t size, std::size_t stride) { return {size, size, stride, stride}; }

  void validate() const;
  std::vector<Block> blocks(std::size_t width, std::size_t height) const;
};

// Writes each block's score into its pixels, averaging where blocks
// overlap. Pixels outside every block copy the nearest covered pixel.
// Throws ContractError if no block fits or scores.size() != block count.
Heatmap broadcast_blocks(const BlockGrid& grid, std::size_t width, std::size_t height,
                         std::span<const double> scores);

}  // namespace promkit
