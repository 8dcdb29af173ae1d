#pragma once

#include <filesystem>

#include "promkit/image.hpp"

namespace promkit {

// Reads an 8- or 16-bit grayscale or RGB PNG, scaling samples to [0,1]
// (divide by 255 or 65535). Palette images without transparency expand
// to RGB. Any alpha channel or tRNS chunk is a FormatError.
Image load_image(const std::filesystem::path& path);

// Reads an artifact mask: single-channel 8-bit PNG with values 0 or 255.
BinaryMask load_mask(const std::filesystem::path& path);

// 8-bit PNG writers. Values are clamped to [0,1] and rounded.
void save_image(const Image& image, const std::filesystem::path& path);
void save_mask(const BinaryMask& mask, const std::filesystem::path& path);
void save_heatmap_png(const Heatmap& map, const std::filesystem::path& path);

}  // namespace promkit
