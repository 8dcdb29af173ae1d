#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "promkit/image.hpp"

namespace promkit {

// FMAP v1 layout, all integers and floats little-endian:
//
//   "FMAP" | u32 version=1 | u32 width | u32 height | u32 channels=1 |
//   width*height*channels float32, row-major
//
// Nothing may follow the payload. Non-finite values are rejected on both
// encode and decode.
inline constexpr std::uint32_t kFmapVersion = 1;
inline constexpr std::size_t kFmapHeaderSize = 20;

std::vector<std::uint8_t> encode_fmap(const Heatmap& map);
Heatmap decode_fmap(std::span<const std::uint8_t> bytes);

Heatmap read_fmap(const std::filesystem::path& path);
void write_fmap(const Heatmap& map, const std::filesystem::path& path);

// Whole-file helpers shared by the binary formats.
std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace promkit
