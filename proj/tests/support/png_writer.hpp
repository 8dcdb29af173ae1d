#pragma once

// Writes PNG variants the library itself never produces (16-bit, alpha,
// palette, low bit depth) so the loader can be exercised against them.

#include <png.h>

#include <csetjmp>
#include <cstdio>
#include <filesystem>
#include <stdexcept>
#include <vector>

namespace promkit::testing {

struct RawPngSpec {
  std::size_t width = 1;
  std::size_t height = 1;
  int color_type = PNG_COLOR_TYPE_GRAY;
  int bit_depth = 8;
  std::vector<png_byte> rows;  // packed, big-endian for 16-bit
  std::vector<png_color> palette;
  std::vector<png_byte> trns;
};

inline bool write_raw_png_body(std::FILE* fp, const RawPngSpec& s, std::vector<png_bytep>& rows) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    return false;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    return false;
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, static_cast<png_uint_32>(s.width), static_cast<png_uint_32>(s.height), s.bit_depth,
               s.color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  if (!s.palette.empty()) {
    png_set_PLTE(png, info, s.palette.data(), static_cast<int>(s.palette.size()));
  }
  if (!s.trns.empty()) {
    png_set_tRNS(png, info, s.trns.data(), static_cast<int>(s.trns.size()), nullptr);
  }
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return true;
}

inline void write_raw_png(const std::filesystem::path& path, const RawPngSpec& s) {
  std::FILE* fp = std::fopen(path.c_str(), "wb");
  if (!fp) throw std::runtime_error("cannot write " + path.string());
  const std::size_t stride = s.rows.size() / s.height;
  std::vector<png_bytep> rows(s.height);
  for (std::size_t y = 0; y < s.height; ++y) rows[y] = const_cast<png_bytep>(s.rows.data() + y * stride);
  const bool ok = write_raw_png_body(fp, s, rows);
  std::fclose(fp);
  if (!ok) throw std::runtime_error("libpng failed writing " + path.string());
}

}  // namespace promkit::testing
