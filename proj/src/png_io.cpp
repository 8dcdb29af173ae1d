#include "promkit/png_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <memory>
#include <string>
#include <vector>

#include "promkit/error.hpp"

namespace promkit {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

struct PngErrorState {
  char message[256] = {};
};

void on_png_error(png_structp png, png_const_charp msg) {
  auto* state = static_cast<PngErrorState*>(png_get_error_ptr(png));
  if (state) std::snprintf(state->message, sizeof(state->message), "%s", msg);
  png_longjmp(png, 1);
}

void on_png_warning(png_structp, png_const_charp) {}

struct RawPng {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t channels = 0;
  int bit_depth = 0;
  std::vector<std::uint16_t> samples;
};

enum class ReadStatus { kOk, kLibpngError, kAlpha, kBitDepth };

// Everything between setjmp and the last libpng call deals only with
// trivially destructible state or storage allocated beforehand.
ReadStatus read_png_body(std::FILE* fp, RawPng& out, PngErrorState& err,
                         std::vector<png_byte>& buffer) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &err, on_png_error, on_png_warning);
  if (!png) return ReadStatus::kLibpngError;
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    return ReadStatus::kLibpngError;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    return ReadStatus::kLibpngError;
  }

  png_init_io(png, fp);
  png_read_info(png, info);
  const png_uint_32 width = png_get_image_width(png, info);
  const png_uint_32 height = png_get_image_height(png, info);
  const int color_type = png_get_color_type(png, info);
  const int bit_depth = png_get_bit_depth(png, info);

  ReadStatus status = ReadStatus::kOk;
  if ((color_type & PNG_COLOR_MASK_ALPHA) || png_get_valid(png, info, PNG_INFO_tRNS)) {
    status = ReadStatus::kAlpha;
  } else if (color_type == PNG_COLOR_TYPE_PALETTE) {
    png_set_palette_to_rgb(png);
  } else if (bit_depth != 8 && bit_depth != 16) {
    status = ReadStatus::kBitDepth;
  }
  if (status != ReadStatus::kOk) {
    png_destroy_read_struct(&png, &info, nullptr);
    return status;
  }
  png_set_interlace_handling(png);
  png_read_update_info(png, info);

  const std::size_t rowbytes = png_get_rowbytes(png, info);
  const int out_depth = png_get_bit_depth(png, info);
  const int channels = png_get_channels(png, info);
  buffer.resize(rowbytes * height);
  std::vector<png_bytep> rows(height);
  for (png_uint_32 y = 0; y < height; ++y) rows[y] = buffer.data() + y * rowbytes;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  out.width = width;
  out.height = height;
  out.channels = static_cast<std::size_t>(channels);
  out.bit_depth = out_depth;
  return ReadStatus::kOk;
}

RawPng read_png(const std::filesystem::path& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw IoError("cannot open " + path.string());

  png_byte sig[8];
  if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw FormatError(path.string() + ": not a PNG file");
  }
  std::rewind(fp.get());

  RawPng raw;
  PngErrorState err;
  std::vector<png_byte> buffer;
  switch (read_png_body(fp.get(), raw, err, buffer)) {
    case ReadStatus::kOk:
      break;
    case ReadStatus::kAlpha:
      throw FormatError(path.string() + ": PNG with alpha channel is not supported");
    case ReadStatus::kBitDepth:
      throw FormatError(path.string() + ": only 8- and 16-bit PNGs are supported");
    case ReadStatus::kLibpngError:
      throw FormatError(path.string() + ": " + (err.message[0] ? err.message : "libpng error"));
  }

  const std::size_t n = raw.width * raw.height * raw.channels;
  raw.samples.resize(n);
  if (raw.bit_depth == 16) {
    for (std::size_t i = 0; i < n; ++i) {
      raw.samples[i] = static_cast<std::uint16_t>((buffer[2 * i] << 8) | buffer[2 * i + 1]);
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) raw.samples[i] = buffer[i];
  }
  return raw;
}

bool write_png_body(std::FILE* fp, std::size_t width, std::size_t height, std::size_t channels,
                    png_bytepp rows, PngErrorState& err) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &err, on_png_error, on_png_warning);
  if (!png) return false;
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    return false;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    return false;
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8,
               channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows);
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return true;
}

void write_png(const std::filesystem::path& path, std::size_t width, std::size_t height,
               std::size_t channels, const std::vector<png_byte>& pixels) {
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw IoError("cannot write " + path.string());
  std::vector<png_bytep> rows(height);
  for (std::size_t y = 0; y < height; ++y) {
    rows[y] = const_cast<png_bytep>(pixels.data() + y * width * channels);
  }
  PngErrorState err;
  if (!write_png_body(fp.get(), width, height, channels, rows.data(), err)) {
    throw IoError("writing " + path.string() + ": " + (err.message[0] ? err.message : "libpng error"));
  }
  if (std::fflush(fp.get()) != 0) throw IoError("writing " + path.string() + " failed");
}

png_byte quantize(float v) {
  return static_cast<png_byte>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
}

}  // namespace

Image load_image(const std::filesystem::path& path) {
  RawPng raw = read_png(path);
  const double scale = raw.bit_depth == 16 ? 65535.0 : 255.0;
  std::vector<float> data(raw.samples.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    data[i] = static_cast<float>(raw.samples[i] / scale);
  }
  if (raw.channels != 1 && raw.channels != 3) {
    throw FormatError(path.string() + ": unsupported channel count " + std::to_string(raw.channels));
  }
  return Image(raw.width, raw.height, raw.channels, std::move(data));
}

BinaryMask load_mask(const std::filesystem::path& path) {
  RawPng raw = read_png(path);
  if (raw.channels != 1 || raw.bit_depth != 8) {
    throw FormatError(path.string() + ": masks must be single-channel 8-bit PNGs");
  }
  BinaryMask mask(raw.width, raw.height);
  for (std::size_t i = 0; i < raw.samples.size(); ++i) {
    const auto v = raw.samples[i];
    if (v != 0 && v != 255) {
      throw FormatError(path.string() + ": mask value " + std::to_string(v) +
                        " is neither 0 nor 255");
    }
    mask.set(i, v == 255);
  }
  return mask;
}

void save_image(const Image& image, const std::filesystem::path& path) {
  std::vector<png_byte> px(image.data().size());
  std::transform(image.data().begin(), image.data().end(), px.begin(), quantize);
  write_png(path, image.width(), image.height(), image.channels(), px);
}

void save_mask(const BinaryMask& mask, const std::filesystem::path& path) {
  std::vector<png_byte> px(mask.size());
  for (std::size_t i = 0; i < mask.size(); ++i) px[i] = mask[i] ? 255 : 0;
  write_png(path, mask.width(), mask.height(), 1, px);
}

void save_heatmap_png(const Heatmap& map, const std::filesystem::path& path) {
  std::vector<png_byte> px(map.size());
  std::transform(map.data().begin(), map.data().end(), px.begin(), quantize);
  write_png(path, map.width(), map.height(), 1, px);
}

}  // namespace promkit
