#include "promkit/fmap.hpp"

#include <cmath>
#include <fstream>
#include <iterator>
#include <string>

#include "promkit/byte_io.hpp"
#include "promkit/error.hpp"

namespace promkit {

std::vector<std::uint8_t> encode_fmap(const Heatmap& map) {
  for (std::size_t i = 0; i < map.size(); ++i) {
    if (!std::isfinite(map[i])) throw DataError("fmap: non-finite value at index " + std::to_string(i));
  }
  detail::ByteWriter w;
  w.raw("FMAP", 4);
  w.u32(kFmapVersion);
  w.u32(static_cast<std::uint32_t>(map.width()));
  w.u32(static_cast<std::uint32_t>(map.height()));
  w.u32(1);
  for (float v : map.data()) w.f32(v);
  return w.take();
}

Heatmap decode_fmap(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes);
  if (bytes.size() < kFmapHeaderSize) throw FormatError("FMAP: truncated header");
  if (!r.magic("FMAP")) throw FormatError("FMAP: bad magic");
  const std::uint32_t version = r.u32();
  if (version != kFmapVersion) {
    throw FormatError("FMAP: unsupported version " + std::to_string(version));
  }
  const std::uint64_t width = r.u32();
  const std::uint64_t height = r.u32();
  const std::uint64_t channels = r.u32();
  if (channels != 1) {
    throw FormatError("FMAP: heatmaps need 1 channel, header says " + std::to_string(channels));
  }
  const std::uint64_t count = width * height * channels;
  if (r.remaining() != count * 4) {
    throw FormatError("FMAP: payload is " + std::to_string(r.remaining()) + " bytes, expected " +
                      std::to_string(count * 4));
  }
  std::vector<float> data(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    data[i] = r.f32();
    if (!std::isfinite(data[i])) {
      throw DataError("FMAP: non-finite value at index " + std::to_string(i));
    }
  }
  return Heatmap(width, height, std::move(data));
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("error reading " + path.string());
  return bytes;
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("error writing " + path.string());
}

Heatmap read_fmap(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  try {
    return decode_fmap(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void write_fmap(const Heatmap& map, const std::filesystem::path& path) {
  write_file_bytes(path, encode_fmap(map));
}

}  // namespace promkit
