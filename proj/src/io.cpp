// Copyright (c) 2026 The PLD Authors
// SPDX-License-Identifier: Apache-2.0

#include "pld/io.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "pld/errors.hpp"

namespace pld {

namespace {

std::vector<unsigned char> slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void dump(const std::filesystem::path& path, const std::vector<unsigned char>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("write failed for " + path.string());
}

// PGM header tokens, skipping whitespace and '#' comments.
class HeaderReader {
 public:
  explicit HeaderReader(const std::vector<unsigned char>& bytes) : bytes_(bytes) {}

  unsigned long number(const char* what) {
    skip();
    std::size_t start = pos_;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) ++pos_;
    if (start == pos_) throw FormatError(std::string("PGM header: expected ") + what);
    if (pos_ - start > 9) throw FormatError(std::string("PGM header: ") + what + " too large");
    return std::stoul(std::string(bytes_.begin() + static_cast<std::ptrdiff_t>(start),
                                  bytes_.begin() + static_cast<std::ptrdiff_t>(pos_)));
  }

  // Exactly one whitespace byte separates maxval from the raster.
  std::size_t raster_offset() {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_]))
      throw FormatError("PGM header: missing whitespace before raster");
    return pos_ + 1;
  }

  std::size_t pos_ = 2;

 private:
  void skip() {
    while (pos_ < bytes_.size()) {
      if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  const std::vector<unsigned char>& bytes_;
};

void put_u16(std::vector<unsigned char>& b, std::uint16_t v) {
  b.push_back(static_cast<unsigned char>(v));
  b.push_back(static_cast<unsigned char>(v >> 8));
}

void put_u32(std::vector<unsigned char>& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t get_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

}  // namespace

Tensor read_pgm(const std::filesystem::path& path) {
  const auto bytes = slurp(path);
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5')
    throw FormatError(path.string() + ": not a binary PGM (P5)");
  HeaderReader header(bytes);
  const auto width = header.number("width");
  const auto height = header.number("height");
  const auto maxval = header.number("maxval");
  if (maxval != 255) throw FormatError(path.string() + ": only maxval 255 is supported");
  if (width == 0 || height == 0) throw FormatError(path.string() + ": empty image");
  const std::size_t offset = header.raster_offset();
  const std::size_t count = width * height;
  if (bytes.size() < offset + count) throw FormatError(path.string() + ": truncated raster");
  Tensor t = Tensor::image(height, width);
  for (std::size_t i = 0; i < count; ++i) t[i] = static_cast<double>(bytes[offset + i]) / 255.0;
  return t;
}

void write_pgm(const std::filesystem::path& path, const Tensor& image) {
  if (image.rank() != 3 || image.extent(0) != 1)
    throw ParameterError("write_pgm expects a single-channel (1,H,W) image, got " +
                         shape_string(image.shape()));
  const std::string header =
      "P5\n" + std::to_string(image.width()) + " " + std::to_string(image.height()) + "\n255\n";
  std::vector<unsigned char> bytes(header.begin(), header.end());
  bytes.reserve(bytes.size() + image.size());
  for (double v : image.data()) {
    const double c = std::clamp(std::isfinite(v) ? v : 0.0, 0.0, 1.0);
    bytes.push_back(static_cast<unsigned char>(std::lround(c * 255.0)));
  }
  dump(path, bytes);
}

Tensor read_tensor(const std::filesystem::path& path) {
  const auto bytes = slurp(path);
  if (bytes.size() < 8 || std::memcmp(bytes.data(), "PLDT", 4) != 0)
    throw FormatError(path.string() + ": bad magic, not a PLDT tensor file");
  const auto version = get_u16(bytes.data() + 4);
  if (version != kTensorFileVersion)
    throw FormatError(path.string() + ": unsupported PLDT version " + std::to_string(version));
  const std::size_t rank = get_u16(bytes.data() + 6);
  if (bytes.size() < 8 + 4 * rank) throw FormatError(path.string() + ": truncated extents");
  Shape shape(rank);
  for (std::size_t i = 0; i < rank; ++i) shape[i] = get_u32(bytes.data() + 8 + 4 * i);
  const std::size_t count = shape_volume(shape);
  const std::size_t offset = 8 + 4 * rank;
  if (bytes.size() != offset + 4 * count)
    throw FormatError(path.string() + ": payload size does not match extents " + shape_string(shape));
  std::vector<double> data(count);
  for (std::size_t i = 0; i < count; ++i)
    data[i] = static_cast<double>(std::bit_cast<float>(get_u32(bytes.data() + offset + 4 * i)));
  return Tensor(std::move(shape), std::move(data));
}

void write_tensor(const std::filesystem::path& path, const Tensor& t) {
  if (t.rank() > 0xFFFF) throw ParameterError("rank too large for PLDT");
  std::vector<unsigned char> bytes = {'P', 'L', 'D', 'T'};
  put_u16(bytes, kTensorFileVersion);
  put_u16(bytes, static_cast<std::uint16_t>(t.rank()));
  for (auto e : t.shape()) {
    if (e > 0xFFFFFFFFull) throw ParameterError("extent too large for PLDT");
    put_u32(bytes, static_cast<std::uint32_t>(e));
  }
  bytes.reserve(bytes.size() + 4 * t.size());
  for (double v : t.data()) put_u32(bytes, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  dump(path, bytes);
}

Tensor read_image_any(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  char magic[4] = {};
  in.read(magic, 4);
  if (in.gcount() >= 4 && std::memcmp(magic, "PLDT", 4) == 0) {
    Tensor t = read_tensor(path);
    if (t.rank() == 2) t = std::move(t).reshaped({1, t.extent(0), t.extent(1)});
    return t;
  }
  return read_pgm(path);
}

}  // namespace pld
