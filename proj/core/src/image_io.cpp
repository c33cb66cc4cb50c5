// Copyright 2026 The DRBN Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "drbn/image_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <system_error>

namespace drbn {

namespace {

class PnmReader {
 public:
  explicit PnmReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  // Whitespace- and comment-separated ASCII header integer.
  std::size_t header_int() {
    skip_space_and_comments();
    if (pos_ >= bytes_.size() || !std::isdigit(bytes_[pos_])) {
      throw ImageFormatError("PNM: expected integer at offset " + std::to_string(pos_));
    }
    std::size_t value = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      value = value * 10 + (bytes_[pos_++] - '0');
      if (value > (1U << 24)) throw ImageFormatError("PNM: header value too large");
    }
    return value;
  }

  // Exactly one whitespace byte separates the header from raster data.
  void end_header() {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) {
      throw ImageFormatError("PNM: missing whitespace after header");
    }
    ++pos_;
  }

  std::uint8_t byte() {
    if (pos_ >= bytes_.size()) throw ImageFormatError("PNM: truncated raster");
    return bytes_[pos_++];
  }

  std::size_t pos() const { return pos_; }
  void skip(std::size_t n) { pos_ += n; }

  void skip_space_and_comments() {
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

  // P1 rasters may omit separators between bits.
  int ascii_bit() {
    skip_space_and_comments();
    const auto c = byte();
    if (c != '0' && c != '1') throw ImageFormatError("PBM: bad bit at offset " + std::to_string(pos_ - 1));
    return c - '0';
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

GrayImage decode_pnm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P') throw ImageFormatError("PNM: bad magic at offset 0");
  const char kind = static_cast<char>(bytes[1]);
  if (kind != '1' && kind != '2' && kind != '4' && kind != '5') {
    throw ImageFormatError(std::string("PNM: unsupported type P") + kind);
  }
  PnmReader in(bytes);
  in.skip(2);
  GrayImage img;
  img.width = in.header_int();
  img.height = in.header_int();
  if (img.width == 0 || img.height == 0) throw ImageFormatError("PNM: zero-area image");
  const bool bitmap = kind == '1' || kind == '4';
  const std::size_t maxval = bitmap ? 1 : in.header_int();
  if (maxval == 0 || maxval > 65535) throw ImageFormatError("PNM: bad maxval");
  img.pixels.resize(img.width * img.height);

  switch (kind) {
    case '1':
      for (auto& p : img.pixels) p = in.ascii_bit();
      break;
    case '2':
      for (auto& p : img.pixels) {
        const auto v = in.header_int();
        if (v > maxval) throw ImageFormatError("PGM: sample exceeds maxval");
        p = static_cast<double>(v) / static_cast<double>(maxval);
      }
      break;
    case '4': {
      in.end_header();
      const std::size_t row_bytes = (img.width + 7) / 8;
      for (std::size_t y = 0; y < img.height; ++y) {
        for (std::size_t xb = 0; xb < row_bytes; ++xb) {
          const auto b = in.byte();
          for (std::size_t bit = 0; bit < 8 && xb * 8 + bit < img.width; ++bit) {
            img.pixels[y * img.width + xb * 8 + bit] = (b >> (7 - bit)) & 1U;
          }
        }
      }
      break;
    }
    case '5': {
      in.end_header();
      for (auto& p : img.pixels) {
        std::size_t v = in.byte();
        if (maxval > 255) v = (v << 8) | in.byte();
        if (v > maxval) throw ImageFormatError("PGM: sample exceeds maxval");
        p = static_cast<double>(v) / static_cast<double>(maxval);
      }
      break;
    }
  }
  return img;
}

GrayImage read_pnm(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  try {
    return decode_pnm(bytes);
  } catch (const ImageFormatError& e) {
    throw ImageFormatError(path.string() + ": " + e.what());
  }
}

std::vector<std::uint8_t> encode_pgm(const GrayImage& image) {
  if (image.pixels.size() != image.width * image.height) {
    throw ShapeError("encode_pgm: pixel count does not match dimensions");
  }
  const std::string header =
      "P5\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(out.size() + image.pixels.size());
  for (double v : image.pixels) {
    const double c = std::clamp(v, 0.0, 1.0);
    out.push_back(static_cast<std::uint8_t>(std::lround(255.0 * c)));
  }
  return out;
}

GrayImage tile_grid(const Tensor& images, std::size_t cols) {
  if (images.rank() != 3 || images.dim(0) == 0) {
    throw ShapeError("tile_grid: expected n x H x W images, got " + to_string(images.shape()));
  }
  if (cols == 0) throw std::invalid_argument("tile_grid: cols must be positive");
  const std::size_t n = images.dim(0), h = images.dim(1), w = images.dim(2);
  cols = std::min(cols, n);
  const std::size_t rows = (n + cols - 1) / cols;
  GrayImage grid;
  grid.height = rows * h + rows - 1;
  grid.width = cols * w + cols - 1;
  grid.pixels.assign(grid.height * grid.width, 0.0);
  constexpr double kSeparator = 128.0 / 255.0;
  for (std::size_t y = 0; y < grid.height; ++y) {
    for (std::size_t x = 0; x < grid.width; ++x) {
      if (y % (h + 1) == h || x % (w + 1) == w) grid.pixels[y * grid.width + x] = kSeparator;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t oy = (i / cols) * (h + 1), ox = (i % cols) * (w + 1);
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        grid.pixels[(oy + y) * grid.width + ox + x] = images[(i * h + y) * w + x];
      }
    }
  }
  return grid;
}

void export_grid(const Tensor& images, std::size_t cols, const std::filesystem::path& path) {
  write_file_atomic(path, encode_pgm(tile_grid(images, cols)));
}

void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::system_error(errno, std::generic_category(), "cannot open " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw std::system_error(errno, std::generic_category(), "write failed: " + tmp.string());
    }
  }
  std::filesystem::rename(tmp, path);
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::system_error(errno, std::generic_category(), "cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace drbn
