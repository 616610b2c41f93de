// Copyright 2026 The IID Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef IID_IO_HPP
#define IID_IO_HPP

// PNG (8/16-bit in, 16-bit out) and the raw float format:
//   "IIDF" | width u32 | height u32 | channels u32 | float32 samples, all little-endian,
//   samples interleaved row-major.
// Requires linking libpng (target iid::io).

#include <png.h>

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "iid/error.hpp"
#include "iid/image.hpp"
#include "iid/imgcore.hpp"

namespace iid::io {

namespace detail {
struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using File = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] inline void png_error_handler(png_structp, png_const_charp msg) { throw LoadError(msg); }
inline void png_warning_handler(png_structp, png_const_charp) {}
}  // namespace detail

/// Reads any PNG as interleaved RGB at its native bit depth (8 or 16). Gray is expanded,
/// palettes are converted and alpha is dropped.
inline EncodedImage read_png(const std::string& path) {
  detail::File fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw LoadError("cannot open '" + path + "'");
  png_byte sig[8];
  if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) throw LoadError("'" + path + "' is not a PNG file");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, detail::png_error_handler, detail::png_warning_handler);
  if (!png) throw LoadError("libpng initialization failed");
  png_infop info = png_create_info_struct(png);
  struct Guard {
    png_structp& p;
    png_infop& i;
    ~Guard() { png_destroy_read_struct(&p, &i, nullptr); }
  } guard{png, info};
  try {
    png_init_io(png, fp.get());
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);
    const int color = png_get_color_type(png, info);
    int depth = png_get_bit_depth(png, info);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
    if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_strip_alpha(png);
    png_read_update_info(png, info);
    depth = png_get_bit_depth(png, info);
    const auto w = static_cast<int>(png_get_image_width(png, info));
    const auto h = static_cast<int>(png_get_image_height(png, info));
    const std::size_t rowbytes = png_get_rowbytes(png, info);
    std::vector<png_byte> buf(rowbytes * h);
    std::vector<png_bytep> rows(h);
    for (int y = 0; y < h; ++y) rows[y] = buf.data() + y * rowbytes;
    png_read_image(png, rows.data());
    EncodedImage enc{w, h, depth == 16 ? 16 : 8, {}};
    enc.samples.resize(static_cast<std::size_t>(w) * h * 3);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w * 3; ++x) {
        const std::size_t o = static_cast<std::size_t>(y) * w * 3 + x;
        enc.samples[o] = depth == 16 ? static_cast<std::uint16_t>((rows[y][2 * x] << 8) | rows[y][2 * x + 1]) : rows[y][x];
      }
    return enc;
  } catch (const LoadError& e) {
    throw LoadError("'" + path + "': " + e.what());
  }
}

/// Writes 16-bit (or 8-bit) RGB, or gray when `gray` is set (first channel only).
inline void write_png(const std::string& path, const EncodedImage& enc, bool gray = false) {
  detail::File fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw Error("cannot create '" + path + "'");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, detail::png_error_handler, detail::png_warning_handler);
  if (!png) throw Error("libpng initialization failed");
  png_infop info = png_create_info_struct(png);
  struct Guard {
    png_structp& p;
    png_infop& i;
    ~Guard() { png_destroy_write_struct(&p, &i); }
  } guard{png, info};
  png_init_io(png, fp.get());
  const int channels = gray ? 1 : 3;
  png_set_IHDR(png, info, enc.width, enc.height, enc.bit_depth, gray ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const int bytes = enc.bit_depth == 16 ? 2 : 1;
  std::vector<png_byte> row(static_cast<std::size_t>(enc.width) * channels * bytes);
  for (int y = 0; y < enc.height; ++y) {
    for (int x = 0; x < enc.width; ++x)
      for (int c = 0; c < channels; ++c) {
        const std::uint16_t v = enc.samples[(static_cast<std::size_t>(y) * enc.width + x) * 3 + c];
        const std::size_t o = (static_cast<std::size_t>(x) * channels + c) * bytes;
        if (bytes == 2) {
          row[o] = static_cast<png_byte>(v >> 8);
          row[o + 1] = static_cast<png_byte>(v & 0xff);
        } else {
          row[o] = static_cast<png_byte>(v);
        }
      }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
}

/// Float raster read from or written to the raw format.
struct FloatRaster {
  int width = 0;
  int height = 0;
  int channels = 3;
  std::vector<float> samples;
};

namespace detail {
inline void put_u32(std::ostream& o, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  o.write(reinterpret_cast<const char*>(b), 4);
}
inline std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}
}  // namespace detail

inline void write_raw(const std::string& path, const FloatRaster& r) {
  if (r.samples.size() != static_cast<std::size_t>(r.width) * r.height * r.channels)
    throw InvalidInput("raw raster sample count does not match header");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot create '" + path + "'");
  out.write("IIDF", 4);
  detail::put_u32(out, static_cast<std::uint32_t>(r.width));
  detail::put_u32(out, static_cast<std::uint32_t>(r.height));
  detail::put_u32(out, static_cast<std::uint32_t>(r.channels));
  for (float f : r.samples) detail::put_u32(out, std::bit_cast<std::uint32_t>(f));
  if (!out) throw Error("write failed for '" + path + "'");
}

inline FloatRaster read_raw(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open '" + path + "'");
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "IIDF", 4) != 0) throw LoadError("'" + path + "' lacks the IIDF magic");
  FloatRaster r;
  r.width = static_cast<int>(detail::get_u32(in));
  r.height = static_cast<int>(detail::get_u32(in));
  r.channels = static_cast<int>(detail::get_u32(in));
  if (!in || r.width < 0 || r.height < 0 || (r.channels != 1 && r.channels != 3))
    throw LoadError("'" + path + "' has a malformed header");
  r.samples.resize(static_cast<std::size_t>(r.width) * r.height * r.channels);
  for (float& f : r.samples) f = std::bit_cast<float>(detail::get_u32(in));
  if (!in) throw LoadError("'" + path + "' is truncated");
  return r;
}

inline FloatRaster to_raster(const LinearImage& img) {
  FloatRaster r{img.width(), img.height(), 3, {}};
  r.samples.reserve(img.size() * 3);
  for (const Rgb& p : img.pixels())
    for (int c = 0; c < 3; ++c) r.samples.push_back(static_cast<float>(p[c]));
  return r;
}

inline FloatRaster to_raster(const ScalarField& f) {
  FloatRaster r{f.width(), f.height(), 1, {}};
  r.samples.reserve(f.size());
  for (double v : f.pixels()) r.samples.push_back(static_cast<float>(v));
  return r;
}

inline LinearImage to_linear_image(const FloatRaster& r) {
  std::vector<Rgb> px(static_cast<std::size_t>(r.width) * r.height);
  for (std::size_t i = 0; i < px.size(); ++i)
    for (int c = 0; c < 3; ++c) px[i][c] = r.samples[i * r.channels + (r.channels == 3 ? c : 0)];
  return LinearImage(r.width, r.height, std::move(px));
}

inline bool has_raw_extension(const std::string& path) { return std::filesystem::path(path).extension() == ".iidf"; }

/// Loads a linear image from PNG (with the given linearization) or from the raw format.
inline LinearImage load_image(const std::string& path, Linearization mode = Linearization::srgb) {
  if (has_raw_extension(path)) return to_linear_image(read_raw(path));
  return linearize(read_png(path), mode);
}

/// Saves a linear image: raw floats for ".iidf", otherwise an 8- or 16-bit PNG of the
/// values clamped to [0,1] and encoded with `mode`.
inline void save_image(const std::string& path, const LinearImage& img, Linearization mode = Linearization::srgb,
                       int bit_depth = 16) {
  if (has_raw_extension(path)) return write_raw(path, to_raster(img));
  write_png(path, encode(img, bit_depth, mode));
}

/// Saves a scalar field as a 16-bit gray PNG after dividing by `scale`, or raw for ".iidf".
inline void save_field(const std::string& path, const ScalarField& f, double scale = 1.0) {
  if (has_raw_extension(path)) return write_raw(path, to_raster(f));
  EncodedImage enc{f.width(), f.height(), 16, {}};
  enc.samples.resize(f.size() * 3);
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double v = scale > 0.0 ? std::clamp(f[i] / scale, 0.0, 1.0) : 0.0;
    enc.samples[3 * i] = enc.samples[3 * i + 1] = enc.samples[3 * i + 2] = static_cast<std::uint16_t>(std::lround(v * 65535.0));
  }
  write_png(path, enc, true);
}

}  // namespace iid::io

#endif  // IID_IO_HPP
