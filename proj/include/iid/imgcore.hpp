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

#ifndef IID_IMGCORE_HPP
#define IID_IMGCORE_HPP

// Color transfer functions, separable Gaussian smoothing and chromaticity features.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "iid/error.hpp"
#include "iid/image.hpp"
#include "iid/parallel.hpp"

namespace iid {

inline constexpr double kChromaEpsilon = 1e-6;

enum class Linearization { srgb, identity };

/// Integer raster as read from disk: interleaved RGB samples of the given bit depth.
struct EncodedImage {
  int width = 0;
  int height = 0;
  int bit_depth = 8;
  std::vector<std::uint16_t> samples;  // width * height * 3
};

inline double srgb_to_linear(double v) {
  return v <= 0.04045 ? v / 12.92 : std::pow((v + 0.055) / 1.055, 2.4);
}

inline double linear_to_srgb(double v) {
  return v <= 0.0031308 ? 12.92 * v : 1.055 * std::pow(v, 1.0 / 2.4) - 0.055;
}

/// Normalizes integer samples to [0,1] and applies the selected transfer function.
inline LinearImage linearize(const EncodedImage& enc, Linearization mode = Linearization::srgb) {
  if (enc.bit_depth != 8 && enc.bit_depth != 16) throw InvalidInput("bit depth must be 8 or 16");
  const std::size_t n = static_cast<std::size_t>(enc.width) * static_cast<std::size_t>(enc.height);
  if (enc.samples.size() != 3 * n) throw InvalidInput("encoded sample count does not match dimensions");
  const double scale = enc.bit_depth == 8 ? 255.0 : 65535.0;
  std::vector<Rgb> px(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (int c = 0; c < 3; ++c) {
      const double v = std::clamp(enc.samples[3 * i + c] / scale, 0.0, 1.0);
      px[i][c] = mode == Linearization::srgb ? srgb_to_linear(v) : v;
    }
  }
  return LinearImage(enc.width, enc.height, std::move(px));
}

inline LinearImage linearize_srgb(const EncodedImage& enc) { return linearize(enc, Linearization::srgb); }

/// Inverse of linearize: values are clamped to [0,1] before encoding.
inline EncodedImage encode(const LinearImage& img, int bit_depth = 16, Linearization mode = Linearization::srgb) {
  if (bit_depth != 8 && bit_depth != 16) throw InvalidParameter("bit depth must be 8 or 16");
  EncodedImage enc{img.width(), img.height(), bit_depth, {}};
  const double scale = bit_depth == 8 ? 255.0 : 65535.0;
  enc.samples.resize(3 * img.size());
  for (std::size_t i = 0; i < img.size(); ++i) {
    for (int c = 0; c < 3; ++c) {
      double v = std::clamp(img[i][c], 0.0, 1.0);
      if (mode == Linearization::srgb) v = linear_to_srgb(v);
      enc.samples[3 * i + c] = static_cast<std::uint16_t>(std::lround(v * scale));
    }
  }
  return enc;
}

namespace detail {

// Half-sample symmetric extension (dcba|abcd|dcba), periodic with period 2n.
inline int reflect_index(int i, int n) {
  const int period = 2 * n;
  int m = i % period;
  if (m < 0) m += period;
  return m < n ? m : period - 1 - m;
}

inline std::vector<double> gaussian_kernel(double sigma) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-0.5 * (i * i) / (sigma * sigma));
    sum += k[i + radius];
  }
  for (double& v : k) v /= sum;
  return k;
}

template <class T>
Grid<T> convolve_separable(const Grid<T>& src, const std::vector<double>& kernel) {
  const int w = src.width();
  const int h = src.height();
  const int radius = static_cast<int>(kernel.size() / 2);
  Grid<T> tmp(w, h);
  parallel_for(0, static_cast<std::size_t>(h), [&](std::size_t yy) {
    const int y = static_cast<int>(yy);
    for (int x = 0; x < w; ++x) {
      T acc{};
      for (int k = -radius; k <= radius; ++k) acc += kernel[k + radius] * src.at(reflect_index(x + k, w), y);
      tmp.at(x, y) = acc;
    }
  });
  Grid<T> out(w, h);
  parallel_for(0, static_cast<std::size_t>(h), [&](std::size_t yy) {
    const int y = static_cast<int>(yy);
    for (int x = 0; x < w; ++x) {
      T acc{};
      for (int k = -radius; k <= radius; ++k) acc += kernel[k + radius] * tmp.at(x, reflect_index(y + k, h));
      out.at(x, y) = acc;
    }
  });
  return out;
}

}  // namespace detail

/// Separable Gaussian blur, kernel radius ceil(3 sigma), symmetric border extension.
/// The border extension keeps constants fixed and preserves the global mean.
inline LinearImage gaussian_blur(const LinearImage& img, double sigma) {
  if (!(sigma > 0.0)) throw InvalidParameter("gaussian sigma must be > 0");
  if (img.empty()) return img;
  Grid<Rgb> out = detail::convolve_separable<Rgb>(img, detail::gaussian_kernel(sigma));
  // Rounding can leave -0.0 or -1e-300 next to zero-valued regions.
  for (Rgb& p : out.pixels())
    for (int c = 0; c < 3; ++c) p[c] = std::max(p[c], 0.0);
  return LinearImage(std::move(out));
}

inline ScalarField gaussian_blur(const ScalarField& field, double sigma) {
  if (!(sigma > 0.0)) throw InvalidParameter("gaussian sigma must be > 0");
  if (field.empty()) return field;
  return detail::convolve_separable<double>(field, detail::gaussian_kernel(sigma));
}

struct Chromaticity {
  ScalarField intensity;
  ScalarField chroma_r;
  ScalarField chroma_g;
};

/// Per-pixel intensity and (r, g) chromaticity features.
struct PixelFeatures {
  double intensity = 0.0;
  double chroma_r = 0.0;
  double chroma_g = 0.0;
};

inline PixelFeatures pixel_features(const Rgb& p) {
  const double s = p.sum();
  return {s / 3.0, p.r / (s + kChromaEpsilon), p.g / (s + kChromaEpsilon)};
}

inline Chromaticity chromaticity(const LinearImage& img) {
  Chromaticity out{ScalarField(img.width(), img.height()), ScalarField(img.width(), img.height()),
                   ScalarField(img.width(), img.height())};
  for (std::size_t i = 0; i < img.size(); ++i) {
    const PixelFeatures f = pixel_features(img[i]);
    out.intensity[i] = f.intensity;
    out.chroma_r[i] = f.chroma_r;
    out.chroma_g[i] = f.chroma_g;
  }
  return out;
}

}  // namespace iid

#endif  // IID_IMGCORE_HPP
