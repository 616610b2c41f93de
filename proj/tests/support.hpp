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

// Shared fixtures for the unit suites: seeded random images and small Mondrians.

#ifndef IID_TESTS_SUPPORT_HPP
#define IID_TESTS_SUPPORT_HPP

#include <cstdint>
#include <random>

#include "iid/iid.hpp"

namespace iid::testing {

inline LinearImage random_image(int w, int h, std::uint64_t seed, double lo = 0.05, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  LinearImage img(w, h);
  for (auto& p : img.pixels()) p = {u(rng), u(rng), u(rng)};
  return img;
}

/// Left half `a`, right half `b` (split at column w/2).
inline LinearImage split_image(int w, int h, Rgb a, Rgb b) {
  LinearImage img(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) img.at(x, y) = x < w / 2 ? a : b;
  return img;
}

/// Multiplies every pixel by a positive scalar field.
inline LinearImage shade(const LinearImage& img, const ScalarField& s) {
  LinearImage out = img;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = s[i] * out[i];
  return out;
}

/// Smooth positive field: a product of a horizontal and a vertical ramp.
inline ScalarField ramp_field(int w, int h, double lo = 0.4, double hi = 1.0) {
  ScalarField f(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double tx = w > 1 ? double(x) / (w - 1) : 0.0;
      const double ty = h > 1 ? double(y) / (h - 1) : 0.0;
      f.at(x, y) = lo + (hi - lo) * (0.5 * tx + 0.5 * ty);
    }
  return f;
}

inline double max_abs_diff(const LinearImage& a, const LinearImage& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (int c = 0; c < 3; ++c) m = std::max(m, std::abs(a[i][c] - b[i][c]));
  return m;
}

inline std::size_t count_ones(const BinaryMask& m) {
  std::size_t n = 0;
  for (auto v : m.pixels()) n += v != 0;
  return n;
}

}  // namespace iid::testing

#endif  // IID_TESTS_SUPPORT_HPP
