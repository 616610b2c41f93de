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

#ifndef IID_RATIOS_HPP
#define IID_RATIOS_HPP

// Single and cross color ratios between neighboring pixels.
//
// Under the narrow-band image model I_c = m * e_c * s_c the cross ratios cancel both the
// geometry term m and the (locally constant) light color e_c, leaving only a reflectance
// relation between the two pixels. A ratio of 1 means no material change.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <set>

#include "iid/image.hpp"
#include "iid/imgcore.hpp"

namespace iid {

inline constexpr double kRatioEpsilon = 1e-4;
inline constexpr double kDefaultRatioThreshold = 0.02;
inline constexpr int kDefaultMaxClusters = 50;

struct RatioTriple {
  double m1 = 1.0;
  double m2 = 1.0;
  double m3 = 1.0;

  double operator[](int i) const { return i == 0 ? m1 : (i == 1 ? m2 : m3); }
  friend bool operator==(const RatioTriple&, const RatioTriple&) = default;
};

inline constexpr RatioTriple kNeutralTriple{1.0, 1.0, 1.0};

namespace detail {
inline Rgb clamp_dark(Rgb p) {
  return {std::max(p.r, kRatioEpsilon), std::max(p.g, kRatioEpsilon), std::max(p.b, kRatioEpsilon)};
}
}  // namespace detail

/// Per-channel ratios p1 / p2.
inline RatioTriple single_ratios(Rgb p1, Rgb p2) {
  p1 = detail::clamp_dark(p1);
  p2 = detail::clamp_dark(p2);
  return {p1.r / p2.r, p1.g / p2.g, p1.b / p2.b};
}

/// Cross color ratios (R1 G2)/(R2 G1), (R1 B2)/(R2 B1), (G1 B2)/(G2 B1).
inline RatioTriple cross_ratios(Rgb p1, Rgb p2) {
  p1 = detail::clamp_dark(p1);
  p2 = detail::clamp_dark(p2);
  // Numerator and denominator are formed as two products so that p2 = s * p1 with exactly
  // representable products yields bit-identical operands.
  return {(p1.r * p2.g) / (p2.r * p1.g), (p1.r * p2.b) / (p2.r * p1.b), (p1.g * p2.b) / (p2.g * p1.b)};
}

/// |log m1 + log m2 + log m3| / 3: log-space magnitude of the geometric mean.
inline double fuse_geometric_mean(const RatioTriple& t) {
  return std::abs(std::log(t.m1) + std::log(t.m2) + std::log(t.m3)) / 3.0;
}

/// Cross ratios of every pixel against its right and down neighbors.
struct RatioField {
  Grid<RatioTriple> horizontal;  // vs (x+1, y); last column neutral
  Grid<RatioTriple> vertical;    // vs (x, y+1); last row neutral
  ScalarField fused_horizontal;
  ScalarField fused_vertical;
  ScalarField fused;  // per-pixel max of the two directions

  int width() const { return fused.width(); }
  int height() const { return fused.height(); }
};

/// Neighbor ratios of an image that has already been smoothed (or not).
inline RatioField ratio_field_unsmoothed(const LinearImage& img) {
  const int w = img.width();
  const int h = img.height();
  RatioField f{Grid<RatioTriple>(w, h, kNeutralTriple), Grid<RatioTriple>(w, h, kNeutralTriple),
               ScalarField(w, h), ScalarField(w, h), ScalarField(w, h)};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (x + 1 < w) {
        f.horizontal.at(x, y) = cross_ratios(img.at(x, y), img.at(x + 1, y));
        f.fused_horizontal.at(x, y) = fuse_geometric_mean(f.horizontal.at(x, y));
      }
      if (y + 1 < h) {
        f.vertical.at(x, y) = cross_ratios(img.at(x, y), img.at(x, y + 1));
        f.fused_vertical.at(x, y) = fuse_geometric_mean(f.vertical.at(x, y));
      }
      f.fused.at(x, y) = std::max(f.fused_horizontal.at(x, y), f.fused_vertical.at(x, y));
    }
  }
  return f;
}

/// Gaussian pre-smoothing followed by right/down cross ratios and their fused magnitude.
inline RatioField ratio_field(const LinearImage& img, double sigma) {
  if (img.empty()) throw InvalidInput("ratio_field: empty image");
  return ratio_field_unsmoothed(gaussian_blur(img, sigma));
}

/// 1 where value > threshold.
inline BinaryMask threshold_mask(const ScalarField& values, double threshold) {
  if (!(threshold >= 0.0)) throw InvalidParameter("threshold must be >= 0");
  BinaryMask m(values.width(), values.height(), 0);
  for (std::size_t i = 0; i < values.size(); ++i) m[i] = values[i] > threshold ? 1 : 0;
  return m;
}

inline BinaryMask significance_mask(const RatioField& field, double threshold = kDefaultRatioThreshold) {
  return threshold_mask(field.fused, threshold);
}

using RoundedTriple = std::array<std::int64_t, 3>;

inline RoundedTriple round_triple(const RatioTriple& t) {
  // std::llround rounds halfway cases away from zero.
  return {std::llround(t.m1), std::llround(t.m2), std::llround(t.m3)};
}

/// Cross ratio of pixel (x,y) against its right neighbor, or its down neighbor in the last
/// column. The bottom-right pixel has neither and is neutral.
inline RatioTriple reference_triple(const LinearImage& img, int x, int y) {
  if (x + 1 < img.width()) return cross_ratios(img.at(x, y), img.at(x + 1, y));
  if (y + 1 < img.height()) return cross_ratios(img.at(x, y), img.at(x, y + 1));
  return kNeutralTriple;
}

/// Number of distinct colors estimated from rounded cross ratios: one base color plus every
/// distinct rounded triple that differs from (1,1,1), clamped to [2, k_max].
inline int count_distinct_colors(const LinearImage& img, int k_max = kDefaultMaxClusters) {
  if (img.empty()) throw InvalidInput("count_distinct_colors: empty image");
  if (k_max < 2) throw InvalidParameter("k_max must be >= 2");
  constexpr RoundedTriple neutral{1, 1, 1};
  std::set<RoundedTriple> changes;
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) {
      const RoundedTriple r = round_triple(reference_triple(img, x, y));
      if (r != neutral) changes.insert(r);
    }
  const long long count = 1 + static_cast<long long>(changes.size());
  return static_cast<int>(std::clamp<long long>(count, 2, k_max));
}

}  // namespace iid

#endif  // IID_RATIOS_HPP
