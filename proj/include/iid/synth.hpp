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

#ifndef IID_SYNTH_HPP
#define IID_SYNTH_HPP

// Seeded ground-truth scenes: Mondrian reflectance, geometry/shadow shading and a light
// color, composed as I_c = m * e_c * s_c.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "iid/error.hpp"
#include "iid/image.hpp"
#include "iid/imgcore.hpp"
#include "iid/random.hpp"
#include "iid/ratios.hpp"

namespace iid {

enum class ShadingKind { smooth, shadow, mixed };

inline constexpr double kShadowFactor = 0.25;
inline constexpr double kShadowBlurSigma = 1.5;

struct Mondrian {
  LinearImage image;
  std::vector<Rgb> palette;
  Grid<int> labels;  // palette index per pixel
};

struct SyntheticScene {
  LinearImage reflectance;
  ScalarField shading_geom;
  Rgb illuminant{1.0, 1.0, 1.0};
  LinearImage image;
  std::uint64_t seed = 0;
};

namespace detail {

inline bool separable(const Rgb& a, const Rgb& b) {
  constexpr RoundedTriple neutral{1, 1, 1};
  return round_triple(cross_ratios(a, b)) != neutral && round_triple(cross_ratios(b, a)) != neutral;
}

struct Rect {
  int x0, y0, x1, y1;  // half-open
};

inline void split_rects(const Rect& r, int depth, std::mt19937_64& rng, std::vector<Rect>& out) {
  constexpr int kMinSide = 8;
  const int w = r.x1 - r.x0;
  const int h = r.y1 - r.y0;
  const bool can_x = w >= 2 * kMinSide;
  const bool can_y = h >= 2 * kMinSide;
  if (depth >= 6 || (!can_x && !can_y) || (depth >= 2 && unit_uniform(rng) < 0.2)) {
    out.push_back(r);
    return;
  }
  const bool along_x = can_x && (!can_y || w >= h);
  const int len = along_x ? w : h;
  const int cut = std::clamp(static_cast<int>(std::lround(uniform(rng, 0.3, 0.7) * len)), kMinSide, len - kMinSide);
  if (along_x) {
    split_rects({r.x0, r.y0, r.x0 + cut, r.y1}, depth + 1, rng, out);
    split_rects({r.x0 + cut, r.y0, r.x1, r.y1}, depth + 1, rng, out);
  } else {
    split_rects({r.x0, r.y0, r.x1, r.y0 + cut}, depth + 1, rng, out);
    split_rects({r.x0, r.y0 + cut, r.x1, r.y1}, depth + 1, rng, out);
  }
}

}  // namespace detail

/// Palette of n colors whose every pair is separable by rounded cross ratios. In palette
/// order, consecutive pairs also have mutually distinct rounded ratio triples.
inline std::vector<Rgb> gen_palette(int n_colors, std::uint64_t seed) {
  if (n_colors < 1) throw InvalidParameter("n_colors must be >= 1");
  constexpr int kMaxAttempts = 200000;
  auto rng = detail::seeded_stream(seed, 1);
  std::vector<Rgb> palette;
  std::set<RoundedTriple> chain;
  int attempts = 0;
  while (static_cast<int>(palette.size()) < n_colors) {
    if (++attempts > kMaxAttempts)
      throw GenerationError("cannot find " + std::to_string(n_colors) + " mutually separable colors");
    const Rgb c{detail::uniform(rng, 0.05, 1.0), detail::uniform(rng, 0.05, 1.0), detail::uniform(rng, 0.05, 1.0)};
    bool ok = true;
    for (const Rgb& p : palette)
      if (!detail::separable(p, c)) {
        ok = false;
        break;
      }
    if (!ok) continue;
    if (!palette.empty()) {
      const RoundedTriple link = round_triple(cross_ratios(palette.back(), c));
      if (chain.contains(link)) continue;
      chain.insert(link);
    }
    palette.push_back(c);
  }
  return palette;
}

/// Axis-aligned Mondrian with exactly n_colors colors. A top band holds every palette color
/// once, left to right in palette order; the rest is a random guillotine partition.
inline Mondrian gen_mondrian(int width, int height, int n_colors, std::uint64_t seed) {
  if (width <= 0 || height <= 0) throw InvalidParameter("mondrian dimensions must be positive");
  if (n_colors > width) throw InvalidParameter("mondrian needs width >= n_colors");
  Mondrian m{LinearImage(width, height), gen_palette(n_colors, seed), Grid<int>(width, height, 0)};
  auto rng = detail::seeded_stream(seed, 2);
  const int band = std::max(1, height / 4);
  for (int y = 0; y < band; ++y)
    for (int x = 0; x < width; ++x) m.labels.at(x, y) = static_cast<int>((static_cast<long long>(x) * n_colors) / width);
  if (band < height) {
    std::vector<detail::Rect> rects;
    detail::split_rects({0, band, width, height}, 0, rng, rects);
    for (const auto& r : rects) {
      const int label = static_cast<int>(rng() % static_cast<std::uint64_t>(n_colors));
      for (int y = r.y0; y < r.y1; ++y)
        for (int x = r.x0; x < r.x1; ++x) m.labels.at(x, y) = label;
    }
  }
  for (std::size_t i = 0; i < m.labels.size(); ++i) m.image[i] = m.palette[m.labels[i]];
  return m;
}

/// Binary shadow region: one axis-aligned rectangle covering roughly a quarter of the frame.
inline BinaryMask gen_shadow_mask(int width, int height, std::uint64_t seed) {
  auto rng = detail::seeded_stream(seed, 3);
  BinaryMask mask(width, height, 0);
  const int sw = std::max(1, static_cast<int>(std::lround(detail::uniform(rng, 0.35, 0.6) * width)));
  const int sh = std::max(1, static_cast<int>(std::lround(detail::uniform(rng, 0.35, 0.6) * height)));
  const int x0 = static_cast<int>(rng() % static_cast<std::uint64_t>(width - sw + 1));
  const int y0 = static_cast<int>(rng() % static_cast<std::uint64_t>(height - sh + 1));
  for (int y = y0; y < y0 + sh; ++y)
    for (int x = x0; x < x0 + sw; ++x) mask.at(x, y) = 1;
  return mask;
}

/// Positive geometry/shadow factor m(n, l). smooth lies in [0.3, 1]; shadow is 0.25 inside
/// the shadow region and 1 outside, blurred at the boundary; mixed is their product.
inline ScalarField gen_shading(int width, int height, ShadingKind kind, std::uint64_t seed) {
  if (width <= 0 || height <= 0) throw InvalidParameter("shading dimensions must be positive");
  ScalarField smooth(width, height, 1.0);
  ScalarField shadow(width, height, 1.0);
  if (kind == ShadingKind::smooth || kind == ShadingKind::mixed) {
    auto rng = detail::seeded_stream(seed, 4);
    const int bumps = 4 + static_cast<int>(rng() % 3);
    const double extent = std::max(width, height);
    struct Bump {
      double cx, cy, sigma, amp;
    };
    std::vector<Bump> bs;
    for (int b = 0; b < bumps; ++b)
      bs.push_back({detail::uniform(rng, 0.0, width), detail::uniform(rng, 0.0, height),
                    detail::uniform(rng, 0.2, 0.45) * extent, detail::uniform(rng, 0.5, 1.0)});
    double lo = 1e300, hi = -1e300;
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x) {
        double v = 0.0;
        for (const Bump& b : bs) {
          const double dx = x - b.cx, dy = y - b.cy;
          v += b.amp * std::exp(-0.5 * (dx * dx + dy * dy) / (b.sigma * b.sigma));
        }
        smooth.at(x, y) = v;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    for (double& v : smooth.pixels()) v = hi > lo ? 0.3 + 0.7 * (v - lo) / (hi - lo) : 1.0;
  }
  if (kind == ShadingKind::shadow || kind == ShadingKind::mixed) {
    const BinaryMask mask = gen_shadow_mask(width, height, seed);
    for (std::size_t i = 0; i < mask.size(); ++i) shadow[i] = mask[i] ? kShadowFactor : 1.0;
    shadow = gaussian_blur(shadow, kShadowBlurSigma);
  }
  ScalarField out(width, height);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = smooth[i] * shadow[i];
  return out;
}

inline Rgb gen_illuminant(std::uint64_t seed) {
  auto rng = detail::seeded_stream(seed, 5);
  return {detail::uniform(rng, 0.6, 1.0), detail::uniform(rng, 0.6, 1.0), detail::uniform(rng, 0.6, 1.0)};
}

/// image_c = shading * illuminant_c * reflectance_c
inline SyntheticScene compose(const LinearImage& reflectance, const ScalarField& shading, Rgb illuminant) {
  require_same_shape(reflectance, shading, "compose");
  if (!(illuminant.r > 0.0 && illuminant.g > 0.0 && illuminant.b > 0.0))
    throw InvalidInput("compose: illuminant must be positive");
  for (double s : shading.pixels())
    if (!(s > 0.0) || !std::isfinite(s)) throw InvalidInput("compose: shading must be positive");
  LinearImage img(reflectance.width(), reflectance.height());
  for (std::size_t i = 0; i < img.size(); ++i)
    for (int c = 0; c < 3; ++c) img[i][c] = shading[i] * illuminant[c] * reflectance[i][c];
  return {reflectance, shading, illuminant, std::move(img), 0};
}

/// Mondrian reflectance under seeded shading and illuminant.
inline SyntheticScene gen_scene(int width, int height, int n_colors, ShadingKind kind, std::uint64_t seed) {
  SyntheticScene s = compose(gen_mondrian(width, height, n_colors, seed).image, gen_shading(width, height, kind, seed),
                             gen_illuminant(seed));
  s.seed = seed;
  return s;
}

inline const char* to_string(ShadingKind k) {
  switch (k) {
    case ShadingKind::smooth: return "smooth";
    case ShadingKind::shadow: return "shadow";
    case ShadingKind::mixed: return "mixed";
  }
  return "?";
}

inline ShadingKind parse_shading_kind(const std::string& s) {
  if (s == "smooth") return ShadingKind::smooth;
  if (s == "shadow") return ShadingKind::shadow;
  if (s == "mixed") return ShadingKind::mixed;
  throw InvalidParameter("unknown shading kind '" + s + "'");
}

}  // namespace iid

#endif  // IID_SYNTH_HPP
