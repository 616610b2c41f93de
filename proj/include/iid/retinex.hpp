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

#ifndef IID_RETINEX_HPP
#define IID_RETINEX_HPP

// Color Retinex: classify log-domain gradients as reflectance changes, optionally union
// the classification with the cross-ratio significance mask, and re-integrate the kept
// gradients with a Poisson solve.

#include <algorithm>
#include <cmath>
#include <vector>

#include "iid/image.hpp"
#include "iid/imgcore.hpp"
#include "iid/intrinsics.hpp"
#include "iid/ratios.hpp"

namespace iid {

struct RetinexParams {
  double t_brightness = 0.075;
  double t_chroma = 0.075;
  double ccr_threshold = kDefaultRatioThreshold;
  double sigma = 1.0;

  void validate() const {
    if (!(t_brightness >= 0.0) || !(t_chroma >= 0.0) || !(ccr_threshold >= 0.0))
      throw InvalidParameter("retinex thresholds must be >= 0");
    if (!(sigma > 0.0)) throw InvalidParameter("retinex sigma must be > 0");
  }
};

/// Forward differences; entry (x,y) of the x fields is the step from (x,y) to (x+1,y).
/// The last column of the x fields and the last row of the y fields are zero.
struct GradientField {
  RgbField dx;
  RgbField dy;
  ScalarField brightness_x, brightness_y;
  ScalarField chroma_x, chroma_y;
  Rgb log_mean;  // per-channel mean of the log image, used as the reconstruction gauge

  int width() const { return dx.width(); }
  int height() const { return dx.height(); }
};

/// Pair of masks aligned with GradientField positions.
struct DirectionalMask {
  BinaryMask x;
  BinaryMask y;
};

inline RgbField log_image(const LinearImage& img) {
  RgbField out(img.width(), img.height());
  for (std::size_t i = 0; i < img.size(); ++i)
    for (int c = 0; c < 3; ++c) out[i][c] = std::log(std::max(img[i][c], kRatioEpsilon));
  return out;
}

/// Forward differences of a log image. Brightness is the mean log channel; chromaticity is
/// measured on the linear image.
inline GradientField forward_gradients(const RgbField& log_img, const Chromaticity& chroma) {
  const int w = log_img.width();
  const int h = log_img.height();
  GradientField g{RgbField(w, h),    RgbField(w, h),    ScalarField(w, h), ScalarField(w, h),
                  ScalarField(w, h), ScalarField(w, h), {}};
  Rgb sum{};
  for (const Rgb& p : log_img.pixels()) sum += p;
  if (!log_img.empty()) g.log_mean = (1.0 / static_cast<double>(log_img.size())) * sum;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (x + 1 < w) {
        const Rgb d = log_img.at(x + 1, y) - log_img.at(x, y);
        g.dx.at(x, y) = d;
        g.brightness_x.at(x, y) = std::abs(d.mean());
        g.chroma_x.at(x, y) = std::hypot(chroma.chroma_r.at(x + 1, y) - chroma.chroma_r.at(x, y),
                                         chroma.chroma_g.at(x + 1, y) - chroma.chroma_g.at(x, y));
      }
      if (y + 1 < h) {
        const Rgb d = log_img.at(x, y + 1) - log_img.at(x, y);
        g.dy.at(x, y) = d;
        g.brightness_y.at(x, y) = std::abs(d.mean());
        g.chroma_y.at(x, y) = std::hypot(chroma.chroma_r.at(x, y + 1) - chroma.chroma_r.at(x, y),
                                         chroma.chroma_g.at(x, y + 1) - chroma.chroma_g.at(x, y));
      }
    }
  }
  return g;
}

inline GradientField forward_gradients(const LinearImage& img) {
  return forward_gradients(log_image(img), chromaticity(img));
}

/// Marks a gradient as a reflectance change iff both its brightness and its chromaticity
/// magnitudes exceed their thresholds.
inline DirectionalMask retinex_classify(const GradientField& g, const RetinexParams& params) {
  params.validate();
  const int w = g.width();
  const int h = g.height();
  DirectionalMask m{BinaryMask(w, h, 0), BinaryMask(w, h, 0)};
  for (std::size_t i = 0; i < g.dx.size(); ++i) {
    m.x[i] = g.brightness_x[i] > params.t_brightness && g.chroma_x[i] > params.t_chroma;
    m.y[i] = g.brightness_y[i] > params.t_brightness && g.chroma_y[i] > params.t_chroma;
  }
  return m;
}

inline DirectionalMask retinex_classify(const LinearImage& img, const RetinexParams& params) {
  if (img.empty()) throw InvalidInput("retinex_classify: empty image");
  return retinex_classify(forward_gradients(img), params);
}

/// Directional cross-ratio significance masks aligned with the gradient positions.
inline DirectionalMask ccr_mask(const LinearImage& img, const RetinexParams& params) {
  params.validate();
  const RatioField f = ratio_field(img, params.sigma);
  return {threshold_mask(f.fused_horizontal, params.ccr_threshold),
          threshold_mask(f.fused_vertical, params.ccr_threshold)};
}

inline BinaryMask fuse_or(const BinaryMask& a, const BinaryMask& b) {
  require_same_shape(a, b, "fuse_or");
  BinaryMask out(a.width(), a.height(), 0);
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = (a[i] != 0 || b[i] != 0) ? 1 : 0;
  return out;
}

inline DirectionalMask fuse_or(const DirectionalMask& a, const DirectionalMask& b) {
  return {fuse_or(a.x, b.x), fuse_or(a.y, b.y)};
}

struct PoissonResult {
  RgbField log_image;
  bool degraded = false;
  double residual = 0.0;  // worst relative residual over channels
  int iterations = 0;     // most iterations used by any channel
};

namespace detail {

// Applies D^T D (Neumann graph Laplacian of the 4-grid).
inline void apply_laplacian(const std::vector<double>& u, std::vector<double>& out, int w, int h) {
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t p = static_cast<std::size_t>(y) * w + x;
      const double up = u[p];
      double acc = 0.0;
      if (x > 0) acc += up - u[p - 1];
      if (x + 1 < w) acc += up - u[p + 1];
      if (y > 0) acc += up - u[p - w];
      if (y + 1 < h) acc += up - u[p + w];
      out[p] = acc;
    }
  }
}

}  // namespace detail

/// Least-squares integration of the kept gradients: per channel minimizes
/// sum |grad L - g|^2 where g is the input gradient where kept and zero elsewhere.
/// Solved with Jacobi-preconditioned conjugate gradients on the normal equations
/// (relative residual 1e-8, at most 10 * sqrt(H*W) iterations); the additive gauge is
/// fixed by matching the mean of the log input.
inline PoissonResult poisson_reconstruct(const GradientField& grad, const DirectionalMask& keep) {
  const int w = grad.width();
  const int h = grad.height();
  require_same_shape(grad.dx, keep.x, "poisson_reconstruct");
  require_same_shape(grad.dy, keep.y, "poisson_reconstruct");
  const std::size_t n = static_cast<std::size_t>(w) * h;
  const int cap = static_cast<int>(std::ceil(10.0 * std::sqrt(static_cast<double>(n))));
  constexpr double kTolerance = 1e-8;

  PoissonResult res{RgbField(w, h), false, 0.0, 0};
  std::vector<double> diag(n);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      diag[static_cast<std::size_t>(y) * w + x] = (x > 0) + (x + 1 < w) + (y > 0) + (y + 1 < h);

  std::vector<double> b(n), u(n), r(n), z(n), p(n), ap(n);
  for (int c = 0; c < 3; ++c) {
    // b = D^T g
    std::fill(b.begin(), b.end(), 0.0);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const std::size_t i = static_cast<std::size_t>(y) * w + x;
        if (x + 1 < w && keep.x[i]) {
          const double gx = grad.dx[i][c];
          b[i] -= gx;
          b[i + 1] += gx;
        }
        if (y + 1 < h && keep.y[i]) {
          const double gy = grad.dy[i][c];
          b[i] -= gy;
          b[i + w] += gy;
        }
      }
    }
    std::fill(u.begin(), u.end(), 0.0);
    double bnorm = 0.0;
    for (double v : b) bnorm += v * v;
    bnorm = std::sqrt(bnorm);
    int it = 0;
    double rel = 0.0;
    if (bnorm > 0.0) {
      r = b;
      for (std::size_t i = 0; i < n; ++i) z[i] = diag[i] > 0 ? r[i] / diag[i] : 0.0;
      p = z;
      double rz = 0.0;
      for (std::size_t i = 0; i < n; ++i) rz += r[i] * z[i];
      rel = 1.0;
      while (it < cap) {
        detail::apply_laplacian(p, ap, w, h);
        double pap = 0.0;
        for (std::size_t i = 0; i < n; ++i) pap += p[i] * ap[i];
        if (!(pap > 0.0)) break;
        const double alpha = rz / pap;
        double rr = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          u[i] += alpha * p[i];
          r[i] -= alpha * ap[i];
          rr += r[i] * r[i];
        }
        ++it;
        rel = std::sqrt(rr) / bnorm;
        if (rel <= kTolerance) break;
        double rz_next = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          z[i] = diag[i] > 0 ? r[i] / diag[i] : 0.0;
          rz_next += r[i] * z[i];
        }
        const double beta = rz_next / rz;
        rz = rz_next;
        for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
      }
      if (rel > kTolerance) res.degraded = true;
    }
    double mean = 0.0;
    for (double v : u) mean += v;
    mean = n > 0 ? mean / static_cast<double>(n) : 0.0;
    const double shift = grad.log_mean[c] - mean;
    for (std::size_t i = 0; i < n; ++i) res.log_image[i][c] = u[i] + shift;
    res.residual = std::max(res.residual, rel);
    res.iterations = std::max(res.iterations, it);
  }
  return res;
}

struct RetinexResult {
  Decomposition intrinsics;
  DirectionalMask keep;
  PoissonResult solve;
};

/// Color Retinex decomposition; with use_ccr the kept set is the union of the Retinex
/// classification and the cross-ratio mask.
inline RetinexResult retinex_decompose_full(const LinearImage& img, const RetinexParams& params, bool use_ccr) {
  if (img.empty()) throw InvalidInput("retinex_decompose: empty image");
  params.validate();
  const GradientField grad = forward_gradients(img);
  DirectionalMask keep = retinex_classify(grad, params);
  if (use_ccr) keep = fuse_or(keep, ccr_mask(img, params));
  PoissonResult solve = poisson_reconstruct(grad, keep);
  LinearImage refl(img.width(), img.height());
  for (std::size_t i = 0; i < img.size(); ++i)
    for (int c = 0; c < 3; ++c) refl[i][c] = std::exp(solve.log_image[i][c]);
  LinearImage shading = estimate_shading(img, refl);
  return {Decomposition{std::move(refl), std::move(shading), solve.degraded}, std::move(keep), std::move(solve)};
}

inline Decomposition retinex_decompose(const LinearImage& img, const RetinexParams& params, bool use_ccr) {
  return retinex_decompose_full(img, params, use_ccr).intrinsics;
}

}  // namespace iid

#endif  // IID_RETINEX_HPP
