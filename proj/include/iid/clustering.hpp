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

#ifndef IID_CLUSTERING_HPP
#define IID_CLUSTERING_HPP

// Per-pixel features, ratio-driven choice of k and seeded k-means.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <vector>

#include "iid/image.hpp"
#include "iid/imgcore.hpp"
#include "iid/parallel.hpp"
#include "iid/random.hpp"
#include "iid/ratios.hpp"

namespace iid {

inline constexpr double kRatioWeightMit = 0.5;
inline constexpr double kRatioWeightIiw = 10.0;

struct FeatureMatrix {
  std::size_t n = 0;
  int dim = 0;
  std::vector<double> data;  // n * dim, row-major

  std::span<const double> row(std::size_t i) const { return {data.data() + i * dim, static_cast<std::size_t>(dim)}; }
  std::span<double> row(std::size_t i) { return {data.data() + i * dim, static_cast<std::size_t>(dim)}; }
};

/// Rows (intensity, chroma_r, chroma_g) and, with use_ratios, the reference cross ratios
/// divided by their image-wide maxima and scaled by ratio_weight.
inline FeatureMatrix build_features(const LinearImage& img, bool use_ratios, double ratio_weight) {
  if (img.empty()) throw InvalidInput("build_features: empty image");
  if (!(ratio_weight >= 0.0)) throw InvalidParameter("ratio weight must be >= 0");
  FeatureMatrix f{img.size(), use_ratios ? 6 : 3, {}};
  f.data.resize(f.n * f.dim);
  for (std::size_t i = 0; i < img.size(); ++i) {
    const PixelFeatures p = pixel_features(img[i]);
    auto r = f.row(i);
    r[0] = p.intensity;
    r[1] = p.chroma_r;
    r[2] = p.chroma_g;
  }
  if (use_ratios) {
    std::vector<RatioTriple> triples(img.size());
    double max_m[3] = {0.0, 0.0, 0.0};
    for (int y = 0; y < img.height(); ++y)
      for (int x = 0; x < img.width(); ++x) {
        const RatioTriple t = reference_triple(img, x, y);
        triples[img.index(x, y)] = t;
        for (int c = 0; c < 3; ++c) max_m[c] = std::max(max_m[c], t[c]);
      }
    for (std::size_t i = 0; i < img.size(); ++i) {
      auto r = f.row(i);
      for (int c = 0; c < 3; ++c) r[3 + c] = ratio_weight * triples[i][c] / max_m[c];
    }
  }
  return f;
}

inline int adaptive_k(const LinearImage& img, int k_max = kDefaultMaxClusters) { return count_distinct_colors(img, k_max); }

struct ClusterModel {
  int k = 0;
  int dim = 0;
  std::vector<double> centers;  // k * dim
  std::vector<int> assignment;  // per row
  std::uint64_t seed = 0;
  double objective = 0.0;
  int iterations = 0;
  std::vector<double> objective_history;  // objective after each assignment step

  std::span<const double> center(int c) const { return {centers.data() + static_cast<std::size_t>(c) * dim, static_cast<std::size_t>(dim)}; }
};

struct KMeansOptions {
  int max_iterations = 300;
  double tolerance = 1e-6;
};

namespace detail {

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double t = a[i] - b[i];
    d += t * t;
  }
  return d;
}

}  // namespace detail

/// Lloyd's k-means with k-means++ seeding. Deterministic for a fixed seed: the random
/// stream is consumed in a fixed order and all reductions sum in index order.
inline ClusterModel kmeans(const FeatureMatrix& feats, int k, std::uint64_t seed, const KMeansOptions& opts = {}) {
  if (k <= 0) throw InvalidParameter("k must be positive");
  if (static_cast<std::size_t>(k) > feats.n) throw InvalidParameter("k exceeds the number of points");
  const std::size_t n = feats.n;
  const int dim = feats.dim;
  ClusterModel m;
  m.k = k;
  m.dim = dim;
  m.seed = seed;
  m.centers.assign(static_cast<std::size_t>(k) * dim, 0.0);
  m.assignment.assign(n, 0);
  auto center = [&](int c) { return std::span<double>(m.centers.data() + static_cast<std::size_t>(c) * dim, dim); };
  auto set_center = [&](int c, std::size_t row) {
    const auto src = feats.row(row);
    std::copy(src.begin(), src.end(), center(c).begin());
  };

  std::mt19937_64 rng(seed);
  set_center(0, rng() % n);
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = detail::squared_distance(feats.row(i), center(0));
  for (int c = 1; c < k; ++c) {
    double total = 0.0;
    for (double v : d2) total += v;
    std::size_t pick = 0;
    if (total > 0.0) {
      const double target = detail::unit_uniform(rng) * total;
      double acc = 0.0;
      pick = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        acc += d2[i];
        if (acc > target && d2[i] > 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = static_cast<std::size_t>(std::max_element(d2.begin(), d2.end()) - d2.begin());
    }
    set_center(c, pick);
    for (std::size_t i = 0; i < n; ++i) d2[i] = std::min(d2[i], detail::squared_distance(feats.row(i), center(c)));
  }

  std::vector<double> dist(n);
  std::vector<double> sums(static_cast<std::size_t>(k) * dim);
  std::vector<std::size_t> counts(k);
  auto assign = [&] {
    parallel_for(0, n, [&](std::size_t i) {
      int best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (int c = 0; c < k; ++c) {
        const double d = detail::squared_distance(feats.row(i), m.center(c));
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      m.assignment[i] = best;
      dist[i] = best_d;
    });
    double obj = 0.0;
    for (double v : dist) obj += v;
    return obj;
  };

  for (int it = 0; it < opts.max_iterations; ++it) {
    m.objective_history.push_back(assign());
    m.iterations = it + 1;
    std::fill(sums.begin(), sums.end(), 0.0);
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      const int c = m.assignment[i];
      ++counts[c];
      const auto r = feats.row(i);
      for (int d = 0; d < dim; ++d) sums[static_cast<std::size_t>(c) * dim + d] += r[d];
    }
    double movement = 0.0;
    for (int c = 0; c < k; ++c) {
      std::vector<double> next(dim);
      if (counts[c] > 0) {
        for (int d = 0; d < dim; ++d) next[d] = sums[static_cast<std::size_t>(c) * dim + d] / static_cast<double>(counts[c]);
      } else {
        // Re-seed an empty cluster on the point farthest from its center.
        const std::size_t far = static_cast<std::size_t>(std::max_element(dist.begin(), dist.end()) - dist.begin());
        const auto r = feats.row(far);
        next.assign(r.begin(), r.end());
        dist[far] = 0.0;
      }
      movement = std::max(movement, std::sqrt(detail::squared_distance(next, center(c))));
      std::copy(next.begin(), next.end(), center(c).begin());
    }
    if (movement < opts.tolerance) break;
  }
  m.objective = assign();
  return m;
}

/// Replaces every pixel with the mean linear RGB of its cluster.
inline LinearImage labels_to_reflectance(const LinearImage& img, std::span<const int> assignment, int k) {
  if (assignment.size() != img.size()) throw InvalidInput("labels_to_reflectance: assignment does not cover the image");
  std::vector<Rgb> sum(k);
  std::vector<std::size_t> count(k, 0);
  for (std::size_t i = 0; i < img.size(); ++i) {
    const int l = assignment[i];
    if (l < 0 || l >= k) throw InvalidInput("labels_to_reflectance: label out of range");
    sum[l] += img[i];
    ++count[l];
  }
  LinearImage out(img.width(), img.height());
  for (std::size_t i = 0; i < img.size(); ++i) {
    const int l = assignment[i];
    out[i] = (1.0 / static_cast<double>(count[l])) * sum[l];
  }
  return out;
}

inline LinearImage labels_to_reflectance(const LinearImage& img, const ClusterModel& model) {
  return labels_to_reflectance(img, model.assignment, model.k);
}

}  // namespace iid

#endif  // IID_CLUSTERING_HPP
