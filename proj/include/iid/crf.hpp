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

#ifndef IID_CRF_HPP
#define IID_CRF_HPP

// Dense-CRF reflectance labeling.
//
//   E(x) = w_p E_p(x) + w_s E_s(x) + w_l E_l(x)
//
// E_p is a Potts penalty weighted by a Gaussian kernel over (position, intensity,
// chromaticity [, cross-ratio weight]) features, E_s penalizes log-shading differences
// between 4-neighbors and E_l penalizes log-shading outside a plausible range. Shading of a
// pixel under a label is mean(I) / mean(label color).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "iid/clustering.hpp"
#include "iid/image.hpp"
#include "iid/imgcore.hpp"
#include "iid/intrinsics.hpp"
#include "iid/parallel.hpp"
#include "iid/ratios.hpp"

namespace iid {

struct CrfParams {
  double w_p = 1.0;
  double w_s = 0.5;
  double w_l = 0.1;
  std::optional<double> theta_pos;  // unset: 0.1 * max(H, W)
  double theta_int = 0.1;
  double theta_chroma = 0.1;
  double theta_ratio = 0.5;
  int iterations = 10;
  double shading_lo = -2.5;
  double shading_hi = 2.5;
  bool use_ratio_feature = false;
  double ratio_sigma = 1.0;  // pre-smoothing for the fused ratio feature
  std::uint64_t seed = 0;
  // Images up to this many pixels use the exact all-pairs kernel; larger ones use a
  // strided window sampling of the same kernel.
  std::size_t dense_pixel_limit = 1024;
  // Greedy label moves on the exact energy after mean-field.
  int refine_sweeps = 2;
  // Seeded block perturbations, each kept only if it lowers the exact energy after repair.
  int perturbation_rounds = 64;

  void validate() const {
    if (!(w_p >= 0.0) || !(w_s >= 0.0) || !(w_l >= 0.0)) throw InvalidParameter("CRF weights must be >= 0");
    if (theta_pos && !(*theta_pos > 0.0)) throw InvalidParameter("theta_pos must be > 0");
    if (!(theta_int > 0.0) || !(theta_chroma > 0.0) || !(theta_ratio > 0.0))
      throw InvalidParameter("CRF bandwidths must be > 0");
    if (iterations <= 0) throw InvalidParameter("CRF iterations must be positive");
    if (!(shading_lo < shading_hi)) throw InvalidParameter("shading_log_range requires lo < hi");
    if (!(ratio_sigma > 0.0)) throw InvalidParameter("ratio_sigma must be > 0");
    if (refine_sweeps < 0) throw InvalidParameter("refine_sweeps must be >= 0");
    if (perturbation_rounds < 0) throw InvalidParameter("perturbation_rounds must be >= 0");
  }

  double resolved_theta_pos(int width, int height) const {
    return theta_pos ? *theta_pos : std::max(1e-3, 0.1 * std::max(width, height));
  }
};

struct LabelState {
  std::vector<Rgb> labels;  // candidate reflectance colors
  std::vector<double> q;    // n * k, rows sum to 1
  std::vector<int> hard;    // per-pixel argmax

  int k() const { return static_cast<int>(labels.size()); }
};

struct EnergyBreakdown {
  double e_pairwise = 0.0;
  double e_smooth = 0.0;
  double e_prior = 0.0;
  double e_total = 0.0;
};

inline EnergyBreakdown combine(double pairwise, double smooth, double prior, const CrfParams& p) {
  return {pairwise, smooth, prior, p.w_p * pairwise + p.w_s * smooth + p.w_l * prior};
}

/// Per-pixel kernel features: (x, y)/theta_pos, intensity/theta_int, chroma/theta_chroma and,
/// with use_ratio_feature, exp(-f^2/2)/theta_ratio for the fused ratio magnitude f.
inline FeatureMatrix pairwise_features(const LinearImage& img, const CrfParams& params) {
  if (img.empty()) throw InvalidInput("pairwise_features: empty image");
  params.validate();
  const double tp = params.resolved_theta_pos(img.width(), img.height());
  FeatureMatrix f{img.size(), params.use_ratio_feature ? 6 : 5, {}};
  f.data.resize(f.n * f.dim);
  std::optional<RatioField> ratios;
  if (params.use_ratio_feature) ratios = ratio_field(img, params.ratio_sigma);
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) {
      const std::size_t i = img.index(x, y);
      const PixelFeatures p = pixel_features(img[i]);
      auto r = f.row(i);
      r[0] = x / tp;
      r[1] = y / tp;
      r[2] = p.intensity / params.theta_int;
      r[3] = p.chroma_r / params.theta_chroma;
      r[4] = p.chroma_g / params.theta_chroma;
      if (ratios) {
        const double fused = ratios->fused[i];
        r[5] = std::exp(-0.5 * fused * fused) / params.theta_ratio;
      }
    }
  return f;
}

inline double kernel_affinity(std::span<const double> a, std::span<const double> b) {
  return std::exp(-0.5 * detail::squared_distance(a, b));
}

/// Exact Potts pairwise energy: sum over unordered pairs with different labels of the
/// Gaussian kernel affinity.
inline double pairwise_energy(std::span<const int> hard, const FeatureMatrix& feats) {
  if (hard.size() != feats.n) throw InvalidInput("pairwise_energy: label count does not match features");
  double e = 0.0;
  for (std::size_t i = 0; i < feats.n; ++i)
    for (std::size_t j = i + 1; j < feats.n; ++j)
      if (hard[i] != hard[j]) e += kernel_affinity(feats.row(i), feats.row(j));
  return e;
}

inline double pairwise_energy(const LabelState& state, const FeatureMatrix& feats) {
  return pairwise_energy(state.hard, feats);
}

/// Symmetric sparse kernel adjacency used by inference and large-image energies.
struct KernelGraph {
  std::vector<std::size_t> offsets;  // n + 1
  std::vector<int> neighbors;
  std::vector<double> weights;
  bool exact = true;

  std::size_t n() const { return offsets.empty() ? 0 : offsets.size() - 1; }
};

inline KernelGraph build_kernel_graph(const FeatureMatrix& feats, int width, int height, const CrfParams& params) {
  const std::size_t n = feats.n;
  KernelGraph g;
  g.offsets.assign(n + 1, 0);
  if (n <= params.dense_pixel_limit) {
    g.exact = true;
    g.neighbors.reserve(n * (n - 1));
    g.weights.reserve(n * (n - 1));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (i == j) continue;
        g.neighbors.push_back(static_cast<int>(j));
        g.weights.push_back(kernel_affinity(feats.row(i), feats.row(j)));
      }
      g.offsets[i + 1] = g.neighbors.size();
    }
    return g;
  }
  // Sample offsets on a stride-s lattice inside a 3-sigma spatial window; every sample
  // stands for s*s pixels. The offset set is symmetric, so the graph is too.
  g.exact = false;
  const double tp = params.resolved_theta_pos(width, height);
  const int stride = std::max(1, static_cast<int>(std::floor(tp / 3.0)));
  const int reach = static_cast<int>(std::ceil(3.0 * tp)) / stride;
  const double cell = static_cast<double>(stride) * stride;
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * width + x;
      for (int oy = -reach; oy <= reach; ++oy) {
        const int yy = y + oy * stride;
        if (yy < 0 || yy >= height) continue;
        for (int ox = -reach; ox <= reach; ++ox) {
          if (ox == 0 && oy == 0) continue;
          const int xx = x + ox * stride;
          if (xx < 0 || xx >= width) continue;
          const std::size_t j = static_cast<std::size_t>(yy) * width + xx;
          const double w = kernel_affinity(feats.row(i), feats.row(j));
          if (w < 1e-9) continue;
          g.neighbors.push_back(static_cast<int>(j));
          g.weights.push_back(cell * w);
        }
      }
      g.offsets[i + 1] = g.neighbors.size();
    }
  return g;
}

inline double pairwise_energy(std::span<const int> hard, const KernelGraph& g) {
  double e = 0.0;
  for (std::size_t i = 0; i < g.n(); ++i)
    for (std::size_t e_idx = g.offsets[i]; e_idx < g.offsets[i + 1]; ++e_idx) {
      const auto j = static_cast<std::size_t>(g.neighbors[e_idx]);
      if (j > i && hard[i] != hard[j]) e += g.weights[e_idx];
    }
  return e;
}

namespace detail {

inline double log_shading(const Rgb& pixel, const Rgb& label) {
  return std::log(std::max(pixel.mean(), kShadingEpsilon)) - std::log(std::max(label.mean(), kShadingEpsilon));
}

inline double hinge_squared(double v, double lo, double hi) {
  const double d = v < lo ? lo - v : (v > hi ? v - hi : 0.0);
  return d * d;
}

inline void require_labels(const LinearImage& img, const LabelState& state) {
  if (state.hard.size() != img.size()) throw InvalidInput("label state does not cover the image");
  for (int l : state.hard)
    if (l < 0 || l >= state.k()) throw InvalidInput("label index out of range");
}

}  // namespace detail

/// Sum over 4-neighbor pairs of squared log-shading differences.
inline double shading_smoothness_energy(const LinearImage& img, const LabelState& state) {
  detail::require_labels(img, state);
  const int w = img.width();
  const int h = img.height();
  double e = 0.0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const std::size_t i = img.index(x, y);
      const double a = detail::log_shading(img[i], state.labels[state.hard[i]]);
      if (x + 1 < w) {
        const double d = a - detail::log_shading(img[i + 1], state.labels[state.hard[i + 1]]);
        e += d * d;
      }
      if (y + 1 < h) {
        const std::size_t j = i + static_cast<std::size_t>(w);
        const double d = a - detail::log_shading(img[j], state.labels[state.hard[j]]);
        e += d * d;
      }
    }
  return e;
}

/// Sum of squared hinge distances of log shading to [lo, hi].
inline double shading_prior_energy(const LinearImage& img, const LabelState& state, double lo, double hi) {
  if (!(lo < hi)) throw InvalidParameter("shading range requires lo < hi");
  detail::require_labels(img, state);
  double e = 0.0;
  for (std::size_t i = 0; i < img.size(); ++i)
    e += detail::hinge_squared(detail::log_shading(img[i], state.labels[state.hard[i]]), lo, hi);
  return e;
}

/// Energy of a hard labeling. Uses the exact all-pairs kernel when the graph is exact.
inline EnergyBreakdown energy(const LinearImage& img, const LabelState& state, const KernelGraph& graph,
                              const CrfParams& params) {
  return combine(pairwise_energy(state.hard, graph), shading_smoothness_energy(img, state),
                 shading_prior_energy(img, state, params.shading_lo, params.shading_hi), params);
}

struct MinimizeResult {
  LabelState state;
  EnergyBreakdown energy;
  EnergyBreakdown initial_energy;
  std::vector<EnergyBreakdown> history;  // hard-labeling energy after each mean-field sweep
  bool reverted = false;                 // no labeling beat the initialization
};

/// Mean-field inference over the cluster labels, followed by greedy refinement.
/// Never returns a labeling with higher energy than the initialization.
inline MinimizeResult minimize(const LinearImage& img, const ClusterModel& init, const CrfParams& params) {
  params.validate();
  if (init.k <= 0) throw InvalidInput("minimize: k must be positive");
  if (init.assignment.size() != img.size()) throw InvalidInput("minimize: initialization does not cover the image");
  const std::size_t n = img.size();
  const int k = init.k;
  const int w = img.width();
  const int h = img.height();

  LabelState state;
  {
    std::vector<Rgb> sum(k);
    std::vector<std::size_t> count(k, 0);
    Rgb total{};
    for (std::size_t i = 0; i < n; ++i) {
      sum[init.assignment[i]] += img[i];
      ++count[init.assignment[i]];
      total += img[i];
    }
    state.labels.resize(k);
    for (int l = 0; l < k; ++l)
      state.labels[l] = count[l] > 0 ? (1.0 / static_cast<double>(count[l])) * sum[l]
                                     : (1.0 / static_cast<double>(n)) * total;
  }
  state.hard = init.assignment;
  state.q.assign(n * k, 0.1 / k);
  for (std::size_t i = 0; i < n; ++i) state.q[i * k + state.hard[i]] += 0.9;

  const FeatureMatrix feats = pairwise_features(img, params);
  const KernelGraph graph = build_kernel_graph(feats, w, h, params);

  // Log shading of every pixel under every label and its prior cost.
  std::vector<double> a(n * k), prior(n * k);
  for (std::size_t i = 0; i < n; ++i)
    for (int l = 0; l < k; ++l) {
      a[i * k + l] = detail::log_shading(img[i], state.labels[l]);
      prior[i * k + l] = detail::hinge_squared(a[i * k + l], params.shading_lo, params.shading_hi);
    }

  MinimizeResult res;
  res.initial_energy = energy(img, state, graph, params);
  std::vector<int> best_hard = state.hard;
  EnergyBreakdown best = res.initial_energy;

  std::vector<double> q_next(n * k), mu(n), var(n);
  for (int it = 0; it < params.iterations; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      double m = 0.0, m2 = 0.0;
      for (int l = 0; l < k; ++l) {
        const double qa = state.q[i * k + l];
        m += qa * a[i * k + l];
        m2 += qa * a[i * k + l] * a[i * k + l];
      }
      mu[i] = m;
      var[i] = std::max(0.0, m2 - m * m);
    }
    parallel_for(0, n, [&](std::size_t i) {
      std::vector<double> cost(k, 0.0);
      // Expected Potts cost differs from -sum_j w_ij q_j(l) by a label-independent constant.
      for (std::size_t e = graph.offsets[i]; e < graph.offsets[i + 1]; ++e) {
        const double wij = graph.weights[e];
        const double* qj = &state.q[static_cast<std::size_t>(graph.neighbors[e]) * k];
        for (int l = 0; l < k; ++l) cost[l] -= params.w_p * wij * qj[l];
      }
      const int x = static_cast<int>(i % w);
      const int y = static_cast<int>(i / w);
      const std::size_t nb[4] = {i - 1, i + 1, i - static_cast<std::size_t>(w), i + static_cast<std::size_t>(w)};
      const bool ok[4] = {x > 0, x + 1 < w, y > 0, y + 1 < h};
      for (int l = 0; l < k; ++l) {
        const double ail = a[i * k + l];
        double s = 0.0;
        for (int t = 0; t < 4; ++t)
          if (ok[t]) {
            const double d = ail - mu[nb[t]];
            s += d * d + var[nb[t]];
          }
        cost[l] += params.w_s * s + params.w_l * prior[i * k + l];
      }
      const double lo = *std::min_element(cost.begin(), cost.end());
      double z = 0.0;
      for (int l = 0; l < k; ++l) {
        q_next[i * k + l] = std::exp(-(cost[l] - lo));
        z += q_next[i * k + l];
      }
      for (int l = 0; l < k; ++l) q_next[i * k + l] /= z;
    });
    state.q.swap(q_next);
    for (std::size_t i = 0; i < n; ++i) {
      const double* qi = &state.q[i * k];
      state.hard[i] = static_cast<int>(std::max_element(qi, qi + k) - qi);  // first max wins ties
    }
    const EnergyBreakdown e = energy(img, state, graph, params);
    res.history.push_back(e);
    if (e.e_total < best.e_total) {
      best = e;
      best_hard = state.hard;
    }
  }

  // Refinement on the exact energy; every move is applied only when it lowers it:
  //  - merges of same-material labels (with the ratio feature enabled),
  //  - single-pixel moves, and joint moves of 4-adjacent pixel pairs,
  //  - seeded block perturbations repaired by single-pixel moves around the block.
  state.hard = best_hard;
  if (params.refine_sweeps > 0) {
    auto significant = [](double delta) { return delta < -1e-12; };
    std::vector<double> label_weight(k), deltas(k);
    // Exact energy change of relabeling pixel i to each label with every other pixel fixed.
    auto label_deltas = [&](std::size_t i) {
      std::fill(label_weight.begin(), label_weight.end(), 0.0);
      for (std::size_t e = graph.offsets[i]; e < graph.offsets[i + 1]; ++e)
        label_weight[state.hard[graph.neighbors[e]]] += graph.weights[e];
      const int cur = state.hard[i];
      const int x = static_cast<int>(i % w);
      const int y = static_cast<int>(i / w);
      const std::size_t nb[4] = {i - 1, i + 1, i - static_cast<std::size_t>(w), i + static_cast<std::size_t>(w)};
      const bool ok[4] = {x > 0, x + 1 < w, y > 0, y + 1 < h};
      for (int l = 0; l < k; ++l) {
        double ds = 0.0;
        for (int t = 0; t < 4; ++t)
          if (ok[t]) {
            const double aj = a[nb[t] * k + state.hard[nb[t]]];
            const double dn = a[i * k + l] - aj, dc = a[i * k + cur] - aj;
            ds += dn * dn - dc * dc;
          }
        deltas[l] = l == cur ? 0.0
                             : params.w_p * (label_weight[cur] - label_weight[l]) + params.w_s * ds +
                                   params.w_l * (prior[i * k + l] - prior[i * k + cur]);
      }
    };
    auto move_delta = [&](std::size_t i, int l) {
      label_deltas(i);
      return deltas[l];
    };
    // Moves pixel i to its best label; returns the (non-positive) energy change.
    auto improve_pixel = [&](std::size_t i) {
      label_deltas(i);
      int best_l = state.hard[i];
      double best_d = 0.0;
      for (int l = 0; l < k; ++l)
        if (significant(deltas[l] - best_d)) {
          best_d = deltas[l];
          best_l = l;
        }
      state.hard[i] = best_l;
      return best_d;
    };

    // Label colors whose rounded cross ratios are neutral are one material under different
    // shading (the criterion the adaptive cluster count uses).
    auto same_material = [&](int l1, int l2) {
      constexpr RoundedTriple neutral{1, 1, 1};
      return round_triple(cross_ratios(state.labels[l1], state.labels[l2])) == neutral;
    };
    // Relabels all pixels of one label as another same-material label, applying the best
    // merge that lowers the exact energy. Merges are restricted to same-material pairs
    // because the Potts term alone always favors fewer labels (its minimum is a single
    // label). Returns whether a merge was applied.
    auto merge_labels = [&]() {
      std::vector<double> between(static_cast<std::size_t>(k) * k, 0.0);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t e = graph.offsets[i]; e < graph.offsets[i + 1]; ++e)
          between[static_cast<std::size_t>(state.hard[i]) * k + state.hard[graph.neighbors[e]]] += graph.weights[e];
      std::vector<double> delta(static_cast<std::size_t>(k) * k, 0.0);  // [from * k + to]
      std::vector<char> present(k, 0);
      for (std::size_t i = 0; i < n; ++i) {
        const int from = state.hard[i];
        present[from] = 1;
        double* d = &delta[static_cast<std::size_t>(from) * k];
        for (int to = 0; to < k; ++to) d[to] += params.w_l * (prior[i * k + to] - prior[i * k + from]);
        const int x = static_cast<int>(i % w);
        const int y = static_cast<int>(i / w);
        const std::size_t nb[4] = {i - 1, i + 1, i - static_cast<std::size_t>(w), i + static_cast<std::size_t>(w)};
        const bool ok[4] = {x > 0, x + 1 < w, y > 0, y + 1 < h};
        for (int t = 0; t < 4; ++t) {
          if (!ok[t]) continue;
          const std::size_t j = nb[t];
          const bool inside = state.hard[j] == from;
          if (inside && j < i) continue;  // pair counted from its other end
          const double old_d = a[i * k + from] - a[j * k + state.hard[j]];
          for (int to = 0; to < k; ++to) {
            const double new_d = a[i * k + to] - a[j * k + (inside ? to : state.hard[j])];
            d[to] += params.w_s * (new_d * new_d - old_d * old_d);
          }
        }
      }
      int best_from = -1, best_to = -1;
      double best_d = 0.0;
      for (int from = 0; from < k; ++from)
        for (int to = 0; to < k; ++to) {
          if (from == to || !present[from] || !present[to] || !same_material(from, to)) continue;
          // Potts pairs between the two labels stop paying; other pairs are unchanged.
          const double d = delta[static_cast<std::size_t>(from) * k + to] - params.w_p * between[static_cast<std::size_t>(from) * k + to];
          if (significant(d - best_d)) {
            best_d = d;
            best_from = from;
            best_to = to;
          }
        }
      if (best_from < 0) return false;
      for (int& l : state.hard)
        if (l == best_from) l = best_to;
      return true;
    };

    std::vector<int> candidates;
    for (int sweep = 0; sweep < params.refine_sweeps; ++sweep) {
      bool improved = false;
      if (params.use_ratio_feature)
        while (merge_labels()) improved = true;
      for (std::size_t i = 0; i < n; ++i)
        if (improve_pixel(i) < 0.0) improved = true;
      for (std::size_t i = 0; i < n; ++i) {
        const int x = static_cast<int>(i % w);
        const int y = static_cast<int>(i / w);
        for (int dir = 0; dir < 2; ++dir) {
          if (dir == 0 ? x + 1 >= w : y + 1 >= h) continue;
          const std::size_t j = dir == 0 ? i + 1 : i + static_cast<std::size_t>(w);
          // Labels on the 4-neighborhoods of both pixels.
          candidates.clear();
          for (std::size_t p : {i, j}) {
            const int px = static_cast<int>(p % w);
            const int py = static_cast<int>(p / w);
            if (px > 0) candidates.push_back(state.hard[p - 1]);
            if (px + 1 < w) candidates.push_back(state.hard[p + 1]);
            if (py > 0) candidates.push_back(state.hard[p - static_cast<std::size_t>(w)]);
            if (py + 1 < h) candidates.push_back(state.hard[p + static_cast<std::size_t>(w)]);
          }
          std::sort(candidates.begin(), candidates.end());
          candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
          const int li = state.hard[i], lj = state.hard[j];
          for (int l : candidates) {
            if (l == li || l == lj) continue;  // covered by single moves
            const double d1 = move_delta(i, l);
            state.hard[i] = l;
            const double d2 = move_delta(j, l);
            if (significant(d1 + d2)) {
              state.hard[j] = l;
              improved = true;
              break;
            }
            state.hard[i] = li;
          }
        }
      }
      if (!improved) break;
    }

    std::mt19937_64 rng(params.seed);
    std::vector<std::pair<std::size_t, int>> journal;  // (pixel, previous label)
    for (int round = 0; round < params.perturbation_rounds; ++round) {
      const int bw = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(std::min(4, w)));
      const int bh = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(std::min(4, h)));
      const int x0 = static_cast<int>(rng() % static_cast<std::uint64_t>(w - bw + 1));
      const int y0 = static_cast<int>(rng() % static_cast<std::uint64_t>(h - bh + 1));
      const int l = static_cast<int>(rng() % static_cast<std::uint64_t>(k));
      journal.clear();
      double total = 0.0;
      for (int y = y0; y < y0 + bh; ++y)
        for (int x = x0; x < x0 + bw; ++x) {
          const std::size_t i = static_cast<std::size_t>(y) * w + x;
          if (state.hard[i] == l) continue;
          total += move_delta(i, l);
          journal.emplace_back(i, state.hard[i]);
          state.hard[i] = l;
        }
      if (journal.empty()) continue;
      const int rx0 = std::max(0, x0 - 2), rx1 = std::min(w, x0 + bw + 2);
      const int ry0 = std::max(0, y0 - 2), ry1 = std::min(h, y0 + bh + 2);
      for (int pass = 0; pass < 4; ++pass) {
        bool moved = false;
        for (int y = ry0; y < ry1; ++y)
          for (int x = rx0; x < rx1; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * w + x;
            const int prev = state.hard[i];
            const double d = improve_pixel(i);
            if (d < 0.0) {
              journal.emplace_back(i, prev);
              total += d;
              moved = true;
            }
          }
        if (!moved) break;
      }
      if (!significant(total))
        for (auto it = journal.rbegin(); it != journal.rend(); ++it) state.hard[it->first] = it->second;
    }

    const EnergyBreakdown e = energy(img, state, graph, params);
    if (e.e_total < best.e_total) {
      best = e;
      best_hard = state.hard;
    }
  }

  state.hard = best_hard;
  res.reverted = best_hard == init.assignment;
  if (res.reverted) best = res.initial_energy;
  // Keep q consistent with the returned hard labels.
  for (std::size_t i = 0; i < n; ++i) {
    double* qi = &state.q[i * k];
    if (static_cast<int>(std::max_element(qi, qi + k) - qi) != state.hard[i]) {
      std::fill(qi, qi + k, 0.0);
      qi[state.hard[i]] = 1.0;
    }
  }
  res.state = std::move(state);
  res.energy = best;
  return res;
}

namespace detail {

// Box means over (2r+1)^2 windows clipped to the raster, via summed-area tables.
class BoxMean {
public:
  BoxMean(int width, int height, int radius) : w_(width), h_(height), r_(radius) {}

  std::vector<double> operator()(const std::vector<double>& v) const {
    std::vector<double> sat(static_cast<std::size_t>(w_ + 1) * (h_ + 1), 0.0);
    for (int y = 0; y < h_; ++y) {
      double row = 0.0;
      for (int x = 0; x < w_; ++x) {
        row += v[static_cast<std::size_t>(y) * w_ + x];
        sat[static_cast<std::size_t>(y + 1) * (w_ + 1) + x + 1] = sat[static_cast<std::size_t>(y) * (w_ + 1) + x + 1] + row;
      }
    }
    std::vector<double> out(v.size());
    for (int y = 0; y < h_; ++y) {
      const int y0 = std::max(0, y - r_), y1 = std::min(h_ - 1, y + r_);
      for (int x = 0; x < w_; ++x) {
        const int x0 = std::max(0, x - r_), x1 = std::min(w_ - 1, x + r_);
        auto s = [&](int xx, int yy) { return sat[static_cast<std::size_t>(yy) * (w_ + 1) + xx]; };
        const double sum = s(x1 + 1, y1 + 1) - s(x0, y1 + 1) - s(x1 + 1, y0) + s(x0, y0);
        out[static_cast<std::size_t>(y) * w_ + x] = sum / static_cast<double>((x1 - x0 + 1) * (y1 - y0 + 1));
      }
    }
    return out;
  }

private:
  int w_, h_, r_;
};

}  // namespace detail

/// Guided image filter with a color guide, applied to each channel of `map`.
inline LinearImage guided_filter(const LinearImage& map, const LinearImage& guide, int radius = 8, double eps = 1e-3) {
  require_same_shape(map, guide, "guided_filter");
  if (radius < 1) throw InvalidParameter("guided filter radius must be >= 1");
  if (!(eps > 0.0)) throw InvalidParameter("guided filter eps must be > 0");
  const int w = map.width();
  const int h = map.height();
  const std::size_t n = map.size();
  const detail::BoxMean box(w, h, radius);
  auto channel = [&](const LinearImage& img, int c) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = img[i][c];
    return v;
  };
  auto product = [&](const std::vector<double>& u, const std::vector<double>& v) {
    std::vector<double> o(n);
    for (std::size_t i = 0; i < n; ++i) o[i] = u[i] * v[i];
    return o;
  };
  std::vector<double> gi[3], mean_i[3];
  for (int c = 0; c < 3; ++c) {
    gi[c] = channel(guide, c);
    mean_i[c] = box(gi[c]);
  }
  std::vector<double> cov[3][3];
  for (int a = 0; a < 3; ++a)
    for (int b = a; b < 3; ++b) {
      cov[a][b] = box(product(gi[a], gi[b]));
      for (std::size_t i = 0; i < n; ++i) cov[a][b][i] -= mean_i[a][i] * mean_i[b][i];
    }
  LinearImage out(w, h);
  for (int c = 0; c < 3; ++c) {
    const std::vector<double> p = channel(map, c);
    const std::vector<double> mean_p = box(p);
    std::vector<double> ca[3], cb(n);
    std::vector<double> cov_ip[3];
    for (int a = 0; a < 3; ++a) {
      cov_ip[a] = box(product(gi[a], p));
      ca[a].resize(n);
    }
    for (std::size_t i = 0; i < n; ++i) {
      // Solve (Sigma + eps I) a = cov(I, p) by the adjugate.
      const double s00 = cov[0][0][i] + eps, s01 = cov[0][1][i], s02 = cov[0][2][i];
      const double s11 = cov[1][1][i] + eps, s12 = cov[1][2][i], s22 = cov[2][2][i] + eps;
      const double c00 = s11 * s22 - s12 * s12, c01 = s02 * s12 - s01 * s22, c02 = s01 * s12 - s02 * s11;
      const double c11 = s00 * s22 - s02 * s02, c12 = s01 * s02 - s00 * s12, c22 = s00 * s11 - s01 * s01;
      const double det = s00 * c00 + s01 * c01 + s02 * c02;
      double v[3];
      for (int a = 0; a < 3; ++a) v[a] = cov_ip[a][i] - mean_i[a][i] * mean_p[i];
      const double a0 = (c00 * v[0] + c01 * v[1] + c02 * v[2]) / det;
      const double a1 = (c01 * v[0] + c11 * v[1] + c12 * v[2]) / det;
      const double a2 = (c02 * v[0] + c12 * v[1] + c22 * v[2]) / det;
      ca[0][i] = a0;
      ca[1][i] = a1;
      ca[2][i] = a2;
      cb[i] = mean_p[i] - a0 * mean_i[0][i] - a1 * mean_i[1][i] - a2 * mean_i[2][i];
    }
    const std::vector<double> ma0 = box(ca[0]), ma1 = box(ca[1]), ma2 = box(ca[2]), mb = box(cb);
    for (std::size_t i = 0; i < n; ++i)
      out[i][c] = std::max(0.0, ma0[i] * gi[0][i] + ma1[i] * gi[1][i] + ma2[i] * gi[2][i] + mb[i]);
  }
  return out;
}

}  // namespace iid

#endif  // IID_CRF_HPP
