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

#ifndef IID_PIPELINE_HPP
#define IID_PIPELINE_HPP

// End-to-end reflectance pipeline and its JSON configuration.
//
// features -> k (fixed or ratio-driven) -> k-means -> dense-CRF labeling ->
// per-label mean reflectance -> optional guided filter -> shading by division.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <set>
#include <string>

#include <json.hpp>

#include "iid/clustering.hpp"
#include "iid/crf.hpp"
#include "iid/imgcore.hpp"
#include "iid/intrinsics.hpp"
#include "iid/retinex.hpp"

namespace iid {

struct RatioParams {
  double sigma = 1.0;
  double threshold = kDefaultRatioThreshold;
};

struct ClusterConfig {
  bool adaptive_k = false;
  int k = 20;
  bool use_ratio_features = false;
  double ratio_weight = kRatioWeightMit;
  int k_max = kDefaultMaxClusters;
  std::uint64_t seed = 0;
};

struct GuidedFilterConfig {
  bool enabled = false;
  int radius = 8;
  double eps = 1e-3;
};

struct PipelineConfig {
  Linearization linearization = Linearization::srgb;
  RetinexParams retinex;
  RatioParams ratios;
  ClusterConfig clustering;
  CrfParams crf;
  GuidedFilterConfig guided;
  int bit_depth = 16;

  void validate() const {
    retinex.validate();
    crf.validate();
    if (!(ratios.sigma > 0.0)) throw InvalidParameter("ratios.sigma must be > 0");
    if (!(ratios.threshold >= 0.0)) throw InvalidParameter("ratios.threshold must be >= 0");
    if (!clustering.adaptive_k && clustering.k <= 0) throw InvalidParameter("clustering.k must be positive");
    if (!(clustering.ratio_weight >= 0.0)) throw InvalidParameter("clustering.ratio_weight must be >= 0");
    if (clustering.k_max < 2) throw InvalidParameter("clustering.k_max must be >= 2");
    if (guided.radius < 1 || !(guided.eps > 0.0)) throw InvalidParameter("guided filter needs radius >= 1 and eps > 0");
    if (bit_depth != 8 && bit_depth != 16) throw InvalidParameter("output bit depth must be 8 or 16");
  }
};

/// Fixed k = 20 and no ratio cues anywhere.
inline PipelineConfig preset_default() { return PipelineConfig{}; }

/// Ratio-driven k, ratio clustering features and the ratio pairwise feature.
inline PipelineConfig preset_final(double ratio_weight) {
  PipelineConfig c;
  c.clustering.adaptive_k = true;
  c.clustering.use_ratio_features = true;
  c.clustering.ratio_weight = ratio_weight;
  c.crf.use_ratio_feature = true;
  return c;
}

inline PipelineConfig preset(const std::string& name) {
  if (name == "default") return preset_default();
  if (name == "mit") {
    PipelineConfig c = preset_final(kRatioWeightMit);
    c.linearization = Linearization::identity;
    return c;
  }
  if (name == "iiw") return preset_final(kRatioWeightIiw);
  throw InvalidParameter("unknown preset '" + name + "' (expected default, mit or iiw)");
}

// ---------------------------------------------------------------------------------------
// JSON

namespace detail {

using nlohmann::json;

inline void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
  if (!j.is_object()) throw ParseError(where + ": expected an object");
  for (const auto& [key, _] : j.items())
    if (!known.contains(key)) throw ParseError(where + ": unknown key '" + key + "'");
}

template <class T>
void read_field(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ParseError(where + "." + key + ": wrong type");
  }
}

}  // namespace detail

inline nlohmann::json to_json(const PipelineConfig& c) {
  using nlohmann::json;
  json crf_theta = c.crf.theta_pos ? json(*c.crf.theta_pos) : json(nullptr);
  return json{
      {"linearization", c.linearization == Linearization::srgb ? "srgb" : "identity"},
      {"retinex",
       {{"t_brightness", c.retinex.t_brightness},
        {"t_chroma", c.retinex.t_chroma},
        {"ccr_threshold", c.retinex.ccr_threshold},
        {"sigma", c.retinex.sigma}}},
      {"ratios", {{"sigma", c.ratios.sigma}, {"threshold", c.ratios.threshold}}},
      {"clustering",
       {{"k", c.clustering.adaptive_k ? json("auto") : json(c.clustering.k)},
        {"use_ratio_features", c.clustering.use_ratio_features},
        {"ratio_weight", c.clustering.ratio_weight},
        {"k_max", c.clustering.k_max},
        {"seed", c.clustering.seed}}},
      {"crf",
       {{"w_p", c.crf.w_p},
        {"w_s", c.crf.w_s},
        {"w_l", c.crf.w_l},
        {"theta_pos", crf_theta},
        {"theta_int", c.crf.theta_int},
        {"theta_chroma", c.crf.theta_chroma},
        {"theta_ratio", c.crf.theta_ratio},
        {"iterations", c.crf.iterations},
        {"shading_log_range", {c.crf.shading_lo, c.crf.shading_hi}},
        {"use_ratio_feature", c.crf.use_ratio_feature},
        {"seed", c.crf.seed},
        {"dense_pixel_limit", c.crf.dense_pixel_limit},
        {"refine_sweeps", c.crf.refine_sweeps},
        {"perturbation_rounds", c.crf.perturbation_rounds}}},
      {"guided_filter", {{"enabled", c.guided.enabled}, {"radius", c.guided.radius}, {"eps", c.guided.eps}}},
      {"output", {{"bit_depth", c.bit_depth}}},
  };
}

/// Overrides fields of `c` present in `j`. Unknown keys are errors.
inline void apply_json(PipelineConfig& c, const nlohmann::json& j) {
  using detail::read_field;
  using detail::reject_unknown;
  reject_unknown(j, {"linearization", "retinex", "ratios", "clustering", "crf", "guided_filter", "output"}, "config");
  if (j.contains("linearization")) {
    const auto& v = j["linearization"];
    if (v == "srgb") c.linearization = Linearization::srgb;
    else if (v == "identity") c.linearization = Linearization::identity;
    else throw ParseError("config.linearization: expected \"srgb\" or \"identity\"");
  }
  if (j.contains("retinex")) {
    const auto& r = j["retinex"];
    reject_unknown(r, {"t_brightness", "t_chroma", "ccr_threshold", "sigma"}, "config.retinex");
    read_field(r, "t_brightness", c.retinex.t_brightness, "config.retinex");
    read_field(r, "t_chroma", c.retinex.t_chroma, "config.retinex");
    read_field(r, "ccr_threshold", c.retinex.ccr_threshold, "config.retinex");
    read_field(r, "sigma", c.retinex.sigma, "config.retinex");
  }
  if (j.contains("ratios")) {
    const auto& r = j["ratios"];
    reject_unknown(r, {"sigma", "threshold"}, "config.ratios");
    read_field(r, "sigma", c.ratios.sigma, "config.ratios");
    read_field(r, "threshold", c.ratios.threshold, "config.ratios");
  }
  if (j.contains("clustering")) {
    const auto& r = j["clustering"];
    reject_unknown(r, {"k", "use_ratio_features", "ratio_weight", "k_max", "seed"}, "config.clustering");
    if (r.contains("k")) {
      if (r["k"] == "auto") {
        c.clustering.adaptive_k = true;
      } else if (r["k"].is_number_integer()) {
        c.clustering.adaptive_k = false;
        c.clustering.k = r["k"].get<int>();
      } else {
        throw ParseError("config.clustering.k: expected \"auto\" or an integer");
      }
    }
    read_field(r, "use_ratio_features", c.clustering.use_ratio_features, "config.clustering");
    read_field(r, "ratio_weight", c.clustering.ratio_weight, "config.clustering");
    read_field(r, "k_max", c.clustering.k_max, "config.clustering");
    read_field(r, "seed", c.clustering.seed, "config.clustering");
  }
  if (j.contains("crf")) {
    const auto& r = j["crf"];
    reject_unknown(r,
                   {"w_p", "w_s", "w_l", "theta_pos", "theta_int", "theta_chroma", "theta_ratio", "iterations",
                    "shading_log_range", "use_ratio_feature", "seed", "dense_pixel_limit", "refine_sweeps",
                    "perturbation_rounds"},
                   "config.crf");
    read_field(r, "w_p", c.crf.w_p, "config.crf");
    read_field(r, "w_s", c.crf.w_s, "config.crf");
    read_field(r, "w_l", c.crf.w_l, "config.crf");
    if (r.contains("theta_pos")) {
      if (r["theta_pos"].is_null()) c.crf.theta_pos.reset();
      else if (r["theta_pos"].is_number()) c.crf.theta_pos = r["theta_pos"].get<double>();
      else throw ParseError("config.crf.theta_pos: expected a number or null");
    }
    read_field(r, "theta_int", c.crf.theta_int, "config.crf");
    read_field(r, "theta_chroma", c.crf.theta_chroma, "config.crf");
    read_field(r, "theta_ratio", c.crf.theta_ratio, "config.crf");
    read_field(r, "iterations", c.crf.iterations, "config.crf");
    if (r.contains("shading_log_range")) {
      const auto& v = r["shading_log_range"];
      if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
        throw ParseError("config.crf.shading_log_range: expected [lo, hi]");
      c.crf.shading_lo = v[0].get<double>();
      c.crf.shading_hi = v[1].get<double>();
    }
    read_field(r, "use_ratio_feature", c.crf.use_ratio_feature, "config.crf");
    read_field(r, "seed", c.crf.seed, "config.crf");
    read_field(r, "dense_pixel_limit", c.crf.dense_pixel_limit, "config.crf");
    read_field(r, "refine_sweeps", c.crf.refine_sweeps, "config.crf");
    read_field(r, "perturbation_rounds", c.crf.perturbation_rounds, "config.crf");
  }
  if (j.contains("guided_filter")) {
    const auto& r = j["guided_filter"];
    reject_unknown(r, {"enabled", "radius", "eps"}, "config.guided_filter");
    read_field(r, "enabled", c.guided.enabled, "config.guided_filter");
    read_field(r, "radius", c.guided.radius, "config.guided_filter");
    read_field(r, "eps", c.guided.eps, "config.guided_filter");
  }
  if (j.contains("output")) {
    const auto& r = j["output"];
    reject_unknown(r, {"bit_depth"}, "config.output");
    read_field(r, "bit_depth", c.bit_depth, "config.output");
  }
  c.validate();
}

inline nlohmann::json to_json(const EnergyBreakdown& e) {
  return {{"e_pairwise", e.e_pairwise}, {"e_smooth", e.e_smooth}, {"e_prior", e.e_prior}, {"e_total", e.e_total}};
}

// ---------------------------------------------------------------------------------------

struct DecomposeResult {
  Decomposition intrinsics;
  LinearImage unfiltered_reflectance;  // before the optional guided filter
  ClusterModel clusters;
  MinimizeResult crf;
  int k = 0;
};

inline DecomposeResult decompose(const LinearImage& img, const PipelineConfig& cfg) {
  if (img.empty()) throw InvalidInput("decompose: empty image");
  cfg.validate();
  DecomposeResult out;
  const FeatureMatrix feats = build_features(img, cfg.clustering.use_ratio_features, cfg.clustering.ratio_weight);
  int k = cfg.clustering.adaptive_k ? adaptive_k(img, cfg.clustering.k_max) : cfg.clustering.k;
  k = std::min<int>(k, static_cast<int>(img.size()));
  out.k = k;
  out.clusters = kmeans(feats, k, cfg.clustering.seed);
  CrfParams crf = cfg.crf;
  crf.ratio_sigma = cfg.ratios.sigma;
  out.crf = minimize(img, out.clusters, crf);
  out.unfiltered_reflectance = labels_to_reflectance(img, out.crf.state.hard, k);
  LinearImage refl = cfg.guided.enabled ? guided_filter(out.unfiltered_reflectance, img, cfg.guided.radius, cfg.guided.eps)
                                        : out.unfiltered_reflectance;
  LinearImage shading = estimate_shading(img, refl);
  out.intrinsics = Decomposition{std::move(refl), std::move(shading), false};
  return out;
}

inline nlohmann::json energy_report(const DecomposeResult& r) {
  nlohmann::json iters = nlohmann::json::array();
  for (const auto& e : r.crf.history) iters.push_back(to_json(e));
  return {{"k", r.k},
          {"initial", to_json(r.crf.initial_energy)},
          {"iterations", iters},
          {"final", to_json(r.crf.energy)},
          {"reverted", r.crf.reverted}};
}

}  // namespace iid

#endif  // IID_PIPELINE_HPP
