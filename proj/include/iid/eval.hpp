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

#ifndef IID_EVAL_HPP
#define IID_EVAL_HPP

// Error metrics for intrinsic decompositions and the IIW judgment document format.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "iid/error.hpp"
#include "iid/image.hpp"

namespace iid {

inline constexpr int kLmseWindow = 20;
inline constexpr double kWhdrDelta = 0.10;

/// Locally scale-invariant MSE. Windows of side `window` with stride window/2; each window
/// of the prediction is scaled by its least-squares optimal factor before the squared error.
/// Per channel the window errors are summed and divided by the summed window energy of gt;
/// the three channel scores are averaged. Pixels outside `mask` (when given) are ignored.
inline double lmse(const LinearImage& pred, const LinearImage& gt, int window = kLmseWindow,
                   const BinaryMask* mask = nullptr) {
  require_same_shape(pred, gt, "lmse");
  if (mask) require_same_shape(pred, *mask, "lmse mask");
  if (window < 2) throw InvalidParameter("lmse window must be >= 2");
  const int w = pred.width();
  const int h = pred.height();
  if (pred.empty()) return 0.0;
  const int ww = std::min(window, w);
  const int wh = std::min(window, h);
  const int sx = std::max(1, ww / 2);
  const int sy = std::max(1, wh / 2);
  double score = 0.0;
  for (int c = 0; c < 3; ++c) {
    double err = 0.0, energy = 0.0;
    for (int y0 = 0; y0 + wh <= h; y0 += sy) {
      for (int x0 = 0; x0 + ww <= w; x0 += sx) {
        double pp = 0.0, pg = 0.0, gg = 0.0;
        for (int y = y0; y < y0 + wh; ++y)
          for (int x = x0; x < x0 + ww; ++x) {
            const double m = mask ? (mask->at(x, y) ? 1.0 : 0.0) : 1.0;
            const double p = m * pred.at(x, y)[c];
            const double g = m * gt.at(x, y)[c];
            pp += p * p;
            pg += p * g;
            gg += g * g;
          }
        const double alpha = pp > 0.0 ? pg / pp : 0.0;
        // sum (alpha p - g)^2 expanded; clamp tiny negative rounding.
        err += std::max(0.0, alpha * alpha * pp - 2.0 * alpha * pg + gg);
        energy += gg;
      }
    }
    score += energy > 0.0 ? err / energy : 0.0;
  }
  return score / 3.0;
}

enum class Darker { A, B, EQUAL };

struct Judgment {
  double ax = 0.0, ay = 0.0;  // normalized coordinates of point A
  double bx = 0.0, by = 0.0;
  Darker darker = Darker::EQUAL;
  double weight = 1.0;

  friend bool operator==(const Judgment&, const Judgment&) = default;
};

namespace detail {
inline double mean_channel_at(const LinearImage& img, double nx, double ny) {
  const int x = std::clamp(static_cast<int>(nx * img.width()), 0, img.width() - 1);
  const int y = std::clamp(static_cast<int>(ny * img.height()), 0, img.height() - 1);
  return img.at(x, y).mean();
}
}  // namespace detail

/// Relation predicted by a reflectance for one judgment.
inline Darker predicted_relation(const LinearImage& reflectance, const Judgment& j, double delta = kWhdrDelta) {
  const double la = std::max(detail::mean_channel_at(reflectance, j.ax, j.ay), 1e-10);
  const double lb = std::max(detail::mean_channel_at(reflectance, j.bx, j.by), 1e-10);
  const double r = la / lb;
  if (r < 1.0 / (1.0 + delta)) return Darker::A;
  if (r > 1.0 + delta) return Darker::B;
  return Darker::EQUAL;
}

/// Weighted human disagreement rate.
inline double whdr(const LinearImage& reflectance, std::span<const Judgment> judgments, double delta = kWhdrDelta) {
  if (judgments.empty()) throw InvalidInput("whdr: no judgments");
  if (reflectance.empty()) throw InvalidInput("whdr: empty reflectance");
  double wrong = 0.0, total = 0.0;
  for (const Judgment& j : judgments) {
    total += j.weight;
    if (predicted_relation(reflectance, j, delta) != j.darker) wrong += j.weight;
  }
  return total > 0.0 ? wrong / total : 0.0;
}

struct MetricSummary {
  double mean = 0.0;
  double median = 0.0;
  double trimean = 0.0;
};

/// Quantile with linear interpolation between order statistics (index q * (n - 1)).
inline double quantile_sorted(std::span<const double> sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

inline MetricSummary central_tendency(std::span<const double> values) {
  if (values.empty()) throw InvalidInput("central_tendency: no values");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  double sum = 0.0;
  for (double x : values) sum += x;
  const double q2 = quantile_sorted(v, 0.5);
  return {sum / static_cast<double>(v.size()), q2,
          (quantile_sorted(v, 0.25) + 2.0 * q2 + quantile_sorted(v, 0.75)) / 4.0};
}

// IIW annotation documents:
//   {"intrinsic_points": [{"id", "x", "y", "opaque"}...],
//    "intrinsic_comparisons": [{"point1", "point2", "darker": "1"|"2"|"E", "darker_score"}...]}
// Comparisons touching a non-opaque point or without a positive score are skipped.

namespace detail {
[[noreturn]] inline void parse_fail(const std::string& source, const std::string& where, const std::string& why) {
  throw ParseError(source + ": " + where + ": " + why);
}
}  // namespace detail

inline std::vector<Judgment> parse_iiw_judgments(const std::string& text, const std::string& source = "<memory>") {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(source + ": byte " + std::to_string(e.byte) + ": " + e.what());
  }
  auto fail = [&source](const std::string& where, const std::string& why) { detail::parse_fail(source, where, why); };
  if (!doc.is_object()) fail("$", "expected an object");
  struct Point {
    double x, y;
    bool opaque;
  };
  std::map<long long, Point> points;
  if (doc.contains("intrinsic_points")) {
    const json& pts = doc["intrinsic_points"];
    if (!pts.is_array()) fail("intrinsic_points", "expected an array");
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const std::string where = "intrinsic_points[" + std::to_string(i) + "]";
      const json& p = pts[i];
      if (!p.is_object() || !p.contains("id") || !p.contains("x") || !p.contains("y"))
        fail(where, "expected an object with id, x, y");
      if (!p["id"].is_number_integer() || !p["x"].is_number() || !p["y"].is_number())
        fail(where, "id must be an integer and x, y numbers");
      const double x = p["x"].get<double>(), y = p["y"].get<double>();
      if (x < 0.0 || x > 1.0 || y < 0.0 || y > 1.0) fail(where, "coordinates outside the unit square");
      bool opaque = true;
      if (p.contains("opaque") && !p["opaque"].is_null()) {
        if (!p["opaque"].is_boolean()) fail(where, "opaque must be a boolean");
        opaque = p["opaque"].get<bool>();
      }
      points[p["id"].get<long long>()] = {x, y, opaque};
    }
  }
  std::vector<Judgment> out;
  if (doc.contains("intrinsic_comparisons")) {
    const json& cmps = doc["intrinsic_comparisons"];
    if (!cmps.is_array()) fail("intrinsic_comparisons", "expected an array");
    for (std::size_t i = 0; i < cmps.size(); ++i) {
      const std::string where = "intrinsic_comparisons[" + std::to_string(i) + "]";
      const json& c = cmps[i];
      if (!c.is_object() || !c.contains("point1") || !c.contains("point2") || !c.contains("darker"))
        fail(where, "expected an object with point1, point2, darker");
      if (!c["point1"].is_number_integer() || !c["point2"].is_number_integer())
        fail(where, "point ids must be integers");
      const auto p1 = points.find(c["point1"].get<long long>());
      const auto p2 = points.find(c["point2"].get<long long>());
      if (p1 == points.end() || p2 == points.end()) fail(where, "references an unknown point");
      if (!c["darker"].is_string()) fail(where, "darker must be a string");
      const std::string d = c["darker"].get<std::string>();
      Darker darker = Darker::EQUAL;
      if (d == "1") darker = Darker::A;
      else if (d == "2") darker = Darker::B;
      else if (d == "E") darker = Darker::EQUAL;
      else fail(where, "darker must be \"1\", \"2\" or \"E\"");
      double weight = 0.0;
      if (c.contains("darker_score") && !c["darker_score"].is_null()) {
        if (!c["darker_score"].is_number()) fail(where, "darker_score must be a number");
        weight = c["darker_score"].get<double>();
      }
      if (!std::isfinite(weight)) fail(where, "darker_score must be finite");
      if (!(weight > 0.0) || !p1->second.opaque || !p2->second.opaque) continue;
      out.push_back({p1->second.x, p1->second.y, p2->second.x, p2->second.y, darker, weight});
    }
  }
  return out;
}

inline std::vector<Judgment> load_iiw_judgments(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open judgments file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_iiw_judgments(ss.str(), path);
}

/// Writes judgments in the IIW document layout (two points per comparison).
inline std::string serialize_iiw_judgments(std::span<const Judgment> judgments) {
  using nlohmann::json;
  json pts = json::array(), cmps = json::array();
  long long id = 0;
  for (const Judgment& j : judgments) {
    const long long a = id++, b = id++;
    pts.push_back({{"id", a}, {"x", j.ax}, {"y", j.ay}, {"opaque", true}});
    pts.push_back({{"id", b}, {"x", j.bx}, {"y", j.by}, {"opaque", true}});
    const char* d = j.darker == Darker::A ? "1" : (j.darker == Darker::B ? "2" : "E");
    cmps.push_back({{"point1", a}, {"point2", b}, {"darker", d}, {"darker_score", j.weight}});
  }
  return json{{"intrinsic_points", pts}, {"intrinsic_comparisons", cmps}}.dump(2);
}

}  // namespace iid

#endif  // IID_EVAL_HPP
