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

#ifndef IID_INTRINSICS_HPP
#define IID_INTRINSICS_HPP

#include <algorithm>

#include "iid/image.hpp"

namespace iid {

inline constexpr double kShadingEpsilon = 1e-4;

struct Decomposition {
  LinearImage reflectance;
  LinearImage shading;
  bool degraded = false;  // an inner solver stopped at its iteration cap
};

/// S_c = I_c / max(R_c, eps), so R * S reproduces I wherever R > eps.
inline LinearImage estimate_shading(const LinearImage& img, const LinearImage& reflectance) {
  require_same_shape(img, reflectance, "estimate_shading");
  LinearImage s(img.width(), img.height());
  for (std::size_t i = 0; i < img.size(); ++i)
    for (int c = 0; c < 3; ++c) s[i][c] = img[i][c] / std::max(reflectance[i][c], kShadingEpsilon);
  return s;
}

}  // namespace iid

#endif  // IID_INTRINSICS_HPP
