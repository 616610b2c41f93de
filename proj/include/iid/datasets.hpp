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

#ifndef IID_DATASETS_HPP
#define IID_DATASETS_HPP

// On-disk layouts of the evaluation datasets.
//
// MIT intrinsics: one directory per object holding diffuse.png (input), reflectance.png,
// shading.png and mask.png, stored linear. IIW: <images_dir>/<id>.png with the matching
// annotation document <judgments_dir>/<id>.json.

#include <algorithm>
#include <filesystem>
#include <string>
#include <vector>

#include "iid/error.hpp"
#include "iid/eval.hpp"
#include "iid/image.hpp"
#include "iid/io.hpp"

namespace iid {

struct MitCase {
  std::string name;
  LinearImage image;
  LinearImage reflectance;
  LinearImage shading;
  BinaryMask mask;
};

inline MitCase load_mit_case(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw LoadError("'" + dir.string() + "' is not a directory");
  auto need = [&](const char* file) {
    const fs::path p = dir / file;
    if (!fs::exists(p)) throw LoadError("MIT case '" + dir.string() + "' is missing " + file);
    return io::load_image(p.string(), Linearization::identity);
  };
  MitCase c;
  c.name = dir.filename().string();
  c.image = need("diffuse.png");
  c.reflectance = need("reflectance.png");
  c.shading = need("shading.png");
  const LinearImage mask = need("mask.png");
  if (!c.image.same_shape(c.reflectance) || !c.image.same_shape(c.shading) || !c.image.same_shape(mask))
    throw LoadError("MIT case '" + dir.string() + "' has rasters of different sizes");
  c.mask = BinaryMask(mask.width(), mask.height(), 0);
  for (std::size_t i = 0; i < mask.size(); ++i) c.mask[i] = (mask[i].r + mask[i].g + mask[i].b) > 0.0 ? 1 : 0;
  return c;
}

/// Case directories of an MIT-layout dataset, sorted by name.
inline std::vector<std::filesystem::path> list_mit_cases(const std::filesystem::path& root) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(root)) throw LoadError("'" + root.string() + "' is not a directory");
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(root))
    if (e.is_directory() && fs::exists(e.path() / "diffuse.png")) out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

struct IiwCase {
  std::string id;
  std::filesystem::path image;
  std::filesystem::path judgments;
};

/// Images in images_dir that have a judgments document of the same stem, sorted by id.
inline std::vector<IiwCase> list_iiw_cases(const std::filesystem::path& images_dir, const std::filesystem::path& judgments_dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(images_dir)) throw LoadError("'" + images_dir.string() + "' is not a directory");
  if (!fs::is_directory(judgments_dir)) throw LoadError("'" + judgments_dir.string() + "' is not a directory");
  std::vector<IiwCase> out;
  for (const auto& e : fs::directory_iterator(images_dir)) {
    if (!e.is_regular_file()) continue;
    const auto ext = e.path().extension();
    if (ext != ".png" && ext != ".iidf") continue;
    const fs::path j = judgments_dir / (e.path().stem().string() + ".json");
    if (fs::exists(j)) out.push_back({e.path().stem().string(), e.path(), j});
  }
  std::sort(out.begin(), out.end(), [](const IiwCase& a, const IiwCase& b) { return a.id < b.id; });
  return out;
}

}  // namespace iid

#endif  // IID_DATASETS_HPP
