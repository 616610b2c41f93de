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

#ifndef IID_IMAGE_HPP
#define IID_IMAGE_HPP

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "iid/error.hpp"

namespace iid {

/// Linear RGB triple.
struct Rgb {
  double r = 0.0;
  double g = 0.0;
  double b = 0.0;

  constexpr double& operator[](int c) { return c == 0 ? r : (c == 1 ? g : b); }
  constexpr double operator[](int c) const { return c == 0 ? r : (c == 1 ? g : b); }

  constexpr double mean() const { return (r + g + b) / 3.0; }
  constexpr double sum() const { return r + g + b; }

  friend constexpr Rgb operator+(Rgb a, Rgb b) { return {a.r + b.r, a.g + b.g, a.b + b.b}; }
  friend constexpr Rgb operator-(Rgb a, Rgb b) { return {a.r - b.r, a.g - b.g, a.b - b.b}; }
  friend constexpr Rgb operator*(Rgb a, Rgb b) { return {a.r * b.r, a.g * b.g, a.b * b.b}; }
  friend constexpr Rgb operator*(double s, Rgb a) { return {s * a.r, s * a.g, s * a.b}; }
  friend constexpr Rgb operator*(Rgb a, double s) { return s * a; }
  constexpr Rgb& operator+=(Rgb o) {
    r += o.r;
    g += o.g;
    b += o.b;
    return *this;
  }
  friend constexpr bool operator==(const Rgb&, const Rgb&) = default;
};

/// Row-major raster of arbitrary cells.
template <class T>
class Grid {
public:
  using value_type = T;

  Grid() = default;
  Grid(int width, int height, T fill = T{}) : width_(width), height_(height) {
    if (width < 0 || height < 0) throw InvalidParameter("negative raster dimensions");
    data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
  }
  Grid(int width, int height, std::vector<T> data) : width_(width), height_(height), data_(std::move(data)) {
    if (width < 0 || height < 0) throw InvalidParameter("negative raster dimensions");
    if (data_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height))
      throw InvalidInput("raster data length does not match width*height");
  }

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T& at(int x, int y) { return data_[index(x, y)]; }
  const T& at(int x, int y) const { return data_[index(x, y)]; }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  std::span<T> pixels() { return data_; }
  std::span<const T> pixels() const { return data_; }

  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }

  template <class U>
  bool same_shape(const Grid<U>& o) const {
    return width_ == o.width() && height_ == o.height();
  }

  friend bool operator==(const Grid&, const Grid&) = default;

private:
  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

using ScalarField = Grid<double>;
using BinaryMask = Grid<std::uint8_t>;
/// Signed three-channel field, e.g. log intensities.
using RgbField = Grid<Rgb>;

/// H x W x 3 raster of finite, non-negative linear intensities.
class LinearImage : public Grid<Rgb> {
public:
  LinearImage() = default;
  LinearImage(int width, int height, Rgb fill = {}) : Grid<Rgb>(width, height, fill) { check(); }
  LinearImage(int width, int height, std::vector<Rgb> data) : Grid<Rgb>(width, height, std::move(data)) { check(); }
  explicit LinearImage(Grid<Rgb> g) : Grid<Rgb>(std::move(g)) { check(); }

  bool is_valid() const {
    for (const Rgb& p : pixels())
      for (int c = 0; c < 3; ++c)
        if (!std::isfinite(p[c]) || p[c] < 0.0) return false;
    return true;
  }

private:
  void check() const {
    if (!is_valid()) throw InvalidInput("linear image components must be finite and non-negative");
  }
};

template <class T, class U>
void require_same_shape(const Grid<T>& a, const Grid<U>& b, const char* what) {
  if (!a.same_shape(b)) throw InvalidInput(std::string(what) + ": dimension mismatch");
}

}  // namespace iid

#endif  // IID_IMAGE_HPP
