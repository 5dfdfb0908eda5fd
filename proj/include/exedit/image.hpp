// Copyright 2026 The exedit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>

#include "exedit/errors.hpp"

namespace exedit {

// Planar RGB image. Each plane is height x width, row-major.
template <typename Scalar>
class Image {
 public:
  using Plane =
      Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  Image() = default;
  Image(Eigen::Index width, Eigen::Index height, Scalar fill = Scalar(0)) {
    for (auto& p : planes_) p = Plane::Constant(height, width, fill);
  }

  Eigen::Index width() const { return planes_[0].cols(); }
  Eigen::Index height() const { return planes_[0].rows(); }
  bool empty() const { return planes_[0].size() == 0; }

  Plane& plane(int c) { return planes_[c]; }
  const Plane& plane(int c) const { return planes_[c]; }

  Scalar& operator()(int c, Eigen::Index row, Eigen::Index col) {
    return planes_[c](row, col);
  }
  Scalar operator()(int c, Eigen::Index row, Eigen::Index col) const {
    return planes_[c](row, col);
  }

  template <typename To>
  Image<To> cast() const {
    Image<To> out;
    for (int c = 0; c < 3; ++c) out.plane(c) = planes_[c].template cast<To>();
    return out;
  }

  bool same_shape(const Image& other) const {
    return width() == other.width() && height() == other.height();
  }

  friend bool operator==(const Image& a, const Image& b) {
    if (!a.same_shape(b)) return false;
    for (int c = 0; c < 3; ++c)
      if ((a.planes_[c] != b.planes_[c]).any()) return false;
    return true;
  }

 private:
  std::array<Plane, 3> planes_;
};

using Image8 = Image<std::uint8_t>;

inline std::string shape_string(const Image8& img) {
  return std::to_string(img.width()) + "x" + std::to_string(img.height());
}

// Rounds and saturates into 8-bit.
template <typename Scalar>
Image8 to_image8(const Image<Scalar>& img) {
  Image8 out;
  for (int c = 0; c < 3; ++c) {
    out.plane(c) = img.plane(c)
                       .round()
                       .max(Scalar(0))
                       .min(Scalar(255))
                       .template cast<std::uint8_t>();
  }
  return out;
}

// BT.601 luma in the scalar type requested.
template <typename Scalar>
typename Image<Scalar>::Plane luma(const Image8& img) {
  return Scalar(0.299) * img.plane(0).template cast<Scalar>() +
         Scalar(0.587) * img.plane(1).template cast<Scalar>() +
         Scalar(0.114) * img.plane(2).template cast<Scalar>();
}

inline constexpr int kGridGutter = 8;

// Side-by-side layout handed to the VLM: x on the left, x_edit on the right,
// separated by a white gutter.
inline Image8 compose_exemplar_grid(const Image8& x, const Image8& x_edit) {
  if (!x.same_shape(x_edit)) {
    throw DimensionError("exemplar grid: shapes differ (" + shape_string(x) +
                         " vs " + shape_string(x_edit) + ")");
  }
  const Eigen::Index w = x.width();
  const Eigen::Index h = x.height();
  Image8 grid(2 * w + kGridGutter, h, 255);
  for (int c = 0; c < 3; ++c) {
    grid.plane(c).leftCols(w) = x.plane(c);
    grid.plane(c).rightCols(w) = x_edit.plane(c);
  }
  return grid;
}

// Bilinear resampling with pixel-center alignment.
inline Image8 resize_bilinear(const Image8& src, Eigen::Index width,
                              Eigen::Index height) {
  if (src.empty() || width <= 0 || height <= 0) {
    throw DimensionError("resize: empty source or target");
  }
  if (src.width() == width && src.height() == height) return src;

  const double sx = static_cast<double>(src.width()) / width;
  const double sy = static_cast<double>(src.height()) / height;
  Image<double> out(width, height);
  for (Eigen::Index r = 0; r < height; ++r) {
    const double fy = std::clamp((r + 0.5) * sy - 0.5, 0.0,
                                 static_cast<double>(src.height() - 1));
    const auto y0 = static_cast<Eigen::Index>(std::floor(fy));
    const Eigen::Index y1 = std::min(y0 + 1, src.height() - 1);
    const double wy = fy - y0;
    for (Eigen::Index col = 0; col < width; ++col) {
      const double fx = std::clamp((col + 0.5) * sx - 0.5, 0.0,
                                   static_cast<double>(src.width() - 1));
      const auto x0 = static_cast<Eigen::Index>(std::floor(fx));
      const Eigen::Index x1 = std::min(x0 + 1, src.width() - 1);
      const double wx = fx - x0;
      for (int c = 0; c < 3; ++c) {
        const auto& p = src.plane(c);
        const double top = (1 - wx) * p(y0, x0) + wx * p(y0, x1);
        const double bottom = (1 - wx) * p(y1, x0) + wx * p(y1, x1);
        out(c, r, col) = (1 - wy) * top + wy * bottom;
      }
    }
  }
  return to_image8(out);
}

}  // namespace exedit
