#pragma once

/// @file raster.hpp
/// @brief Dense row-major image grid plus the binary mask and bias map aliases.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "magsuture/core.hpp"

namespace magsuture {

template <typename T>
class Raster {
 public:
  using value_type = T;

  Raster() = default;
  Raster(int width, int height, T fill = T{}) : width_(width), height_(height) {
    if (width < 0 || height < 0) throw DomainError("Raster: negative dimensions");
    data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
  }

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  bool in_bounds(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }

  T& operator()(int x, int y) { return data_[index(x, y)]; }
  const T& operator()(int x, int y) const { return data_[index(x, y)]; }

  T& at(int x, int y) {
    if (!in_bounds(x, y)) throw std::out_of_range("Raster::at");
    return (*this)(x, y);
  }
  const T& at(int x, int y) const {
    if (!in_bounds(x, y)) throw std::out_of_range("Raster::at");
    return (*this)(x, y);
  }

  std::vector<T>& data() { return data_; }
  const std::vector<T>& data() const { return data_; }

  template <typename U>
  bool same_shape(const Raster<U>& o) const {
    return width_ == o.width() && height_ == o.height();
  }

  bool operator==(const Raster& o) const = default;

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

/// Binary segmentation: 1 = needle, 0 = background.
using SegMask = Raster<std::uint8_t>;
/// Per-pixel false-positive moving average in [0, 1].
using BiasMap = Raster<double>;
/// 8-bit grayscale camera frame.
using GrayFrame = Raster<std::uint8_t>;

inline constexpr int kWorkingResolution = 512;

/// Continuous image coordinates of the center of pixel (x, y).
inline Vec2 pixel_center(int x, int y) { return {x + 0.5, y + 0.5}; }

template <typename T>
std::size_t count_nonzero(const Raster<T>& r) {
  std::size_t n = 0;
  for (const T& v : r.data()) n += (v != T{}) ? 1u : 0u;
  return n;
}

inline std::vector<Vec2> mask_points(const SegMask& mask) {
  std::vector<Vec2> pts;
  for (int y = 0; y < mask.height(); ++y)
    for (int x = 0; x < mask.width(); ++x)
      if (mask(x, y)) pts.push_back(pixel_center(x, y));
  return pts;
}

/// Rotates a square raster by +90 degrees in the world frame (counter-clockwise on screen):
/// pixel (x, y) moves to (y, n - 1 - x).
template <typename T>
Raster<T> rotate90_ccw(const Raster<T>& r) {
  if (r.width() != r.height()) throw DomainError("rotate90_ccw: raster must be square");
  const int n = r.width();
  Raster<T> out(n, n);
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) out(y, n - 1 - x) = r(x, y);
  return out;
}

template <typename T>
Raster<T> transpose(const Raster<T>& r) {
  Raster<T> out(r.height(), r.width());
  for (int y = 0; y < r.height(); ++y)
    for (int x = 0; x < r.width(); ++x) out(y, x) = r(x, y);
  return out;
}

}  // namespace magsuture
