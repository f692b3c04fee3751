#pragma once

#include <algorithm>
#include <cassert>
#include <complex>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "rpsf/errors.hpp"

namespace rpsf {

using Complex = std::complex<double>;

// Dense row-major 2-D array. Value type; copies are deep.
template <class T>
class Grid {
 public:
  Grid() = default;
  Grid(std::size_t rows, std::size_t cols, T fill = T{})
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  T& operator()(std::size_t r, std::size_t c) noexcept {
    assert(r < rows_ && c < cols_);
    return data_[r * cols_ + c];
  }
  const T& operator()(std::size_t r, std::size_t c) const noexcept {
    assert(r < rows_ && c < cols_);
    return data_[r * cols_ + c];
  }

  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }
  T* data() noexcept { return data_.data(); }
  const T* data() const noexcept { return data_.data(); }

  bool same_shape(const Grid& o) const noexcept {
    return rows_ == o.rows_ && cols_ == o.cols_;
  }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

using RealGrid = Grid<double>;
using ComplexGrid = Grid<Complex>;

// Planar multi-channel image: channels()[c] is an H x W plane.
class Image {
 public:
  Image() = default;
  Image(std::size_t rows, std::size_t cols, std::size_t channels, double fill = 0.0)
      : planes_(channels, RealGrid(rows, cols, fill)) {}
  explicit Image(std::vector<RealGrid> planes) : planes_(std::move(planes)) {
    for (const auto& p : planes_)
      if (!p.same_shape(planes_.front()))
        throw DimensionError("Image: channel planes differ in shape");
  }

  std::size_t rows() const noexcept { return planes_.empty() ? 0 : planes_[0].rows(); }
  std::size_t cols() const noexcept { return planes_.empty() ? 0 : planes_[0].cols(); }
  std::size_t channels() const noexcept { return planes_.size(); }

  RealGrid& channel(std::size_t c) { return planes_.at(c); }
  const RealGrid& channel(std::size_t c) const { return planes_.at(c); }

  double& operator()(std::size_t r, std::size_t col, std::size_t c) { return planes_[c](r, col); }
  double operator()(std::size_t r, std::size_t col, std::size_t c) const { return planes_[c](r, col); }

  bool same_shape(const Image& o) const noexcept {
    return channels() == o.channels() && rows() == o.rows() && cols() == o.cols();
  }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  std::vector<RealGrid> planes_;
};

inline double sum(const RealGrid& g) {
  return std::accumulate(g.values().begin(), g.values().end(), 0.0);
}

inline double mean(const RealGrid& g) { return g.empty() ? 0.0 : sum(g) / double(g.size()); }

inline double max_value(const RealGrid& g) {
  return *std::max_element(g.values().begin(), g.values().end());
}

inline double min_value(const RealGrid& g) {
  return *std::min_element(g.values().begin(), g.values().end());
}

inline double mean(const Image& img) {
  double s = 0.0;
  for (std::size_t c = 0; c < img.channels(); ++c) s += sum(img.channel(c));
  return s / double(img.rows() * img.cols() * img.channels());
}

inline double max_abs_diff(const RealGrid& a, const RealGrid& b) {
  if (!a.same_shape(b)) throw DimensionError("max_abs_diff: shape mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(a.values()[i] - b.values()[i]));
  return m;
}

inline double max_abs_diff(const Image& a, const Image& b) {
  if (!a.same_shape(b)) throw DimensionError("max_abs_diff: shape mismatch");
  double m = 0.0;
  for (std::size_t c = 0; c < a.channels(); ++c)
    m = std::max(m, max_abs_diff(a.channel(c), b.channel(c)));
  return m;
}

inline RealGrid crop_center(const RealGrid& g, std::size_t size) {
  if (size > g.rows() || size > g.cols()) throw DimensionError("crop_center: crop larger than grid");
  RealGrid out(size, size);
  const std::size_t r0 = g.rows() / 2 - size / 2;
  const std::size_t c0 = g.cols() / 2 - size / 2;
  for (std::size_t r = 0; r < size; ++r)
    for (std::size_t c = 0; c < size; ++c) out(r, c) = g(r0 + r, c0 + c);
  return out;
}

// Mirror index into [0, n) without repeating the edge sample (…c b | a b c | b a…).
inline std::ptrdiff_t reflect_index(std::ptrdiff_t i, std::ptrdiff_t n) {
  if (n == 1) return 0;
  const std::ptrdiff_t period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

inline RealGrid pad_reflect(const RealGrid& g, std::size_t pad) {
  const auto rows = std::ptrdiff_t(g.rows()), cols = std::ptrdiff_t(g.cols());
  const auto p = std::ptrdiff_t(pad);
  RealGrid out(g.rows() + 2 * pad, g.cols() + 2 * pad);
  for (std::ptrdiff_t r = 0; r < rows + 2 * p; ++r)
    for (std::ptrdiff_t c = 0; c < cols + 2 * p; ++c)
      out(r, c) = g(reflect_index(r - p, rows), reflect_index(c - p, cols));
  return out;
}

inline RealGrid crop(const RealGrid& g, std::size_t r0, std::size_t c0, std::size_t rows,
                     std::size_t cols) {
  if (r0 + rows > g.rows() || c0 + cols > g.cols()) throw DimensionError("crop: out of range");
  RealGrid out(rows, cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out(r, c) = g(r0 + r, c0 + c);
  return out;
}

}  // namespace rpsf
