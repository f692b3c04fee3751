#pragma once

#include <cstddef>

#include "rpsf/errors.hpp"
#include "rpsf/fft.hpp"
#include "rpsf/grid.hpp"

namespace rpsf {

// Circular convolution (kernel centre at the origin) via the DFT.
inline RealGrid convolve_circular(const RealGrid& img, const RealGrid& k) {
  ComplexGrid F = fft::forward_of(img);
  const ComplexGrid H = fft::kernel_otf(k, img.rows(), img.cols());
  for (std::size_t i = 0; i < F.size(); ++i) F.values()[i] *= H.values()[i];
  fft::inverse(F);
  return fft::real_part(F);
}

// Linear convolution with reflect (edge-not-repeated) boundary. The padded
// grid is at least K/2 wider on each side, so the circular product never wraps
// into the cropped output.
inline RealGrid convolve_reflect(const RealGrid& img, const RealGrid& k) {
  if (k.rows() % 2 == 0 || k.cols() != k.rows()) throw DimensionError("convolve: kernel must be square and odd");
  const std::size_t h = k.rows() / 2;
  const std::size_t side_r = fft::good_size(img.rows() + 2 * h);
  const std::size_t side_c = fft::good_size(img.cols() + 2 * h);
  // reflect-pad to the FFT-friendly size; the extra rows/cols sit beyond the
  // far border and are also reflected
  RealGrid padded(side_r, side_c);
  const auto rows = std::ptrdiff_t(img.rows()), cols = std::ptrdiff_t(img.cols());
  for (std::size_t r = 0; r < side_r; ++r)
    for (std::size_t c = 0; c < side_c; ++c)
      padded(r, c) = img(reflect_index(std::ptrdiff_t(r) - std::ptrdiff_t(h), rows),
                         reflect_index(std::ptrdiff_t(c) - std::ptrdiff_t(h), cols));
  const RealGrid full = convolve_circular(padded, k);
  return crop(full, h, h, img.rows(), img.cols());
}

}  // namespace rpsf
