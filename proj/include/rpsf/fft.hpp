#pragma once

#include <fftw3.h>

#include <complex>
#include <map>
#include <mutex>
#include <tuple>
#include <vector>

#include "rpsf/errors.hpp"
#include "rpsf/grid.hpp"

namespace rpsf::fft {

namespace detail {

// FFTW's planner is not thread-safe, execution is. Plans are made once per
// (rows, cols, direction) with FFTW_ESTIMATE so the chosen algorithm (and
// therefore every output bit) does not depend on timing or alignment.
class PlanCache {
 public:
  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  fftw_plan get(int rows, int cols, int sign) {
    std::lock_guard lock(mutex_);
    auto key = std::make_tuple(rows, cols, sign);
    auto it = plans_.find(key);
    if (it != plans_.end()) return it->second;
    std::vector<std::complex<double>> scratch(std::size_t(rows) * std::size_t(cols));
    auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
    fftw_plan p = fftw_plan_dft_2d(rows, cols, buf, buf, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (!p) throw Error("fftw: failed to create plan");
    plans_.emplace(key, p);
    return p;
  }

  ~PlanCache() {
    for (auto& [key, p] : plans_) fftw_destroy_plan(p);
  }

 private:
  PlanCache() = default;
  std::mutex mutex_;
  std::map<std::tuple<int, int, int>, fftw_plan> plans_;
};

inline void execute(ComplexGrid& g, int sign) {
  if (g.empty()) return;
  fftw_plan p = PlanCache::instance().get(int(g.rows()), int(g.cols()), sign);
  auto* buf = reinterpret_cast<fftw_complex*>(g.data());
  fftw_execute_dft(p, buf, buf);
}

}  // namespace detail

// Unnormalised forward DFT, in place.
inline void forward(ComplexGrid& g) { detail::execute(g, FFTW_FORWARD); }

// Inverse DFT including the 1/(rows*cols) factor, in place.
inline void inverse(ComplexGrid& g) {
  detail::execute(g, FFTW_BACKWARD);
  const double s = 1.0 / double(g.size());
  for (auto& v : g.values()) v *= s;
}

inline ComplexGrid to_complex(const RealGrid& g) {
  ComplexGrid out(g.rows(), g.cols());
  for (std::size_t i = 0; i < g.size(); ++i) out.values()[i] = g.values()[i];
  return out;
}

inline RealGrid real_part(const ComplexGrid& g) {
  RealGrid out(g.rows(), g.cols());
  for (std::size_t i = 0; i < g.size(); ++i) out.values()[i] = g.values()[i].real();
  return out;
}

inline ComplexGrid forward_of(const RealGrid& g) {
  ComplexGrid c = to_complex(g);
  forward(c);
  return c;
}

// Swap quadrants so index (0,0) moves to (rows/2, cols/2).
template <class T>
Grid<T> fftshift(const Grid<T>& g) {
  Grid<T> out(g.rows(), g.cols());
  const std::size_t hr = g.rows() / 2, hc = g.cols() / 2;
  for (std::size_t r = 0; r < g.rows(); ++r)
    for (std::size_t c = 0; c < g.cols(); ++c)
      out((r + hr) % g.rows(), (c + hc) % g.cols()) = g(r, c);
  return out;
}

// Inverse of fftshift: (rows/2, cols/2) moves to (0,0).
template <class T>
Grid<T> ifftshift(const Grid<T>& g) {
  Grid<T> out(g.rows(), g.cols());
  const std::size_t hr = g.rows() / 2, hc = g.cols() / 2;
  for (std::size_t r = 0; r < g.rows(); ++r)
    for (std::size_t c = 0; c < g.cols(); ++c)
      out(r, c) = g((r + hr) % g.rows(), (c + hc) % g.cols());
  return out;
}

// Zero-pad a K x K kernel to rows x cols and roll it so its centre tap lands
// on index (0,0). Multiplying spectra by the result's DFT then convolves
// without shifting the image.
inline ComplexGrid kernel_otf(const RealGrid& k, std::size_t rows, std::size_t cols) {
  if (k.rows() > rows || k.cols() > cols) throw DimensionError("kernel larger than target grid");
  ComplexGrid z(rows, cols);
  const std::size_t hr = k.rows() / 2, hc = k.cols() / 2;
  for (std::size_t r = 0; r < k.rows(); ++r)
    for (std::size_t c = 0; c < k.cols(); ++c)
      z((r + rows - hr) % rows, (c + cols - hc) % cols) += k(r, c);
  forward(z);
  return z;
}

// Smallest n' >= n whose prime factors are all in {2,3,5,7}.
inline std::size_t good_size(std::size_t n) {
  for (std::size_t m = std::max<std::size_t>(n, 1);; ++m) {
    std::size_t v = m;
    for (std::size_t p : {2u, 3u, 5u, 7u})
      while (v % p == 0) v /= p;
    if (v == 1) return m;
  }
}

}  // namespace rpsf::fft
