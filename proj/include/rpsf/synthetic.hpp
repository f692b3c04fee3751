#pragma once

#include <cstddef>
#include <cstdint>
#include <numeric>
#include <vector>

#include "rpsf/errors.hpp"
#include "rpsf/grid.hpp"
#include "rpsf/scene.hpp"
#include "rpsf/sensor.hpp"

namespace rpsf::synthetic {

// Deterministic uniform draws from the counter-based generator.
class Stream {
 public:
  explicit Stream(std::uint64_t seed, std::uint32_t lane = 0)
      : key_(sensor::Philox4x32::key_from_seed(seed)), lane_(lane) {}

  std::uint32_t next_u32() {
    if (idx_ == 4) {
      block_ = sensor::Philox4x32::generate({counter_, 0u, lane_, 0x7a11u}, key_);
      ++counter_;
      idx_ = 0;
    }
    return block_[idx_++];
  }

  double uniform() { return (double(next_u32()) + 0.5) * 0x1p-32; }

  // Uniform integer in [0, n).
  std::uint32_t below(std::uint32_t n) {
    const std::uint64_t m = std::uint64_t(next_u32()) * n;
    return std::uint32_t(m >> 32);
  }

 private:
  sensor::Philox4x32::Key key_;
  std::uint32_t lane_;
  std::uint32_t counter_ = 0;
  sensor::Philox4x32::Counter block_{};
  int idx_ = 4;
};

// i.i.d. binary texture (levels lo/hi, one sample per pixel), identical in
// every channel, over four quadrants at distinct randomly chosen planes.
inline scene::LayeredScene textured_quadrants(std::size_t size, std::size_t planes, std::uint64_t seed,
                                              std::size_t channels = 3, double lo = 0.05, double hi = 0.95) {
  if (size < 8 || size % 2) throw ConfigError("scene size must be even and >= 8", "/scene/size");
  if (planes < 1) throw ConfigError("need at least one plane", "/planes");
  Stream rng(seed);
  scene::LayeredScene s;
  s.planes = planes;
  s.aif = Image(size, size, channels);
  for (std::size_t r = 0; r < size; ++r)
    for (std::size_t c = 0; c < size; ++c) {
      const double v = rng.uniform() < 0.5 ? lo : hi;
      for (std::size_t ch = 0; ch < channels; ++ch) s.aif(r, c, ch) = v;
    }
  std::vector<int> order(planes);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = 0; i + 1 < planes && i < 4; ++i)
    std::swap(order[i], order[i + rng.below(std::uint32_t(planes - i))]);
  s.plane_index = scene::IndexMap(size, size);
  const std::size_t h = size / 2;
  for (std::size_t r = 0; r < size; ++r)
    for (std::size_t c = 0; c < size; ++c) {
      const std::size_t q = (r >= h ? 2 : 0) + (c >= h ? 1 : 0);
      s.plane_index(r, c) = order[q % planes];
    }
  return s;
}

}  // namespace rpsf::synthetic
