#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "rpsf/convolve.hpp"
#include "rpsf/errors.hpp"
#include "rpsf/grid.hpp"
#include "rpsf/parallel.hpp"
#include "rpsf/psf_stack.hpp"

namespace rpsf::scene {

using IndexMap = Grid<int>;
using Mask = Grid<std::uint8_t>;

// M_d = [plane_index == d].
inline std::vector<Mask> masks_from_index(const IndexMap& index, std::size_t planes) {
  std::vector<Mask> masks(planes, Mask(index.rows(), index.cols()));
  for (std::size_t i = 0; i < index.size(); ++i) {
    const int d = index.values()[i];
    if (d < 0 || std::size_t(d) >= planes) throw DimensionError("plane index out of range");
    masks[std::size_t(d)].values()[i] = 1;
  }
  return masks;
}

struct LayeredScene {
  Image aif;
  IndexMap plane_index;
  std::size_t planes = 0;

  std::vector<Mask> masks() const { return masks_from_index(plane_index, planes); }

  void validate() const {
    if (aif.rows() != plane_index.rows() || aif.cols() != plane_index.cols())
      throw DimensionError("LayeredScene: image and plane map differ in size");
    if (planes == 0) throw DimensionError("LayeredScene: no planes");
    for (int d : plane_index.values())
      if (d < 0 || std::size_t(d) >= planes) throw DimensionError("LayeredScene: plane index out of range");
  }
};

struct Quantized {
  IndexMap plane_index;
  std::vector<Mask> masks;
};

// Nearest representative depth; exact midpoints go to the lower index.
inline Quantized quantize_depth(const RealGrid& depth, const std::vector<double>& planes) {
  if (planes.empty()) throw ConfigError("empty planes list", "/planes");
  for (std::size_t i = 1; i < planes.size(); ++i)
    if (!(planes[i] > planes[i - 1])) throw ConfigError("planes must be strictly ascending", "/planes");
  Quantized q{IndexMap(depth.rows(), depth.cols()), {}};
  for (std::size_t i = 0; i < depth.size(); ++i) {
    const double z = depth.values()[i];
    std::size_t best = 0;
    double best_d = std::abs(z - planes[0]);
    for (std::size_t d = 1; d < planes.size(); ++d) {
      const double dist = std::abs(z - planes[d]);
      if (dist < best_d) best = d, best_d = dist;
    }
    q.plane_index.values()[i] = int(best);
  }
  q.masks = masks_from_index(q.plane_index, planes.size());
  return q;
}

// sum_d (aif * k_d) . M_d per channel, reflect boundary, clipped at 0.
inline Image render(const LayeredScene& scene, const psf::PsfStack& stack) {
  scene.validate();
  stack.validate_kernels();
  if (stack.planes() != scene.planes) throw DimensionError("render: stack and scene plane counts differ");
  if (stack.channels() != scene.aif.channels()) throw DimensionError("render: channel counts differ");
  const std::size_t D = scene.planes, C = stack.channels();
  const auto masks = scene.masks();
  std::vector<bool> used(D, false);
  for (int d : scene.plane_index.values()) used[std::size_t(d)] = true;

  std::vector<RealGrid> layers(D * C);
  parallel_for(D * C, [&](std::size_t i) {
    const std::size_t d = i / C, c = i % C;
    if (used[d]) layers[i] = convolve_reflect(scene.aif.channel(c), stack.at(d, c));
  });
  Image out(scene.aif.rows(), scene.aif.cols(), C);
  for (std::size_t d = 0; d < D; ++d) {
    if (!used[d]) continue;
    for (std::size_t c = 0; c < C; ++c) {
      const RealGrid& layer = layers[d * C + c];
      RealGrid& dst = out.channel(c);
      for (std::size_t p = 0; p < dst.size(); ++p)
        if (masks[d].values()[p]) dst.values()[p] += layer.values()[p];
    }
  }
  for (std::size_t c = 0; c < C; ++c)
    for (auto& v : out.channel(c).values()) v = std::max(v, 0.0);
  return out;
}

// Same composition with circular boundaries (used for exactly invertible test scenes).
inline Image render_circular(const LayeredScene& scene, const psf::PsfStack& stack) {
  scene.validate();
  if (stack.planes() != scene.planes || stack.channels() != scene.aif.channels())
    throw DimensionError("render_circular: stack and scene dimensions differ");
  const auto masks = scene.masks();
  Image out(scene.aif.rows(), scene.aif.cols(), stack.channels());
  for (std::size_t d = 0; d < scene.planes; ++d) {
    bool any = false;
    for (auto m : masks[d].values()) any = any || m;
    if (!any) continue;
    for (std::size_t c = 0; c < stack.channels(); ++c) {
      const RealGrid layer = convolve_circular(scene.aif.channel(c), stack.at(d, c));
      for (std::size_t p = 0; p < layer.size(); ++p)
        if (masks[d].values()[p]) out.channel(c).values()[p] += layer.values()[p];
    }
  }
  for (std::size_t c = 0; c < stack.channels(); ++c)
    for (auto& v : out.channel(c).values()) v = std::max(v, 0.0);
  return out;
}

}  // namespace rpsf::scene
