#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <vector>

#include "rpsf/convolve.hpp"
#include "rpsf/errors.hpp"
#include "rpsf/fft.hpp"
#include "rpsf/grid.hpp"
#include "rpsf/parallel.hpp"
#include "rpsf/psf_stack.hpp"
#include "rpsf/scene.hpp"

namespace rpsf::restore {

struct WienerConfig {
  double nsr = 1e-3;
  std::size_t taper_width = 32;  // 0 disables the edge taper

  void validate(std::size_t rows, std::size_t cols, std::size_t K) const {
    if (!(nsr >= 0.0) || !std::isfinite(nsr)) throw ConfigError("must be >= 0", "/nsr");
    if (taper_width == 0) return;
    if (2 * taper_width >= std::min(rows, cols)) throw ConfigError("must be < min(H, W) / 2", "/taper_width");
    if (taper_width < K) throw ConfigError("must be >= the kernel size", "/taper_width");
  }
};

inline RealGrid wiener_deconv(const RealGrid& img, const RealGrid& psf, double nsr) {
  if (!(nsr >= 0.0)) throw ConfigError("must be >= 0", "/nsr");
  ComplexGrid F = fft::forward_of(img);
  const ComplexGrid H = fft::kernel_otf(psf, img.rows(), img.cols());
  for (std::size_t i = 0; i < F.size(); ++i) {
    const Complex h = H.values()[i];
    const double p = std::norm(h) + nsr;
    if (nsr == 0.0 && std::norm(h) < 1e-24) throw SingularError("wiener_deconv: OTF vanishes and nsr = 0");
    F.values()[i] *= std::conj(h) / p;
  }
  fft::inverse(F);
  return fft::real_part(F);
}

inline Image wiener_deconv(const Image& img, const RealGrid& psf, double nsr) {
  std::vector<RealGrid> planes(img.channels());
  for (std::size_t c = 0; c < img.channels(); ++c) planes[c] = wiener_deconv(img.channel(c), psf, nsr);
  return Image(std::move(planes));
}

// Raised-cosine weight: 0 at the outermost sample, rising to 1 over `width` samples.
inline std::vector<double> taper_window(std::size_t n, std::size_t width) {
  std::vector<double> w(n, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t d = std::min(i, n - 1 - i);
    if (d < width) w[i] = 0.5 * (1.0 - std::cos(std::numbers::pi * (double(d) + 0.5) / double(width)));
  }
  return w;
}

// Blend toward the circularly blurred image inside a border band so the
// image looks periodic to the DFT.
inline RealGrid edgetaper(const RealGrid& img, const RealGrid& psf, std::size_t width) {
  if (width < psf.rows()) throw ConfigError("taper width must be >= the kernel size", "/taper_width");
  if (2 * width >= std::min(img.rows(), img.cols())) throw ConfigError("taper width must be < min(H, W) / 2", "/taper_width");
  const RealGrid blurred = convolve_circular(img, psf);
  const auto wr = taper_window(img.rows(), width), wc = taper_window(img.cols(), width);
  RealGrid out(img.rows(), img.cols());
  for (std::size_t r = 0; r < img.rows(); ++r)
    for (std::size_t c = 0; c < img.cols(); ++c) {
      const double w = wr[r] * wc[c];
      out(r, c) = w == 1.0 ? img(r, c) : w * img(r, c) + (1.0 - w) * blurred(r, c);
    }
  return out;
}

inline Image edgetaper(const Image& img, const RealGrid& psf, std::size_t width) {
  std::vector<RealGrid> planes(img.channels());
  for (std::size_t c = 0; c < img.channels(); ++c) planes[c] = edgetaper(img.channel(c), psf, width);
  return Image(std::move(planes));
}

// Per-plane Wiener deconvolution cut back together with the depth masks.
inline Image restore_layered(const Image& img, const psf::PsfStack& stack, const std::vector<scene::Mask>& masks,
                             const WienerConfig& cfg) {
  stack.validate_kernels();
  cfg.validate(img.rows(), img.cols(), stack.K);
  if (masks.size() != stack.planes()) throw DimensionError("restore_layered: mask count != plane count");
  if (img.channels() != stack.channels()) throw DimensionError("restore_layered: channel count mismatch");
  for (const auto& m : masks)
    if (m.rows() != img.rows() || m.cols() != img.cols()) throw DimensionError("restore_layered: mask size mismatch");
  const std::size_t D = stack.planes(), C = stack.channels();
  std::vector<bool> used(D, false);
  for (std::size_t d = 0; d < D; ++d)
    for (auto v : masks[d].values())
      if (v) {
        used[d] = true;
        break;
      }
  std::vector<RealGrid> layers(D * C);
  parallel_for(D * C, [&](std::size_t i) {
    const std::size_t d = i / C, c = i % C;
    if (!used[d]) return;
    const RealGrid& k = stack.at(d, c);
    const RealGrid src = cfg.taper_width ? edgetaper(img.channel(c), k, cfg.taper_width) : img.channel(c);
    layers[i] = wiener_deconv(src, k, cfg.nsr);
  });
  Image out(img.rows(), img.cols(), C);
  for (std::size_t d = 0; d < D; ++d) {
    if (!used[d]) continue;
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t p = 0; p < img.rows() * img.cols(); ++p)
        if (masks[d].values()[p]) out.channel(c).values()[p] += layers[d * C + c].values()[p];
  }
  for (std::size_t c = 0; c < C; ++c)
    for (auto& v : out.channel(c).values()) v = std::clamp(v, 0.0, 1.0);
  return out;
}

// ---- metrics -------------------------------------------------------------

inline double rmse(const Image& a, const Image& b) {
  if (!a.same_shape(b)) throw DimensionError("metrics: image shapes differ");
  double acc = 0.0;
  for (std::size_t c = 0; c < a.channels(); ++c)
    for (std::size_t i = 0; i < a.channel(c).size(); ++i) {
      const double d = a.channel(c).values()[i] - b.channel(c).values()[i];
      acc += d * d;
    }
  return std::sqrt(acc / double(a.rows() * a.cols() * a.channels()));
}

// Peak signal 1.0; identical images give +inf.
inline double psnr(const Image& a, const Image& b) {
  const double e = rmse(a, b);
  if (e == 0.0) return std::numeric_limits<double>::infinity();
  return -20.0 * std::log10(e);
}

// Gaussian-window SSIM (11x11, sigma 1.5, K1 0.01, K2 0.03, range 1) over
// the valid region, averaged over pixels and channels.
inline double ssim(const Image& a, const Image& b) {
  if (!a.same_shape(b)) throw DimensionError("metrics: image shapes differ");
  constexpr int win = 11;
  if (a.rows() < std::size_t(win) || a.cols() < std::size_t(win)) throw DimensionError("ssim: image smaller than the 11x11 window");
  double g[win];
  double gs = 0.0;
  for (int i = 0; i < win; ++i) gs += g[i] = std::exp(-double((i - 5) * (i - 5)) / (2.0 * 1.5 * 1.5));
  for (double& v : g) v /= gs;
  const double C1 = 0.01 * 0.01, C2 = 0.03 * 0.03;
  const std::size_t H = a.rows() - win + 1, W = a.cols() - win + 1;
  double total = 0.0;
  for (std::size_t c = 0; c < a.channels(); ++c) {
    const RealGrid& x = a.channel(c);
    const RealGrid& y = b.channel(c);
    for (std::size_t r = 0; r < H; ++r)
      for (std::size_t q = 0; q < W; ++q) {
        double mx = 0, my = 0, xx = 0, yy = 0, xy = 0;
        for (int i = 0; i < win; ++i)
          for (int j = 0; j < win; ++j) {
            const double w = g[i] * g[j];
            const double u = x(r + i, q + j), v = y(r + i, q + j);
            mx += w * u, my += w * v, xx += w * u * u, yy += w * v * v, xy += w * u * v;
          }
        const double sx = xx - mx * mx, sy = yy - my * my, sxy = xy - mx * my;
        total += ((2 * mx * my + C1) * (2 * sxy + C2)) / ((mx * mx + my * my + C1) * (sx + sy + C2));
      }
  }
  return total / double(H * W * a.channels());
}

struct Metrics {
  double psnr = 0.0;
  double ssim = 0.0;
  double rmse = 0.0;
};

inline Metrics metrics(const Image& a, const Image& b) { return {psnr(a, b), ssim(a, b), rmse(a, b)}; }

}  // namespace rpsf::restore
