#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <vector>

#include "rpsf/errors.hpp"
#include "rpsf/fft.hpp"
#include "rpsf/grid.hpp"
#include "rpsf/parallel.hpp"
#include "rpsf/psf_stack.hpp"
#include "rpsf/scene.hpp"

namespace rpsf::depth {

struct DepthConfig {
  std::optional<double> nsr;  // unset: chosen per image from nsr_ladder
  std::vector<double> nsr_ladder{1e-5, 1e-4, 3e-4, 1e-3, 3e-3, 1e-2};
  std::size_t window = 15;    // odd box window
  bool subplane = false;

  void validate() const {
    if (window == 0 || window % 2 == 0) throw ConfigError("must be odd and > 0", "/window");
    if (nsr && !(*nsr > 0.0)) throw ConfigError("must be > 0", "/nsr");
    if (!nsr && nsr_ladder.empty()) throw ConfigError("empty ladder", "/nsr_ladder");
    for (double v : nsr_ladder)
      if (!(v > 0.0)) throw ConfigError("entries must be > 0", "/nsr_ladder");
  }
};

struct DepthEstimate {
  scene::IndexMap plane_index;
  std::vector<RealGrid> residuals;  // per-plane score, lower is better
  RealGrid confidence;              // second best minus best
  RealGrid subplane;                // fractional plane index (when requested)
  double nsr = 0.0;                 // value actually used
};

namespace detail {

// Box mean of `src` over a window x window neighbourhood, evaluated on the
// rows x cols block starting at (r0, c0). The block plus half a window must
// lie inside src.
inline RealGrid box_mean(const RealGrid& src, std::size_t r0, std::size_t c0, std::size_t rows, std::size_t cols,
                         std::size_t window) {
  const std::size_t h = window / 2;
  RealGrid tmp(rows + 2 * h, cols);
  for (std::size_t r = 0; r < rows + 2 * h; ++r) {
    const std::size_t sr = r0 - h + r;
    double acc = 0.0;
    for (std::size_t j = 0; j < window; ++j) acc += src(sr, c0 - h + j);
    tmp(r, 0) = acc;
    for (std::size_t c = 1; c < cols; ++c) {
      acc += src(sr, c0 + c + h) - src(sr, c0 + c - 1 - h);
      tmp(r, c) = acc;
    }
  }
  RealGrid out(rows, cols);
  const double norm = 1.0 / double(window * window);
  for (std::size_t c = 0; c < cols; ++c) {
    double acc = 0.0;
    for (std::size_t i = 0; i < window; ++i) acc += tmp(i, c);
    out(0, c) = acc * norm;
    for (std::size_t r = 1; r < rows; ++r) {
      acc += tmp(r + 2 * h, c) - tmp(r - 1, c);
      out(r, c) = acc * norm;
    }
  }
  return out;
}

struct ChannelSpectra {
  bool textured = false;
  std::size_t size_r = 0, size_c = 0;
  RealGrid y;                    // zero-mean padded channel
  ComplexGrid F;                 // its spectrum
  std::vector<ComplexGrid> H;    // per-plane OTFs
  double sigma2 = 0.0;           // prior signal power per frequency
};

}  // namespace detail

// Per-plane score under a Gaussian model y = k_d * x + n with white signal
// power sigma2 and noise power nsr * sigma2. For each plane the MAP image is
// the Wiener estimate x_d; the score is the local (box-window) negative
// log-likelihood density
//   (|k_d * x_d - y|^2 + nsr |x_d|^2) / (nsr sigma2)  +  mean_f log(|H_d|^2 + nsr),
// summed over channels. The second term stops blurrier kernels from winning
// just because they explain more of the image with a smoother x_d.
class Estimator {
 public:
  Estimator(const Image& img, const psf::PsfStack& stack, std::size_t window) : img_(img), stack_(stack), window_(window) {
    stack.validate_kernels();
    if (stack.planes() < 2) throw InsufficientDataError("depth estimate needs at least 2 planes");
    if (img.channels() != stack.channels()) throw DimensionError("depth estimate: channel count mismatch");
    pad_ = stack.K + window;
    const std::size_t C = stack.channels(), D = stack.planes();
    spectra_.resize(C);
    parallel_for(C, [&](std::size_t c) {
      auto& s = spectra_[c];
      const RealGrid& ch = img.channel(c);
      const double m = mean(ch);
      double var = 0.0;
      for (double v : ch.values()) var += (v - m) * (v - m);
      if (var == 0.0) return;  // no texture, no depth cue
      s.textured = true;
      s.size_r = fft::good_size(img.rows() + 2 * pad_);
      s.size_c = fft::good_size(img.cols() + 2 * pad_);
      RealGrid p(s.size_r, s.size_c);
      const auto R = std::ptrdiff_t(img.rows()), W = std::ptrdiff_t(img.cols());
      for (std::size_t r = 0; r < s.size_r; ++r)
        for (std::size_t q = 0; q < s.size_c; ++q)
          p(r, q) = ch(reflect_index(std::ptrdiff_t(r) - std::ptrdiff_t(pad_), R),
                       reflect_index(std::ptrdiff_t(q) - std::ptrdiff_t(pad_), W));
      const double pm = mean(p);
      double pv = 0.0;
      for (auto& v : p.values()) v -= pm, pv += v * v;
      pv /= double(p.size());
      s.F = fft::forward_of(p);
      s.y = std::move(p);
      double mh = 0.0;
      s.H.resize(D);
      for (std::size_t d = 0; d < D; ++d) {
        s.H[d] = fft::kernel_otf(stack.at(d, c), s.size_r, s.size_c);
        double acc = 0.0;
        for (const auto& h : s.H[d].values()) acc += std::norm(h);
        mh += acc / double(s.H[d].size());
      }
      mh /= double(D);
      s.sigma2 = std::max(pv / mh, 1e-12);
    });
  }

  // Score fields for every plane at one nsr (image-sized, summed over channels).
  std::vector<RealGrid> scores(double nsr) const {
    const std::size_t C = stack_.channels(), D = stack_.planes();
    std::vector<RealGrid> out(D, RealGrid(img_.rows(), img_.cols()));
    std::vector<RealGrid> parts(D * C);
    parallel_for(D * C, [&](std::size_t i) {
      const std::size_t d = i / C, c = i % C;
      const auto& s = spectra_[c];
      if (!s.textured) return;
      const ComplexGrid& H = s.H[d];
      // x_d and its reblur k_d * x_d are both real, so one inverse transform of
      // X + i X H yields them as real and imaginary parts.
      ComplexGrid G(s.size_r, s.size_c);
      double logdet = 0.0;
      for (std::size_t f = 0; f < G.size(); ++f) {
        const Complex h = H.values()[f];
        const double p = std::norm(h) + nsr;
        const Complex X = std::conj(h) * s.F.values()[f] / p;
        G.values()[f] = X + Complex(0.0, 1.0) * (X * h);
        logdet += std::log(p);
      }
      logdet /= double(G.size());
      fft::inverse(G);
      RealGrid e(s.size_r, s.size_c);
      const double inv = 1.0 / (nsr * s.sigma2);
      for (std::size_t f = 0; f < e.size(); ++f) {
        const double x = G.values()[f].real(), rb = G.values()[f].imag(), obs = s.y.values()[f];
        e.values()[f] = ((rb - obs) * (rb - obs) + nsr * x * x) * inv;
      }
      RealGrid sc = detail::box_mean(e, pad_, pad_, img_.rows(), img_.cols(), window_);
      for (auto& v : sc.values()) v += logdet;
      parts[i] = std::move(sc);
    });
    for (std::size_t d = 0; d < D; ++d)
      for (std::size_t c = 0; c < C; ++c) {
        const RealGrid& p = parts[d * C + c];
        if (p.empty()) continue;
        for (std::size_t k = 0; k < p.size(); ++k) out[d].values()[k] += p.values()[k];
      }
    return out;
  }

 private:
  const Image& img_;
  const psf::PsfStack& stack_;
  std::size_t window_;
  std::size_t pad_ = 0;
  std::vector<detail::ChannelSpectra> spectra_;
};

inline double total_min_score(const std::vector<RealGrid>& scores) {
  double total = 0.0;
  for (std::size_t k = 0; k < scores[0].size(); ++k) {
    double best = scores[0].values()[k];
    for (std::size_t d = 1; d < scores.size(); ++d) best = std::min(best, scores[d].values()[k]);
    total += best;
  }
  return total;
}

inline DepthEstimate estimate(const Image& img, const psf::PsfStack& stack, const DepthConfig& cfg = {}) {
  cfg.validate();
  Estimator est(img, stack, cfg.window);
  DepthEstimate out;
  if (cfg.nsr) {
    out.nsr = *cfg.nsr;
    out.residuals = est.scores(out.nsr);
  } else {
    // empirical Bayes: keep the noise level under which the data are most probable
    double best_total = std::numeric_limits<double>::infinity();
    for (double nsr : cfg.nsr_ladder) {
      auto sc = est.scores(nsr);
      const double t = total_min_score(sc);
      if (t < best_total) {
        best_total = t;
        out.nsr = nsr;
        out.residuals = std::move(sc);
      }
    }
    if (out.residuals.empty()) throw DomainError("depth estimate: non-finite scores for every nsr");
  }
  const std::size_t D = stack.planes();
  out.plane_index = scene::IndexMap(img.rows(), img.cols());
  out.confidence = RealGrid(img.rows(), img.cols());
  if (cfg.subplane) out.subplane = RealGrid(img.rows(), img.cols());
  for (std::size_t k = 0; k < out.plane_index.size(); ++k) {
    std::size_t best = 0;
    double b1 = out.residuals[0].values()[k], b2 = std::numeric_limits<double>::infinity();
    for (std::size_t d = 1; d < D; ++d) {
      const double v = out.residuals[d].values()[k];
      if (v < b1) {
        b2 = b1;
        b1 = v;
        best = d;
      } else if (v < b2) {
        b2 = v;
      }
    }
    if (!std::isfinite(b1)) throw DomainError("depth estimate: non-finite score");
    out.plane_index.values()[k] = int(best);
    out.confidence.values()[k] = b2 - b1;
    if (cfg.subplane) {
      double frac = double(best);
      if (best > 0 && best + 1 < D) {
        const double sm = out.residuals[best - 1].values()[k], s0 = b1, sp = out.residuals[best + 1].values()[k];
        const double curv = sm - 2.0 * s0 + sp;
        if (curv > 0) frac += std::clamp(0.5 * (sm - sp) / curv, -0.5, 0.5);
      }
      out.subplane.values()[k] = frac;
    }
  }
  return out;
}

inline double depth_rmse(const scene::IndexMap& pred, const scene::IndexMap& truth, const std::vector<double>& plane_values) {
  if (!pred.same_shape(truth)) throw DimensionError("depth_rmse: shape mismatch");
  if (pred.empty()) throw DimensionError("depth_rmse: empty maps");
  double acc = 0.0;
  for (std::size_t k = 0; k < pred.size(); ++k) {
    const int p = pred.values()[k], t = truth.values()[k];
    if (p < 0 || t < 0 || std::size_t(p) >= plane_values.size() || std::size_t(t) >= plane_values.size())
      throw DimensionError("depth_rmse: plane index out of range");
    const double d = plane_values[std::size_t(p)] - plane_values[std::size_t(t)];
    acc += d * d;
  }
  return std::sqrt(acc / double(pred.size()));
}

// Pixels at least band/2 away (Euclidean) from any depth discontinuity and
// from the image border. A band of total width `band` is dropped around edges.
inline scene::Mask interior_mask(const scene::IndexMap& truth, std::size_t band) {
  const auto H = std::ptrdiff_t(truth.rows()), W = std::ptrdiff_t(truth.cols());
  const auto half = std::ptrdiff_t(band / 2);
  Grid<unsigned char> edge(truth.rows(), truth.cols());
  for (std::ptrdiff_t r = 0; r < H; ++r)
    for (std::ptrdiff_t c = 0; c < W; ++c) {
      const int v = truth(r, c);
      bool e = false;
      if (r > 0 && truth(r - 1, c) != v) e = true;
      if (r + 1 < H && truth(r + 1, c) != v) e = true;
      if (c > 0 && truth(r, c - 1) != v) e = true;
      if (c + 1 < W && truth(r, c + 1) != v) e = true;
      edge(r, c) = e;
    }
  scene::Mask m(truth.rows(), truth.cols());
  for (std::ptrdiff_t r = 0; r < H; ++r)
    for (std::ptrdiff_t c = 0; c < W; ++c) {
      if (r < half || c < half || H - 1 - r < half || W - 1 - c < half) continue;
      bool ok = true;
      for (std::ptrdiff_t dr = -half + 1; ok && dr < half; ++dr)
        for (std::ptrdiff_t dc = -half + 1; dc < half; ++dc) {
          if (dr * dr + dc * dc >= half * half) continue;
          const auto rr = r + dr, cc = c + dc;
          if (rr < 0 || cc < 0 || rr >= H || cc >= W) continue;
          if (edge(rr, cc)) {
            ok = false;
            break;
          }
        }
      m(r, c) = ok;
    }
  return m;
}

inline double accuracy(const scene::IndexMap& pred, const scene::IndexMap& truth, const scene::Mask* region = nullptr) {
  if (!pred.same_shape(truth)) throw DimensionError("accuracy: shape mismatch");
  std::size_t hit = 0, n = 0;
  for (std::size_t k = 0; k < pred.size(); ++k) {
    if (region && !region->values()[k]) continue;
    ++n;
    hit += pred.values()[k] == truth.values()[k];
  }
  if (n == 0) throw InsufficientDataError("accuracy: empty region");
  return double(hit) / double(n);
}

}  // namespace rpsf::depth
