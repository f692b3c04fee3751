#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <vector>

#include "rpsf/errors.hpp"
#include "rpsf/grid.hpp"
#include "rpsf/log.hpp"
#include "rpsf/optics.hpp"
#include "rpsf/parallel.hpp"
#include "rpsf/phase_mask.hpp"

namespace rpsf::psf {

using mask::MaskSpec;
using optics::CameraConfig;

enum class MaskProfile { exact, smooth };

struct StackOptions {
  std::size_t grid = 512;          // FFT side at the reference wavelength
  double aperture_samples = 400;   // pupil diameter in samples
  std::size_t K = 23;              // kernel side (odd)
  MaskProfile profile = MaskProfile::exact;
  bool clear_aperture = false;     // ignore the mask (plain defocus)
  bool warn_on_crop_loss = true;
};

struct PsfStack {
  std::vector<RealGrid> kernels;  // plane-major: kernels[d * C + c]
  std::vector<double> psis;       // defocus at the reference wavelength
  std::vector<double> wavelengths;
  std::size_t K = 0;

  std::size_t planes() const { return psis.size(); }
  std::size_t channels() const { return wavelengths.size(); }
  RealGrid& at(std::size_t d, std::size_t c) { return kernels.at(d * channels() + c); }
  const RealGrid& at(std::size_t d, std::size_t c) const { return kernels.at(d * channels() + c); }

  // Shape and per-kernel contracts; psis ordering is checked separately.
  void validate_kernels() const {
    if (K % 2 == 0 || K == 0) throw DimensionError("PsfStack: K must be odd");
    if (kernels.size() != planes() * channels()) throw DimensionError("PsfStack: kernel count != D*C");
    for (const auto& k : kernels) {
      if (k.rows() != K || k.cols() != K) throw DimensionError("PsfStack: kernel is not K x K");
      for (double v : k.values())
        if (!(v >= 0.0)) throw DomainError("PsfStack: negative or non-finite kernel entry");
      if (std::abs(sum(k) - 1.0) > 1e-9) throw DomainError("PsfStack: kernel mass differs from 1");
    }
  }

  void validate() const {
    validate_kernels();
    for (std::size_t d = 1; d < psis.size(); ++d)
      if (!(psis[d] > psis[d - 1])) throw ConfigError("psis must be strictly ascending", "/psis");
  }
};

// FFT side for a channel so that every wavelength lands on the same sensor
// pixel pitch (lambda * z / (M * dx) constant), rounded to an even size.
inline std::size_t channel_grid(std::size_t grid, double wavelength, double lambda_ref) {
  const auto half = std::llround(double(grid) * wavelength / lambda_ref / 2.0);
  return std::size_t(std::max<long long>(8, half)) * 2;
}

// Mask phase as seen by one wavelength: the relief is cut for lambda_ref, so
// the wrapped design phase scales by lambda_ref / lambda.
inline RealGrid channel_mask_phase(const MaskSpec& spec, const mask::PolarGrid& pg, MaskProfile profile,
                                   double wavelength) {
  const double scale = spec.lambda_ref_m / wavelength;
  RealGrid out(pg.rho.rows(), pg.rho.cols());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double rho = pg.rho.values()[i];
    if (rho > 1.0) continue;
    const double phi = pg.phi.values()[i];
    const double p = profile == MaskProfile::exact ? mask::step_phase(spec, rho, phi)
                                                   : mask::smooth_phase(spec, rho, phi);
    out.values()[i] = scale * mask::wrap_phase(p);
  }
  return out;
}

// One kernel via the pupil Fourier transform. psi_ref is the defocus at
// lambda_ref; it scales by lambda_ref / wavelength for other channels.
inline RealGrid render_kernel(const MaskSpec& spec, double psi_ref, double wavelength, const StackOptions& opt,
                              double* retained = nullptr) {
  spec.validate();
  if (opt.K % 2 == 0) throw ConfigError("kernel size must be odd", "/K");
  const std::size_t M = channel_grid(opt.grid, wavelength, spec.lambda_ref_m);
  const double R = opt.aperture_samples / 2.0;
  if (opt.aperture_samples > double(M)) throw ConfigError("aperture does not fit the FFT grid", "/aperture_samples");
  const auto pg = mask::polar_grid(M, M, R);
  RealGrid aperture(M, M);
  for (std::size_t i = 0; i < aperture.size(); ++i) aperture.values()[i] = pg.rho.values()[i] <= 1.0 ? 1.0 : 0.0;
  RealGrid phase = opt.clear_aperture ? RealGrid(M, M) : channel_mask_phase(spec, pg, opt.profile, wavelength);
  const double psi = psi_ref * spec.lambda_ref_m / wavelength;
  auto P = optics::pupil_function(aperture, phase, {psi}, R, 1.0, wavelength);
  return optics::psf_from_pupil(P, opt.K, retained, false);
}

// Stack for psis in any order (planes kept in the given order).
inline PsfStack kernels_for(const MaskSpec& spec, const CameraConfig& cam, const std::vector<double>& psis,
                            const StackOptions& opt = {}) {
  if (psis.empty()) throw ConfigError("need at least one plane", "/psis");
  for (double p : psis)
    if (!std::isfinite(p)) throw ConfigError("non-finite defocus value", "/psis");
  PsfStack s;
  s.psis = psis;
  s.wavelengths.assign(cam.wavelengths.begin(), cam.wavelengths.end());
  s.K = opt.K;
  const std::size_t C = s.wavelengths.size();
  s.kernels.resize(psis.size() * C);
  std::vector<double> kept(s.kernels.size(), 1.0);
  parallel_for(s.kernels.size(), [&](std::size_t i) {
    s.kernels[i] = render_kernel(spec, psis[i / C], s.wavelengths[i % C], opt, &kept[i]);
  });
  const double worst = *std::min_element(kept.begin(), kept.end());
  if (opt.warn_on_crop_loss && worst < 0.98) {
    std::ostringstream msg;
    msg << "PSF crop " << opt.K << "x" << opt.K << " keeps as little as " << worst * 100.0
        << "% of the energy (kernels renormalised)";
    warn(msg.str());
  }
  return s;
}

inline PsfStack build_stack(const MaskSpec& spec, const CameraConfig& cam, const std::vector<double>& psis,
                            const StackOptions& opt = {}) {
  for (std::size_t d = 1; d < psis.size(); ++d)
    if (!(psis[d] > psis[d - 1])) throw ConfigError("psis must be strictly ascending", "/psis");
  return kernels_for(spec, cam, psis, opt);
}

// Same kernel through the physical chain: point source at the distance giving
// `psi` (at `wavelength`), lens + mask, Fresnel propagation to the sensor. The
// pupil is sampled on the matched grid pitch^2 = lambda z_i / grid, where the
// sensor sampling equals the Fourier route's.
inline RealGrid fresnel_kernel(const MaskSpec& spec, const CameraConfig& cam, double psi, double wavelength,
                               std::size_t grid, std::size_t K, MaskProfile profile = MaskProfile::exact,
                               bool clear_aperture = false) {
  const double z_i = cam.sensor_distance;
  const double pitch = std::sqrt(wavelength * z_i / double(grid));
  const double R = cam.radius();
  if (2.0 * R > pitch * double(grid)) throw ConfigError("aperture does not fit the matched grid", "/aperture_diameter_m");
  const double z_o = optics::distance_from_defocus(cam, psi, wavelength);
  const auto pg = mask::polar_grid(grid, grid, R / pitch);
  const RealGrid lens = optics::lens_phase(cam, grid, grid, pitch, wavelength);
  RealGrid phase = clear_aperture ? RealGrid(grid, grid) : channel_mask_phase(spec, pg, profile, wavelength);
  const RealGrid aperture = optics::circular_aperture(grid, grid, pitch, R);
  const double k_src = optics::pi / (wavelength * z_o);
  for (std::size_t r = 0; r < grid; ++r) {
    const double y = optics::coord(r, grid, pitch);
    for (std::size_t c = 0; c < grid; ++c) {
      const double x = optics::coord(c, grid, pitch);
      phase(r, c) += lens(r, c) + k_src * (x * x + y * y);
    }
  }
  auto U = optics::pupil_function(aperture, phase, {0.0}, R, pitch, wavelength);
  auto S = optics::fresnel_propagate(U, z_i);
  RealGrid I(grid, grid);
  for (std::size_t i = 0; i < I.size(); ++i) I.values()[i] = std::norm(S.data.values()[i]);
  return optics::crop_normalize(I, K, nullptr, false);
}

// ---- rotation features -------------------------------------------------

struct Lobe {
  double angle = 0.0;   // radians in (-pi, pi], about the kernel centre
  double radius = 0.0;  // centroid distance / (K/2)
  Grid<unsigned char> component;
};

// Intensity centroid of the 8-connected region >= 50% of the maximum that
// contains the (first, row-major) global maximum. Pixels flagged in `exclude`
// are ignored.
inline Lobe dominant_lobe(const RealGrid& k, const Grid<unsigned char>* exclude = nullptr) {
  const std::size_t H = k.rows(), W = k.cols();
  auto skip = [&](std::size_t i) { return exclude && exclude->values()[i]; };
  double vmax = -std::numeric_limits<double>::infinity(), vmin = std::numeric_limits<double>::infinity();
  std::size_t imax = 0;
  for (std::size_t i = 0; i < k.size(); ++i) {
    if (skip(i)) continue;
    const double v = k.values()[i];
    if (v > vmax) vmax = v, imax = i;
    vmin = std::min(vmin, v);
  }
  if (!(vmax > vmin)) throw DegenerateError("peak_angles: kernel has no dominant lobe");
  const double thr = 0.5 * vmax;
  Lobe lobe{0.0, 0.0, Grid<unsigned char>(H, W)};
  std::vector<std::size_t> stack{imax};
  lobe.component.values()[imax] = 1;
  while (!stack.empty()) {
    const std::size_t i = stack.back();
    stack.pop_back();
    const auto r = std::ptrdiff_t(i / W), c = std::ptrdiff_t(i % W);
    for (std::ptrdiff_t dr = -1; dr <= 1; ++dr)
      for (std::ptrdiff_t dc = -1; dc <= 1; ++dc) {
        const auto rr = r + dr, cc = c + dc;
        if (rr < 0 || cc < 0 || rr >= std::ptrdiff_t(H) || cc >= std::ptrdiff_t(W)) continue;
        const std::size_t j = std::size_t(rr) * W + std::size_t(cc);
        if (lobe.component.values()[j] || skip(j) || k.values()[j] < thr) continue;
        lobe.component.values()[j] = 1;
        stack.push_back(j);
      }
  }
  double sx = 0.0, sy = 0.0, sw = 0.0;
  const double h = double(H / 2), hc = double(W / 2);
  for (std::size_t r = 0; r < H; ++r)
    for (std::size_t c = 0; c < W; ++c) {
      if (!lobe.component(r, c)) continue;
      const double w = k(r, c);
      sx += w * (double(c) - hc);
      sy += w * (double(r) - h);
      sw += w;
    }
  const double dist = std::hypot(sx, sy) / sw;
  if (dist < 1e-3) throw DegenerateError("peak_angles: lobe centred on the axis, angle undefined");
  lobe.angle = std::atan2(sy, sx);
  lobe.radius = dist / h;
  return lobe;
}

// Nearest-branch continuation with the given period.
inline std::vector<double> unwrap(const std::vector<double>& angles, double period = 2.0 * std::numbers::pi) {
  std::vector<double> out(angles);
  for (std::size_t i = 1; i < out.size(); ++i) {
    const double d = out[i] - out[i - 1];
    out[i] -= period * std::round(d / period);
  }
  return out;
}

struct RotationTrace {
  std::vector<double> psis;
  std::vector<double> angles;     // wrapped, (-pi, pi]
  std::vector<double> unwrapped;  // nearest-branch continuation
  std::vector<double> radii;
};

// `lobes` > 1 treats the PSF as having that many equivalent lobes, so the
// angle is only defined modulo 2 pi / lobes when unwrapping.
inline RotationTrace peak_angles(const PsfStack& stack, std::size_t channel, int lobes = 1) {
  stack.validate_kernels();
  if (channel >= stack.channels()) throw DimensionError("peak_angles: channel out of range");
  if (lobes < 1) throw ConfigError("must be >= 1", "/lobes");
  RotationTrace t;
  t.psis = stack.psis;
  for (std::size_t d = 0; d < stack.planes(); ++d) {
    const Lobe l = dominant_lobe(stack.at(d, channel));
    t.angles.push_back(l.angle);
    t.radii.push_back(l.radius);
  }
  t.unwrapped = unwrap(t.angles, 2.0 * std::numbers::pi / lobes);
  return t;
}

// Angles of the two strongest lobes per plane (second lobe found after
// masking out the first component).
inline std::vector<std::pair<double, double>> lobe_pairs(const PsfStack& stack, std::size_t channel) {
  std::vector<std::pair<double, double>> out;
  for (std::size_t d = 0; d < stack.planes(); ++d) {
    const RealGrid& k = stack.at(d, channel);
    const Lobe first = dominant_lobe(k);
    const Lobe second = dominant_lobe(k, &first.component);
    out.emplace_back(first.angle, second.angle);
  }
  return out;
}

// Least-squares slope of unwrapped angle against psi.
inline double rotation_rate(const RotationTrace& t) {
  const std::size_t n = t.unwrapped.size();
  if (n < 3 || t.psis.size() != n) throw InsufficientDataError("rotation_rate: need >= 3 planes");
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) mx += t.psis[i], my += t.unwrapped[i];
  mx /= double(n);
  my /= double(n);
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (t.psis[i] - mx) * (t.unwrapped[i] - my);
    sxx += (t.psis[i] - mx) * (t.psis[i] - mx);
  }
  if (sxx == 0.0) throw InsufficientDataError("rotation_rate: all planes share one psi");
  return sxy / sxx;
}

// Planes whose rotation relative to the plane nearest focus reaches pi/N,
// beyond which an N-lobe pattern repeats and depth becomes ambiguous.
inline std::vector<bool> ambiguous_planes(const RotationTrace& t, double n_peaks) {
  std::vector<bool> flags(t.unwrapped.size(), false);
  if (t.unwrapped.empty()) return flags;
  std::size_t ref = 0;
  for (std::size_t i = 1; i < t.psis.size(); ++i)
    if (std::abs(t.psis[i]) < std::abs(t.psis[ref])) ref = i;
  const double limit = std::numbers::pi / n_peaks;
  for (std::size_t i = 0; i < flags.size(); ++i)
    flags[i] = std::abs(t.unwrapped[i] - t.unwrapped[ref]) >= limit;
  return flags;
}

// Uniform samples lo..hi inclusive.
inline std::vector<double> linspace(double lo, double hi, std::size_t count) {
  std::vector<double> v(count);
  for (std::size_t i = 0; i < count; ++i)
    v[i] = count == 1 ? lo : lo + (hi - lo) * double(i) / double(count - 1);
  return v;
}

}  // namespace rpsf::psf
