#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <sstream>
#include <string>

#include "rpsf/errors.hpp"
#include "rpsf/fft.hpp"
#include "rpsf/grid.hpp"
#include "rpsf/log.hpp"

namespace rpsf::optics {

inline constexpr double pi = std::numbers::pi;

struct ComplexField {
  ComplexGrid data;
  double pitch = 0.0;       // metres per sample
  double wavelength = 0.0;  // metres

  void validate() const {
    if (data.rows() < 16 || data.cols() < 16 || data.rows() % 2 || data.cols() % 2)
      throw DimensionError("ComplexField: sides must be even and >= 16");
    if (!(pitch > 0.0) || !(wavelength > 0.0))
      throw DomainError("ComplexField: pitch and wavelength must be positive");
  }

  double energy() const {
    double e = 0.0;
    for (const auto& v : data.values()) e += std::norm(v);
    return e;
  }
};

struct CameraConfig {
  double focal_length = 16e-3;
  double aperture_diameter = 4e-3;
  double focus_distance = 5.0;
  double sensor_distance = 0.0;  // set by make() from the thin-lens equation
  std::array<double, 3> wavelengths{610e-9, 536.67e-9, 470e-9};
  double refractive_index = 1.5;

  double radius() const { return aperture_diameter / 2.0; }

  static CameraConfig make(double f, double aperture, double focus,
                           std::array<double, 3> wavelengths = {610e-9, 536.67e-9, 470e-9},
                           double n = 1.5) {
    CameraConfig c;
    c.focal_length = f;
    c.aperture_diameter = aperture;
    c.focus_distance = focus;
    c.wavelengths = wavelengths;
    c.refractive_index = n;
    if (!(focus > f)) throw ConfigError("focus distance must exceed the focal length", "/focus_distance_m");
    c.sensor_distance = 1.0 / (1.0 / f - 1.0 / focus);
    c.validate();
    return c;
  }

  void validate() const {
    if (!(focal_length > 0)) throw ConfigError("must be > 0", "/focal_length_m");
    if (!(aperture_diameter > 0)) throw ConfigError("must be > 0", "/aperture_diameter_m");
    if (!(focus_distance > 0)) throw ConfigError("must be > 0", "/focus_distance_m");
    if (!(refractive_index > 1)) throw ConfigError("must be > 1", "/refractive_index");
    for (std::size_t i = 0; i < wavelengths.size(); ++i)
      if (!(wavelengths[i] > 0)) throw ConfigError("must be > 0", "/wavelengths_m/" + std::to_string(i));
    const double lhs = 1.0 / focus_distance + 1.0 / sensor_distance;
    const double rhs = 1.0 / focal_length;
    if (!(std::abs(lhs - rhs) <= 1e-12 * rhs))
      throw ConfigError("thin-lens equation violated (1/z_o + 1/z_i != 1/f)", "/sensor_distance_m");
  }
};

struct DefocusSpec {
  double psi = 0.0;  // radians of quadratic phase at the pupil rim; > 0 means nearer than focus
};

// (pi R^2 / lambda)(1/z_o + 1/z_i - 1/f). With the thin-lens relation the
// bracket is 1/z_o - 1/z_focus, which we evaluate directly so the in-focus
// plane gives exactly zero.
inline DefocusSpec defocus_from_distance(const CameraConfig& cam, double z_o, double wavelength) {
  if (!(z_o > 0)) throw DomainError("defocus_from_distance: z_o must be > 0");
  if (!(wavelength > 0)) throw DomainError("defocus_from_distance: wavelength must be > 0");
  const double R = cam.radius();
  const double psi = pi * R * R / wavelength * (1.0 / z_o - 1.0 / cam.focus_distance);
  if (!std::isfinite(psi)) throw DomainError("defocus_from_distance: non-finite result");
  return {psi};
}

// Object distance that produces a given defocus (inverse of the above).
inline double distance_from_defocus(const CameraConfig& cam, double psi, double wavelength) {
  const double R = cam.radius();
  const double inv = psi * wavelength / (pi * R * R) + 1.0 / cam.focus_distance;
  if (!(inv > 0)) throw DomainError("distance_from_defocus: defocus beyond the far limit");
  return 1.0 / inv;
}

// Sample coordinates: index i maps to (i - size/2) * pitch, so the grid centre
// sits exactly on a sample.
inline double coord(std::size_t i, std::size_t size, double pitch) {
  return (double(i) - double(size / 2)) * pitch;
}

inline RealGrid lens_phase(const CameraConfig& cam, std::size_t rows, std::size_t cols, double pitch,
                           double wavelength) {
  if (!(pitch > 0)) throw ConfigError("pitch must be > 0", "/pitch_m");
  if (double(std::min(rows, cols)) * pitch < cam.aperture_diameter)
    throw ConfigError("grid smaller than the aperture", "/grid");
  const double n1 = cam.refractive_index - 1.0;
  const double f = cam.focal_length;
  const double R = cam.radius();
  const double h0 = R * R / (2.0 * f * n1);
  const double k = 2.0 * pi * n1 / wavelength;
  RealGrid out(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const double y = coord(r, rows, pitch);
    for (std::size_t c = 0; c < cols; ++c) {
      const double x = coord(c, cols, pitch);
      // clamp at zero thickness outside the aperture keeps min h = 0
      const double h = std::max(0.0, h0 - (x * x + y * y) / (2.0 * f * n1));
      out(r, c) = k * h;
    }
  }
  return out;
}

// Binary disc of the given radius (metres), centred on sample (rows/2, cols/2).
inline RealGrid circular_aperture(std::size_t rows, std::size_t cols, double pitch, double radius) {
  RealGrid a(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const double y = coord(r, rows, pitch);
    for (std::size_t c = 0; c < cols; ++c) {
      const double x = coord(c, cols, pitch);
      a(r, c) = (x * x + y * y <= radius * radius) ? 1.0 : 0.0;
    }
  }
  return a;
}

inline ComplexField pupil_function(const RealGrid& aperture, const RealGrid& phase, DefocusSpec defocus,
                                   double R, double pitch, double wavelength) {
  if (!aperture.same_shape(phase)) throw DimensionError("pupil_function: aperture/phase shape mismatch");
  ComplexField P{ComplexGrid(aperture.rows(), aperture.cols()), pitch, wavelength};
  const double inv_r2 = 1.0 / (R * R);
  for (std::size_t r = 0; r < aperture.rows(); ++r) {
    const double y = coord(r, aperture.rows(), pitch);
    for (std::size_t c = 0; c < aperture.cols(); ++c) {
      const double a = aperture(r, c);
      if (a == 0.0) continue;
      const double x = coord(c, aperture.cols(), pitch);
      const double theta = phase(r, c) + defocus.psi * (x * x + y * y) * inv_r2;
      P.data(r, c) = a * Complex(std::cos(theta), std::sin(theta));
    }
  }
  return P;
}

// Crop a centred odd window out of an intensity grid, clamp negatives and
// normalise to unit mass. `retained` receives the fraction of energy kept.
inline RealGrid crop_normalize(const RealGrid& intensity, std::size_t out_size, double* retained = nullptr,
                               bool warn_on_loss = true) {
  if (out_size % 2 == 0) throw ConfigError("kernel size must be odd", "/K");
  RealGrid k = crop_center(intensity, out_size);
  for (auto& v : k.values()) v = std::max(v, 0.0);
  double total = 0.0;
  for (double v : intensity.values()) total += std::max(v, 0.0);
  const double s = sum(k);
  if (!(s > 0)) throw DegenerateError("PSF crop carries no energy");
  for (auto& v : k.values()) v /= s;
  const double kept = s / total;
  if (retained) *retained = kept;
  if (warn_on_loss && kept < 0.98) {
    std::ostringstream msg;
    msg << "PSF crop " << out_size << "x" << out_size << " keeps only " << kept * 100.0 << "% of the energy";
    warn(msg.str());
  }
  return k;
}

// |F(P)|^2 with the zero frequency moved to the grid centre, then cropped.
inline RealGrid psf_intensity(const ComplexField& P) {
  ComplexGrid g = fft::ifftshift(P.data);
  fft::forward(g);
  RealGrid I(g.rows(), g.cols());
  for (std::size_t i = 0; i < g.size(); ++i) I.values()[i] = std::norm(g.values()[i]);
  return fft::fftshift(I);
}

inline RealGrid psf_from_pupil(const ComplexField& P, std::size_t out_size, double* retained = nullptr,
                               bool warn_on_loss = true) {
  if (out_size > P.data.rows() || out_size > P.data.cols())
    throw DimensionError("psf_from_pupil: out_size exceeds the grid");
  if (P.energy() == 0.0) throw DegenerateError("psf_from_pupil: all-zero pupil");
  return crop_normalize(psf_intensity(P), out_size, retained, warn_on_loss);
}

// Transfer-function Fresnel propagation over z (z < 0 back-propagates with the
// conjugate kernel, making the pair exactly inverse).
inline ComplexField fresnel_propagate(const ComplexField& U, double z) {
  U.validate();
  if (z == 0.0 || !std::isfinite(z)) throw DomainError("fresnel_propagate: z must be finite and non-zero");
  const std::size_t rows = U.data.rows(), cols = U.data.cols();
  const double lz = U.wavelength * std::abs(z);
  const double n_min = double(std::min(rows, cols));
  // equality is the matched grid; allow for rounding in the caller's pitch
  if (U.pitch * U.pitch * n_min < lz * (1.0 - 1e-12)) {
    std::ostringstream msg;
    msg.precision(6);
    msg << "Fresnel transfer function undersampled: pitch^2 = " << U.pitch * U.pitch
        << " < lambda*|z|/N = " << lz / n_min;
    throw SamplingError(msg.str());
  }
  ComplexField out = U;
  fft::forward(out.data);
  const double k = 2.0 * pi / U.wavelength;
  const double dfx = 1.0 / (double(cols) * U.pitch);
  const double dfy = 1.0 / (double(rows) * U.pitch);
  const double sgn = z > 0 ? 1.0 : -1.0;
  // global phase exp(ikz) is kept modulo 2 pi to stay accurate for large kz
  const double global = std::fmod(k * std::abs(z), 2.0 * pi);
  for (std::size_t r = 0; r < rows; ++r) {
    const double fy = (r < rows / 2 ? double(r) : double(r) - double(rows)) * dfy;
    for (std::size_t c = 0; c < cols; ++c) {
      const double fx = (c < cols / 2 ? double(c) : double(c) - double(cols)) * dfx;
      const double theta = sgn * (global - pi * lz * (fx * fx + fy * fy));
      out.data(r, c) *= Complex(std::cos(theta), std::sin(theta));
    }
  }
  fft::inverse(out.data);
  return out;
}

}  // namespace rpsf::optics
