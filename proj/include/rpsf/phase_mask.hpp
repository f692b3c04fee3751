#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include "rpsf/errors.hpp"
#include "rpsf/grid.hpp"

namespace rpsf::mask {

inline constexpr double two_pi = 2.0 * std::numbers::pi;

struct MaskSpec {
  double n_peaks = 1.0;  // N, continuous while optimising
  int zones = 5;         // L
  double epsilon = 0.9;
  double radius_m = 2e-3;
  double lambda_ref_m = 536.67e-9;
  double refractive_index = 1.5;
  double sharpness = 100.0;

  void validate() const {
    if (!(n_peaks >= 1.0) || !std::isfinite(n_peaks)) throw ConfigError("must be >= 1", "/n_peaks");
    if (zones < 1) throw ConfigError("must be >= 1", "/zones");
    if (!(epsilon > 0.0 && epsilon <= 1.0)) throw ConfigError("must be in (0, 1]", "/epsilon");
    if (!(radius_m > 0.0)) throw ConfigError("must be > 0", "/radius_m");
    if (!(lambda_ref_m > 0.0)) throw ConfigError("must be > 0", "/lambda_ref_m");
    if (!(refractive_index > 1.0)) throw ConfigError("must be > 1", "/refractive_index");
    if (!(sharpness > 0.0)) throw ConfigError("must be > 0", "/sharpness");
  }

  // Normalised ring radius r_l / R = (l/L)^eps, l = 0..L.
  double boundary(int l) const { return l == 0 ? 0.0 : std::pow(double(l) / zones, epsilon); }

  // Topological charge of zone l (1-based).
  double charge(int l) const { return double(l - 1) * n_peaks + 1.0; }

  // Integer peak count used when the mask leaves the optimiser.
  MaskSpec rounded() const {
    MaskSpec s = *this;
    s.n_peaks = std::max(1.0, std::round(n_peaks));
    return s;
  }
};

inline bool operator==(const MaskSpec& a, const MaskSpec& b) {
  return a.n_peaks == b.n_peaks && a.zones == b.zones && a.epsilon == b.epsilon && a.radius_m == b.radius_m &&
         a.lambda_ref_m == b.lambda_ref_m && a.refractive_index == b.refractive_index &&
         a.sharpness == b.sharpness;
}

// Zone index l in 1..L with boundary(l-1) <= rho < boundary(l); the rim rho >= 1 belongs to zone L.
inline int zone_of(const MaskSpec& spec, double rho) {
  for (int l = 1; l < spec.zones; ++l)
    if (rho < spec.boundary(l)) return l;
  return spec.zones;
}

inline double step_phase(const MaskSpec& spec, double rho, double phi) {
  return spec.charge(zone_of(spec, rho)) * phi;
}

// Smoothed ring indicator of zone l: (tanh(s(rho - a)) - tanh(s(rho - b))) / 2.
inline double ring_weight(const MaskSpec& spec, int l, double rho) {
  const double s = spec.sharpness;
  return 0.5 * (std::tanh(s * (rho - spec.boundary(l - 1))) - std::tanh(s * (rho - spec.boundary(l))));
}

inline double smooth_phase(const MaskSpec& spec, double rho, double phi) {
  double acc = 0.0;
  for (int l = 1; l <= spec.zones; ++l) acc += spec.charge(l) * ring_weight(spec, l, rho);
  return acc * phi;
}

struct ScalarGradient {
  double d_n = 0.0;
  double d_eps = 0.0;
};

inline ScalarGradient smooth_phase_gradient(const MaskSpec& spec, double rho, double phi) {
  const double s = spec.sharpness;
  const double L = spec.zones;
  ScalarGradient g;
  for (int l = 1; l <= spec.zones; ++l) {
    const double a = spec.boundary(l - 1), b = spec.boundary(l);
    const double ta = std::tanh(s * (rho - a)), tb = std::tanh(s * (rho - b));
    const double m = 0.5 * (ta - tb);
    // d(l/L)^eps / d eps = (l/L)^eps ln(l/L); zero for the fixed ends 0 and 1
    const double da = (l - 1 == 0) ? 0.0 : a * std::log(double(l - 1) / L);
    const double db = (l == spec.zones) ? 0.0 : b * std::log(double(l) / L);
    const double dm = 0.5 * s * (-(1.0 - ta * ta) * da + (1.0 - tb * tb) * db);
    g.d_n += double(l - 1) * m;
    g.d_eps += spec.charge(l) * dm;
  }
  g.d_n *= phi;
  g.d_eps *= phi;
  return g;
}

// Normalised polar coordinates of a sampled plane: rho = r / R, phi = atan2(y, x).
struct PolarGrid {
  RealGrid rho;
  RealGrid phi;
};

// Grid centre sits on sample (rows/2, cols/2); `radius_samples` is R in samples.
inline PolarGrid polar_grid(std::size_t rows, std::size_t cols, double radius_samples) {
  PolarGrid g{RealGrid(rows, cols), RealGrid(rows, cols)};
  for (std::size_t r = 0; r < rows; ++r) {
    const double y = double(r) - double(rows / 2);
    for (std::size_t c = 0; c < cols; ++c) {
      const double x = double(c) - double(cols / 2);
      g.rho(r, c) = std::hypot(x, y) / radius_samples;
      g.phi(r, c) = std::atan2(y, x);
    }
  }
  return g;
}

inline RealGrid step_phase(const MaskSpec& spec, const RealGrid& rho, const RealGrid& phi) {
  if (!rho.same_shape(phi)) throw DimensionError("step_phase: rho/phi shape mismatch");
  RealGrid out(rho.rows(), rho.cols());
  for (std::size_t i = 0; i < rho.size(); ++i)
    out.values()[i] = step_phase(spec, rho.values()[i], phi.values()[i]);
  return out;
}

inline RealGrid smooth_phase(const MaskSpec& spec, const RealGrid& rho, const RealGrid& phi) {
  if (!rho.same_shape(phi)) throw DimensionError("smooth_phase: rho/phi shape mismatch");
  RealGrid out(rho.rows(), rho.cols());
  for (std::size_t i = 0; i < rho.size(); ++i)
    out.values()[i] = smooth_phase(spec, rho.values()[i], phi.values()[i]);
  return out;
}

struct PhaseGradients {
  RealGrid d_n;
  RealGrid d_eps;
};

inline PhaseGradients phase_gradients(const MaskSpec& spec, const RealGrid& rho, const RealGrid& phi) {
  spec.validate();
  if (!rho.same_shape(phi)) throw DimensionError("phase_gradients: rho/phi shape mismatch");
  PhaseGradients g{RealGrid(rho.rows(), rho.cols()), RealGrid(rho.rows(), rho.cols())};
  for (std::size_t i = 0; i < rho.size(); ++i) {
    const auto s = smooth_phase_gradient(spec, rho.values()[i], phi.values()[i]);
    g.d_n.values()[i] = s.d_n;
    g.d_eps.values()[i] = s.d_eps;
  }
  return g;
}

// Phase folded into [0, 2 pi).
inline double wrap_phase(double p) {
  double w = std::fmod(p, two_pi);
  if (w < 0) w += two_pi;
  if (w >= two_pi) w = 0.0;
  return w;
}

struct HeightMap {
  RealGrid data;  // metres
  double pitch = 0.0;
};

// Surface relief realising the wrapped smooth phase at lambda_ref. `levels` > 0
// quantises the wrapped phase to that many equal steps (fabrication export).
inline HeightMap height_map(const MaskSpec& spec, std::size_t rows, std::size_t cols, double pitch,
                            int levels = 0) {
  spec.validate();
  if (!(pitch > 0)) throw ConfigError("must be > 0", "/pitch_m");
  if (double(std::min(rows, cols)) * pitch < 2.0 * spec.radius_m)
    throw ConfigError("grid smaller than the mask diameter", "/grid");
  if (levels < 0) throw ConfigError("must be >= 0", "/levels");
  const PolarGrid pg = polar_grid(rows, cols, spec.radius_m / pitch);
  const double scale = spec.lambda_ref_m / (two_pi * (spec.refractive_index - 1.0));
  HeightMap h{RealGrid(rows, cols), pitch};
  for (std::size_t i = 0; i < pg.rho.size(); ++i) {
    const double rho = pg.rho.values()[i];
    if (rho > 1.0) continue;
    double w = wrap_phase(smooth_phase(spec, rho, pg.phi.values()[i]));
    if (levels > 0) w = std::floor(w / two_pi * levels) * two_pi / levels;
    h.data.values()[i] = scale * w;
  }
  return h;
}

}  // namespace rpsf::mask
