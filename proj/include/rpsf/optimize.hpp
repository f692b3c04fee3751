#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "rpsf/errors.hpp"
#include "rpsf/grid.hpp"
#include "rpsf/optics.hpp"
#include "rpsf/parallel.hpp"
#include "rpsf/phase_mask.hpp"
#include "rpsf/psf_stack.hpp"

namespace rpsf::opt {

using mask::MaskSpec;

enum class Objective { pairwise, rotation_spread };

inline Objective objective_from_string(const std::string& s) {
  if (s == "pairwise" || s == "pairwise-dissimilarity") return Objective::pairwise;
  if (s == "rotation-spread" || s == "rotation_spread") return Objective::rotation_spread;
  throw ConfigError("unknown objective '" + s + "'", "/objective");
}

inline std::string to_string(Objective o) { return o == Objective::pairwise ? "pairwise" : "rotation-spread"; }

struct OptimizeConfig {
  double lr = 0.1;
  int iters = 40;
  std::vector<double> psis = psf::linspace(-5.0, 5.0, 10);
  Objective objective = Objective::pairwise;
  double n_min = 1.0, n_max = 4.0;
  double eps_min = 0.01, eps_max = 1.0;
  double fd_step = 1e-4;      // phase-space step for the PSF Jacobian
  std::size_t grid = 128;
  double aperture_samples = 64;  // grid/2: PSF sampled at Nyquist
  std::size_t K = 23;
  int max_halvings = 8;
  int max_shift = 2;          // NCC search radius, pixels

  void validate() const {
    if (!(lr >= 0.0)) throw ConfigError("must be >= 0", "/lr");
    if (iters < 1) throw ConfigError("must be >= 1", "/iters");
    if (psis.size() < 2) throw ConfigError("need >= 2 planes", "/psis");
    if (!(n_min >= 1.0 && n_max >= n_min)) throw ConfigError("invalid N bounds", "/bounds/n");
    if (!(eps_min > 0.0 && eps_max <= 1.0 && eps_max >= eps_min)) throw ConfigError("invalid epsilon bounds", "/bounds/epsilon");
    if (!(fd_step > 0.0)) throw ConfigError("must be > 0", "/fd_step");
    if (K % 2 == 0) throw ConfigError("must be odd", "/K");
    if (aperture_samples > double(grid)) throw ConfigError("aperture exceeds the grid", "/aperture_samples");
  }
};

// Zero-mean NCC over the overlap of `a` and `b` shifted by (dy, dx),
// maximised over |dy|, |dx| <= max_shift.
inline double ncc_max(const RealGrid& a, const RealGrid& b, int max_shift = 2) {
  if (!a.same_shape(b)) throw DimensionError("ncc: shape mismatch");
  const auto H = std::ptrdiff_t(a.rows()), W = std::ptrdiff_t(a.cols());
  double best = -2.0;
  for (int dy = -max_shift; dy <= max_shift; ++dy)
    for (int dx = -max_shift; dx <= max_shift; ++dx) {
      const std::ptrdiff_t ra = std::max(0, dy), rb = std::max(0, -dy), nr = H - std::abs(dy);
      const std::ptrdiff_t ca = std::max(0, dx), cb = std::max(0, -dx), nc = W - std::abs(dx);
      if (nr <= 0 || nc <= 0) continue;
      double ma = 0, mb = 0;
      for (std::ptrdiff_t r = 0; r < nr; ++r)
        for (std::ptrdiff_t c = 0; c < nc; ++c) ma += a(ra + r, ca + c), mb += b(rb + r, cb + c);
      ma /= double(nr * nc);
      mb /= double(nr * nc);
      double sab = 0, saa = 0, sbb = 0;
      for (std::ptrdiff_t r = 0; r < nr; ++r)
        for (std::ptrdiff_t c = 0; c < nc; ++c) {
          const double u = a(ra + r, ca + c) - ma, v = b(rb + r, cb + c) - mb;
          sab += u * v, saa += u * u, sbb += v * v;
        }
      if (saa == 0.0 || sbb == 0.0) throw DegenerateError("ncc: flat kernel");
      best = std::max(best, sab / std::sqrt(saa * sbb));
    }
  return best;
}

// Mean over plane pairs (and channels) of 1 - NCC.
inline double objective_pairwise(const psf::PsfStack& stack, int max_shift = 2) {
  if (stack.planes() < 2) throw InsufficientDataError("objective needs >= 2 planes");
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t c = 0; c < stack.channels(); ++c)
    for (std::size_t i = 0; i < stack.planes(); ++i)
      for (std::size_t j = i + 1; j < stack.planes(); ++j) {
        total += 1.0 - ncc_max(stack.at(i, c), stack.at(j, c), max_shift);
        ++count;
      }
  return total / double(count);
}

// Spread of the first angular moment across planes: var_d of
// m_d = sum k_d(p) exp(i theta_p) (centre pixel excluded). Large when the
// dominant lobe sits at different angles for different depths.
inline double objective_rotation_spread(const psf::PsfStack& stack) {
  if (stack.planes() < 2) throw InsufficientDataError("objective needs >= 2 planes");
  double total = 0.0;
  for (std::size_t c = 0; c < stack.channels(); ++c) {
    std::vector<std::complex<double>> m(stack.planes());
    for (std::size_t d = 0; d < stack.planes(); ++d) {
      const RealGrid& k = stack.at(d, c);
      const double h = double(k.rows() / 2);
      for (std::size_t r = 0; r < k.rows(); ++r)
        for (std::size_t q = 0; q < k.cols(); ++q) {
          const double y = double(r) - h, x = double(q) - h;
          if (x == 0.0 && y == 0.0) continue;
          m[d] += k(r, q) * std::polar(1.0, std::atan2(y, x));
        }
    }
    std::complex<double> mean{};
    double power = 0.0;
    for (const auto& v : m) mean += v, power += std::norm(v);
    mean /= double(m.size());
    total += power / double(m.size()) - std::norm(mean);
  }
  return total / double(stack.channels());
}

inline double evaluate(const psf::PsfStack& stack, const OptimizeConfig& cfg) {
  return cfg.objective == Objective::pairwise ? objective_pairwise(stack, cfg.max_shift)
                                               : objective_rotation_spread(stack);
}

// Single-channel pupil at lambda_ref on which the objective is evaluated.
class PupilModel {
 public:
  explicit PupilModel(const OptimizeConfig& cfg)
      : cfg_(cfg),
        radius_(cfg.aperture_samples / 2.0),
        polar_(mask::polar_grid(cfg.grid, cfg.grid, radius_)),
        aperture_(cfg.grid, cfg.grid) {
    for (std::size_t i = 0; i < aperture_.size(); ++i)
      aperture_.values()[i] = polar_.rho.values()[i] <= 1.0 ? 1.0 : 0.0;
  }

  const mask::PolarGrid& polar() const { return polar_; }

  RealGrid mask_phase(const MaskSpec& spec) const {
    RealGrid p = mask::smooth_phase(spec, polar_.rho, polar_.phi);
    for (std::size_t i = 0; i < p.size(); ++i)
      if (aperture_.values()[i] == 0.0) p.values()[i] = 0.0;
    return p;
  }

  mask::PhaseGradients gradients(const MaskSpec& spec) const {
    auto g = mask::phase_gradients(spec, polar_.rho, polar_.phi);
    for (std::size_t i = 0; i < aperture_.size(); ++i)
      if (aperture_.values()[i] == 0.0) g.d_n.values()[i] = g.d_eps.values()[i] = 0.0;
    return g;
  }

  psf::PsfStack stack(const RealGrid& phase, double wavelength) const {
    psf::PsfStack s;
    s.psis = cfg_.psis;
    s.wavelengths = {wavelength};
    s.K = cfg_.K;
    s.kernels.resize(cfg_.psis.size());
    for (std::size_t d = 0; d < cfg_.psis.size(); ++d) {
      auto P = optics::pupil_function(aperture_, phase, {cfg_.psis[d]}, radius_, 1.0, wavelength);
      s.kernels[d] = optics::psf_from_pupil(P, cfg_.K, nullptr, false);
    }
    return s;
  }

  double objective(const RealGrid& phase, double wavelength) const {
    const double J = evaluate(stack(phase, wavelength), cfg_);
    if (!std::isfinite(J)) throw DomainError("optimize: objective is not finite");
    return J;
  }

 private:
  OptimizeConfig cfg_;
  double radius_;
  mask::PolarGrid polar_;
  RealGrid aperture_;
};

inline double objective_value(const MaskSpec& spec, const OptimizeConfig& cfg) {
  PupilModel model(cfg);
  return model.objective(model.mask_phase(spec), spec.lambda_ref_m);
}

struct Gradient {
  double d_n = 0.0;
  double d_eps = 0.0;
};

// dJ/dtheta = <dJ/dPhi, dPhi/dtheta>: the phase direction dPhi/dtheta comes
// from the analytic mask gradients, the PSF/objective response along it from a
// central difference in phase space.
inline Gradient chain_gradient(const PupilModel& model, const MaskSpec& spec, const OptimizeConfig& cfg) {
  const RealGrid base = model.mask_phase(spec);
  const auto dir = model.gradients(spec);
  const RealGrid* dirs[2] = {&dir.d_n, &dir.d_eps};
  double out[2] = {0.0, 0.0};
  parallel_for(2, [&](std::size_t k) {
    RealGrid plus = base, minus = base;
    for (std::size_t i = 0; i < base.size(); ++i) {
      const double v = cfg.fd_step * dirs[k]->values()[i];
      plus.values()[i] += v;
      minus.values()[i] -= v;
    }
    out[k] = (model.objective(plus, spec.lambda_ref_m) - model.objective(minus, spec.lambda_ref_m)) /
             (2.0 * cfg.fd_step);
  });
  return {out[0], out[1]};
}

inline Gradient chain_gradient(const MaskSpec& spec, const OptimizeConfig& cfg) {
  return chain_gradient(PupilModel(cfg), spec, cfg);
}

struct TrajectoryPoint {
  int iter = 0;
  MaskSpec spec;
  double J = 0.0;
};

// Projected ascent on (N, eps) with unit-length steps in the gradient
// direction scaled by lr, halving until J improves (at most max_halvings
// times); stops when no step improves.
inline std::vector<TrajectoryPoint> optimize(const MaskSpec& spec0, const optics::CameraConfig& cam,
                                             const OptimizeConfig& cfg,
                                             const std::function<void(const TrajectoryPoint&)>& on_step = {}) {
  spec0.validate();
  cam.validate();
  cfg.validate();
  PupilModel model(cfg);
  MaskSpec spec = spec0;
  spec.n_peaks = std::clamp(spec.n_peaks, cfg.n_min, cfg.n_max);
  spec.epsilon = std::clamp(spec.epsilon, cfg.eps_min, cfg.eps_max);
  double J = model.objective(model.mask_phase(spec), spec.lambda_ref_m);
  std::vector<TrajectoryPoint> traj{{0, spec, J}};
  if (on_step) on_step(traj.back());
  for (int it = 1; it <= cfg.iters; ++it) {
    Gradient g = chain_gradient(model, spec, cfg);
    if (!std::isfinite(g.d_n) || !std::isfinite(g.d_eps)) throw DomainError("optimize: non-finite gradient");
    // drop components that push into an active bound
    if ((spec.n_peaks <= cfg.n_min && g.d_n < 0) || (spec.n_peaks >= cfg.n_max && g.d_n > 0)) g.d_n = 0;
    if ((spec.epsilon <= cfg.eps_min && g.d_eps < 0) || (spec.epsilon >= cfg.eps_max && g.d_eps > 0)) g.d_eps = 0;
    const double norm = std::hypot(g.d_n, g.d_eps);
    if (norm == 0.0 || cfg.lr == 0.0) break;
    double step = cfg.lr;
    bool accepted = false;
    for (int h = 0; h <= cfg.max_halvings; ++h, step *= 0.5) {
      MaskSpec cand = spec;
      cand.n_peaks = std::clamp(spec.n_peaks + step * g.d_n / norm, cfg.n_min, cfg.n_max);
      cand.epsilon = std::clamp(spec.epsilon + step * g.d_eps / norm, cfg.eps_min, cfg.eps_max);
      const double Jc = model.objective(model.mask_phase(cand), cand.lambda_ref_m);
      if (Jc > J) {
        spec = cand;
        J = Jc;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    traj.push_back({it, spec, J});
    if (on_step) on_step(traj.back());
  }
  return traj;
}

}  // namespace rpsf::opt
