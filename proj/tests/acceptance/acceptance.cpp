// Acceptance suite: one PASS/FAIL line per criterion.
//
//   rpsf_acceptance [--only N]... [--cli PATH] [--data DIR]
//
// Exit status is the number of failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "rpsf.hpp"

namespace fs = std::filesystem;
using namespace rpsf;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string g_cli = RPSF_CLI_PATH;
std::string g_data = RPSF_TEST_DATA;

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
  }

 private:
  std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

std::string num(double v, int prec = 4) {
  std::ostringstream os;
  os.precision(prec);
  os << v;
  return os.str();
}

mask::MaskSpec spec_of(double n, int L, double eps) {
  mask::MaskSpec s;
  s.n_peaks = n;
  s.zones = L;
  s.epsilon = eps;
  return s;
}

const optics::CameraConfig& camera() {
  static const auto cam = optics::CameraConfig::make(16e-3, 4e-3, 5.0);
  return cam;
}

Image natural_image() {
  return io::read_png(fs::path(g_data) / "astronaut_256.png").image;
}

// ---- 1. phase-profile fidelity --------------------------------------------------

Outcome phase_profile_fidelity() {
  constexpr std::size_t kGrid = 512;
  constexpr double kRel = 1e-3, kGuard = 0.05, kBudget = 10.0;
  Timer t;
  const auto pg = mask::polar_grid(kGrid, kGrid, kGrid / 2.0);
  double worst = 0.0;
  std::size_t checked = 0;
  bool ok = true;
  for (double n : {1.0, 2.0, 3.0})
    for (int L : {2, 5, 7})
      for (double eps : {0.5, 0.9}) {
        auto s = spec_of(n, L, eps);
        s.sharpness = 100.0;
        const RealGrid smooth = mask::smooth_phase(s, pg.rho, pg.phi);
        const RealGrid step = mask::step_phase(s, pg.rho, pg.phi);
        for (std::size_t i = 0; i < smooth.size(); ++i) {
          const double rho = pg.rho.values()[i];
          if (rho > 1.0) continue;
          double gap = 1e9;
          for (int l = 0; l <= L; ++l) gap = std::min(gap, std::abs(rho - s.boundary(l)));
          if (gap < kGuard) continue;
          const double local = std::abs(s.charge(mask::zone_of(s, rho)) * pg.phi.values()[i]);
          const double err = std::abs(smooth.values()[i] - step.values()[i]);
          ++checked;
          if (local > 0) worst = std::max(worst, err / local);
          if (!(err < kRel * local) && !(local == 0 && err == 0)) ok = false;
        }
      }
  const double secs = t.seconds();
  return {ok && secs < kBudget,
          "max |smooth-step|/|charge*phi| = " + num(worst) + " over " + std::to_string(checked) +
              " samples (< 1e-3), " + num(secs, 3) + " s (< 10 s)"};
}

// ---- 2. gradient correctness -------------------------------------------------------

Outcome gradient_correctness() {
  constexpr std::size_t kGrid = 64;
  constexpr double kStep = 1e-5, kRel = 1e-4, kBudget = 30.0;
  constexpr int kSpecs = 50;
  Timer t;
  synthetic::Stream rng(2024, 7);
  const auto pg = mask::polar_grid(kGrid, kGrid, kGrid / 2.0);
  double worst = 0.0;
  for (int k = 0; k < kSpecs; ++k) {
    auto s = spec_of(1.0 + 3.0 * rng.uniform(), 2 + int(rng.below(9)), 0.05 + 0.94 * rng.uniform());
    const auto g = mask::phase_gradients(s, pg.rho, pg.phi);
    auto fd = [&](auto bump) {
      auto lo = s, hi = s;
      bump(lo, -kStep);
      bump(hi, kStep);
      const RealGrid a = mask::smooth_phase(hi, pg.rho, pg.phi), b = mask::smooth_phase(lo, pg.rho, pg.phi);
      RealGrid d(kGrid, kGrid);
      for (std::size_t i = 0; i < d.size(); ++i) d.values()[i] = (a.values()[i] - b.values()[i]) / (2 * kStep);
      return d;
    };
    const RealGrid fd_n = fd([](mask::MaskSpec& m, double h) { m.n_peaks += h; });
    const RealGrid fd_e = fd([](mask::MaskSpec& m, double h) { m.epsilon += h; });
    for (const auto& [an, nu] : {std::pair{&g.d_n, &fd_n}, std::pair{&g.d_eps, &fd_e}}) {
      double scale = 0.0;
      for (double v : an->values()) scale = std::max(scale, std::abs(v));
      worst = std::max(worst, max_abs_diff(*an, *nu) / std::max(scale, 1e-300));
    }
  }
  const double secs = t.seconds();
  return {worst < kRel && secs < kBudget,
          "max relative error " + num(worst) + " over 50 specs (< 1e-4), " + num(secs, 3) + " s (< 30 s)"};
}

// ---- 3. PSF contracts ----------------------------------------------------------------

Outcome psf_contracts() {
  constexpr double kMass = 1e-9, kAgree = 1e-3, kBudget = 60.0;
  Timer t;
  psf::StackOptions opt;
  opt.warn_on_crop_loss = false;
  double mass_err = 0.0, min_val = 0.0;
  for (const auto& s : {spec_of(1, 5, 0.9), spec_of(2, 7, 0.5), spec_of(3, 2, 0.9)}) {
    const auto st = psf::build_stack(s, camera(), psf::linspace(-20, 20, 10), opt);
    for (const auto& k : st.kernels) {
      mass_err = std::max(mass_err, std::abs(sum(k) - 1.0));
      min_val = std::min(min_val, min_value(k));
    }
  }
  // Fresnel route on a camera whose pupil fills 400 samples of the matched grid
  const double lam = mask::MaskSpec{}.lambda_ref_m;
  const double f = 16e-3, focus = 0.1;
  const double zi = 1.0 / (1.0 / f - 1.0 / focus);
  const double D = 400.0 * std::sqrt(lam * zi / 512.0);
  const auto cam = optics::CameraConfig::make(f, D, focus);
  struct Case {
    mask::MaskSpec spec;
    double psi;
  };
  std::vector<Case> cases{{spec_of(1, 5, 0.9), 0.0}, {spec_of(2, 7, 0.5), 7.0}, {spec_of(3, 2, 0.9), -13.0}};
  double agree = 0.0;
  for (auto& c : cases) {
    c.spec.radius_m = D / 2;
    psf::StackOptions o;
    const RealGrid a = psf::render_kernel(c.spec, c.psi, lam, o);
    const RealGrid b = psf::fresnel_kernel(c.spec, cam, c.psi, lam, 512, o.K);
    const double ma = max_value(a), mb = max_value(b);
    for (std::size_t i = 0; i < a.size(); ++i)
      agree = std::max(agree, std::abs(a.values()[i] / ma - b.values()[i] / mb));
  }
  const double secs = t.seconds();
  return {mass_err <= kMass && min_val >= 0.0 && agree < kAgree && secs < kBudget,
          "mass error " + num(mass_err) + " (<= 1e-9), min value " + num(min_val) + " (>= 0), Fourier/Fresnel " +
              num(agree) + " (< 1e-3), " + num(secs, 3) + " s (< 60 s)"};
}

// ---- 4. rotation law -------------------------------------------------------------------

Outcome rotation_law() {
  constexpr double kAntipodal = 5.0, kBudget = 120.0;
  Timer t;
  psf::StackOptions opt;
  opt.K = 63;
  opt.warn_on_crop_loss = false;
  const auto psis = psf::linspace(-20, 20, 9);
  const std::size_t ref = 1;  // reference-wavelength channel
  std::map<int, double> slope;
  std::map<int, bool> mono;
  std::ostringstream os;
  for (int L : {2, 5, 10}) {
    const auto st = psf::build_stack(spec_of(1, L, 0.9), camera(), psis, opt);
    const auto tr = psf::peak_angles(st, ref);
    bool inc = true, dec = true;
    for (std::size_t i = 1; i < tr.unwrapped.size(); ++i) {
      inc = inc && tr.unwrapped[i] > tr.unwrapped[i - 1];
      dec = dec && tr.unwrapped[i] < tr.unwrapped[i - 1];
    }
    mono[L] = inc || dec;
    slope[L] = psf::rotation_rate(tr);
    os << "L=" << L << " slope " << num(slope[L]) << (mono[L] ? " monotone" : " NOT monotone") << "; ";
  }
  const bool ordered = std::abs(slope[10]) < std::abs(slope[5]) && std::abs(slope[5]) < std::abs(slope[2]);
  const auto st2 = psf::build_stack(spec_of(2, 5, 0.9), camera(), psis, opt);
  double worst = 0.0;
  for (const auto& [a, b] : psf::lobe_pairs(st2, ref)) {
    double d = std::remainder(a - b, 2 * std::numbers::pi);
    worst = std::max(worst, std::abs(180.0 - std::abs(d) * 180.0 / std::numbers::pi));
  }
  const double secs = t.seconds();
  os << "|slope| ordering " << (ordered ? "holds" : "violated") << "; N=2 antipodal error " << num(worst, 3)
     << " deg (< 5), " << num(secs, 3) << " s (< 120 s)";
  return {mono[2] && mono[5] && mono[10] && ordered && worst < kAntipodal && secs < kBudget, os.str()};
}

// ---- 5. in-focus blur ----------------------------------------------------------------------

Outcome in_focus_blur() {
  constexpr double kPeak = 0.9;
  psf::StackOptions opt;
  opt.warn_on_crop_loss = false;
  const auto& wl = camera().wavelengths;
  double masked = 0.0;
  for (double n : {1.0, 2.0, 3.0})
    for (int L : {2, 5, 7})
      for (double eps : {0.5, 0.9})
        for (double w : wl) masked = std::max(masked, max_value(psf::render_kernel(spec_of(n, L, eps), 0.0, w, opt)));
  opt.clear_aperture = true;
  double clear = 1.0;
  for (double w : wl) clear = std::min(clear, max_value(psf::render_kernel(mask::MaskSpec{}, 0.0, w, opt)));
  return {masked < kPeak && clear > masked,
          "max masked peak " + num(masked) + " (< 0.9), min clear-aperture peak " + num(clear)};
}

// ---- 6. layered-rendering oracle -----------------------------------------------------------

// Direct spatial sum of M_d . (x * k_d) with the reflect-101 boundary.
Image render_direct(const scene::LayeredScene& sc, const psf::PsfStack& st) {
  const std::size_t H = sc.aif.rows(), W = sc.aif.cols(), C = st.channels();
  const auto h = std::ptrdiff_t(st.K / 2);
  Image out(H, W, C);
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t r = 0; r < H; ++r)
      for (std::size_t q = 0; q < W; ++q) {
        const auto& k = st.at(std::size_t(sc.plane_index(r, q)), c);
        double acc = 0.0;
        for (std::ptrdiff_t u = -h; u <= h; ++u)
          for (std::ptrdiff_t v = -h; v <= h; ++v) {
            const auto rr = reflect_index(std::ptrdiff_t(r) - u, std::ptrdiff_t(H));
            const auto cc = reflect_index(std::ptrdiff_t(q) - v, std::ptrdiff_t(W));
            acc += k(std::size_t(u + h), std::size_t(v + h)) * sc.aif.channel(c)(rr, cc);
          }
        out.channel(c)(r, q) = std::max(acc, 0.0);
      }
  return out;
}

Outcome layered_rendering() {
  constexpr double kDirect = 1e-9, kConst = 1e-6;
  psf::StackOptions opt;
  opt.K = 15;
  opt.warn_on_crop_loss = false;
  const auto st = psf::build_stack(spec_of(1, 5, 0.9), camera(), {-8.0, 6.0}, opt);
  double direct = 0.0, constant = 0.0;
  bool partition = true;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    auto sc = synthetic::textured_quadrants(32, 2, seed);
    synthetic::Stream rng(seed, 3);
    for (std::size_t r = 0; r < 32; ++r)
      for (std::size_t c = 0; c < 32; ++c) {
        sc.plane_index(r, c) = rng.uniform() < 0.5 ? 0 : 1;
        for (std::size_t ch = 0; ch < 3; ++ch) sc.aif(r, c, ch) = rng.uniform();
      }
    direct = std::max(direct, max_abs_diff(scene::render(sc, st), render_direct(sc, st)));
    const auto masks = sc.masks();
    for (std::size_t p = 0; p < 32 * 32; ++p) partition = partition && (masks[0].values()[p] + masks[1].values()[p] == 1);
    for (int d : {0, 1}) {
      auto flat = sc;
      for (auto& v : flat.plane_index.values()) v = d;
      const Image a = scene::render(flat, st);
      for (std::size_t ch = 0; ch < 3; ++ch) {
        RealGrid b = convolve_reflect(sc.aif.channel(ch), st.at(std::size_t(d), ch));
        for (auto& v : b.values()) v = std::max(v, 0.0);
        constant = std::max(constant, max_abs_diff(a.channel(ch), b));
      }
    }
  }
  return {direct < kDirect && constant < kConst && partition,
          "FFT vs direct " + num(direct) + " (< 1e-9), constant depth vs full-frame " + num(constant) +
              " (< 1e-6), mask partition " + (partition ? "exact" : "broken")};
}

// ---- 7. sensor statistics ----------------------------------------------------------------------

Outcome sensor_statistics() {
  constexpr double kSigma = 0.01, kSigmaTol = 0.05, kQuant = 1.0 / 510.0, kPsnr = 30.0;
  sensor::SensorConfig cfg;
  cfg.read_sigma = kSigma;
  cfg.photon_scale = std::numeric_limits<double>::infinity();
  cfg.seed = 99;
  const RealGrid flat(1000, 1000, 0.5);
  const RealGrid noisy = sensor::add_noise_unclamped(flat, cfg);
  double m = 0, s2 = 0;
  for (double v : noisy.values()) m += v;
  m /= double(noisy.size());
  for (double v : noisy.values()) s2 += (v - m) * (v - m);
  const double sd = std::sqrt(s2 / double(noisy.size() - 1));

  synthetic::Stream rng(5, 1);
  RealGrid x(256, 256);
  for (auto& v : x.values()) v = rng.uniform();
  const RealGrid q = sensor::quantize(x, 8);
  const bool idempotent = sensor::quantize(q, 8) == q;
  const double qerr = max_abs_diff(q, x);

  double const_err = 0.0;
  for (auto cfa : {sensor::Cfa::RGGB, sensor::Cfa::BGGR, sensor::Cfa::GRBG, sensor::Cfa::GBRG}) {
    Image c(32, 32, 3);
    for (std::size_t ch = 0; ch < 3; ++ch)
      for (auto& v : c.channel(ch).values()) v = 0.2 + 0.3 * double(ch);
    const_err = std::max(const_err, max_abs_diff(sensor::demosaic(sensor::mosaic(c, cfa), cfa), c));
  }
  const Image nat = natural_image();
  const double pr = restore::psnr(sensor::demosaic(sensor::mosaic(nat)), nat);

  const bool ok = std::abs(sd - kSigma) <= kSigmaTol * kSigma && idempotent && qerr <= kQuant + 1e-15 &&
                  const_err < 1e-12 && pr > kPsnr;
  return {ok, "read-noise std " + num(sd, 5) + " (0.01 +- 5%), quantize idempotent " +
                  (idempotent ? "yes" : "no") + " max error " + num(qerr) + " (<= 1/510), demosaic constant error " +
                  num(const_err) + ", natural round trip " + num(pr) + " dB (> 30)"};
}

// ---- 8. Wiener recovery ------------------------------------------------------------------------

Image box_down(const Image& img, std::size_t f) {
  Image out(img.rows() / f, img.cols() / f, img.channels());
  for (std::size_t c = 0; c < img.channels(); ++c)
    for (std::size_t r = 0; r < out.rows(); ++r)
      for (std::size_t q = 0; q < out.cols(); ++q) {
        double acc = 0;
        for (std::size_t i = 0; i < f; ++i)
          for (std::size_t j = 0; j < f; ++j) acc += img.channel(c)(r * f + i, q * f + j);
        out.channel(c)(r, q) = acc / double(f * f);
      }
  return out;
}

Outcome wiener_recovery() {
  constexpr double kCyclic = 40.0, kLayered = 35.0;
  const Image truth = box_down(natural_image(), 4);
  // well conditioned: |H| >= 0.2 everywhere
  RealGrid k(3, 3);
  k(1, 1) = 0.6;
  k(0, 1) = k(2, 1) = k(1, 0) = k(1, 2) = 0.1;
  std::vector<RealGrid> blurred;
  for (std::size_t c = 0; c < 3; ++c) blurred.push_back(convolve_circular(truth.channel(c), k));
  const double p_cyc = restore::psnr(restore::wiener_deconv(Image(blurred), k, 0.0), truth);

  psf::StackOptions opt;
  opt.warn_on_crop_loss = false;
  const auto st = psf::build_stack(mask::MaskSpec{}, camera(), psf::linspace(-20, 20, 10), opt);
  restore::WienerConfig cfg;
  cfg.nsr = 1e-6;
  cfg.taper_width = 0;  // circular blur: no boundary to taper
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t d = 0; d < st.planes(); ++d) {
    scene::LayeredScene sc{truth, scene::IndexMap(64, 64, int(d)), st.planes()};
    const Image coded = scene::render_circular(sc, st);
    worst = std::min(worst, restore::psnr(restore::restore_layered(coded, st, sc.masks(), cfg), truth));
  }
  return {p_cyc > kCyclic && worst > kLayered,
          "cyclic nsr=0 " + num(p_cyc) + " dB (> 40), layered constant-depth worst plane " + num(worst) +
              " dB (> 35)"};
}

// ---- 9. classical depth estimation --------------------------------------------------------------

Outcome depth_estimation() {
  constexpr double kClean = 0.99, kSensed = 0.85, kBudget = 300.0;
  constexpr std::size_t kSize = 192, kWindow = 25;
  Timer t;
  psf::StackOptions opt;
  opt.warn_on_crop_loss = false;
  const auto st = psf::build_stack(mask::MaskSpec{}, camera(), psf::linspace(-20, 20, 10), opt);
  depth::DepthConfig dc;
  dc.window = kWindow;
  sensor::SensorConfig sc;
  sc.read_sigma = 0.01;
  sc.adc_bits = 8;
  sc.photon_scale = 1000;
  std::size_t n = 0, hit_clean = 0, hit_sensed = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto scn = synthetic::textured_quadrants(kSize, st.planes(), seed);
    const Image coded = scene::render(scn, st);
    sc.seed = sensor::derive_seed(seed, "sense");
    const Image sensed = sensor::simulate(coded, sc).rgb;
    const auto inner = depth::interior_mask(scn.plane_index, dc.window + st.K);
    const auto a = depth::estimate(coded, st, dc).plane_index;
    const auto b = depth::estimate(sensed, st, dc).plane_index;
    for (std::size_t p = 0; p < inner.size(); ++p) {
      if (!inner.values()[p]) continue;
      ++n;
      hit_clean += a.values()[p] == scn.plane_index.values()[p];
      hit_sensed += b.values()[p] == scn.plane_index.values()[p];
    }
  }
  const double secs = t.seconds();
  const double ac = double(hit_clean) / double(n), as = double(hit_sensed) / double(n);
  return {n > 0 && ac >= kClean && as >= kSensed && secs < kBudget,
          "interior accuracy noise-free " + num(ac) + " (>= 0.99), sensor pipeline " + num(as) + " (>= 0.85) over " +
              std::to_string(n) + " pixels, window 25, " + num(secs, 3) + " s (< 300 s)"};
}

// ---- 10. mask optimisation ---------------------------------------------------------------------------

Outcome mask_optimization() {
  constexpr double kEpsFinal = 0.5, kBudget = 600.0;
  Timer t;
  auto s0 = spec_of(1.0, 5, 0.1);
  opt::OptimizeConfig cfg;
  const auto traj = opt::optimize(s0, camera(), cfg, nullptr);
  bool monotone = true, feasible = true;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const auto& s = traj[i].spec;
    feasible = feasible && s.epsilon > 0 && s.epsilon <= 1 && s.n_peaks >= 1 && s.n_peaks <= 4;
    if (i) monotone = monotone && traj[i].J >= traj[i - 1].J;
  }
  const bool bounded = int(traj.size()) <= cfg.iters + 1;
  const double eps = traj.back().spec.epsilon;
  const double secs = t.seconds();
  return {monotone && feasible && bounded && eps > kEpsFinal && secs < kBudget,
          "objective " + num(traj.front().J) + " -> " + num(traj.back().J) + (monotone ? " non-decreasing" : " DECREASED") +
              ", " + std::to_string(traj.size() - 1) + " steps, final N " + num(traj.back().spec.n_peaks) +
              " eps " + num(eps) + " (> 0.5), " + num(secs, 3) + " s (< 600 s)"};
}

// ---- 11. determinism ---------------------------------------------------------------------------------

std::map<std::string, std::string> checksums(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = io::sha256_file(e.path());
  return out;
}

Outcome determinism() {
  const fs::path tmp = fs::temp_directory_path() / ("rpsf_accept_" + std::to_string(::getpid()));
  fs::remove_all(tmp);
  fs::create_directories(tmp);
  io::atomic_write(tmp / "pipeline.json", std::string(R"({"seed": 1234, "scene": {"size": 96}})"));
  std::vector<std::map<std::string, std::string>> runs;
  for (const char* name : {"a", "b"}) {
    const std::string cmd = "\"" + g_cli + "\" run-all --config \"" + (tmp / "pipeline.json").string() + "\" --out \"" +
                            (tmp / name).string() + "\" > /dev/null 2>&1";
    if (std::system(cmd.c_str()) != 0) {
      fs::remove_all(tmp);
      return {false, "pipeline run failed: " + cmd};
    }
    runs.push_back(checksums(tmp / name));
  }
  fs::remove_all(tmp);
  std::size_t differ = 0;
  for (const auto& [k, v] : runs[0]) differ += !runs[1].count(k) || runs[1].at(k) != v;
  differ += runs[1].size() > runs[0].size() ? runs[1].size() - runs[0].size() : 0;
  return {differ == 0 && !runs[0].empty(),
          std::to_string(runs[0].size()) + " artifacts, " + std::to_string(differ) + " differ between runs"};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--only" && i + 1 < argc) only.insert(std::atoi(argv[++i]));
    else if (a == "--cli" && i + 1 < argc) g_cli = argv[++i];
    else if (a == "--data" && i + 1 < argc) g_data = argv[++i];
    else {
      std::cerr << "usage: rpsf_acceptance [--only N]... [--cli PATH] [--data DIR]\n";
      return 64;
    }
  }
  set_warning_handler([](const std::string&) {});
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"phase-profile fidelity", phase_profile_fidelity},
      {"gradient correctness", gradient_correctness},
      {"PSF contracts", psf_contracts},
      {"rotation law", rotation_law},
      {"in-focus blur", in_focus_blur},
      {"layered-rendering oracle", layered_rendering},
      {"sensor statistics", sensor_statistics},
      {"Wiener recovery", wiener_recovery},
      {"classical depth estimation", depth_estimation},
      {"mask optimisation", mask_optimization},
      {"determinism", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = int(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("criterion %2d %s: %s | %s\n", id, o.pass ? "PASS" : "FAIL", criteria[i].first.c_str(),
                o.detail.c_str());
    std::fflush(stdout);
  }
  return failed;
}
