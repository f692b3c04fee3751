#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>

#include "rpsf/errors.hpp"
#include "rpsf/grid.hpp"
#include "rpsf/parallel.hpp"

namespace rpsf::sensor {

// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter generate(Counter ctr, Key key) {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += 0x9E3779B9u;
        key[1] += 0xBB67AE85u;
      }
      const std::uint64_t p0 = std::uint64_t(0xD2511F53u) * ctr[0];
      const std::uint64_t p1 = std::uint64_t(0xCD9E8D57u) * ctr[2];
      ctr = {std::uint32_t(p1 >> 32) ^ ctr[1] ^ key[0], std::uint32_t(p1),
             std::uint32_t(p0 >> 32) ^ ctr[3] ^ key[1], std::uint32_t(p0)};
    }
    return ctr;
  }

  static Key key_from_seed(std::uint64_t seed) { return {std::uint32_t(seed), std::uint32_t(seed >> 32)}; }

  // Two independent standard normals from one block (Box-Muller on 53-bit uniforms).
  static std::pair<double, double> normals(Counter ctr, Key key) {
    const Counter b = generate(ctr, key);
    auto uniform = [](std::uint32_t hi, std::uint32_t lo) {
      const std::uint64_t bits = (std::uint64_t(hi) << 21) ^ (std::uint64_t(lo) >> 11);
      return (double(bits & ((std::uint64_t(1) << 53) - 1)) + 0.5) * 0x1p-53;  // (0, 1)
    };
    const double u1 = uniform(b[0], b[1]);
    const double u2 = uniform(b[2], b[3]);
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 2.0 * std::numbers::pi * u2;
    return {r * std::cos(t), r * std::sin(t)};
  }
};

// FNV-1a, used to turn a stage name into a seed offset.
inline std::uint64_t hash_name(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::uint64_t derive_seed(std::uint64_t seed, const std::string& stage) {
  const auto key = Philox4x32::key_from_seed(seed);
  const std::uint64_t h = hash_name(stage);
  const auto b = Philox4x32::generate({std::uint32_t(h), std::uint32_t(h >> 32), 0x5eed, 0}, key);
  return (std::uint64_t(b[0]) << 32) | b[1];
}

enum class Cfa { RGGB, BGGR, GRBG, GBRG };

// Channel index (0 R, 1 G, 2 B) sampled at (row, col).
inline int cfa_channel(Cfa cfa, std::size_t row, std::size_t col) {
  static constexpr int pats[4][2][2] = {
      {{0, 1}, {1, 2}}, {{2, 1}, {1, 0}}, {{1, 0}, {2, 1}}, {{1, 2}, {0, 1}}};
  return pats[int(cfa)][row % 2][col % 2];
}

inline std::string to_string(Cfa c) {
  switch (c) {
    case Cfa::RGGB: return "RGGB";
    case Cfa::BGGR: return "BGGR";
    case Cfa::GRBG: return "GRBG";
    case Cfa::GBRG: return "GBRG";
  }
  return "RGGB";
}

inline Cfa cfa_from_string(const std::string& s) {
  if (s == "RGGB") return Cfa::RGGB;
  if (s == "BGGR") return Cfa::BGGR;
  if (s == "GRBG") return Cfa::GRBG;
  if (s == "GBRG") return Cfa::GBRG;
  throw ConfigError("unknown CFA pattern '" + s + "'", "/cfa");
}

struct SensorConfig {
  Cfa cfa = Cfa::RGGB;
  double read_sigma = 0.01;
  double photon_scale = 1000.0;  // +inf disables shot noise
  int adc_bits = 8;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(read_sigma >= 0.0) || !std::isfinite(read_sigma)) throw ConfigError("must be >= 0", "/read_sigma");
    if (!(photon_scale > 0.0)) throw ConfigError("must be > 0", "/photon_scale");
    if (adc_bits < 1 || adc_bits > 16) throw ConfigError("must be in [1, 16]", "/adc_bits");
  }
};

inline RealGrid mosaic(const Image& img, Cfa cfa = Cfa::RGGB) {
  if (img.channels() != 3) throw DimensionError("mosaic: need a 3-channel image");
  if (img.rows() % 2 || img.cols() % 2) throw DimensionError("mosaic: image sides must be even");
  RealGrid m(img.rows(), img.cols());
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) m(r, c) = img(r, c, std::size_t(cfa_channel(cfa, r, c)));
  return m;
}

// Shot + read noise without the final clamp. Per-pixel draws depend only on
// (seed, col, row, CFA channel), never on evaluation order.
inline RealGrid add_noise_unclamped(const RealGrid& m, const SensorConfig& cfg) {
  cfg.validate();
  const auto key = Philox4x32::key_from_seed(cfg.seed);
  const bool shot = std::isfinite(cfg.photon_scale);
  RealGrid out(m.rows(), m.cols());
  parallel_for(m.rows(), [&](std::size_t r) {
    for (std::size_t c = 0; c < m.cols(); ++c) {
      const double v = m(r, c);
      const auto [z1, z2] = Philox4x32::normals(
          {std::uint32_t(c), std::uint32_t(r), std::uint32_t(cfa_channel(cfg.cfa, r, c)), 0u}, key);
      double x = v + cfg.read_sigma * z2;
      if (shot) x += std::sqrt(std::max(v, 0.0) / cfg.photon_scale) * z1;
      out(r, c) = x;
    }
  });
  return out;
}

inline RealGrid add_noise(const RealGrid& m, const SensorConfig& cfg) {
  RealGrid out = add_noise_unclamped(m, cfg);
  for (auto& v : out.values()) v = std::clamp(v, 0.0, 1.0);
  return out;
}

inline RealGrid quantize(const RealGrid& x, int bits) {
  if (bits < 1 || bits > 16) throw ConfigError("must be in [1, 16]", "/adc_bits");
  const double levels = double((1u << bits) - 1u);
  RealGrid out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i)
    out.values()[i] = std::round(std::clamp(x.values()[i], 0.0, 1.0) * levels) / levels;
  return out;
}

namespace detail {
// Malvar-He-Cutler 5x5 filters, all scaled by 1/8.
inline constexpr double g_at_rb[5][5] = {
    {0, 0, -1, 0, 0}, {0, 0, 2, 0, 0}, {-1, 2, 4, 2, -1}, {0, 0, 2, 0, 0}, {0, 0, -1, 0, 0}};
// chroma at a green site whose row holds that chroma
inline constexpr double rb_at_g_row[5][5] = {
    {0, 0, 0.5, 0, 0}, {0, -1, 0, -1, 0}, {-1, 4, 5, 4, -1}, {0, -1, 0, -1, 0}, {0, 0, 0.5, 0, 0}};
inline constexpr double rb_at_g_col[5][5] = {
    {0, 0, -1, 0, 0}, {0, -1, 4, -1, 0}, {0.5, 0, 5, 0, 0.5}, {0, -1, 4, -1, 0}, {0, 0, -1, 0, 0}};
inline constexpr double rb_at_br[5][5] = {
    {0, 0, -1.5, 0, 0}, {0, 2, 0, 2, 0}, {-1.5, 0, 6, 0, -1.5}, {0, 2, 0, 2, 0}, {0, 0, -1.5, 0, 0}};
}  // namespace detail

inline Image demosaic(const RealGrid& m, Cfa cfa = Cfa::RGGB) {
  if (m.rows() % 2 || m.cols() % 2) throw DimensionError("demosaic: sides must be even");
  if (m.rows() < 6 || m.cols() < 6) throw DimensionError("demosaic: image smaller than the 5x5 filter support");
  const auto H = std::ptrdiff_t(m.rows()), W = std::ptrdiff_t(m.cols());
  Image out(m.rows(), m.cols(), 3);
  auto apply = [&](const double (&k)[5][5], std::ptrdiff_t r, std::ptrdiff_t c) {
    double acc = 0.0;
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 5; ++j)
        if (k[i][j] != 0.0) acc += k[i][j] * m(reflect_index(r + i - 2, H), reflect_index(c + j - 2, W));
    return acc / 8.0;
  };
  parallel_for(m.rows(), [&](std::size_t ru) {
    const auto r = std::ptrdiff_t(ru);
    for (std::ptrdiff_t c = 0; c < W; ++c) {
      const int site = cfa_channel(cfa, ru, std::size_t(c));
      for (int ch = 0; ch < 3; ++ch) {
        double v;
        if (ch == site) {
          v = m(ru, std::size_t(c));
        } else if (ch == 1) {
          v = apply(detail::g_at_rb, r, c);
        } else if (site == 1) {
          const bool in_row = cfa_channel(cfa, ru, std::size_t(c) + 1) == ch;
          v = apply(in_row ? detail::rb_at_g_row : detail::rb_at_g_col, r, c);
        } else {
          v = apply(detail::rb_at_br, r, c);
        }
        out(ru, std::size_t(c), std::size_t(ch)) = std::clamp(v, 0.0, 1.0);
      }
    }
  });
  return out;
}

struct SensorOutput {
  RealGrid mosaic;       // clean CFA samples
  RealGrid noisy;        // after noise and clamping, before the ADC
  RealGrid quantized;
  Image rgb;             // demosaiced result
};

// mosaic -> noise -> quantise -> demosaic
inline SensorOutput simulate(const Image& img, const SensorConfig& cfg) {
  cfg.validate();
  SensorOutput o;
  o.mosaic = mosaic(img, cfg.cfa);
  o.noisy = add_noise(o.mosaic, cfg);
  o.quantized = quantize(o.noisy, cfg.adc_bits);
  o.rgb = demosaic(o.quantized, cfg.cfa);
  return o;
}

}  // namespace rpsf::sensor
