#pragma once

#include <openssl/evp.h>
#include <png.h>
#include <unistd.h>

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "rpsf/errors.hpp"
#include "rpsf/grid.hpp"

namespace rpsf::io {

namespace fs = std::filesystem;
using Bytes = std::vector<unsigned char>;

static_assert(std::endian::native == std::endian::little, "PFM/RPSF writers assume a little-endian host");

inline Bytes read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot open '" + p.string() + "'");
  return Bytes(std::istreambuf_iterator<char>(in), {});
}

// Write to a sibling temp file, then rename over the target.
inline void atomic_write(const fs::path& p, const Bytes& data) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  fs::path tmp = p;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + tmp.string() + "'");
    out.write(reinterpret_cast<const char*>(data.data()), std::streamsize(data.size()));
    if (!out) throw IoError("short write to '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, p, ec);
  if (ec) {
    fs::remove(tmp);
    throw IoError("cannot rename onto '" + p.string() + "': " + ec.message());
  }
}

inline void atomic_write(const fs::path& p, const std::string& text) {
  atomic_write(p, Bytes(text.begin(), text.end()));
}

inline std::string sha256_hex(const Bytes& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx, data.data(), data.size()) != 1 || EVP_DigestFinal_ex(ctx, md, &len) != 1) {
    EVP_MD_CTX_free(ctx);
    throw Error("sha256 failed");
  }
  EVP_MD_CTX_free(ctx);
  std::ostringstream os;
  for (unsigned i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
  return os.str();
}

inline std::string sha256_hex(const std::string& s) { return sha256_hex(Bytes(s.begin(), s.end())); }

inline std::string sha256_file(const fs::path& p) { return sha256_hex(read_file(p)); }

// ---- PFM ------------------------------------------------------------------

// 1 or 3 channels, little-endian float32, rows stored bottom to top.
inline Bytes encode_pfm(const Image& img) {
  if (img.channels() != 1 && img.channels() != 3) throw DimensionError("PFM holds 1 or 3 channels");
  std::string header = std::string(img.channels() == 3 ? "PF" : "Pf") + "\n" + std::to_string(img.cols()) + " " +
                       std::to_string(img.rows()) + "\n-1.0\n";
  Bytes out(header.begin(), header.end());
  const std::size_t C = img.channels();
  out.reserve(out.size() + img.rows() * img.cols() * C * 4);
  for (std::size_t rr = img.rows(); rr-- > 0;)
    for (std::size_t c = 0; c < img.cols(); ++c)
      for (std::size_t ch = 0; ch < C; ++ch) {
        const float f = float(img(rr, c, ch));
        unsigned char b[4];
        std::memcpy(b, &f, 4);
        out.insert(out.end(), b, b + 4);
      }
  return out;
}

inline Bytes encode_pfm(const RealGrid& g) { return encode_pfm(Image(std::vector<RealGrid>{g})); }

inline Image decode_pfm(const Bytes& data, const std::string& name = "<pfm>") {
  std::size_t pos = 0;
  auto token = [&]() {
    while (pos < data.size() && std::isspace(data[pos])) ++pos;
    std::string t;
    while (pos < data.size() && !std::isspace(data[pos])) t += char(data[pos++]);
    return t;
  };
  const std::string magic = token();
  std::size_t C;
  if (magic == "PF") C = 3;
  else if (magic == "Pf") C = 1;
  else throw IoError(name + ": not a PFM file");
  std::size_t W, H;
  double scale;
  try {
    W = std::stoul(token());
    H = std::stoul(token());
    scale = std::stod(token());
  } catch (const std::exception&) {
    throw IoError(name + ": malformed PFM header");
  }
  ++pos;  // single whitespace byte after the scale
  if (data.size() < pos + W * H * C * 4) throw IoError(name + ": truncated PFM payload");
  const bool little = scale < 0;
  Image img(H, W, C);
  for (std::size_t rr = H; rr-- > 0;)
    for (std::size_t c = 0; c < W; ++c)
      for (std::size_t ch = 0; ch < C; ++ch) {
        unsigned char b[4];
        std::memcpy(b, &data[pos], 4);
        pos += 4;
        if (!little) std::swap(b[0], b[3]), std::swap(b[1], b[2]);
        float f;
        std::memcpy(&f, b, 4);
        img(rr, c, ch) = double(f);
      }
  return img;
}

inline void write_pfm(const fs::path& p, const Image& img) { atomic_write(p, encode_pfm(img)); }
inline void write_pfm(const fs::path& p, const RealGrid& g) { atomic_write(p, encode_pfm(g)); }
inline Image read_pfm(const fs::path& p) { return decode_pfm(read_file(p), p.string()); }

// ---- PNG ------------------------------------------------------------------

namespace detail {
inline void png_error_fn(png_structp, png_const_charp msg) { throw IoError(std::string("libpng: ") + msg); }
inline void png_warn_fn(png_structp, png_const_charp) {}
inline void png_write_fn(png_structp png, png_bytep data, png_size_t len) {
  auto* out = static_cast<Bytes*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + len);
}
struct ReadCursor {
  const Bytes* data;
  std::size_t pos;
};
inline void png_read_fn(png_structp png, png_bytep out, png_size_t len) {
  auto* cur = static_cast<ReadCursor*>(png_get_io_ptr(png));
  if (cur->pos + len > cur->data->size()) png_error(png, "truncated PNG");
  std::memcpy(out, cur->data->data() + cur->pos, len);
  cur->pos += len;
}
}  // namespace detail

// Values in [0,1] are clamped and rounded to the nearest code.
inline Bytes encode_png(const Image& img, int bits) {
  if (bits != 8 && bits != 16) throw ConfigError("PNG depth must be 8 or 16", "/png_bits");
  if (img.channels() != 1 && img.channels() != 3) throw DimensionError("PNG writer takes 1 or 3 channels");
  Bytes out;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, detail::png_error_fn, detail::png_warn_fn);
  png_infop info = png_create_info_struct(png);
  const std::size_t C = img.channels(), W = img.cols(), bpp = bits / 8;
  std::vector<unsigned char> row(W * C * bpp);
  try {
    png_set_write_fn(png, &out, detail::png_write_fn, nullptr);
    png_set_IHDR(png, info, png_uint_32(W), png_uint_32(img.rows()), bits,
                 C == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    const double maxv = bits == 8 ? 255.0 : 65535.0;
    for (std::size_t r = 0; r < img.rows(); ++r) {
      for (std::size_t c = 0; c < W; ++c)
        for (std::size_t ch = 0; ch < C; ++ch) {
          const double v = img(r, c, ch);
          const auto q = unsigned(std::lround(std::clamp(std::isfinite(v) ? v : 0.0, 0.0, 1.0) * maxv));
          const std::size_t o = (c * C + ch) * bpp;
          if (bits == 8) row[o] = static_cast<unsigned char>(q);
          else row[o] = static_cast<unsigned char>(q >> 8), row[o + 1] = static_cast<unsigned char>(q & 0xff);
        }
      png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
  } catch (...) {
    png_destroy_write_struct(&png, &info);
    throw;
  }
  png_destroy_write_struct(&png, &info);
  return out;
}

// Integer codes (e.g. plane indices) written verbatim as 16-bit grey.
inline Bytes encode_png16_codes(const Grid<int>& codes) {
  Image img(codes.rows(), codes.cols(), 1);
  for (std::size_t i = 0; i < codes.size(); ++i) {
    const int v = codes.values()[i];
    if (v < 0 || v > 65535) throw DomainError("PNG16 code out of range");
    img.channel(0).values()[i] = double(v) / 65535.0;
  }
  return encode_png(img, 16);
}

struct PngImage {
  Image image;  // values scaled to [0,1]
  int bits = 8;
};

inline PngImage decode_png(const Bytes& data, const std::string& name = "<png>") {
  if (data.size() < 8 || png_sig_cmp(data.data(), 0, 8)) throw IoError(name + ": not a PNG file");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, detail::png_error_fn, detail::png_warn_fn);
  png_infop info = png_create_info_struct(png);
  detail::ReadCursor cur{&data, 0};
  PngImage out;
  try {
    png_set_read_fn(png, &cur, detail::png_read_fn);
    png_read_info(png, info);
    const int color = png_get_color_type(png, info);
    int bits = png_get_bit_depth(png, info);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && bits < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png), png_set_strip_alpha(png);
    if (bits == 16) png_set_swap(png);  // host order
    png_read_update_info(png, info);
    const std::size_t W = png_get_image_width(png, info), H = png_get_image_height(png, info);
    const std::size_t C = png_get_channels(png, info);
    bits = png_get_bit_depth(png, info);
    std::vector<unsigned char> buf(png_get_rowbytes(png, info) * H);
    std::vector<png_bytep> rows(H);
    for (std::size_t r = 0; r < H; ++r) rows[r] = buf.data() + r * png_get_rowbytes(png, info);
    png_read_image(png, rows.data());
    out.bits = bits;
    out.image = Image(H, W, C);
    const double maxv = bits == 16 ? 65535.0 : 255.0;
    for (std::size_t r = 0; r < H; ++r)
      for (std::size_t c = 0; c < W; ++c)
        for (std::size_t ch = 0; ch < C; ++ch) {
          double v;
          if (bits == 16) {
            std::uint16_t s;
            std::memcpy(&s, rows[r] + (c * C + ch) * 2, 2);
            v = s;
          } else {
            v = rows[r][c * C + ch];
          }
          out.image(r, c, ch) = v / maxv;
        }
  } catch (...) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw;
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return out;
}

inline void write_png(const fs::path& p, const Image& img, int bits = 8) { atomic_write(p, encode_png(img, bits)); }
inline PngImage read_png(const fs::path& p) { return decode_png(read_file(p), p.string()); }

// PFM or PNG chosen by extension.
inline Image read_image(const fs::path& p) {
  if (!fs::exists(p)) throw IoError("missing input '" + p.string() + "'");
  const auto ext = p.extension().string();
  if (ext == ".pfm") return read_pfm(p);
  if (ext == ".png") return read_png(p).image;
  throw IoError("unsupported image format '" + ext + "' (use .pfm or .png)");
}

}  // namespace rpsf::io
