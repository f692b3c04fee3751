#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <map>
#include <string>

#include "json.hpp"
#include "rpsf/errors.hpp"
#include "rpsf/io.hpp"
#include "rpsf/psf_stack.hpp"

namespace rpsf::io {

inline std::string kernel_file_name(std::size_t d, std::size_t c) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "kernel_d%02zu_c%zu.pfm", d, c);
  return buf;
}

// Kernels come back from float32 storage; renormalise in double so the
// unit-mass contract holds again.
inline void renormalize(psf::PsfStack& s) {
  for (auto& k : s.kernels) {
    for (auto& v : k.values()) v = std::max(v, 0.0);
    const double m = sum(k);
    if (!(m > 0)) throw IoError("stack: kernel with zero mass");
    for (auto& v : k.values()) v /= m;
  }
}

// Directory of PFM kernels plus manifest.json {psis, wavelengths, K, files}.
// Returns the written file names (relative to dir).
inline std::vector<std::string> save_stack_dir(const fs::path& dir, const psf::PsfStack& s) {
  s.validate_kernels();
  nlohmann::json files = nlohmann::json::array();
  std::vector<std::string> names;
  for (std::size_t d = 0; d < s.planes(); ++d) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t c = 0; c < s.channels(); ++c) {
      const auto name = kernel_file_name(d, c);
      write_pfm(dir / name, s.at(d, c));
      row.push_back(name);
      names.push_back(name);
    }
    files.push_back(row);
  }
  nlohmann::json m{{"format", "rpsf-stack"}, {"version", 1}, {"psis", s.psis},
                   {"wavelengths", s.wavelengths}, {"K", s.K}, {"files", files}};
  atomic_write(dir / "stack.json", m.dump(2) + "\n");
  names.push_back("stack.json");
  return names;
}

inline psf::PsfStack load_stack_dir(const fs::path& manifest_path) {
  if (!fs::exists(manifest_path)) throw IoError("missing stack manifest '" + manifest_path.string() + "'");
  nlohmann::json m;
  try {
    m = nlohmann::json::parse(read_file(manifest_path));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what(), manifest_path.string());
  }
  const fs::path dir = manifest_path.parent_path();
  psf::PsfStack s;
  try {
    s.psis = m.at("psis").get<std::vector<double>>();
    s.wavelengths = m.at("wavelengths").get<std::vector<double>>();
    s.K = m.at("K").get<std::size_t>();
    const auto& files = m.at("files");
    if (files.size() != s.planes()) throw ConfigError("file table does not match psis", "/files");
    for (std::size_t d = 0; d < s.planes(); ++d) {
      if (files[d].size() != s.channels()) throw ConfigError("file table does not match wavelengths", "/files/" + std::to_string(d));
      for (std::size_t c = 0; c < s.channels(); ++c) {
        Image k = read_pfm(dir / files[d][c].get<std::string>());
        if (k.channels() != 1 || k.rows() != s.K || k.cols() != s.K) throw IoError("stack: kernel file has the wrong shape");
        s.kernels.push_back(k.channel(0));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad stack manifest: ") + e.what(), manifest_path.string());
  }
  renormalize(s);
  s.validate();
  return s;
}

// "RPSF" | u32 version=1 | u32 D, C, K | f64 psis[D] | f64 wavelengths[C] | f32 kernels[D][C][K][K]
inline Bytes encode_stack_binary(const psf::PsfStack& s) {
  s.validate_kernels();
  Bytes out{'R', 'P', 'S', 'F'};
  auto put = [&](const auto& v) {
    unsigned char b[sizeof v];
    std::memcpy(b, &v, sizeof v);
    out.insert(out.end(), b, b + sizeof v);
  };
  put(std::uint32_t(1));
  put(std::uint32_t(s.planes()));
  put(std::uint32_t(s.channels()));
  put(std::uint32_t(s.K));
  for (double v : s.psis) put(v);
  for (double v : s.wavelengths) put(v);
  for (const auto& k : s.kernels)
    for (double v : k.values()) put(float(v));
  return out;
}

inline psf::PsfStack decode_stack_binary(const Bytes& data, const std::string& name = "<rpsf>") {
  std::size_t pos = 0;
  auto take = [&](auto& v) {
    if (pos + sizeof v > data.size()) throw IoError(name + ": truncated RPSF container");
    std::memcpy(&v, data.data() + pos, sizeof v);
    pos += sizeof v;
  };
  char magic[4];
  take(magic);
  if (std::memcmp(magic, "RPSF", 4) != 0) throw IoError(name + ": bad magic (expected RPSF)");
  std::uint32_t version, D, C, K;
  take(version);
  if (version != 1) throw IoError(name + ": unsupported RPSF version " + std::to_string(version));
  take(D), take(C), take(K);
  if (K == 0 || K % 2 == 0 || D == 0 || C == 0) throw IoError(name + ": invalid dimensions");
  psf::PsfStack s;
  s.K = K;
  s.psis.resize(D);
  s.wavelengths.resize(C);
  for (auto& v : s.psis) take(v);
  for (auto& v : s.wavelengths) take(v);
  s.kernels.assign(std::size_t(D) * C, RealGrid(K, K));
  for (auto& k : s.kernels)
    for (auto& v : k.values()) {
      float f;
      take(f);
      v = f;
    }
  if (pos != data.size()) throw IoError(name + ": trailing bytes after payload");
  renormalize(s);
  s.validate();
  return s;
}

// Accepts the stack directory, its stack.json, or a binary .rpsf container.
inline psf::PsfStack load_stack(const fs::path& p) {
  if (!fs::exists(p)) throw IoError("missing stack '" + p.string() + "'");
  if (fs::is_directory(p)) {
    if (fs::exists(p / "stack.json")) return load_stack_dir(p / "stack.json");
    if (fs::exists(p / "stack.rpsf")) return decode_stack_binary(read_file(p / "stack.rpsf"), p.string());
    throw IoError("no stack.json or stack.rpsf in '" + p.string() + "'");
  }
  if (p.extension() == ".rpsf") return decode_stack_binary(read_file(p), p.string());
  return load_stack_dir(p);
}

}  // namespace rpsf::io
