#pragma once

#include <initializer_list>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "rpsf/depth.hpp"
#include "rpsf/errors.hpp"
#include "rpsf/optics.hpp"
#include "rpsf/optimize.hpp"
#include "rpsf/phase_mask.hpp"
#include "rpsf/psf_stack.hpp"
#include "rpsf/restore.hpp"
#include "rpsf/sensor.hpp"

namespace rpsf::config {

using json = nlohmann::json;

// Typed field access that reports failures with a JSON-pointer path.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError("expected an object", path_.empty() ? "/" : path_);
  }

  std::string path(const std::string& key) const { return path_ + "/" + key; }
  bool has(const std::string& key) const { return j_.contains(key) && !j_.at(key).is_null(); }
  const json& raw(const std::string& key) const { return j_.at(key); }

  template <class T>
  T get(const std::string& key, T fallback) const {
    return has(key) ? convert<T>(j_.at(key), path(key)) : fallback;
  }

  template <class T>
  T require(const std::string& key) const {
    if (!has(key)) throw ConfigError("required field missing", path(key));
    return convert<T>(j_.at(key), path(key));
  }

  Reader child(const std::string& key) const {
    if (!has(key)) throw ConfigError("required section missing", path(key));
    return Reader(j_.at(key), path(key));
  }

  void only(std::initializer_list<const char*> keys) const {
    std::set<std::string> allowed(keys.begin(), keys.end());
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!allowed.count(it.key())) throw ConfigError("unknown field", path(it.key()));
  }

  template <class T>
  static T convert(const json& v, const std::string& where) {
    try {
      if constexpr (std::is_same_v<T, double>) {
        if (!v.is_number()) throw ConfigError("expected a number", where);
      } else if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
        if (!v.is_number_integer() && !v.is_number_unsigned()) throw ConfigError("expected an integer", where);
      } else if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw ConfigError("expected true/false", where);
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw ConfigError("expected a string", where);
      }
      return v.get<T>();
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("wrong type: ") + e.what(), where);
    }
  }

 private:
  const json& j_;
  std::string path_;
};

inline std::vector<double> number_list(const json& v, const std::string& where) {
  if (!v.is_array()) throw ConfigError("expected an array of numbers", where);
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(Reader::convert<double>(v[i], where + "/" + std::to_string(i)));
  return out;
}

// Path prefixes in validate() messages are relative to the section; rebase them.
template <class Fn>
void rebased(const std::string& base, Fn&& fn) {
  try {
    fn();
  } catch (const ConfigError& e) {
    if (e.path().empty() || e.path().rfind(base, 0) == 0) throw;
    throw ConfigError(std::string(e.what()).substr(e.path().size() + 2), base + e.path());
  }
}

// ---- MaskSpec ---------------------------------------------------------------

inline json to_json(const mask::MaskSpec& s) {
  return json{{"n_peaks", s.n_peaks},         {"zones", s.zones},
              {"epsilon", s.epsilon},         {"radius_m", s.radius_m},
              {"lambda_ref_m", s.lambda_ref_m}, {"refractive_index", s.refractive_index},
              {"sharpness", s.sharpness}};
}

inline mask::MaskSpec mask_from_json(const json& j, const std::string& base = "") {
  Reader r(j, base);
  r.only({"n_peaks", "zones", "epsilon", "radius_m", "lambda_ref_m", "refractive_index", "sharpness"});
  mask::MaskSpec s;
  s.n_peaks = r.get("n_peaks", s.n_peaks);
  s.zones = r.get("zones", s.zones);
  s.epsilon = r.get("epsilon", s.epsilon);
  s.radius_m = r.get("radius_m", s.radius_m);
  s.lambda_ref_m = r.get("lambda_ref_m", s.lambda_ref_m);
  s.refractive_index = r.get("refractive_index", s.refractive_index);
  s.sharpness = r.get("sharpness", s.sharpness);
  rebased(base, [&] { s.validate(); });
  return s;
}

// ---- CameraConfig -----------------------------------------------------------

inline json to_json(const optics::CameraConfig& c) {
  return json{{"focal_length_m", c.focal_length},
              {"aperture_diameter_m", c.aperture_diameter},
              {"focus_distance_m", c.focus_distance},
              {"sensor_distance_m", c.sensor_distance},
              {"wavelengths_m", std::vector<double>(c.wavelengths.begin(), c.wavelengths.end())},
              {"refractive_index", c.refractive_index}};
}

inline optics::CameraConfig camera_from_json(const json& j, const std::string& base = "") {
  Reader r(j, base);
  r.only({"focal_length_m", "aperture_diameter_m", "focus_distance_m", "sensor_distance_m", "wavelengths_m",
          "refractive_index"});
  optics::CameraConfig d;
  const double f = r.get("focal_length_m", d.focal_length);
  const double a = r.get("aperture_diameter_m", d.aperture_diameter);
  const double z = r.get("focus_distance_m", d.focus_distance);
  const double n = r.get("refractive_index", d.refractive_index);
  std::array<double, 3> wl = d.wavelengths;
  if (r.has("wavelengths_m")) {
    auto v = number_list(r.raw("wavelengths_m"), r.path("wavelengths_m"));
    if (v.size() != 3) throw ConfigError("expected 3 wavelengths (R, G, B)", r.path("wavelengths_m"));
    std::copy(v.begin(), v.end(), wl.begin());
  }
  optics::CameraConfig c;
  rebased(base, [&] {
    if (!(f > 0)) throw ConfigError("must be > 0", "/focal_length_m");
    c = optics::CameraConfig::make(f, a, z, wl, n);
  });
  if (r.has("sensor_distance_m")) {
    const double zi = r.get("sensor_distance_m", 0.0);
    if (std::abs(zi - c.sensor_distance) > 1e-12 * c.sensor_distance)
      throw ConfigError("inconsistent with the thin-lens equation", r.path("sensor_distance_m"));
  }
  return c;
}

// ---- SensorConfig -----------------------------------------------------------

inline json to_json(const sensor::SensorConfig& s) {
  // null photon_scale: no shot noise (JSON has no infinity)
  const json photons = std::isfinite(s.photon_scale) ? json(s.photon_scale) : json(nullptr);
  return json{{"cfa", sensor::to_string(s.cfa)}, {"read_sigma", s.read_sigma}, {"photon_scale", photons},
              {"adc_bits", s.adc_bits},          {"seed", s.seed}};
}

inline sensor::SensorConfig sensor_from_json(const json& j, const std::string& base = "") {
  Reader r(j, base);
  r.only({"cfa", "read_sigma", "photon_scale", "adc_bits", "seed"});
  sensor::SensorConfig s;
  rebased(base, [&] { s.cfa = sensor::cfa_from_string(r.get<std::string>("cfa", "RGGB")); });
  s.read_sigma = r.get("read_sigma", s.read_sigma);
  if (j.contains("photon_scale") && j.at("photon_scale").is_null()) s.photon_scale = std::numeric_limits<double>::infinity();
  else s.photon_scale = r.get("photon_scale", s.photon_scale);
  s.adc_bits = r.get("adc_bits", s.adc_bits);
  s.seed = r.get<std::uint64_t>("seed", s.seed);
  rebased(base, [&] { s.validate(); });
  return s;
}

// ---- WienerConfig / DepthConfig / StackOptions / OptimizeConfig --------------

inline json to_json(const restore::WienerConfig& w) { return json{{"nsr", w.nsr}, {"taper_width", w.taper_width}}; }

inline restore::WienerConfig wiener_from_json(const json& j, const std::string& base = "") {
  Reader r(j, base);
  r.only({"nsr", "taper_width"});
  restore::WienerConfig w;
  w.nsr = r.get("nsr", w.nsr);
  w.taper_width = r.get<std::size_t>("taper_width", w.taper_width);
  if (!(w.nsr >= 0)) throw ConfigError("must be >= 0", r.path("nsr"));
  return w;
}

inline json to_json(const depth::DepthConfig& d) {
  json j{{"window", d.window}, {"nsr_ladder", d.nsr_ladder}, {"subplane", d.subplane}};
  j["nsr"] = d.nsr ? json(*d.nsr) : json(nullptr);
  return j;
}

inline depth::DepthConfig depth_from_json(const json& j, const std::string& base = "") {
  Reader r(j, base);
  r.only({"window", "nsr", "nsr_ladder", "subplane"});
  depth::DepthConfig d;
  d.window = r.get<std::size_t>("window", d.window);
  if (r.has("nsr")) d.nsr = r.get("nsr", 0.0);
  if (r.has("nsr_ladder")) d.nsr_ladder = number_list(r.raw("nsr_ladder"), r.path("nsr_ladder"));
  d.subplane = r.get("subplane", d.subplane);
  rebased(base, [&] { d.validate(); });
  return d;
}

inline psf::MaskProfile profile_from_string(const std::string& s, const std::string& where) {
  if (s == "exact" || s == "step") return psf::MaskProfile::exact;
  if (s == "smooth") return psf::MaskProfile::smooth;
  throw ConfigError("expected 'exact' or 'smooth'", where);
}

inline json to_json(const psf::StackOptions& o) {
  return json{{"grid", o.grid},
              {"aperture_samples", o.aperture_samples},
              {"K", o.K},
              {"profile", o.profile == psf::MaskProfile::exact ? "exact" : "smooth"}};
}

inline psf::StackOptions stack_options_from_json(const json& j, const std::string& base = "") {
  Reader r(j, base);
  r.only({"grid", "aperture_samples", "K", "profile"});
  psf::StackOptions o;
  o.grid = r.get<std::size_t>("grid", o.grid);
  o.aperture_samples = r.get("aperture_samples", o.aperture_samples);
  o.K = r.get<std::size_t>("K", o.K);
  o.profile = profile_from_string(r.get<std::string>("profile", "exact"), r.path("profile"));
  if (o.K % 2 == 0) throw ConfigError("must be odd", r.path("K"));
  if (o.grid < 16 || o.grid % 2) throw ConfigError("must be even and >= 16", r.path("grid"));
  if (!(o.aperture_samples > 0 && o.aperture_samples <= double(o.grid)))
    throw ConfigError("must be in (0, grid]", r.path("aperture_samples"));
  if (o.K > o.grid) throw ConfigError("must not exceed the grid", r.path("K"));
  return o;
}

inline json to_json(const opt::OptimizeConfig& c) {
  return json{{"lr", c.lr},
              {"iters", c.iters},
              {"psis", c.psis},
              {"objective", opt::to_string(c.objective)},
              {"fd_step", c.fd_step},
              {"grid", c.grid},
              {"aperture_samples", c.aperture_samples},
              {"K", c.K},
              {"max_halvings", c.max_halvings}};
}

inline opt::OptimizeConfig optimize_from_json(const json& j, const std::string& base = "") {
  Reader r(j, base);
  r.only({"lr", "iters", "psis", "objective", "fd_step", "grid", "aperture_samples", "K", "max_halvings"});
  opt::OptimizeConfig c;
  c.lr = r.get("lr", c.lr);
  c.iters = r.get("iters", c.iters);
  if (r.has("psis")) c.psis = number_list(r.raw("psis"), r.path("psis"));
  if (r.has("objective")) rebased(base, [&] { c.objective = opt::objective_from_string(r.get<std::string>("objective", "")); });
  c.fd_step = r.get("fd_step", c.fd_step);
  c.grid = r.get<std::size_t>("grid", c.grid);
  c.aperture_samples = r.get("aperture_samples", c.aperture_samples);
  c.K = r.get<std::size_t>("K", c.K);
  c.max_halvings = r.get("max_halvings", c.max_halvings);
  rebased(base, [&] { c.validate(); });
  return c;
}

// ---- depth planes -------------------------------------------------------------

// Planes as ascending defocus values; `depths_m` holds the matching object
// distances when the planes were specified in metres.
struct PlaneSet {
  std::vector<double> psis;
  std::vector<double> depths_m;
};

// "lo:hi:count", inclusive and uniform.
inline std::vector<double> parse_range(const std::string& s, const std::string& where) {
  const auto a = s.find(':'), b = s.rfind(':');
  if (a == std::string::npos || a == b) throw ConfigError("expected lo:hi:count", where);
  try {
    std::size_t used = 0;
    const double lo = std::stod(s.substr(0, a));
    const double hi = std::stod(s.substr(a + 1, b - a - 1));
    const std::string cs = s.substr(b + 1);
    const long n = std::stol(cs, &used);
    if (used != cs.size() || n < 1) throw ConfigError("count must be a positive integer", where);
    return psf::linspace(lo, hi, std::size_t(n));
  } catch (const std::logic_error&) {
    throw ConfigError("expected lo:hi:count", where);
  }
}

// Depth planes -> ascending psi (nearest object = largest psi).
inline PlaneSet planes_from_depths(std::vector<double> depths, const optics::CameraConfig& cam, double lambda_ref,
                                   const std::string& where) {
  std::sort(depths.begin(), depths.end(), std::greater<>());
  PlaneSet p;
  for (double z : depths) {
    if (!(z > 0)) throw ConfigError("depths must be > 0", where);
    p.psis.push_back(optics::defocus_from_distance(cam, z, lambda_ref).psi);
    p.depths_m.push_back(z);
  }
  for (std::size_t i = 1; i < p.psis.size(); ++i)
    if (!(p.psis[i] > p.psis[i - 1])) throw ConfigError("depth planes must be distinct", where);
  return p;
}

// {"spacing": "psi"|"depth"|"disparity", "lo", "hi", "count"} or explicit
// {"psis": [...]} / {"depths_m": [...]}.
inline PlaneSet planes_from_json(const json& j, const optics::CameraConfig& cam, double lambda_ref,
                                 const std::string& base = "/planes") {
  Reader r(j, base);
  r.only({"spacing", "lo", "hi", "count", "psis", "depths_m"});
  if (r.has("psis")) {
    PlaneSet p{number_list(r.raw("psis"), r.path("psis")), {}};
    for (std::size_t i = 1; i < p.psis.size(); ++i)
      if (!(p.psis[i] > p.psis[i - 1])) throw ConfigError("must be strictly ascending", r.path("psis"));
    if (p.psis.empty()) throw ConfigError("must not be empty", r.path("psis"));
    return p;
  }
  if (r.has("depths_m")) return planes_from_depths(number_list(r.raw("depths_m"), r.path("depths_m")), cam, lambda_ref, r.path("depths_m"));
  const std::string spacing = r.get<std::string>("spacing", "psi");
  const double lo = r.require<double>("lo"), hi = r.require<double>("hi");
  const auto count = r.require<std::size_t>("count");
  if (count < 1) throw ConfigError("must be >= 1", r.path("count"));
  if (!(hi > lo) && count > 1) throw ConfigError("hi must exceed lo", r.path("hi"));
  if (spacing == "psi") return {psf::linspace(lo, hi, count), {}};
  if (!(lo > 0)) throw ConfigError("depth bounds must be > 0", r.path("lo"));
  if (spacing == "depth") return planes_from_depths(psf::linspace(lo, hi, count), cam, lambda_ref, base);
  if (spacing == "disparity") {
    std::vector<double> z;
    for (double inv : psf::linspace(1.0 / hi, 1.0 / lo, count)) z.push_back(1.0 / inv);
    return planes_from_depths(z, cam, lambda_ref, base);
  }
  throw ConfigError("expected 'psi', 'depth' or 'disparity'", r.path("spacing"));
}

inline json to_json(const PlaneSet& p) {
  json j{{"psis", p.psis}};
  if (!p.depths_m.empty()) j["depths_m"] = p.depths_m;
  return j;
}

}  // namespace rpsf::config
