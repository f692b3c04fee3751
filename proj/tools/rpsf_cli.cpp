// rpsf: command-line front end for the RPSF imaging pipeline.
//
// Exit codes: 0 ok, 2 missing/unreadable input, 3 invalid configuration
// (message names the JSON path or flag), 4 numerical failure.

#include <fftw3.h>
#include <png.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rpsf.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace rpsf;

namespace {

constexpr const char* kVersion = "1.0.0";

// ---- helpers ---------------------------------------------------------------

json load_json(const fs::path& p) {
  if (!fs::exists(p)) throw IoError("missing input '" + p.string() + "'");
  try {
    return json::parse(io::read_file(p));
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what(), p.string());
  }
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

// Records what a stage wrote so reruns can be compared by checksum.
class Manifest {
 public:
  Manifest(std::string stage, json config, std::uint64_t seed)
      : stage_(std::move(stage)), config_(std::move(config)), seed_(seed) {}

  void add(const fs::path& dir, const std::string& name) { outputs_[name] = io::sha256_file(dir / name); }

  void write(const fs::path& dir) const {
    json out = json::object();
    for (const auto& [k, v] : outputs_) out[k] = v;
    json m{{"tool", "rpsf"},
           {"stage", stage_},
           {"seed", seed_},
           {"config", config_},
           {"config_hash", io::sha256_hex(config_.dump())},
           {"versions", {{"rpsf", kVersion}, {"fftw", std::string(fftw_version)}, {"libpng", std::string(PNG_LIBPNG_VER_STRING)}}},
           {"outputs", out}};
    io::atomic_write(dir / "manifest.json", m.dump(2) + "\n");
  }

 private:
  std::string stage_;
  json config_;
  std::uint64_t seed_;
  std::map<std::string, std::string> outputs_;
};

// Inputs are recorded by name and content hash so the manifest does not
// depend on where the run happened.
json input_ref(const std::string& p) {
  if (p.empty()) return nullptr;
  const fs::path path(p);
  const fs::path file = fs::is_directory(path) ? path / "stack.json" : path;
  if (!fs::exists(file)) throw IoError("missing input '" + file.string() + "'");
  return json{{"file", path.filename().string()}, {"sha256", io::sha256_file(file)}};
}

void write_text(const fs::path& dir, const std::string& name, const std::string& text, Manifest& m) {
  io::atomic_write(dir / name, text);
  m.add(dir, name);
}

scene::IndexMap read_index_png(const fs::path& p) {
  if (!fs::exists(p)) throw IoError("missing input '" + p.string() + "'");
  const auto png = io::read_png(p);
  if (png.image.channels() != 1 || png.bits != 16) throw ConfigError("plane index must be a 16-bit grey PNG", p.string());
  scene::IndexMap idx(png.image.rows(), png.image.cols());
  for (std::size_t i = 0; i < idx.size(); ++i)
    idx.values()[i] = int(std::lround(png.image.channel(0).values()[i] * 65535.0));
  return idx;
}

Image to_rgb(Image img, std::size_t channels, const std::string& what) {
  if (img.channels() == channels) return img;
  if (img.channels() == 1 && channels == 3) return Image({img.channel(0), img.channel(0), img.channel(0)});
  throw DimensionError(what + ": expected " + std::to_string(channels) + " channels, got " +
                       std::to_string(img.channels()));
}

mask::MaskSpec mask_or_default(const std::string& path) {
  return path.empty() ? mask::MaskSpec{} : config::mask_from_json(load_json(path), "/mask");
}

optics::CameraConfig camera_or_default(const std::string& path) {
  if (path.empty()) return optics::CameraConfig::make(16e-3, 4e-3, 5.0);
  return config::camera_from_json(load_json(path), "/camera");
}

// ---- stage: mask -------------------------------------------------------------

struct MaskArgs {
  std::string mask;
  std::size_t grid = 512;
  double pitch = 0.0;  // 0: diameter spans 400 samples
  int levels = 0;
  std::string out;
};

void run_mask(const MaskArgs& a) {
  const auto spec = mask_or_default(a.mask);
  const double pitch = a.pitch > 0 ? a.pitch : 2.0 * spec.radius_m / 400.0;
  const auto h = mask::height_map(spec.rounded(), a.grid, a.grid, pitch, a.levels);
  const fs::path dir = a.out;
  json cfg{{"mask", config::to_json(spec)}, {"grid", a.grid}, {"pitch_m", pitch}, {"levels", a.levels}};
  Manifest m("mask", cfg, 0);
  write_text(dir, "mask.json", config::to_json(spec.rounded()).dump(2) + "\n", m);
  io::write_pfm(dir / "height.pfm", h.data);
  m.add(dir, "height.pfm");
  // PNG16 normalised to the wrapped-phase height range lambda_ref / (n - 1)
  const double range = spec.lambda_ref_m / (spec.refractive_index - 1.0);
  RealGrid norm = h.data;
  for (auto& v : norm.values()) v /= range;
  io::write_png(dir / "height.png", Image(std::vector<RealGrid>{norm}), 16);
  m.add(dir, "height.png");
  m.write(dir);
}

// ---- stage: psf --------------------------------------------------------------

struct PsfArgs {
  std::string mask, camera, psis, planes;
  psf::StackOptions opt;
  std::string profile = "exact";
  bool clear = false;
  std::string out;
};

void run_psf(const PsfArgs& a) {
  const auto spec = mask_or_default(a.mask);
  const auto cam = camera_or_default(a.camera);
  config::PlaneSet planes;
  if (!a.planes.empty()) planes = config::planes_from_json(load_json(a.planes), cam, spec.lambda_ref_m);
  else planes.psis = config::parse_range(a.psis.empty() ? "-20:20:10" : a.psis, "--psis");
  psf::StackOptions opt = a.opt;
  opt.profile = config::profile_from_string(a.profile, "--profile");
  opt.clear_aperture = a.clear;
  const auto stack = psf::build_stack(spec.rounded(), cam, planes.psis, opt);
  const fs::path dir = a.out;
  json cfg{{"mask", config::to_json(spec.rounded())}, {"camera", config::to_json(cam)},
           {"planes", config::to_json(planes)},        {"psf", config::to_json(opt)},
           {"clear_aperture", a.clear}};
  Manifest m("psf", cfg, 0);
  for (const auto& name : io::save_stack_dir(dir, stack)) m.add(dir, name);
  io::atomic_write(dir / "stack.rpsf", io::encode_stack_binary(stack));
  m.add(dir, "stack.rpsf");
  // plane depths (object distance at lambda_ref), null beyond infinity
  json depths = json::array();
  for (double p : planes.psis) {
    try {
      depths.push_back(optics::distance_from_defocus(cam, p, spec.lambda_ref_m));
    } catch (const DomainError&) {
      depths.push_back(nullptr);
    }
  }
  write_text(dir, "planes.json", json{{"psis", planes.psis}, {"depths_m", depths}}.dump(2) + "\n", m);
  m.write(dir);
}

// ---- stage: render -----------------------------------------------------------

struct RenderArgs {
  std::string aif, index, depth, stack;
  std::string out;
};

// Plane depths recorded next to a stack by the psf stage.
std::vector<double> stack_plane_depths(const fs::path& stack_path) {
  const fs::path dir = fs::is_directory(stack_path) ? stack_path : stack_path.parent_path();
  const json j = load_json(dir / "planes.json");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.at("depths_m").size(); ++i) {
    const auto& v = j["depths_m"][i];
    if (v.is_null()) throw ConfigError("plane " + std::to_string(i) + " has no finite depth; supply --index", "/depths_m/" + std::to_string(i));
    out.push_back(v.get<double>());
  }
  return out;
}

void run_render(const RenderArgs& a) {
  const auto stack = io::load_stack(a.stack);
  scene::LayeredScene sc;
  sc.aif = to_rgb(io::read_image(a.aif), stack.channels(), "--aif");
  sc.planes = stack.planes();
  if (!a.index.empty()) {
    sc.plane_index = read_index_png(a.index);
  } else if (!a.depth.empty()) {
    const Image depth = io::read_image(a.depth);
    if (depth.channels() != 1) throw ConfigError("depth map must have one channel", "--depth");
    // stack planes are ordered by ascending psi, i.e. descending depth
    std::vector<double> z = stack_plane_depths(a.stack);
    std::vector<double> asc(z.rbegin(), z.rend());
    auto q = scene::quantize_depth(depth.channel(0), asc);
    for (auto& v : q.plane_index.values()) v = int(sc.planes) - 1 - v;
    sc.plane_index = q.plane_index;
  } else {
    throw ConfigError("need --index or --depth", "--index");
  }
  const Image out = scene::render(sc, stack);
  const fs::path dir = a.out;
  json cfg{{"aif", input_ref(a.aif)}, {"index", input_ref(a.index)}, {"depth", input_ref(a.depth)}, {"stack", input_ref(a.stack)}};
  Manifest m("render", cfg, 0);
  io::write_pfm(dir / "render.pfm", out);
  m.add(dir, "render.pfm");
  io::atomic_write(dir / "index.png", io::encode_png16_codes(sc.plane_index));
  m.add(dir, "index.png");
  m.write(dir);
}

// ---- stage: sense -------------------------------------------------------------

struct SenseArgs {
  std::string in, sensor;
  std::optional<std::uint64_t> seed;
  bool dump_raw = false;
  std::string out;
};

void run_sense(const SenseArgs& a) {
  sensor::SensorConfig cfg = a.sensor.empty() ? sensor::SensorConfig{}
                                              : config::sensor_from_json(load_json(a.sensor), "/sensor");
  if (a.seed) cfg.seed = *a.seed;
  const Image img = to_rgb(io::read_image(a.in), 3, "--in");
  const auto o = sensor::simulate(img, cfg);
  const fs::path dir = a.out;
  Manifest m("sense", json{{"in", input_ref(a.in)}, {"sensor", config::to_json(cfg)}}, cfg.seed);
  io::write_png(dir / "sensed.png", o.rgb, 8);
  m.add(dir, "sensed.png");
  if (a.dump_raw) {
    io::write_pfm(dir / "raw.pfm", o.noisy);
    m.add(dir, "raw.pfm");
  }
  m.write(dir);
}

// ---- stage: metrics -------------------------------------------------------------

std::string metrics_csv(const Image& reference, const std::vector<std::pair<std::string, Image>>& images) {
  std::ostringstream csv;
  csv << "file,psnr_db,ssim,rmse\n";
  for (const auto& [name, img] : images) {
    const auto mt = restore::metrics(img, reference);
    csv << name << ',' << (std::isinf(mt.psnr) ? std::string("inf") : fmt(mt.psnr)) << ',' << fmt(mt.ssim) << ','
        << fmt(mt.rmse) << '\n';
  }
  return csv.str();
}

struct MetricsArgs {
  std::string reference;
  std::vector<std::string> images;
  std::string out;
};

void run_metrics(const MetricsArgs& a) {
  const Image ref = io::read_image(a.reference);
  std::vector<std::pair<std::string, Image>> imgs;
  for (const auto& p : a.images) imgs.emplace_back(fs::path(p).filename().string(), to_rgb(io::read_image(p), ref.channels(), p));
  const fs::path dir = a.out;
  json inputs = json::array();
  for (const auto& p : a.images) inputs.push_back(input_ref(p));
  Manifest m("metrics", json{{"reference", input_ref(a.reference)}, {"images", inputs}}, 0);
  write_text(dir, "metrics.csv", metrics_csv(ref, imgs), m);
  m.write(dir);
}

// ---- stage: deblur ----------------------------------------------------------------

struct DeblurArgs {
  std::string in, stack, index, reference;
  std::optional<int> plane;
  restore::WienerConfig wiener;
  std::string out;
};

void run_deblur(const DeblurArgs& a) {
  const auto stack = io::load_stack(a.stack);
  const Image img = to_rgb(io::read_image(a.in), stack.channels(), "--in");
  scene::IndexMap idx;
  if (!a.index.empty()) {
    idx = read_index_png(a.index);
  } else if (a.plane) {
    if (*a.plane < 0 || std::size_t(*a.plane) >= stack.planes()) throw ConfigError("plane out of range", "--plane");
    idx = scene::IndexMap(img.rows(), img.cols(), *a.plane);
  } else {
    throw ConfigError("need --index or --plane", "--index");
  }
  if (idx.rows() != img.rows() || idx.cols() != img.cols()) throw DimensionError("plane index and image differ in size");
  const auto masks = scene::masks_from_index(idx, stack.planes());
  const Image out = restore::restore_layered(img, stack, masks, a.wiener);
  const fs::path dir = a.out;
  Manifest m("deblur", json{{"in", input_ref(a.in)}, {"stack", input_ref(a.stack)}, {"index", input_ref(a.index)}, {"plane", a.plane ? json(*a.plane) : json(nullptr)}, {"reference", input_ref(a.reference)}, {"wiener", config::to_json(a.wiener)}}, 0);
  io::write_png(dir / "restored.png", out, 8);
  m.add(dir, "restored.png");
  io::write_pfm(dir / "restored.pfm", out);
  m.add(dir, "restored.pfm");
  if (!a.reference.empty()) {
    const Image ref = to_rgb(io::read_image(a.reference), stack.channels(), "--reference");
    write_text(dir, "metrics.csv", metrics_csv(ref, {{fs::path(a.in).filename().string(), img}, {"restored.pfm", out}}), m);
  }
  m.write(dir);
}

// ---- stage: depth -------------------------------------------------------------------

struct DepthArgs {
  std::string in, stack, truth;
  depth::DepthConfig cfg;
  bool dump_residuals = false;
  std::string out;
};

json run_depth(const DepthArgs& a) {
  const auto stack = io::load_stack(a.stack);
  const Image img = to_rgb(io::read_image(a.in), stack.channels(), "--in");
  const auto est = depth::estimate(img, stack, a.cfg);
  const fs::path dir = a.out;
  Manifest m("depth", json{{"in", input_ref(a.in)}, {"stack", input_ref(a.stack)}, {"truth", input_ref(a.truth)}, {"depth", config::to_json(a.cfg)}}, 0);
  io::atomic_write(dir / "depth_index.png", io::encode_png16_codes(est.plane_index));
  m.add(dir, "depth_index.png");
  io::write_pfm(dir / "confidence.pfm", est.confidence);
  m.add(dir, "confidence.pfm");
  if (a.cfg.subplane) {
    io::write_pfm(dir / "subplane.pfm", est.subplane);
    m.add(dir, "subplane.pfm");
  }
  if (a.dump_residuals)
    for (std::size_t d = 0; d < est.residuals.size(); ++d) {
      char name[40];
      std::snprintf(name, sizeof name, "residual_d%02zu.pfm", d);
      io::write_pfm(dir / name, est.residuals[d]);
      m.add(dir, name);
    }
  json summary{{"planes", stack.planes()}, {"nsr", est.nsr}};
  std::ostringstream csv;
  csv << "file,planes,window,nsr,accuracy,interior_accuracy,rmse_psi\n";
  csv << fs::path(a.in).filename().string() << ',' << stack.planes() << ',' << a.cfg.window << ',' << fmt(est.nsr);
  if (!a.truth.empty()) {
    const auto truth = read_index_png(a.truth);
    const double acc = depth::accuracy(est.plane_index, truth);
    const auto inner = depth::interior_mask(truth, a.cfg.window + stack.K);
    std::size_t n_inner = 0;
    for (auto v : inner.values()) n_inner += v;
    const double iacc = n_inner ? depth::accuracy(est.plane_index, truth, &inner) : std::nan("");
    const double rmse = depth::depth_rmse(est.plane_index, truth, stack.psis);
    csv << ',' << fmt(acc) << ',' << fmt(iacc) << ',' << fmt(rmse) << '\n';
    summary["accuracy"] = acc;
    summary["interior_accuracy"] = n_inner ? json(iacc) : json(nullptr);
    summary["rmse_psi"] = rmse;
  } else {
    csv << ",,,\n";
  }
  write_text(dir, "depth.csv", csv.str(), m);
  m.write(dir);
  return summary;
}

// ---- stage: optimize ------------------------------------------------------------------

struct OptimizeArgs {
  std::string mask, camera, config, psis, objective;
  std::optional<double> init_n, init_eps, lr;
  std::optional<int> zones, iters;
  std::string out;
};

void run_optimize(const OptimizeArgs& a) {
  auto spec = mask_or_default(a.mask);
  spec.n_peaks = a.init_n.value_or(a.mask.empty() ? 1.0 : spec.n_peaks);
  spec.epsilon = a.init_eps.value_or(a.mask.empty() ? 0.1 : spec.epsilon);
  if (a.zones) spec.zones = *a.zones;
  spec.validate();
  const auto cam = camera_or_default(a.camera);
  opt::OptimizeConfig cfg = a.config.empty() ? opt::OptimizeConfig{} : config::optimize_from_json(load_json(a.config), "/optimize");
  if (a.lr) cfg.lr = *a.lr;
  if (a.iters) cfg.iters = *a.iters;
  if (!a.psis.empty()) cfg.psis = config::parse_range(a.psis, "--psis");
  if (!a.objective.empty()) cfg.objective = opt::objective_from_string(a.objective);
  cfg.validate();
  const fs::path dir = a.out;
  std::ostringstream csv;
  csv << "iter,N,eps,J\n";
  const auto traj = opt::optimize(spec, cam, cfg, [&](const opt::TrajectoryPoint& p) {
    csv << p.iter << ',' << fmt(p.spec.n_peaks) << ',' << fmt(p.spec.epsilon) << ',' << fmt(p.J) << '\n';
    std::cerr << "iter " << p.iter << "  N=" << p.spec.n_peaks << "  eps=" << p.spec.epsilon << "  J=" << p.J << '\n';
  });
  Manifest m("optimize", json{{"init", config::to_json(spec)}, {"optimize", config::to_json(cfg)}, {"camera", config::to_json(cam)}}, 0);
  write_text(dir, "trajectory.csv", csv.str(), m);
  const auto final_spec = traj.back().spec.rounded();
  write_text(dir, "mask.json", config::to_json(final_spec).dump(2) + "\n", m);
  const auto h = mask::height_map(final_spec, 512, 512, 2.0 * final_spec.radius_m / 400.0);
  io::write_pfm(dir / "height.pfm", h.data);
  m.add(dir, "height.pfm");
  m.write(dir);
}

// ---- run-all ---------------------------------------------------------------------------

void run_all(const std::string& config_path, const std::string& out) {
  const json j = load_json(config_path);
  config::Reader r(j, "");
  r.only({"seed", "mask", "camera", "sensor", "wiener", "depth", "psf", "planes", "scene"});
  const auto seed = r.get<std::uint64_t>("seed", 0);
  const auto spec = r.has("mask") ? config::mask_from_json(r.raw("mask"), "/mask") : mask::MaskSpec{};
  const auto cam = r.has("camera") ? config::camera_from_json(r.raw("camera"), "/camera") : camera_or_default("");
  auto sens = r.has("sensor") ? config::sensor_from_json(r.raw("sensor"), "/sensor") : sensor::SensorConfig{};
  const auto wiener = r.has("wiener") ? config::wiener_from_json(r.raw("wiener"), "/wiener") : restore::WienerConfig{};
  const auto dcfg = r.has("depth") ? config::depth_from_json(r.raw("depth"), "/depth") : depth::DepthConfig{};
  const auto sopt = r.has("psf") ? config::stack_options_from_json(r.raw("psf"), "/psf") : psf::StackOptions{};
  const auto planes = r.has("planes") ? config::planes_from_json(r.raw("planes"), cam, spec.lambda_ref_m)
                                      : config::PlaneSet{psf::linspace(-20, 20, 10), {}};
  sens.seed = sensor::derive_seed(seed, "sense");

  const fs::path root = out;
  fs::create_directories(root);
  // persist the resolved sub-configs so every stage reads serialized inputs
  const fs::path cfg_dir = root / "config";
  io::atomic_write(cfg_dir / "mask.json", config::to_json(spec).dump(2) + "\n");
  io::atomic_write(cfg_dir / "camera.json", config::to_json(cam).dump(2) + "\n");
  io::atomic_write(cfg_dir / "sensor.json", config::to_json(sens).dump(2) + "\n");
  io::atomic_write(cfg_dir / "planes.json", config::to_json(planes).dump(2) + "\n");

  // scene: files, or a seeded synthetic textured scene
  std::string aif_path, index_path, depth_path;
  if (r.has("scene") && (r.child("scene").has("aif"))) {
    const auto s = r.child("scene");
    s.only({"aif", "index", "depth"});
    aif_path = s.require<std::string>("aif");
    index_path = s.get<std::string>("index", "");
    depth_path = s.get<std::string>("depth", "");
    if (index_path.empty() && depth_path.empty()) throw ConfigError("need 'index' or 'depth'", "/scene");
  } else {
    std::size_t size = 192;
    if (r.has("scene")) {
      const auto s = r.child("scene");
      s.only({"size"});
      size = s.get<std::size_t>("size", size);
    }
    const auto sc = synthetic::textured_quadrants(size, planes.psis.size(), sensor::derive_seed(seed, "scene"));
    aif_path = (root / "scene" / "aif.pfm").string();
    index_path = (root / "scene" / "index.png").string();
    io::write_pfm(aif_path, sc.aif);
    io::atomic_write(index_path, io::encode_png16_codes(sc.plane_index));
  }

  std::cerr << "[mask]\n";
  run_mask({(cfg_dir / "mask.json").string(), 512, 0.0, 0, (root / "mask").string()});
  std::cerr << "[psf]\n";
  PsfArgs pa;
  pa.mask = (cfg_dir / "mask.json").string();
  pa.camera = (cfg_dir / "camera.json").string();
  pa.planes = (cfg_dir / "planes.json").string();
  pa.opt = sopt;
  pa.profile = sopt.profile == psf::MaskProfile::exact ? "exact" : "smooth";
  pa.out = (root / "psf").string();
  run_psf(pa);
  const std::string stack = (root / "psf").string();
  std::cerr << "[render]\n";
  run_render({aif_path, index_path, depth_path, stack, (root / "render").string()});
  std::cerr << "[sense]\n";
  run_sense({(root / "render" / "render.pfm").string(), (cfg_dir / "sensor.json").string(), std::nullopt, false,
             (root / "sense").string()});
  std::cerr << "[deblur]\n";
  DeblurArgs da;
  da.in = (root / "sense" / "sensed.png").string();
  da.stack = stack;
  da.index = (root / "render" / "index.png").string();
  da.reference = aif_path;
  da.wiener = wiener;
  da.out = (root / "deblur").string();
  run_deblur(da);
  std::cerr << "[depth]\n";
  DepthArgs dp;
  dp.in = (root / "sense" / "sensed.png").string();
  dp.stack = stack;
  dp.truth = (root / "render" / "index.png").string();
  dp.cfg = dcfg;
  dp.out = (root / "depth").string();
  const json ds = run_depth(dp);

  // summary: image quality at each stage plus depth accuracy
  const Image aif = to_rgb(io::read_image(aif_path), 3, "aif");
  const Image rendered = io::read_image(root / "render" / "render.pfm");
  const Image sensed = io::read_image(root / "sense" / "sensed.png");
  const Image restored = io::read_image(root / "deblur" / "restored.pfm");
  std::ostringstream csv;
  csv << "stage,psnr_db,ssim,rmse,depth_accuracy,depth_interior_accuracy\n";
  for (const auto& [name, img] : std::vector<std::pair<std::string, const Image*>>{
           {"render", &rendered}, {"sense", &sensed}, {"deblur", &restored}}) {
    const auto mt = restore::metrics(*img, aif);
    csv << name << ',' << fmt(mt.psnr) << ',' << fmt(mt.ssim) << ',' << fmt(mt.rmse) << ",,\n";
  }
  csv << "depth,,,," << (ds.contains("accuracy") ? fmt(ds["accuracy"].get<double>()) : "") << ','
      << (ds.contains("interior_accuracy") && !ds["interior_accuracy"].is_null() ? fmt(ds["interior_accuracy"].get<double>()) : "")
      << '\n';
  Manifest m("run-all", j, seed);
  write_text(root, "summary.csv", csv.str(), m);
  for (const char* sub : {"mask", "psf", "render", "sense", "deblur", "depth"})
    m.add(root, std::string(sub) + "/manifest.json");
  m.write(root);
  std::cout << csv.str();
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const IoError*>(&e)) return 2;
  if (dynamic_cast<const ConfigError*>(&e)) return 3;
  if (dynamic_cast<const Error*>(&e)) return 4;
  if (dynamic_cast<const fs::filesystem_error*>(&e)) return 2;
  return 4;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"RPSF coded-aperture imaging pipeline"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);
  unsigned threads = 0;
  app.add_option("--threads", threads, "Worker thread cap (default: $RPSF_THREADS or all cores)");

  MaskArgs ma;
  auto* c_mask = app.add_subcommand("mask", "Height map of a phase mask (PFM + PNG16) and its MaskSpec JSON");
  c_mask->add_option("--mask", ma.mask, "MaskSpec JSON (defaults if omitted)");
  c_mask->add_option("--grid", ma.grid, "Samples per side")->capture_default_str();
  c_mask->add_option("--pitch", ma.pitch, "Metres per sample (default: diameter over 400 samples)");
  c_mask->add_option("--levels", ma.levels, "Quantise the relief to this many steps (0 = off)");
  c_mask->add_option("--out", ma.out, "Output directory")->required();

  PsfArgs pa;
  auto* c_psf = app.add_subcommand("psf", "Build a depth x channel RPSF stack");
  c_psf->add_option("--mask", pa.mask, "MaskSpec JSON");
  c_psf->add_option("--camera", pa.camera, "CameraConfig JSON");
  c_psf->add_option("--psis", pa.psis, "Defocus planes lo:hi:count (default -20:20:10)");
  c_psf->add_option("--planes", pa.planes, "Planes JSON (psi/depth/disparity spacing)");
  c_psf->add_option("--K", pa.opt.K, "Kernel side (odd)")->capture_default_str();
  c_psf->add_option("--grid", pa.opt.grid, "FFT side at the reference wavelength")->capture_default_str();
  c_psf->add_option("--aperture-samples", pa.opt.aperture_samples, "Pupil diameter in samples")->capture_default_str();
  c_psf->add_option("--profile", pa.profile, "Mask profile: exact or smooth")->capture_default_str();
  c_psf->add_flag("--clear-aperture", pa.clear, "Ignore the mask (plain defocus)");
  c_psf->add_option("--out", pa.out, "Output directory")->required();

  RenderArgs ra;
  auto* c_render = app.add_subcommand("render", "Layered RPSF-coded rendering of an all-in-focus image");
  c_render->add_option("--aif", ra.aif, "All-in-focus image (PNG or PFM)")->required();
  c_render->add_option("--index", ra.index, "Plane-index PNG16");
  c_render->add_option("--depth", ra.depth, "Depth map in metres (PFM)");
  c_render->add_option("--stack", ra.stack, "Stack directory, stack.json or .rpsf")->required();
  c_render->add_option("--out", ra.out, "Output directory")->required();

  SenseArgs sa;
  std::uint64_t seed_opt = 0;
  auto* c_sense = app.add_subcommand("sense", "Bayer sampling, noise, ADC and demosaicing");
  c_sense->add_option("--in", sa.in, "Linear image (PFM)")->required();
  c_sense->add_option("--sensor", sa.sensor, "SensorConfig JSON");
  auto* seed_flag = c_sense->add_option("--seed", seed_opt, "Override the sensor seed");
  c_sense->add_flag("--dump-raw", sa.dump_raw, "Also write the pre-quantisation mosaic (PFM)");
  c_sense->add_option("--out", sa.out, "Output directory")->required();

  DeblurArgs da;
  int plane_opt = 0;
  auto* c_deblur = app.add_subcommand("deblur", "Per-plane Wiener restoration");
  c_deblur->add_option("--in", da.in, "Coded image (PNG or PFM)")->required();
  c_deblur->add_option("--stack", da.stack, "Stack directory, stack.json or .rpsf")->required();
  c_deblur->add_option("--index", da.index, "Plane-index PNG16");
  auto* plane_flag = c_deblur->add_option("--plane", plane_opt, "Single plane for the whole frame");
  c_deblur->add_option("--nsr", da.wiener.nsr, "Noise-to-signal ratio")->capture_default_str();
  c_deblur->add_option("--taper", da.wiener.taper_width, "Edge taper width in pixels (0 = off)")->capture_default_str();
  c_deblur->add_option("--reference", da.reference, "Ground truth for metrics.csv");
  c_deblur->add_option("--out", da.out, "Output directory")->required();

  DepthArgs dpa;
  double depth_nsr = 0.0;
  auto* c_depth = app.add_subcommand("depth", "Per-pixel plane estimation");
  c_depth->add_option("--in", dpa.in, "Coded image (PNG or PFM)")->required();
  c_depth->add_option("--stack", dpa.stack, "Stack directory, stack.json or .rpsf")->required();
  c_depth->add_option("--window", dpa.cfg.window, "Odd box window")->capture_default_str();
  auto* nsr_flag = c_depth->add_option("--nsr", depth_nsr, "Fixed nsr (default: chosen per image)");
  c_depth->add_flag("--subplane", dpa.cfg.subplane, "Write a fractional plane map");
  c_depth->add_flag("--dump-residuals", dpa.dump_residuals, "Write per-plane score maps");
  c_depth->add_option("--truth", dpa.truth, "Ground-truth plane-index PNG16 for the summary");
  c_depth->add_option("--out", dpa.out, "Output directory")->required();

  OptimizeArgs oa;
  double init_n = 1, init_eps = 0.1, lr = 0.1;
  int zones = 5, iters = 40;
  auto* c_opt = app.add_subcommand("optimize", "Gradient ascent on the mask parameters (N, epsilon)");
  c_opt->add_option("--mask", oa.mask, "Base MaskSpec JSON");
  c_opt->add_option("--camera", oa.camera, "CameraConfig JSON");
  c_opt->add_option("--config", oa.config, "OptimizeConfig JSON");
  auto* o_n = c_opt->add_option("--init-n", init_n, "Initial N (default 1)");
  auto* o_e = c_opt->add_option("--init-eps", init_eps, "Initial epsilon (default 0.1)");
  auto* o_z = c_opt->add_option("--zones", zones, "Zone count L (fixed)");
  auto* o_i = c_opt->add_option("--iters", iters, "Iterations");
  auto* o_l = c_opt->add_option("--lr", lr, "Step size (default 0.1)");
  c_opt->add_option("--psis", oa.psis, "Objective planes lo:hi:count (default -5:5:10)");
  c_opt->add_option("--objective", oa.objective, "pairwise or rotation-spread");
  c_opt->add_option("--out", oa.out, "Output directory")->required();

  MetricsArgs mta;
  auto* c_metrics = app.add_subcommand("metrics", "PSNR / SSIM / RMSE against a reference");
  c_metrics->add_option("--reference", mta.reference, "Reference image")->required();
  c_metrics->add_option("images", mta.images, "Images to score")->required();
  c_metrics->add_option("--out", mta.out, "Output directory")->required();

  std::string all_cfg, all_out;
  auto* c_all = app.add_subcommand("run-all", "mask -> psf -> render -> sense -> deblur -> depth");
  c_all->add_option("--config", all_cfg, "PipelineConfig JSON")->required();
  c_all->add_option("--out", all_out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::RequiredError& e) {
    app.exit(e);
    return 2;
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 3;
  }

  if (threads == 0)
    if (const char* env = std::getenv("RPSF_THREADS")) {
      try {
        threads = unsigned(std::stoul(env));
      } catch (const std::exception&) {
        std::cerr << "error: RPSF_THREADS must be a non-negative integer\n";
        return 3;
      }
    }
  set_max_threads(threads);

  try {
    if (*c_mask) run_mask(ma);
    else if (*c_psf) run_psf(pa);
    else if (*c_render) run_render(ra);
    else if (*c_sense) {
      if (*seed_flag) sa.seed = seed_opt;
      run_sense(sa);
    } else if (*c_deblur) {
      if (*plane_flag) da.plane = plane_opt;
      run_deblur(da);
    } else if (*c_depth) {
      if (*nsr_flag) dpa.cfg.nsr = depth_nsr;
      run_depth(dpa);
    } else if (*c_opt) {
      if (*o_n) oa.init_n = init_n;
      if (*o_e) oa.init_eps = init_eps;
      if (*o_z) oa.zones = zones;
      if (*o_i) oa.iters = iters;
      if (*o_l) oa.lr = lr;
      run_optimize(oa);
    } else if (*c_metrics) run_metrics(mta);
    else if (*c_all) run_all(all_cfg, all_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }
  return 0;
}
