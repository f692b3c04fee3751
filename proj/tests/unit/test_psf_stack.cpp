#include <gtest/gtest.h>

#include <filesystem>

#include "rpsf/psf_stack.hpp"
#include "rpsf/stack_io.hpp"

using namespace rpsf;
using namespace rpsf::psf;

namespace {

MaskSpec helix(double n, int L, double eps) {
  MaskSpec s;
  s.n_peaks = n;
  s.zones = L;
  s.epsilon = eps;
  return s;
}

const CameraConfig& camera() {
  static const CameraConfig c = CameraConfig::make(16e-3, 4e-3, 5.0);
  return c;
}

const PsfStack& default_stack() {
  static const PsfStack s = build_stack(helix(1, 5, 0.9), camera(), linspace(-20, 20, 10));
  return s;
}

std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("rpsf_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace

TEST(Stack, ShapeAndContract) {
  const PsfStack& s = default_stack();
  EXPECT_EQ(s.planes(), 10u);
  EXPECT_EQ(s.channels(), 3u);
  EXPECT_EQ(s.K, 23u);
  for (const auto& k : s.kernels) {
    EXPECT_EQ(k.rows(), 23u);
    EXPECT_EQ(k.cols(), 23u);
    EXPECT_NEAR(sum(k), 1.0, 1e-9);
    for (double v : k.values()) EXPECT_GE(v, 0.0);
  }
  EXPECT_NO_THROW(s.validate());
}

TEST(Stack, InFocusKernelIsNotADelta) {
  const PsfStack s = build_stack(helix(1, 5, 0.9), camera(), {0.0});
  for (std::size_t c = 0; c < 3; ++c) EXPECT_LT(max_value(s.at(0, c)), 0.9);
}

TEST(Stack, ChannelGridScalesWithWavelength) {
  EXPECT_EQ(channel_grid(512, 536.67e-9, 536.67e-9), 512u);
  EXPECT_EQ(channel_grid(512, 610e-9, 536.67e-9), 582u);
  EXPECT_EQ(channel_grid(512, 470e-9, 536.67e-9), 448u);
  EXPECT_EQ(channel_grid(512, 610e-9, 536.67e-9) % 2, 0u);
}

TEST(Stack, ReversedPlanesGiveReversedKernels) {
  const std::vector<double> up{-8, -2, 3, 9}, down{9, 3, -2, -8};
  const MaskSpec m = helix(2, 4, 0.7);
  const PsfStack a = kernels_for(m, camera(), up), b = kernels_for(m, camera(), down);
  for (std::size_t d = 0; d < 4; ++d)
    for (std::size_t c = 0; c < 3; ++c) EXPECT_EQ(a.at(d, c), b.at(3 - d, c));
  EXPECT_THROW(build_stack(m, camera(), down), ConfigError);
}

TEST(Stack, RejectsBadRequests) {
  EXPECT_THROW(build_stack(helix(1, 5, 0.9), camera(), {}), ConfigError);
  StackOptions even;
  even.K = 22;
  EXPECT_THROW(build_stack(helix(1, 5, 0.9), camera(), {0.0}, even), ConfigError);
  StackOptions wide;
  wide.aperture_samples = 600;
  EXPECT_THROW(build_stack(helix(1, 5, 0.9), camera(), {0.0}, wide), ConfigError);
  EXPECT_THROW(build_stack(helix(1, 5, 0.9), camera(), {std::nan("")}), ConfigError);
}

TEST(Stack, Deterministic) {
  const PsfStack again = build_stack(helix(1, 5, 0.9), camera(), linspace(-20, 20, 10));
  for (std::size_t i = 0; i < again.kernels.size(); ++i) EXPECT_EQ(again.kernels[i], default_stack().kernels[i]);
}

TEST(Stack, SmoothProfileCloseToExact) {
  StackOptions smooth;
  smooth.profile = MaskProfile::smooth;
  const MaskSpec m = helix(1, 5, 0.9);
  const PsfStack a = build_stack(m, camera(), {-6.0, 6.0}), b = build_stack(m, camera(), {-6.0, 6.0}, smooth);
  for (std::size_t i = 0; i < a.kernels.size(); ++i) EXPECT_LT(max_abs_diff(a.kernels[i], b.kernels[i]), 0.02);
}

TEST(Stack, CropLossWarningOnlyWhenEnergyIsLost) {
  std::vector<std::string> seen;
  auto old = set_warning_handler([&](const std::string& m) { seen.push_back(m); });
  StackOptions tiny;
  tiny.K = 5;
  build_stack(helix(1, 5, 0.9), camera(), {20.0}, tiny);
  set_warning_handler(old);
  ASSERT_EQ(seen.size(), 1u);
  EXPECT_NE(seen[0].find("5x5"), std::string::npos);
}

TEST(Rotation, OpenApertureInFocusHasNoLobeAngle) {
  StackOptions open;
  open.clear_aperture = true;
  const PsfStack s = build_stack(helix(1, 5, 0.9), camera(), {0.0}, open);
  EXPECT_THROW(dominant_lobe(s.at(0, 1)), DegenerateError);
}

TEST(Rotation, FlatKernelIsDegenerate) {
  RealGrid k(7, 7, 1.0 / 49);
  EXPECT_THROW(dominant_lobe(k), DegenerateError);
}

TEST(Rotation, LobeAngleFollowsImageAxes) {
  // row index grows downward; +y in angle convention is toward row 0
  RealGrid k(9, 9);
  k(4, 7) = 1.0;
  EXPECT_NEAR(dominant_lobe(k).angle, 0.0, 1e-12);
  RealGrid u(9, 9);
  u(1, 4) = 1.0;
  EXPECT_NEAR(std::abs(dominant_lobe(u).angle), std::numbers::pi / 2, 1e-12);
}

TEST(Rotation, MorePeaksRotateSlower) {
  StackOptions opt;
  opt.K = 63;
  const auto psis = linspace(-5, 5, 11);
  const auto one = peak_angles(build_stack(helix(1, 5, 0.5), camera(), psis, opt), 1);
  const auto two = peak_angles(build_stack(helix(2, 5, 0.5), camera(), psis, opt), 1, 2);
  const double r1 = rotation_rate(one), r2 = rotation_rate(two);
  EXPECT_GT(std::abs(r1), 0.05);
  EXPECT_LT(std::abs(r2), std::abs(r1));
}

TEST(Rotation, RateOfConstantAngleIsZero) {
  RotationTrace t;
  t.psis = {-1, 0, 1, 2};
  t.unwrapped = {0.3, 0.3, 0.3, 0.3};
  EXPECT_EQ(rotation_rate(t), 0.0);
  t.unwrapped = {-0.5, 0.0, 0.5, 1.0};
  EXPECT_NEAR(rotation_rate(t), 0.5, 1e-15);
}

TEST(Rotation, TooFewPlanes) {
  RotationTrace t;
  t.psis = {0, 1};
  t.unwrapped = {0, 1};
  EXPECT_THROW(rotation_rate(t), InsufficientDataError);
  t.psis = {1, 1, 1};
  t.unwrapped = {0, 1, 2};
  EXPECT_THROW(rotation_rate(t), InsufficientDataError);
}

TEST(Rotation, UnwrapRemovesJumps) {
  const auto u = unwrap({3.0, -3.0, -2.9});
  EXPECT_NEAR(u[1], -3.0 + 2 * std::numbers::pi, 1e-12);
  EXPECT_NEAR(u[2] - u[1], 0.1, 1e-12);
  const auto h = unwrap({1.5, -1.5}, std::numbers::pi);
  EXPECT_NEAR(h[1], -1.5 + std::numbers::pi, 1e-12);
}

TEST(Rotation, ChannelsRotateDifferently) {
  StackOptions opt;
  opt.K = 63;
  const PsfStack s = build_stack(helix(1, 5, 0.9), camera(), {10.0}, opt);
  const double red = dominant_lobe(s.at(0, 0)).angle, blue = dominant_lobe(s.at(0, 2)).angle;
  EXPECT_GT(std::abs(std::remainder(red - blue, 2 * std::numbers::pi)), 0.5 * std::numbers::pi / 180);
}

TEST(Rotation, AmbiguityBeyondHalfTurnPerLobe) {
  RotationTrace t;
  t.psis = {-2, -1, 0, 1, 2};
  t.unwrapped = {-1.8, -0.9, 0.0, 0.9, 1.8};
  const auto two = ambiguous_planes(t, 2);
  EXPECT_EQ(two, (std::vector<bool>{true, false, false, false, true}));
  const auto one = ambiguous_planes(t, 1);
  EXPECT_EQ(one, std::vector<bool>(5, false));
}

TEST(Rotation, AntipodalLobesForTwoPeaks) {
  StackOptions opt;
  opt.K = 63;
  const PsfStack s = build_stack(helix(2, 5, 0.9), camera(), {4.0}, opt);
  const auto pairs = lobe_pairs(s, 1);
  const double sep = std::abs(std::remainder(pairs[0].first - pairs[0].second, 2 * std::numbers::pi));
  EXPECT_NEAR(sep, std::numbers::pi, 2.0 * std::numbers::pi / 180);
}

TEST(StackIo, DirectoryRoundTrip) {
  const auto dir = scratch_dir("stackdir");
  const auto names = io::save_stack_dir(dir, default_stack());
  EXPECT_EQ(names.size(), 31u);
  EXPECT_EQ(names.front(), "kernel_d00_c0.pfm");
  for (const auto& p : {dir, dir / "stack.json"}) {
    const PsfStack back = io::load_stack(p);
    EXPECT_EQ(back.psis, default_stack().psis);
    EXPECT_EQ(back.wavelengths, default_stack().wavelengths);
    for (std::size_t i = 0; i < back.kernels.size(); ++i)
      EXPECT_LT(max_abs_diff(back.kernels[i], default_stack().kernels[i]), 1e-7);
  }
  std::filesystem::remove_all(dir);
}

TEST(StackIo, BinaryRoundTripAndCorruption) {
  const auto bytes = io::encode_stack_binary(default_stack());
  EXPECT_EQ(bytes.size(), 4 + 16 + 8 * 13 + 4 * 30 * 23 * 23u);
  const PsfStack back = io::decode_stack_binary(bytes);
  EXPECT_EQ(back.psis, default_stack().psis);
  for (std::size_t i = 0; i < back.kernels.size(); ++i)
    EXPECT_LT(max_abs_diff(back.kernels[i], default_stack().kernels[i]), 1e-7);
  auto bad = bytes;
  bad[0] = 'X';
  EXPECT_THROW(io::decode_stack_binary(bad), IoError);
  auto cut = bytes;
  cut.pop_back();
  EXPECT_THROW(io::decode_stack_binary(cut), IoError);
  auto extra = bytes;
  extra.push_back(0);
  EXPECT_THROW(io::decode_stack_binary(extra), IoError);
}

TEST(StackIo, MissingStackIsIoError) {
  EXPECT_THROW(io::load_stack("/nonexistent/stack.json"), IoError);
  const auto dir = scratch_dir("emptystack");
  EXPECT_THROW(io::load_stack(dir), IoError);
  std::filesystem::remove_all(dir);
}
