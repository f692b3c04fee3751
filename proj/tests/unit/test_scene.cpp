#include <gtest/gtest.h>

#include "rpsf/convolve.hpp"
#include "rpsf/scene.hpp"
#include "rpsf/synthetic.hpp"

using namespace rpsf;
using namespace rpsf::scene;

namespace {

psf::PsfStack random_stack(std::size_t D, std::size_t C, std::size_t K, std::uint64_t seed) {
  synthetic::Stream rng(seed, 3);
  psf::PsfStack s;
  s.K = K;
  s.psis = psf::linspace(-1, 1, D);
  s.wavelengths.assign(C, 500e-9);
  for (std::size_t i = 0; i < D * C; ++i) {
    RealGrid k(K, K);
    for (auto& v : k.values()) v = rng.uniform();
    const double m = sum(k);
    for (auto& v : k.values()) v /= m;
    s.kernels.push_back(k);
  }
  return s;
}

Image random_image(std::size_t H, std::size_t W, std::size_t C, std::uint64_t seed) {
  synthetic::Stream rng(seed, 5);
  Image img(H, W, C);
  for (std::size_t c = 0; c < C; ++c)
    for (auto& v : img.channel(c).values()) v = rng.uniform();
  return img;
}

IndexMap random_index(std::size_t H, std::size_t W, std::size_t D, std::uint64_t seed) {
  synthetic::Stream rng(seed, 9);
  IndexMap m(H, W);
  for (auto& v : m.values()) v = int(rng.below(std::uint32_t(D)));
  return m;
}

}  // namespace

TEST(Quantize, NearestPlaneWithLowerTieBreak) {
  RealGrid z(1, 6);
  const std::vector<double> zs{0.9, 1.5, 1.6, 2.5, 10.0, -4.0};
  std::copy(zs.begin(), zs.end(), z.values().begin());
  const auto q = quantize_depth(z, {1.0, 2.0, 3.0});
  const auto idx = q.plane_index.values();
  EXPECT_EQ(std::vector<int>(idx.begin(), idx.end()), (std::vector<int>{0, 0, 1, 1, 2, 0}));
}

TEST(Quantize, SinglePlaneAndConstantDepth) {
  RealGrid z(4, 4, 7.0);
  const auto one = quantize_depth(z, {3.0});
  for (int v : one.plane_index.values()) EXPECT_EQ(v, 0);
  const auto q = quantize_depth(z, {1.0, 2.0, 4.0, 7.0, 8.0});
  for (int v : q.plane_index.values()) EXPECT_EQ(v, 3);
  for (auto m : q.masks[3].values()) EXPECT_EQ(m, 1);
  for (auto m : one.masks[0].values()) EXPECT_EQ(m, 1);
}

TEST(Quantize, MasksPartitionThePlane) {
  synthetic::Stream rng(4);
  RealGrid z(17, 13);
  for (auto& v : z.values()) v = 10 * rng.uniform();
  const auto q = quantize_depth(z, {1, 2, 4, 8});
  for (std::size_t i = 0; i < z.size(); ++i) {
    int total = 0;
    for (const auto& m : q.masks) total += m.values()[i];
    EXPECT_EQ(total, 1);
  }
}

TEST(Quantize, RejectsUnorderedPlanes) {
  EXPECT_THROW(quantize_depth(RealGrid(2, 2), {}), ConfigError);
  EXPECT_THROW(quantize_depth(RealGrid(2, 2), {2.0, 1.0}), ConfigError);
  EXPECT_THROW(quantize_depth(RealGrid(2, 2), {1.0, 1.0}), ConfigError);
}

TEST(Render, ImpulseReproducesKernel) {
  const auto stack = random_stack(2, 3, 7, 1);
  LayeredScene s{Image(21, 21, 3), IndexMap(21, 21, 1), 2};
  for (std::size_t c = 0; c < 3; ++c) s.aif(10, 10, c) = 1.0;
  const Image out = render(s, stack);
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t u = 0; u < 7; ++u)
      for (std::size_t v = 0; v < 7; ++v) EXPECT_NEAR(out(7 + u, 7 + v, c), stack.at(1, c)(u, v), 1e-9);
}

TEST(Render, ConstantImageStaysConstant) {
  const auto stack = random_stack(4, 3, 9, 2);
  LayeredScene s{Image(24, 30, 3, 0.37), random_index(24, 30, 4, 2), 4};
  const Image out = render(s, stack);
  for (std::size_t c = 0; c < 3; ++c)
    for (double v : out.channel(c).values()) EXPECT_NEAR(v, 0.37, 1e-12);
}

TEST(Render, ConstantDepthPreservesMeanBrightness) {
  // textured interior, constant frame at least K/2 + 1 wide so reflect padding adds no net mass
  const auto stack = random_stack(3, 3, 9, 7);
  Image aif = random_image(40, 36, 3, 8);
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t r = 0; r < 40; ++r)
      for (std::size_t q = 0; q < 36; ++q)
        if (std::min({r, q, 39 - r, 35 - q}) < 5) aif(r, q, c) = 0.6;
  const Image out = render({aif, IndexMap(40, 36, 1), 3}, stack);
  for (std::size_t c = 0; c < 3; ++c) EXPECT_NEAR(mean(out.channel(c)), mean(aif.channel(c)), 1e-6);
}

TEST(Render, LinearInTheImage) {
  const auto stack = random_stack(3, 3, 5, 3);
  const auto idx = random_index(20, 20, 3, 3);
  const Image a = random_image(20, 20, 3, 10), b = random_image(20, 20, 3, 11);
  Image sum_ab(20, 20, 3);
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < 400; ++i)
      sum_ab.channel(c).values()[i] = 2 * a.channel(c).values()[i] + b.channel(c).values()[i];
  const Image ra = render({a, idx, 3}, stack), rb = render({b, idx, 3}, stack), rs = render({sum_ab, idx, 3}, stack);
  double worst = 0;
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < 400; ++i)
      worst = std::max(worst, std::abs(rs.channel(c).values()[i] - 2 * ra.channel(c).values()[i] - rb.channel(c).values()[i]));
  EXPECT_LT(worst, 1e-12);
}

TEST(Render, SinglePlaneIsPlainConvolution) {
  const auto stack = random_stack(3, 2, 7, 4);
  const Image aif = random_image(16, 18, 2, 12);
  const Image out = render({aif, IndexMap(16, 18, 2), 3}, stack);
  const Image circ = render_circular({aif, IndexMap(16, 18, 2), 3}, stack);
  for (std::size_t c = 0; c < 2; ++c) {
    EXPECT_LT(max_abs_diff(out.channel(c), convolve_reflect(aif.channel(c), stack.at(2, c))), 1e-12);
    EXPECT_LT(max_abs_diff(circ.channel(c), convolve_circular(aif.channel(c), stack.at(2, c))), 1e-12);
  }
}

TEST(Render, LayersComposeByMask) {
  const auto stack = random_stack(2, 1, 5, 5);
  const Image aif = random_image(12, 12, 1, 13);
  const auto idx = random_index(12, 12, 2, 5);
  const Image out = render({aif, idx, 2}, stack);
  const RealGrid l0 = convolve_reflect(aif.channel(0), stack.at(0, 0));
  const RealGrid l1 = convolve_reflect(aif.channel(0), stack.at(1, 0));
  for (std::size_t i = 0; i < 144; ++i)
    EXPECT_NEAR(out.channel(0).values()[i], idx.values()[i] ? l1.values()[i] : l0.values()[i], 1e-12);
}

TEST(Render, DimensionMismatchesRejected) {
  const auto stack = random_stack(2, 3, 5, 6);
  EXPECT_THROW(render({Image(8, 8, 3), IndexMap(8, 8), 3}, stack), DimensionError);
  EXPECT_THROW(render({Image(8, 8, 1), IndexMap(8, 8), 2}, stack), DimensionError);
  EXPECT_THROW(render({Image(8, 8, 3), IndexMap(8, 9), 2}, stack), DimensionError);
  EXPECT_THROW(render({Image(8, 8, 3), IndexMap(8, 8, 2), 2}, stack), DimensionError);
  EXPECT_THROW(render_circular({Image(8, 8, 3), IndexMap(8, 8), 3}, stack), DimensionError);
  EXPECT_THROW(masks_from_index(IndexMap(2, 2, -1), 2), DimensionError);
}

TEST(Synthetic, QuadrantsUseDistinctPlanes) {
  const auto s = synthetic::textured_quadrants(32, 9, 7);
  EXPECT_NO_THROW(s.validate());
  const std::set<int> q{s.plane_index(0, 0), s.plane_index(0, 31), s.plane_index(31, 0), s.plane_index(31, 31)};
  EXPECT_EQ(q.size(), 4u);
  EXPECT_EQ(synthetic::textured_quadrants(32, 9, 7).aif, s.aif);
  EXPECT_NE(synthetic::textured_quadrants(32, 9, 8).aif, s.aif);
  EXPECT_THROW(synthetic::textured_quadrants(31, 9, 7), ConfigError);
}
