#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "lig/pipeline.hpp"
#include "lig/raster.hpp"
#include "support.hpp"

namespace lig {
namespace {

TEST(AllocatePoints, Examples) {
  auto a = allocate_points(35000000, 0.125);
  EXPECT_EQ(a.n0, 4375000u);
  EXPECT_EQ(a.n1, 30625000u);
  a = allocate_points(45000000, 0.125);
  EXPECT_EQ(a.n0, 5625000u);
  EXPECT_EQ(a.n1, 39375000u);
  a = allocate_points(8, 0.125);
  EXPECT_EQ(a.n0, 1u);
  EXPECT_EQ(a.n1, 7u);
}

TEST(AllocatePoints, ClampsAndConserves) {
  EXPECT_EQ(allocate_points(2, 0.01).n0, 1u);
  EXPECT_EQ(allocate_points(2, 0.99).n1, 1u);
  std::mt19937_64 rng(83);
  for (int i = 0; i < 10000; ++i) {
    const std::size_t total = 2 + rng() % 100000000;
    const double r = testing::uniform(rng, 1e-6, 1.0 - 1e-6);
    const auto a = allocate_points(total, r);
    ASSERT_EQ(a.n0 + a.n1, total);
    ASSERT_GE(a.n0, 1u);
    ASSERT_GE(a.n1, 1u);
  }
  EXPECT_THROW((void)allocate_points(1, 0.5), Error);
  EXPECT_THROW((void)allocate_points(10, 0.0), Error);
  EXPECT_THROW((void)allocate_points(10, 1.0), Error);
}

TEST(Downsample, ConstantAndBlockMean) {
  const Image c = downsample(Image(9, 7, 3, 0.3f), 4);
  EXPECT_EQ(c.width(), 3);
  EXPECT_EQ(c.height(), 2);
  for (float v : c.data()) EXPECT_FLOAT_EQ(v, 0.3f);

  Image sq(2, 2, 1);
  sq.at(0, 1, 0) = 1.0f;
  sq.at(1, 1, 0) = 1.0f;
  const Image one = downsample(sq, 2);
  EXPECT_EQ(one.width(), 1);
  EXPECT_EQ(one.at(0, 0, 0), 0.5f);
}

TEST(Downsample, RampWithPartialEdgeBlocks) {
  Image ramp(5, 5, 1);
  for (int y = 0; y < 5; ++y)
    for (int x = 0; x < 5; ++x) ramp.at(x, y, 0) = static_cast<float>(5 * y + x);
  const Image d = downsample(ramp, 2);
  ASSERT_EQ(d.width(), 3);
  ASSERT_EQ(d.height(), 3);
  // Hand-computed block means of v = 5y + x.
  const float expected[3][3] = {
      {3.0f, 5.0f, 6.5f},     // (0+1+5+6)/4, (2+3+7+8)/4, (4+9)/2
      {13.0f, 15.0f, 16.5f},  // rows 2-3
      {20.5f, 22.5f, 24.0f},  // row 4 only: (20+21)/2, (22+23)/2, 24
  };
  for (int y = 0; y < 3; ++y)
    for (int x = 0; x < 3; ++x) EXPECT_FLOAT_EQ(d.at(x, y, 0), expected[y][x]) << x << "," << y;
}

TEST(Downsample, PreservesMeanWhenFactorDivides) {
  std::mt19937_64 rng(89);
  const Image img = testing::random_image<float>(rng, 24, 16, 3, 0, 1);
  const Image d = downsample(img, 4);
  double a = 0, b = 0;
  for (float v : img.data()) a += v;
  for (float v : d.data()) b += v;
  EXPECT_NEAR(a / img.size(), b / d.size(), 1e-6);
}

TEST(Upsample, Examples) {
  Image src(2, 1, 1);
  src.at(1, 0, 0) = 1.0f;
  const Image up = upsample(src, 4, 1);
  EXPECT_FLOAT_EQ(up.at(0, 0, 0), 0.0f);
  EXPECT_FLOAT_EQ(up.at(1, 0, 0), 0.25f);
  EXPECT_FLOAT_EQ(up.at(2, 0, 0), 0.75f);
  EXPECT_FLOAT_EQ(up.at(3, 0, 0), 1.0f);

  const Image c = upsample(Image(3, 2, 2, 0.7f), 17, 9);
  for (float v : c.data()) EXPECT_EQ(v, 0.7f);

  const Image round = upsample(downsample(Image(16, 12, 1, 0.42f), 4), 16, 12);
  for (float v : round.data()) EXPECT_EQ(v, 0.42f);

  EXPECT_THROW((void)upsample(Image(4, 4, 1), 3, 4), Error);
}

TEST(NormalizeResidual, Examples) {
  Image r(3, 1, 1);
  r.at(0, 0, 0) = -0.3f;
  r.at(1, 0, 0) = 0.1f;
  r.at(2, 0, 0) = 0.5f;
  const auto n = normalize_residual(r);
  EXPECT_EQ(n.res_min, -0.3f);
  EXPECT_EQ(n.res_max, 0.5f);
  EXPECT_FLOAT_EQ(n.image.at(0, 0, 0), 0.0f);
  EXPECT_FLOAT_EQ(n.image.at(1, 0, 0), 0.5f);
  EXPECT_FLOAT_EQ(n.image.at(2, 0, 0), 1.0f);

  const auto z = normalize_residual(Image(4, 4, 3));
  EXPECT_EQ(z.res_min, 0.0f);
  EXPECT_EQ(z.res_max, 0.0f);
  for (float v : z.image.data()) EXPECT_EQ(v, 0.0f);

  Image bad(2, 2, 1);
  bad.at(0, 0, 0) = std::numeric_limits<float>::quiet_NaN();
  EXPECT_THROW((void)normalize_residual(bad), Error);
}

TEST(NormalizeResidual, GlobalBoundsAcrossChannels) {
  Image r(1, 1, 3);
  r.at(0, 0, 0) = -1.0f;
  r.at(0, 0, 2) = 3.0f;
  const auto n = normalize_residual(r);
  EXPECT_EQ(n.res_min, -1.0f);
  EXPECT_EQ(n.res_max, 3.0f);
  EXPECT_FLOAT_EQ(n.image.at(0, 0, 1), 0.25f);
}

TEST(NormalizeResidual, RoundTrip) {
  std::mt19937_64 rng(97);
  for (int trial = 0; trial < 50; ++trial) {
    const double lo = testing::uniform(rng, -1, 0), hi = testing::uniform(rng, 0.01, 1);
    const Image r = testing::random_image<float>(rng, 13, 7, 3, lo, hi);
    const auto n = normalize_residual(r);
    for (float v : n.image.data()) {
      ASSERT_GE(v, 0.0f);
      ASSERT_LE(v, 1.0f);
    }
    const Image back = denormalize(n.image, n.res_min, n.res_max);
    for (std::size_t i = 0; i < r.size(); ++i) ASSERT_NEAR(back.data()[i], r.data()[i], 1e-6);
  }
}

Cloud one_gaussian(float x, float y, float var, std::vector<float> color) {
  Cloud c(0, static_cast<int>(color.size()));
  c.push_back({{x, y}, {var, 0, var}, std::move(color)});
  return c;
}

TEST(Reconstruct, EmptyFineLevelIsUpsampledCoarse) {
  LogModel m;
  m.full_w = 16;
  m.full_h = 12;
  m.channels = 1;
  m.coarse = Level{4, 3, one_gaussian(2.0f, 1.5f, 1.5f, {0.8f})};
  m.fine = Level{16, 12, Cloud(0, 1)};
  m.res_min = m.res_max = 0.0f;
  const Image expected = upsample(render(m.coarse->cloud, 4, 3), 16, 12);
  EXPECT_EQ(reconstruct(m), expected);
}

TEST(Reconstruct, EmptyLevelsGiveZeros) {
  LogModel m;
  m.full_w = 8;
  m.full_h = 8;
  m.channels = 3;
  m.coarse = Level{2, 2, Cloud(0, 3)};
  m.fine = Level{8, 8, Cloud(0, 3)};
  m.res_min = m.res_max = 0.0f;
  const Image rec = reconstruct(m);
  for (float v : rec.data()) EXPECT_EQ(v, 0.0f);
}

TEST(Reconstruct, SingleLevelIsPlainRender) {
  LogModel m;
  m.full_w = 10;
  m.full_h = 10;
  m.channels = 1;
  m.fine = Level{10, 10, one_gaussian(5, 5, 4, {0.6f})};
  EXPECT_EQ(reconstruct(m), render(m.fine.cloud, 10, 10));
}

TEST(Psnr, Examples) {
  const Image a(4, 4, 1, 0.5f);
  EXPECT_EQ(psnr(a, a), std::numeric_limits<double>::infinity());
  EXPECT_DOUBLE_EQ(psnr_from_mse(0.01), 20.0);
  EXPECT_DOUBLE_EQ(psnr_from_mse(1e-4), 40.0);
  // Uniform offset of 0.1 gives MSE 0.01 up to float rounding of the samples.
  EXPECT_NEAR(psnr(Image(4, 4, 1, 0.6f), a), 20.0, 1e-5);
  EXPECT_THROW((void)psnr(a, Image(4, 4, 3)), Error);
}

TEST(Psnr, ClampsReconstruction) {
  const Image ref(2, 2, 1, 1.0f);
  EXPECT_EQ(psnr(Image(2, 2, 1, 5.0f), ref), std::numeric_limits<double>::infinity());
}

TEST(FitLog, ConstantImageReconstructsClosely) {
  LogConfig cfg;
  cfg.total_points = 64;
  cfg.fit.iters = 3000;
  cfg.fit.seed = 7;
  const Image img(32, 32, 3, 0.5f);
  const LogFit fit = fit_log(img, cfg);
  ASSERT_TRUE(fit.model.coarse.has_value());
  EXPECT_EQ(fit.model.coarse->width, 8);
  EXPECT_EQ(fit.model.coarse->height, 8);
  EXPECT_EQ(fit.model.coarse->cloud.size(), 8u);
  EXPECT_EQ(fit.model.fine.cloud.size(), 56u);
  EXPECT_LE(fit.model.res_min, fit.model.res_max);
  EXPECT_LT(fit.coarse_loss.back(), 1e-4);
  // Residual is small, so the stored bounds are tight around zero.
  EXPECT_LT(fit.model.res_max - fit.model.res_min, 0.05f);
  const Image rec = reconstruct(fit.model, cfg.fit.raster());
  double worst = 0;
  for (float v : rec.data()) {
    ASSERT_TRUE(std::isfinite(v));
    worst = std::max(worst, std::abs(v - 0.5));
  }
  EXPECT_LE(worst, 1e-3);
}

TEST(FitLog, ValidatesConfig) {
  LogConfig cfg;
  cfg.total_points = 1;
  EXPECT_THROW((void)fit_log(Image(8, 8, 1), cfg), Error);
  cfg.total_points = 16;
  cfg.down_factor = 1;
  EXPECT_THROW((void)fit_log(Image(8, 8, 1), cfg), Error);
  cfg.down_factor = 4;
  cfg.fit.iters = 1;
  EXPECT_THROW((void)fit_log(Image(3, 8, 1), cfg), Error);
}

TEST(FitLog, LevelsUseStatedShapes) {
  LogConfig cfg;
  cfg.total_points = 40;
  cfg.fit.iters = 20;
  std::mt19937_64 rng(5);
  const Image img = testing::random_image<float>(rng, 30, 21, 1, 0, 1);
  const LogFit fit = fit_log(img, cfg);
  EXPECT_EQ(fit.model.coarse->width, 8);
  EXPECT_EQ(fit.model.coarse->height, 6);
  EXPECT_EQ(fit.model.fine.width, 30);
  EXPECT_EQ(fit.model.fine.height, 21);
  EXPECT_EQ(fit.coarse_loss.size(), 20u);
  EXPECT_EQ(fit.fine_loss.size(), 20u);
  const Image rec = reconstruct(fit.model);
  for (float v : rec.data()) EXPECT_TRUE(std::isfinite(v));
}

TEST(FitSingle, StoresUnitBounds) {
  LogConfig cfg;
  cfg.total_points = 10;
  cfg.fit.iters = 5;
  const LogFit fit = fit_single(Image(12, 12, 1, 0.2f), cfg);
  EXPECT_FALSE(fit.model.coarse.has_value());
  EXPECT_EQ(fit.model.res_min, 0.0f);
  EXPECT_EQ(fit.model.res_max, 1.0f);
  EXPECT_EQ(fit.model.fine.cloud.size(), 10u);
  EXPECT_TRUE(fit.coarse_loss.empty());
}

}  // namespace
}  // namespace lig
