#pragma once

// Two-level coarse-to-fine fitting. A small cloud fits a box-downsampled copy
// of the image; a large cloud then fits the min-max normalized residual
// between the image and the upsampled coarse render.

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "lig/core.hpp"
#include "lig/optim.hpp"

namespace lig {

struct LogConfig {
  std::size_t total_points = 0;
  double ratio_r = 0.125;
  int down_factor = 4;
  FitConfig fit;

  void validate() const;
};

struct Level {
  int width = 0;
  int height = 0;
  Cloud cloud;

  bool operator==(const Level&) const = default;
};

/// The complete representation of one image. Single-level models have no
/// coarse level and carry res_min = 0, res_max = 1.
struct LogModel {
  int full_w = 0;
  int full_h = 0;
  int channels = 0;
  std::optional<Level> coarse;
  Level fine;
  float res_min = 0.0f;
  float res_max = 1.0f;

  bool operator==(const LogModel&) const = default;
};

struct Allocation {
  std::size_t n0 = 0;
  std::size_t n1 = 0;
};

Allocation allocate_points(std::size_t total, double r);

Image downsample(const Image& img, int factor);
Image upsample(const Image& img, int out_w, int out_h);

struct NormalizedResidual {
  Image image;
  float res_min = 0.0f;
  float res_max = 0.0f;
};

NormalizedResidual normalize_residual(const Image& residual);
Image denormalize(const Image& normalized, float res_min, float res_max);

struct LogFit {
  LogModel model;
  // Empty for single-level fits.
  std::vector<double> coarse_loss;
  std::vector<double> fine_loss;
};

LogFit fit_log(const Image& image, const LogConfig& cfg);

/// Baseline without levels: one cloud of total_points fitted to the image.
LogFit fit_single(const Image& image, const LogConfig& cfg);

Image reconstruct(const LogModel& model, const RasterConfig& raster = {});

/// Full reconstructions per second (two renders plus upsample and
/// denormalize for two-level models).
double benchmark_reconstruct(const LogModel& model, int repeats, const RasterConfig& raster = {});

/// 10 log10(1 / mse). Returns +infinity when mse == 0.
double psnr_from_mse(double mse);

/// PSNR of `reconstruction` (clamped to [0, 1]) against `reference`.
double psnr(const Image& reconstruction, const Image& reference);

}  // namespace lig
