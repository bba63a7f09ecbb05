#pragma once

// Tile-based accumulated-summation rasterizer and its analytic backward pass.
//
// A pixel's value is the sum over Gaussians of color * exp(-sigma), where
// Gaussians with sigma < 0 at that pixel are dropped. The tiled path also
// drops Gaussians failing the per-Gaussian positive-definite check and
// pairs with sigma > sigma_cut. naive_render applies only the per-pixel
// sign filter and serves as the oracle.

#include <cstdint>
#include <functional>
#include <vector>

#include "lig/core.hpp"

namespace lig {

struct RasterConfig {
  int tile_size = 16;
  double sigma_cut = 9.21;
  // Margin used by the per-Gaussian filter (leading minor and determinant).
  double eps_det = kDefaultEpsDet;
  // Per-tile partial gradients reduced in tile order. When false, gradients
  // are accumulated into per-worker buffers whose summation order depends on
  // scheduling.
  bool deterministic = true;
};

struct TileGrid {
  int tile_size = 16;
  int tiles_x = 0;
  int tiles_y = 0;
  // bins[ty * tiles_x + tx] lists Gaussian indices in ascending order.
  std::vector<std::vector<std::uint32_t>> bins;

  const std::vector<std::uint32_t>& bin(int tx, int ty) const {
    return bins[static_cast<std::size_t>(ty) * tiles_x + tx];
  }
};

template <typename T>
struct ParamGrads {
  std::vector<T> d_mu;     // 2n, (x, y) interleaved
  std::vector<T> d_cov;    // 3n, (a, b, c) interleaved; d_b sums both off-diagonals
  std::vector<T> d_color;  // n * C

  ParamGrads() = default;
  ParamGrads(std::size_t n, int channels) : d_mu(2 * n), d_cov(3 * n), d_color(n * channels) {}
};

template <typename T>
TileGrid bin_gaussians(const GaussianCloud<T>& cloud, int width, int height, int tile_size,
                       double sigma_cut, double eps_det = kDefaultEpsDet);

template <typename T>
ImagePlane<T> render(const GaussianCloud<T>& cloud, int width, int height,
                     const RasterConfig& cfg = {});

template <typename T>
ImagePlane<T> naive_render(const GaussianCloud<T>& cloud, int width, int height,
                           const RasterConfig& cfg = {});

/// Gradients of sum_i d_image[i] * render(cloud)[i] with respect to every
/// parameter. d_image fixes the render dimensions.
template <typename T>
ParamGrads<T> render_backward(const GaussianCloud<T>& cloud, const ImagePlane<T>& d_image,
                              const RasterConfig& cfg = {});

/// Median calls-per-second of `op` over `repeats` timed calls after one
/// untimed warm-up. Requires repeats >= 3.
double median_rate(int repeats, const std::function<void()>& op);

/// Full-resolution renders per second of a single cloud.
template <typename T>
double benchmark_render(const GaussianCloud<T>& cloud, int width, int height, int repeats,
                        const RasterConfig& cfg = {});

}  // namespace lig
