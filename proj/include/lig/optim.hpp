#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "lig/core.hpp"
#include "lig/raster.hpp"

namespace lig {

struct FitConfig {
  int iters = 30000;
  double lr = 0.018;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double sigma_cut = 9.21;
  double eps_psd = kDefaultEpsPsd;
  int tile_size = 16;
  std::uint64_t seed = 0;
  double init_sigma_scale = 1.0;
  // Start every color at zero instead of sampling the target.
  bool zero_color_init = false;
  bool deterministic = true;

  RasterConfig raster() const {
    RasterConfig r;
    r.tile_size = tile_size;
    r.sigma_cut = sigma_cut;
    r.deterministic = deterministic;
    return r;
  }

  /// Throws kInvalidArgument when a field is out of range.
  void validate() const;
};

/// First and second moments for a flattened parameter vector.
template <typename T>
struct AdamState {
  std::vector<T> m;
  std::vector<T> v;
  std::int64_t t = 0;

  AdamState() = default;
  explicit AdamState(std::size_t n) : m(n, T(0)), v(n, T(0)) {}
};

/// A named slice of the parameter vector with its gradient.
template <typename T>
struct ParamGroup {
  std::string_view name;
  std::span<T> values;
  std::span<const T> grads;
};

template <typename T>
struct LossAndGrad {
  double loss = 0.0;
  ImagePlane<T> d_image;
};

template <typename T>
LossAndGrad<T> mse_loss(const ImagePlane<T>& rendered, const ImagePlane<T>& target);

/// One bias-corrected Adam update over consecutive groups. The groups are laid
/// out back to back in the state vectors. Every gradient is checked for
/// finiteness before anything is written; a bad entry aborts the whole step
/// with an error naming its group.
template <typename T>
void adam_step(std::span<const ParamGroup<T>> groups, AdamState<T>& state, const FitConfig& cfg);

/// Position, covariance and color groups of a cloud, in that order.
template <typename T>
std::vector<ParamGroup<T>> cloud_param_groups(GaussianCloud<T>& cloud, const ParamGrads<T>& grads);

/// Seeded random initialization: uniform positions, isotropic covariance sized
/// to the expected per-point footprint and colors sampled from the target,
/// scaled down by the expected local overlap count.
Cloud init_cloud(std::size_t n, const Image& target, std::uint64_t seed, const FitConfig& cfg);

/// Bilinear sample with half-pixel centers and clamp-to-edge.
float sample_bilinear(const Image& img, float x, float y, int channel);

struct LevelFit {
  Cloud cloud;
  std::vector<double> loss_history;  // loss before each step
};

/// Full-image Adam fit of n Gaussians to target, with covariance repair after
/// every step.
LevelFit fit_level(const Image& target, std::size_t n, const FitConfig& cfg);

/// Same loop starting from an explicit cloud.
LevelFit fit_level_from(const Image& target, Cloud cloud, const FitConfig& cfg);

}  // namespace lig
