#include "lig/optim.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>

namespace lig {

void FitConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::kInvalidArgument, what); };
  if (iters < 1) fail("iters must be >= 1");
  if (!(lr > 0.0)) fail("lr must be > 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) fail("beta1 must be in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) fail("beta2 must be in [0, 1)");
  if (!(adam_eps > 0.0)) fail("adam_eps must be > 0");
  if (!(sigma_cut > 0.0)) fail("sigma_cut must be > 0");
  if (!(eps_psd > 0.0)) fail("eps_psd must be > 0");
  if (tile_size < 1) fail("tile_size must be >= 1");
  if (!(init_sigma_scale > 0.0)) fail("init_sigma_scale must be > 0");
}

template <typename T>
LossAndGrad<T> mse_loss(const ImagePlane<T>& rendered, const ImagePlane<T>& target) {
  if (!rendered.same_shape(target)) {
    throw Error(ErrorCode::kDimensionMismatch, "mse_loss: rendered and target shapes differ");
  }
  LossAndGrad<T> out{0.0, ImagePlane<T>(target.width(), target.height(), target.channels())};
  const auto r = rendered.data();
  const auto t = target.data();
  auto d = out.d_image.data();
  const double n = static_cast<double>(r.size());
  const double scale = 2.0 / n;
  double sum = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    const double diff = static_cast<double>(r[i]) - static_cast<double>(t[i]);
    sum += diff * diff;
    d[i] = static_cast<T>(scale * diff);
  }
  out.loss = sum / n;
  return out;
}

template <typename T>
void adam_step(std::span<const ParamGroup<T>> groups, AdamState<T>& state, const FitConfig& cfg) {
  std::size_t total = 0;
  for (const auto& g : groups) {
    if (g.values.size() != g.grads.size()) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "adam_step: group '" + std::string(g.name) + "' has mismatched gradient size");
    }
    for (std::size_t i = 0; i < g.grads.size(); ++i) {
      if (!std::isfinite(g.grads[i])) {
        throw Error(ErrorCode::kNonFinite, "adam_step: non-finite gradient in group '" +
                                               std::string(g.name) + "' at index " +
                                               std::to_string(i));
      }
    }
    total += g.values.size();
  }
  if (state.m.size() != total || state.v.size() != total) {
    throw Error(ErrorCode::kDimensionMismatch, "adam_step: state size does not match parameters");
  }

  state.t += 1;
  const double b1 = cfg.beta1;
  const double b2 = cfg.beta2;
  const double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.t));
  std::size_t k = 0;
  for (const auto& g : groups) {
    for (std::size_t i = 0; i < g.values.size(); ++i, ++k) {
      const double grad = g.grads[i];
      const double m = b1 * state.m[k] + (1.0 - b1) * grad;
      const double v = b2 * state.v[k] + (1.0 - b2) * grad * grad;
      state.m[k] = static_cast<T>(m);
      state.v[k] = static_cast<T>(v);
      const double step = cfg.lr * (m / bc1) / (std::sqrt(v / bc2) + cfg.adam_eps);
      g.values[i] = static_cast<T>(g.values[i] - step);
    }
  }
}

template <typename T>
std::vector<ParamGroup<T>> cloud_param_groups(GaussianCloud<T>& cloud, const ParamGrads<T>& grads) {
  return {
      {"position", cloud.positions(), grads.d_mu},
      {"covariance", cloud.covariances(), grads.d_cov},
      {"color", cloud.colors(), grads.d_color},
  };
}

float sample_bilinear(const Image& img, float x, float y, int channel) {
  const float fx = std::clamp(x - 0.5f, 0.0f, static_cast<float>(img.width() - 1));
  const float fy = std::clamp(y - 0.5f, 0.0f, static_cast<float>(img.height() - 1));
  const int x0 = static_cast<int>(fx);
  const int y0 = static_cast<int>(fy);
  const int x1 = std::min(x0 + 1, img.width() - 1);
  const int y1 = std::min(y0 + 1, img.height() - 1);
  const float wx = fx - static_cast<float>(x0);
  const float wy = fy - static_cast<float>(y0);
  const float top = (1.0f - wx) * img.at(x0, y0, channel) + wx * img.at(x1, y0, channel);
  const float bottom = (1.0f - wx) * img.at(x0, y1, channel) + wx * img.at(x1, y1, channel);
  return (1.0f - wy) * top + wy * bottom;
}

namespace {

// Uniform in [0, 1) from the top 53 bits; independent of the standard
// library's distribution implementation.
double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace

Cloud init_cloud(std::size_t n, const Image& target, std::uint64_t seed, const FitConfig& cfg) {
  if (n < 1) throw Error(ErrorCode::kInvalidArgument, "init_cloud: n must be >= 1");
  const double w = target.width();
  const double h = target.height();
  const double area = w * h;
  const double s = cfg.init_sigma_scale * std::sqrt(area / static_cast<double>(n));
  const double overlap = std::numbers::pi * (2.0 * cfg.sigma_cut) * s * s *
                         static_cast<double>(n) / area;
  const double k0 = std::max(overlap, 1.0);

  Cloud cloud(n, target.channels());
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    const auto x = static_cast<float>(unit_uniform(rng) * w);
    const auto y = static_cast<float>(unit_uniform(rng) * h);
    cloud.set_position(i, {x, y});
    cloud.set_covariance(i, {static_cast<float>(s * s), 0.0f, static_cast<float>(s * s)});
    auto col = cloud.color(i);
    for (int ch = 0; ch < target.channels(); ++ch) {
      col[ch] = cfg.zero_color_init
                    ? 0.0f
                    : static_cast<float>(sample_bilinear(target, x, y, ch) / k0);
    }
  }
  return cloud;
}

LevelFit fit_level(const Image& target, std::size_t n, const FitConfig& cfg) {
  cfg.validate();
  return fit_level_from(target, init_cloud(n, target, cfg.seed, cfg), cfg);
}

LevelFit fit_level_from(const Image& target, Cloud cloud, const FitConfig& cfg) {
  cfg.validate();
  for (float v : target.data()) {
    if (!std::isfinite(v)) throw Error(ErrorCode::kNonFinite, "fit_level: target is not finite");
  }
  const RasterConfig raster = cfg.raster();
  const auto eps_psd = static_cast<float>(cfg.eps_psd);
  AdamState<float> state(cloud.positions().size() + cloud.covariances().size() +
                         cloud.colors().size());
  LevelFit fit;
  fit.loss_history.reserve(cfg.iters);
  for (int it = 0; it < cfg.iters; ++it) {
    const Image rendered = render(cloud, target.width(), target.height(), raster);
    const auto [loss, d_image] = mse_loss(rendered, target);
    if (!std::isfinite(loss)) {
      throw Error(ErrorCode::kNonFinite,
                  "fit_level: non-finite loss at iteration " + std::to_string(it));
    }
    fit.loss_history.push_back(loss);
    const ParamGrads<float> grads = render_backward(cloud, d_image, raster);
    const auto groups = cloud_param_groups(cloud, grads);
    adam_step<float>(groups, state, cfg);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      cloud.set_covariance(i, repair_covariance(cloud.covariance(i), eps_psd));
    }
  }
  fit.cloud = std::move(cloud);
  return fit;
}

template LossAndGrad<float> mse_loss<float>(const ImagePlane<float>&, const ImagePlane<float>&);
template LossAndGrad<double> mse_loss<double>(const ImagePlane<double>&, const ImagePlane<double>&);
template void adam_step<float>(std::span<const ParamGroup<float>>, AdamState<float>&,
                               const FitConfig&);
template void adam_step<double>(std::span<const ParamGroup<double>>, AdamState<double>&,
                                const FitConfig&);
template std::vector<ParamGroup<float>> cloud_param_groups<float>(GaussianCloud<float>&,
                                                                  const ParamGrads<float>&);
template std::vector<ParamGroup<double>> cloud_param_groups<double>(GaussianCloud<double>&,
                                                                    const ParamGrads<double>&);

}  // namespace lig
