#pragma once

// Shared generators and oracles for the unit and acceptance suites.

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "lig/core.hpp"
#include "lig/raster.hpp"

namespace lig::testing {

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

/// Well-conditioned PD covariance with variances in [lo, hi].
template <typename T>
CovUT<T> random_pd_cov(std::mt19937_64& rng, double lo, double hi) {
  const double a = uniform(rng, lo, hi);
  const double c = uniform(rng, lo, hi);
  const double rho = uniform(rng, -0.7, 0.7);
  return {static_cast<T>(a), static_cast<T>(rho * std::sqrt(a * c)), static_cast<T>(c)};
}

template <typename T>
GaussianCloud<T> random_cloud(std::mt19937_64& rng, std::size_t n, int w, int h, int channels,
                              double var_lo = 0.5, double var_hi = 16.0) {
  GaussianCloud<T> cloud(n, channels);
  for (std::size_t i = 0; i < n; ++i) {
    cloud.set_position(i, {static_cast<T>(uniform(rng, -2.0, w + 2.0)),
                           static_cast<T>(uniform(rng, -2.0, h + 2.0))});
    cloud.set_covariance(i, random_pd_cov<T>(rng, var_lo, var_hi));
    for (auto& c : cloud.color(i)) c = static_cast<T>(uniform(rng, -1.0, 1.0));
  }
  return cloud;
}

template <typename T>
ImagePlane<T> random_image(std::mt19937_64& rng, int w, int h, int channels, double lo = -1.0,
                           double hi = 1.0) {
  ImagePlane<T> img(w, h, channels);
  for (auto& v : img.data()) v = static_cast<T>(uniform(rng, lo, hi));
  return img;
}

/// Half the quadratic form, computed directly in double.
inline double sigma_at(const CovUT<double>& s, double mx, double my, double px, double py) {
  const double det = s.a * s.c - s.b * s.b;
  const double dx = px - mx, dy = py - my;
  return 0.5 * (s.c * dx * dx - 2.0 * s.b * dx * dy + s.a * dy * dy) / det;
}

/// Smallest distance between sigma_cut and the sigma of any pixel center.
/// Finite differences are meaningless for pairs sitting on the cutoff edge.
inline double cutoff_margin(const GaussianCloud<double>& cloud, int w, int h, double cut) {
  double margin = INFINITY;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto s = cloud.covariance(i);
    const auto mu = cloud.position(i);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        margin = std::min(margin, std::abs(sigma_at(s, mu.x, mu.y, x + 0.5, y + 0.5) - cut));
  }
  return margin;
}

struct GradCheck {
  std::size_t entries = 0;
  std::size_t failures = 0;
  double worst_ratio = 0.0;  // max |analytic - fd| / allowed
};

/// Compares render_backward against central differences of
/// sum(d_image * render) for every parameter of the cloud.
inline GradCheck check_gradients(GaussianCloud<double> cloud, const ImagePlane<double>& d_image,
                                 const RasterConfig& cfg, double step = 1e-4, double rel = 1e-5,
                                 double abs_floor = 1e-8) {
  const int w = d_image.width(), h = d_image.height();
  const ParamGrads<double> grads = render_backward(cloud, d_image, cfg);
  auto objective = [&](const GaussianCloud<double>& c) {
    const auto img = render(c, w, h, cfg);
    double sum = 0.0;
    for (std::size_t i = 0; i < img.size(); ++i) sum += img.data()[i] * d_image.data()[i];
    return sum;
  };
  GradCheck out;
  auto probe = [&](std::span<double> values, const std::vector<double>& analytic) {
    for (std::size_t k = 0; k < values.size(); ++k) {
      const double orig = values[k];
      values[k] = orig + step;
      const double up = objective(cloud);
      values[k] = orig - step;
      const double down = objective(cloud);
      values[k] = orig;
      const double fd = (up - down) / (2.0 * step);
      const double allowed = abs_floor + rel * std::max(std::abs(fd), std::abs(analytic[k]));
      const double ratio = std::abs(fd - analytic[k]) / allowed;
      out.worst_ratio = std::max(out.worst_ratio, ratio);
      ++out.entries;
      if (!(ratio <= 1.0)) ++out.failures;
    }
  };
  probe(cloud.positions(), grads.d_mu);
  probe(cloud.covariances(), grads.d_cov);
  probe(cloud.colors(), grads.d_color);
  return out;
}

}  // namespace lig::testing
