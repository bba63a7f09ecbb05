#pragma once

// Domain types and per-Gaussian math shared by the rasterizer and optimizer.
//
// Every type is templated on the scalar so the same code serves the
// single-precision production path and the double-precision reference path
// used by gradient checks.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "lig/error.hpp"

namespace lig {

inline constexpr double kDefaultEpsPsd = 1e-4;
inline constexpr double kDefaultEpsDet = 1e-8;

template <typename T>
struct Vec2 {
  T x{};
  T y{};

  friend bool operator==(const Vec2&, const Vec2&) = default;
};

/// Symmetric 2x2 matrix [[a, b], [b, c]] stored by its upper triangle.
template <typename T>
struct CovUT {
  T a{};
  T b{};
  T c{};

  T det() const { return a * c - b * b; }

  friend bool operator==(const CovUT&, const CovUT&) = default;
};

/// A single point of the cloud. The weighted color absorbs opacity, so there
/// is no separate opacity field and no sign or range constraint on color.
template <typename T>
struct Gaussian2D {
  Vec2<T> mu;
  CovUT<T> cov;
  std::vector<T> color;
};

/// Structure-of-arrays point set. Positions are interleaved (x, y), covariances
/// interleaved (a, b, c) and colors interleaved per point, which is also the
/// on-disk order.
template <typename T>
class GaussianCloud {
 public:
  GaussianCloud() = default;
  GaussianCloud(std::size_t n, int channels)
      : channels_(channels), mu_(2 * n), cov_(3 * n), color_(n * channels) {
    if (channels < 1) {
      throw Error(ErrorCode::kInvalidArgument, "cloud channels must be >= 1");
    }
  }

  std::size_t size() const { return mu_.size() / 2; }
  bool empty() const { return mu_.empty(); }
  int channels() const { return channels_; }

  Vec2<T> position(std::size_t i) const { return {mu_[2 * i], mu_[2 * i + 1]}; }
  void set_position(std::size_t i, Vec2<T> p) {
    mu_[2 * i] = p.x;
    mu_[2 * i + 1] = p.y;
  }

  CovUT<T> covariance(std::size_t i) const {
    return {cov_[3 * i], cov_[3 * i + 1], cov_[3 * i + 2]};
  }
  void set_covariance(std::size_t i, CovUT<T> s) {
    cov_[3 * i] = s.a;
    cov_[3 * i + 1] = s.b;
    cov_[3 * i + 2] = s.c;
  }

  std::span<T> color(std::size_t i) {
    return {color_.data() + i * channels_, static_cast<std::size_t>(channels_)};
  }
  std::span<const T> color(std::size_t i) const {
    return {color_.data() + i * channels_, static_cast<std::size_t>(channels_)};
  }

  Gaussian2D<T> gaussian(std::size_t i) const {
    auto c = color(i);
    return {position(i), covariance(i), std::vector<T>(c.begin(), c.end())};
  }

  void push_back(const Gaussian2D<T>& g) {
    if (static_cast<int>(g.color.size()) != channels_) {
      throw Error(ErrorCode::kDimensionMismatch, "gaussian color has wrong channel count");
    }
    mu_.insert(mu_.end(), {g.mu.x, g.mu.y});
    cov_.insert(cov_.end(), {g.cov.a, g.cov.b, g.cov.c});
    color_.insert(color_.end(), g.color.begin(), g.color.end());
  }

  // Raw parameter arrays, used by the optimizer and the serializer.
  std::span<T> positions() { return mu_; }
  std::span<const T> positions() const { return mu_; }
  std::span<T> covariances() { return cov_; }
  std::span<const T> covariances() const { return cov_; }
  std::span<T> colors() { return color_; }
  std::span<const T> colors() const { return color_; }

  bool operator==(const GaussianCloud&) const = default;

 private:
  int channels_ = 1;
  std::vector<T> mu_;
  std::vector<T> cov_;
  std::vector<T> color_;
};

/// Dense row-major H x W x C sample array. Pixel (x, y) has its center at
/// (x + 0.5, y + 0.5).
template <typename T>
class ImagePlane {
 public:
  ImagePlane() = default;
  ImagePlane(int width, int height, int channels, T fill = T(0)) {
    if (width < 1 || height < 1 || channels < 1) {
      throw Error(ErrorCode::kInvalidArgument, "image dimensions must be positive");
    }
    width_ = width;
    height_ = height;
    channels_ = channels;
    data_.assign(static_cast<std::size_t>(width) * height * channels, fill);
  }

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  std::size_t size() const { return data_.size(); }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width_) * height_; }

  T& at(int x, int y, int ch) { return data_[index(x, y, ch)]; }
  T at(int x, int y, int ch) const { return data_[index(x, y, ch)]; }

  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }

  bool same_shape(const ImagePlane& o) const {
    return width_ == o.width_ && height_ == o.height_ && channels_ == o.channels_;
  }
  template <typename U>
  bool same_shape(const ImagePlane<U>& o) const {
    return width_ == o.width() && height_ == o.height() && channels_ == o.channels();
  }

  bool operator==(const ImagePlane&) const = default;

 private:
  std::size_t index(int x, int y, int ch) const {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_ + ch;
  }

  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<T> data_;
};

using Cloud = GaussianCloud<float>;
using Image = ImagePlane<float>;

template <typename To, typename From>
GaussianCloud<To> cast_cloud(const GaussianCloud<From>& src) {
  GaussianCloud<To> out(src.size(), src.channels());
  std::copy(src.positions().begin(), src.positions().end(), out.positions().begin());
  std::copy(src.covariances().begin(), src.covariances().end(), out.covariances().begin());
  std::copy(src.colors().begin(), src.colors().end(), out.colors().begin());
  return out;
}

template <typename To, typename From>
ImagePlane<To> cast_image(const ImagePlane<From>& src) {
  ImagePlane<To> out(src.width(), src.height(), src.channels());
  std::copy(src.data().begin(), src.data().end(), out.data().begin());
  return out;
}

// ---------------------------------------------------------------------------
// Per-Gaussian math
// ---------------------------------------------------------------------------

/// Closed-form inverse. Returns the inverse and the determinant of the input.
template <typename T>
std::pair<CovUT<T>, T> invert_cov(const CovUT<T>& s, T eps_det = T(kDefaultEpsDet)) {
  const T det = s.det();
  if (!(std::abs(det) >= eps_det)) {
    throw Error(ErrorCode::kDegenerateCovariance,
                "degenerate covariance: |det| = " + std::to_string(std::abs(det)));
  }
  const T inv = T(1) / det;
  return {{s.c * inv, -s.b * inv, s.a * inv}, det};
}

/// Half the Mahalanobis quadratic form between p and the Gaussian center.
/// Negative when the covariance is indefinite; callers drop sigma < 0.
template <typename T>
T sigma(const Gaussian2D<T>& g, Vec2<T> p, T eps_det = T(kDefaultEpsDet)) {
  const auto [conic, det] = invert_cov(g.cov, eps_det);
  const T dx = p.x - g.mu.x;
  const T dy = p.y - g.mu.y;
  return T(0.5) * (conic.a * dx * dx + T(2) * conic.b * dx * dy + conic.c * dy * dy);
}

/// 2x2 Sylvester criterion with a margin: a >= eps and det >= eps.
template <typename T>
bool is_positive_definite(const CovUT<T>& s, T eps) {
  return s.a >= eps && s.det() >= eps;
}

/// Projects an arbitrary symmetric matrix back to a strictly positive definite
/// one: clamp the diagonal to eps_psd, then shrink the off-diagonal to
/// (1 - eps_psd) * sqrt(a * c). Inputs that already satisfy a, c >= eps_psd
/// and det >= eps_psd are returned unchanged. When the off-diagonal cap cannot
/// reach det >= eps_psd (tiny diagonals), the off-diagonal is reduced further
/// and, if needed, c is raised until the margin holds.
template <typename T>
CovUT<T> repair_covariance(const CovUT<T>& s, T eps_psd = T(kDefaultEpsPsd)) {
  if (s.c >= eps_psd && is_positive_definite(s, eps_psd)) {
    return s;
  }
  const auto floor_to = [eps_psd](T v) { return (v >= eps_psd) ? v : eps_psd; };
  CovUT<T> r{floor_to(s.a), T(0), floor_to(s.c)};
  const T sign = std::signbit(s.b) ? T(-1) : T(1);
  const T mag = std::isnan(s.b) ? T(0) : std::abs(s.b);
  r.b = sign * std::min(mag, (T(1) - eps_psd) * std::sqrt(r.a * r.c));
  if (is_positive_definite(r, eps_psd)) {
    return r;
  }
  const T slack = r.a * r.c - eps_psd;
  if (slack > T(0)) {
    r.b = sign * std::min(std::abs(r.b), (T(1) - eps_psd) * std::sqrt(slack));
    if (is_positive_definite(r, eps_psd)) {
      return r;
    }
  }
  r.b = T(0);
  if (r.a * r.c < eps_psd) {
    r.c = eps_psd / r.a;
  }
  while (r.a * r.c < eps_psd) {
    r.c = std::nextafter(r.c, std::numeric_limits<T>::infinity());
  }
  return r;
}

}  // namespace lig
