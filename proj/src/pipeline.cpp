#include "lig/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "lig/raster.hpp"

namespace lig {

void LogConfig::validate() const {
  if (total_points < 2) throw Error(ErrorCode::kInvalidArgument, "total_points must be >= 2");
  if (!(ratio_r > 0.0 && ratio_r < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "ratio_r must be in (0, 1)");
  }
  if (down_factor < 2) throw Error(ErrorCode::kInvalidArgument, "down_factor must be >= 2");
  fit.validate();
}

Allocation allocate_points(std::size_t total, double r) {
  if (total < 2) throw Error(ErrorCode::kInvalidArgument, "allocate_points: total must be >= 2");
  if (!(r > 0.0 && r < 1.0)) throw Error(ErrorCode::kInvalidArgument, "allocate_points: r must be in (0, 1)");
  auto n0 = static_cast<std::size_t>(std::llround(r * static_cast<double>(total)));
  n0 = std::clamp<std::size_t>(n0, 1, total - 1);
  return {n0, total - n0};
}

Image downsample(const Image& img, int factor) {
  if (factor < 2) throw Error(ErrorCode::kInvalidArgument, "downsample: factor must be >= 2");
  const int ow = (img.width() + factor - 1) / factor;
  const int oh = (img.height() + factor - 1) / factor;
  const int channels = img.channels();
  Image out(ow, oh, channels);
  std::vector<double> acc(channels);
  for (int oy = 0; oy < oh; ++oy) {
    const int y1 = std::min((oy + 1) * factor, img.height());
    for (int ox = 0; ox < ow; ++ox) {
      const int x1 = std::min((ox + 1) * factor, img.width());
      std::fill(acc.begin(), acc.end(), 0.0);
      for (int y = oy * factor; y < y1; ++y)
        for (int x = ox * factor; x < x1; ++x)
          for (int ch = 0; ch < channels; ++ch) acc[ch] += img.at(x, y, ch);
      const double count = static_cast<double>((y1 - oy * factor) * (x1 - ox * factor));
      for (int ch = 0; ch < channels; ++ch) out.at(ox, oy, ch) = static_cast<float>(acc[ch] / count);
    }
  }
  return out;
}

namespace {

struct Tap {
  int i0, i1;
  double w1;  // weight of i1; i0 gets 1 - w1
};

// Half-pixel-center source taps for each output coordinate, clamped to edge.
std::vector<Tap> bilinear_taps(int in, int out) {
  std::vector<Tap> taps(out);
  const double scale = static_cast<double>(in) / out;
  for (int o = 0; o < out; ++o) {
    const double src = std::clamp((o + 0.5) * scale - 0.5, 0.0, static_cast<double>(in - 1));
    const int i0 = static_cast<int>(src);
    const int i1 = std::min(i0 + 1, in - 1);
    taps[o] = {i0, i1, src - i0};
  }
  return taps;
}

}  // namespace

Image upsample(const Image& img, int out_w, int out_h) {
  if (out_w < img.width() || out_h < img.height()) {
    throw Error(ErrorCode::kInvalidArgument, "upsample: output must not be smaller than input");
  }
  const auto tx = bilinear_taps(img.width(), out_w);
  const auto ty = bilinear_taps(img.height(), out_h);
  const int channels = img.channels();
  Image out(out_w, out_h, channels);
  for (int y = 0; y < out_h; ++y) {
    const Tap& v = ty[y];
    for (int x = 0; x < out_w; ++x) {
      const Tap& u = tx[x];
      for (int ch = 0; ch < channels; ++ch) {
        const double a = img.at(u.i0, v.i0, ch), b = img.at(u.i1, v.i0, ch);
        const double c = img.at(u.i0, v.i1, ch), d = img.at(u.i1, v.i1, ch);
        // Written as base + weighted differences so constant inputs stay exact.
        const double top = a + u.w1 * (b - a);
        const double bottom = c + u.w1 * (d - c);
        out.at(x, y, ch) = static_cast<float>(top + v.w1 * (bottom - top));
      }
    }
  }
  return out;
}

NormalizedResidual normalize_residual(const Image& residual) {
  float lo = std::numeric_limits<float>::infinity();
  float hi = -std::numeric_limits<float>::infinity();
  for (float v : residual.data()) {
    if (!std::isfinite(v)) throw Error(ErrorCode::kNonFinite, "normalize_residual: non-finite sample");
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  NormalizedResidual out{Image(residual.width(), residual.height(), residual.channels()), lo, hi};
  const double range = static_cast<double>(hi) - static_cast<double>(lo);
  if (range < 1e-12) {
    out.res_max = lo;
    return out;
  }
  auto dst = out.image.data();
  const auto src = residual.data();
  for (std::size_t i = 0; i < src.size(); ++i) {
    dst[i] = static_cast<float>((static_cast<double>(src[i]) - lo) / range);
  }
  return out;
}

Image denormalize(const Image& normalized, float res_min, float res_max) {
  Image out(normalized.width(), normalized.height(), normalized.channels());
  const double range = static_cast<double>(res_max) - static_cast<double>(res_min);
  const auto src = normalized.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) {
    dst[i] = static_cast<float>(static_cast<double>(src[i]) * range + res_min);
  }
  return out;
}

namespace {

void check_finite(const Image& image) {
  for (float v : image.data()) {
    if (!std::isfinite(v)) throw Error(ErrorCode::kNonFinite, "input image is not finite");
  }
}

}  // namespace

LogFit fit_log(const Image& image, const LogConfig& cfg) {
  cfg.validate();
  check_finite(image);
  if (image.width() < cfg.down_factor || image.height() < cfg.down_factor) {
    throw Error(ErrorCode::kInvalidArgument, "fit_log: image smaller than down_factor");
  }
  const Allocation alloc = allocate_points(cfg.total_points, cfg.ratio_r);
  const RasterConfig raster = cfg.fit.raster();

  const Image coarse_target = downsample(image, cfg.down_factor);
  FitConfig coarse_cfg = cfg.fit;
  LevelFit coarse = fit_level(coarse_target, alloc.n0, coarse_cfg);

  const Image coarse_render =
      render(coarse.cloud, coarse_target.width(), coarse_target.height(), raster);
  const Image up = upsample(coarse_render, image.width(), image.height());
  Image residual(image.width(), image.height(), image.channels());
  for (std::size_t i = 0; i < residual.size(); ++i) {
    residual.data()[i] = image.data()[i] - up.data()[i];
  }
  NormalizedResidual norm = normalize_residual(residual);

  FitConfig fine_cfg = cfg.fit;
  fine_cfg.seed = cfg.fit.seed + 1;
  LevelFit fine = fit_level(norm.image, alloc.n1, fine_cfg);

  LogFit out;
  out.model.full_w = image.width();
  out.model.full_h = image.height();
  out.model.channels = image.channels();
  out.model.coarse = Level{coarse_target.width(), coarse_target.height(), std::move(coarse.cloud)};
  out.model.fine = Level{image.width(), image.height(), std::move(fine.cloud)};
  out.model.res_min = norm.res_min;
  out.model.res_max = norm.res_max;
  out.coarse_loss = std::move(coarse.loss_history);
  out.fine_loss = std::move(fine.loss_history);
  return out;
}

LogFit fit_single(const Image& image, const LogConfig& cfg) {
  cfg.validate();
  check_finite(image);
  LevelFit fit = fit_level(image, cfg.total_points, cfg.fit);
  LogFit out;
  out.model.full_w = image.width();
  out.model.full_h = image.height();
  out.model.channels = image.channels();
  out.model.fine = Level{image.width(), image.height(), std::move(fit.cloud)};
  out.model.res_min = 0.0f;
  out.model.res_max = 1.0f;
  out.fine_loss = std::move(fit.loss_history);
  return out;
}

Image reconstruct(const LogModel& model, const RasterConfig& raster) {
  Image fine = denormalize(render(model.fine.cloud, model.fine.width, model.fine.height, raster),
                           model.res_min, model.res_max);
  if (model.coarse) {
    const Image coarse = render(model.coarse->cloud, model.coarse->width, model.coarse->height, raster);
    const Image up = upsample(coarse, model.full_w, model.full_h);
    for (std::size_t i = 0; i < fine.size(); ++i) fine.data()[i] += up.data()[i];
  }
  return fine;
}

double benchmark_reconstruct(const LogModel& model, int repeats, const RasterConfig& raster) {
  return median_rate(repeats, [&] { (void)reconstruct(model, raster); });
}

double psnr_from_mse(double mse) {
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

double psnr(const Image& reconstruction, const Image& reference) {
  if (!reconstruction.same_shape(reference)) {
    throw Error(ErrorCode::kDimensionMismatch,
                "psnr: " + std::to_string(reconstruction.width()) + "x" +
                    std::to_string(reconstruction.height()) + "x" +
                    std::to_string(reconstruction.channels()) + " vs " +
                    std::to_string(reference.width()) + "x" + std::to_string(reference.height()) +
                    "x" + std::to_string(reference.channels()));
  }
  const auto a = reconstruction.data();
  const auto b = reference.data();
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = std::clamp(static_cast<double>(a[i]), 0.0, 1.0) - static_cast<double>(b[i]);
    sum += d * d;
  }
  return psnr_from_mse(sum / static_cast<double>(a.size()));
}

}  // namespace lig
