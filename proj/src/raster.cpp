#include "lig/raster.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "lig/fast_exp.hpp"
#include "lig/parallel.hpp"

namespace lig {
namespace {

// Per-Gaussian quantities shared by every pixel it touches.
template <typename T>
struct Prepared {
  bool live = false;
  T mx{}, my{};
  T ia{}, ib{}, ic{};  // inverse covariance
  // Inclusive pixel-index range whose centers lie inside the cutoff box.
  int px0 = 0, px1 = -1, py0 = 0, py1 = -1;
  // Inclusive tile range whose rectangles overlap the cutoff box.
  int tx0 = 0, tx1 = -1, ty0 = 0, ty1 = -1;
};

struct Range {
  int lo;
  int hi;  // inclusive
};

// Pixels whose centers x + 0.5 lie in [lo, hi], clamped to [0, n - 1].
Range center_range(double lo, double hi, int n) {
  const double a = std::max(std::ceil(lo - 0.5), 0.0);
  const double b = std::min(std::floor(hi - 0.5), static_cast<double>(n - 1));
  if (!(a <= b)) return {0, -1};
  return {static_cast<int>(a), static_cast<int>(b)};
}

// Tiles whose closed rectangle [t * size, min((t + 1) * size, n)] meets [lo, hi].
Range tile_range(double lo, double hi, int n, int size, int tiles) {
  if (!(hi >= 0.0 && lo <= static_cast<double>(n))) return {0, -1};
  const double a = std::max(std::floor(lo / size), 0.0);
  const double b = std::min(std::floor(hi / size), static_cast<double>(tiles - 1));
  if (!(a <= b)) return {0, -1};
  return {static_cast<int>(a), static_cast<int>(b)};
}

template <typename T>
std::vector<Prepared<T>> prepare(const GaussianCloud<T>& cloud, int width, int height,
                                 int tile_size, double sigma_cut, double eps_det) {
  const int tiles_x = (width + tile_size - 1) / tile_size;
  const int tiles_y = (height + tile_size - 1) / tile_size;
  const double radius = std::sqrt(2.0 * sigma_cut);
  std::vector<Prepared<T>> out(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const CovUT<T> s = cloud.covariance(i);
    const Vec2<T> mu = cloud.position(i);
    Prepared<T>& p = out[i];
    if (!is_positive_definite(s, static_cast<T>(eps_det)) || !std::isfinite(mu.x) ||
        !std::isfinite(mu.y) || !std::isfinite(s.c)) {
      continue;
    }
    const auto [conic, det] = invert_cov(s, static_cast<T>(eps_det));
    p.mx = mu.x;
    p.my = mu.y;
    p.ia = conic.a;
    p.ib = conic.b;
    p.ic = conic.c;
    const double ex = radius * std::sqrt(static_cast<double>(s.a));
    const double ey = radius * std::sqrt(static_cast<double>(s.c));
    const double x_lo = static_cast<double>(mu.x) - ex, x_hi = static_cast<double>(mu.x) + ex;
    const double y_lo = static_cast<double>(mu.y) - ey, y_hi = static_cast<double>(mu.y) + ey;
    const Range tx = tile_range(x_lo, x_hi, width, tile_size, tiles_x);
    const Range ty = tile_range(y_lo, y_hi, height, tile_size, tiles_y);
    if (tx.lo > tx.hi || ty.lo > ty.hi) continue;
    const Range px = center_range(x_lo, x_hi, width);
    const Range py = center_range(y_lo, y_hi, height);
    p.live = true;
    p.tx0 = tx.lo;
    p.tx1 = tx.hi;
    p.ty0 = ty.lo;
    p.ty1 = ty.hi;
    p.px0 = px.lo;
    p.px1 = px.hi;
    p.py0 = py.lo;
    p.py1 = py.hi;
  }
  return out;
}

template <typename T>
TileGrid bin_prepared(const std::vector<Prepared<T>>& prep, int width, int height,
                      int tile_size) {
  TileGrid grid;
  grid.tile_size = tile_size;
  grid.tiles_x = (width + tile_size - 1) / tile_size;
  grid.tiles_y = (height + tile_size - 1) / tile_size;
  const std::size_t tiles = static_cast<std::size_t>(grid.tiles_x) * grid.tiles_y;
  std::vector<std::uint32_t> counts(tiles, 0);
  for (const auto& p : prep) {
    if (!p.live) continue;
    for (int ty = p.ty0; ty <= p.ty1; ++ty)
      for (int tx = p.tx0; tx <= p.tx1; ++tx) ++counts[static_cast<std::size_t>(ty) * grid.tiles_x + tx];
  }
  grid.bins.resize(tiles);
  for (std::size_t t = 0; t < tiles; ++t) grid.bins[t].reserve(counts[t]);
  for (std::size_t i = 0; i < prep.size(); ++i) {
    const auto& p = prep[i];
    if (!p.live) continue;
    for (int ty = p.ty0; ty <= p.ty1; ++ty)
      for (int tx = p.tx0; tx <= p.tx1; ++tx)
        grid.bins[static_cast<std::size_t>(ty) * grid.tiles_x + tx].push_back(
            static_cast<std::uint32_t>(i));
  }
  return grid;
}

void check_tile_size(int tile_size) {
  if (tile_size < 1) throw Error(ErrorCode::kInvalidArgument, "tile_size must be >= 1");
}

// Pixel rectangle of tile (tx, ty) intersected with a Gaussian's pixel box.
template <typename T>
bool clip_to_tile(const Prepared<T>& p, int tx, int ty, int tile_size, int width, int height,
                  Range& xs, Range& ys) {
  xs = {std::max(p.px0, tx * tile_size), std::min({p.px1, (tx + 1) * tile_size - 1, width - 1})};
  ys = {std::max(p.py0, ty * tile_size), std::min({p.py1, (ty + 1) * tile_size - 1, height - 1})};
  return xs.lo <= xs.hi && ys.lo <= ys.hi;
}

// exp(-sigma) along one pixel row of a Gaussian, zero where sigma falls
// outside [0, cut]. Shared by forward and backward so both make identical
// filter decisions. Split into three simple loops so each one vectorizes;
// `sig` is scratch of at least len entries.
template <typename T>
void row_weights(const Prepared<T>& p, int x0, int len, T dy, T cut, T* __restrict weight,
                 T* __restrict sig) {
  const T by = p.ib * dy;
  const T cy = p.ic * dy;
  for (int i = 0; i < len; ++i) {
    const T dx = (static_cast<T>(x0 + i) + T(0.5)) - p.mx;
    const T ux = p.ia * dx + by;
    const T uy = p.ib * dx + cy;
    sig[i] = T(0.5) * (dx * ux + dy * uy);
  }
  for (int i = 0; i < len; ++i) weight[i] = exp_neg(std::min(std::max(sig[i], T(0)), cut));
  for (int i = 0; i < len; ++i) weight[i] = (sig[i] >= T(0) && sig[i] <= cut) ? weight[i] : T(0);
}

}  // namespace

template <typename T>
TileGrid bin_gaussians(const GaussianCloud<T>& cloud, int width, int height, int tile_size,
                       double sigma_cut, double eps_det) {
  check_tile_size(tile_size);
  if (width < 1 || height < 1) throw Error(ErrorCode::kInvalidArgument, "bad render size");
  return bin_prepared(prepare(cloud, width, height, tile_size, sigma_cut, eps_det), width, height,
                      tile_size);
}

template <typename T>
ImagePlane<T> render(const GaussianCloud<T>& cloud, int width, int height,
                     const RasterConfig& cfg) {
  check_tile_size(cfg.tile_size);
  ImagePlane<T> out(width, height, cloud.channels());
  const auto prep = prepare(cloud, width, height, cfg.tile_size, cfg.sigma_cut, cfg.eps_det);
  const TileGrid grid = bin_prepared(prep, width, height, cfg.tile_size);
  const int channels = cloud.channels();
  const int ts = cfg.tile_size;
  const T cut = static_cast<T>(cfg.sigma_cut);
  const auto colors = cloud.colors();
  auto data = out.data();

  parallel_for(grid.bins.size(), worker_count(), [&](std::size_t t, int) {
    const int tx = static_cast<int>(t % grid.tiles_x);
    const int ty = static_cast<int>(t / grid.tiles_x);
    // Planar tile accumulator: channel-major, ts x ts per channel.
    std::vector<T> acc(static_cast<std::size_t>(ts) * ts * channels, T(0));
    std::vector<T> weight(ts), sig(ts);
    for (const std::uint32_t gi : grid.bins[t]) {
      const Prepared<T>& p = prep[gi];
      Range xs, ys;
      if (!clip_to_tile(p, tx, ty, ts, width, height, xs, ys)) continue;
      const T* col = colors.data() + static_cast<std::size_t>(gi) * channels;
      const int len = xs.hi - xs.lo + 1;
      for (int y = ys.lo; y <= ys.hi; ++y) {
        const T dy = (static_cast<T>(y) + T(0.5)) - p.my;
        row_weights(p, xs.lo, len, dy, cut, weight.data(), sig.data());
        const std::size_t base = static_cast<std::size_t>(y - ty * ts) * ts + (xs.lo - tx * ts);
        for (int ch = 0; ch < channels; ++ch) {
          T* __restrict dst = acc.data() + static_cast<std::size_t>(ch) * ts * ts + base;
          const T c = col[ch];
          for (int i = 0; i < len; ++i) dst[i] += c * weight[i];
        }
      }
    }
    const int x_end = std::min((tx + 1) * ts, width);
    const int y_end = std::min((ty + 1) * ts, height);
    for (int y = ty * ts; y < y_end; ++y) {
      for (int x = tx * ts; x < x_end; ++x) {
        const std::size_t local = static_cast<std::size_t>(y - ty * ts) * ts + (x - tx * ts);
        T* px = data.data() + (static_cast<std::size_t>(y) * width + x) * channels;
        for (int ch = 0; ch < channels; ++ch) px[ch] = acc[static_cast<std::size_t>(ch) * ts * ts + local];
      }
    }
  });
  return out;
}

template <typename T>
ImagePlane<T> naive_render(const GaussianCloud<T>& cloud, int width, int height,
                           const RasterConfig& cfg) {
  ImagePlane<T> out(width, height, cloud.channels());
  const int channels = cloud.channels();
  struct Conic {
    bool ok;
    T mx, my, ia, ib, ic;
  };
  std::vector<Conic> conics(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const CovUT<T> s = cloud.covariance(i);
    const Vec2<T> mu = cloud.position(i);
    const T det = s.det();
    if (!(std::abs(det) >= static_cast<T>(cfg.eps_det))) {
      conics[i].ok = false;
      continue;
    }
    conics[i] = {true, mu.x, mu.y, s.c / det, -s.b / det, s.a / det};
  }
  const auto colors = cloud.colors();
  auto data = out.data();
  parallel_for(static_cast<std::size_t>(height), worker_count(), [&](std::size_t yi, int) {
    const int y = static_cast<int>(yi);
    for (int x = 0; x < width; ++x) {
      T* px = data.data() + (static_cast<std::size_t>(y) * width + x) * channels;
      for (std::size_t i = 0; i < conics.size(); ++i) {
        const Conic& g = conics[i];
        if (!g.ok) continue;
        const T dx = (static_cast<T>(x) + T(0.5)) - g.mx;
        const T dy = (static_cast<T>(y) + T(0.5)) - g.my;
        const T s = T(0.5) * (g.ia * dx * dx + T(2) * g.ib * dx * dy + g.ic * dy * dy);
        if (!(s >= T(0))) continue;
        const T e = std::exp(-s);
        const T* col = colors.data() + i * channels;
        for (int ch = 0; ch < channels; ++ch) px[ch] += col[ch] * e;
      }
    }
  });
  return out;
}

template <typename T>
ParamGrads<T> render_backward(const GaussianCloud<T>& cloud, const ImagePlane<T>& d_image,
                              const RasterConfig& cfg) {
  check_tile_size(cfg.tile_size);
  if (d_image.channels() != cloud.channels()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "d_image has " + std::to_string(d_image.channels()) + " channels, cloud has " +
                    std::to_string(cloud.channels()));
  }
  const int width = d_image.width();
  const int height = d_image.height();
  const int channels = cloud.channels();
  const std::size_t stride = 5 + static_cast<std::size_t>(channels);
  const auto prep = prepare(cloud, width, height, cfg.tile_size, cfg.sigma_cut, cfg.eps_det);
  const TileGrid grid = bin_prepared(prep, width, height, cfg.tile_size);
  const T cut = static_cast<T>(cfg.sigma_cut);
  const auto colors = cloud.colors();
  const auto dimg = d_image.data();

  const int ts = cfg.tile_size;
  const std::size_t plane = static_cast<std::size_t>(ts) * ts;

  // Per-worker scratch: planar copy of the tile's d_image, plus per-lane
  // accumulators (one row of ts lanes per gradient component).
  struct Scratch {
    std::vector<T> grad_tile, weight, lanes, temp, sig;
  };
  const int workers = worker_count();
  std::vector<Scratch> scratch(workers);
  for (auto& sc : scratch) {
    sc.grad_tile.resize(plane * channels);
    sc.weight.resize(ts);
    sc.lanes.resize(stride * ts);
    sc.temp.resize(ts);
    sc.sig.resize(ts);
  }

  auto load_tile = [&](int tx, int ty, Scratch& sc) {
    std::fill(sc.grad_tile.begin(), sc.grad_tile.end(), T(0));
    const int x_end = std::min((tx + 1) * ts, width);
    const int y_end = std::min((ty + 1) * ts, height);
    for (int y = ty * ts; y < y_end; ++y)
      for (int x = tx * ts; x < x_end; ++x) {
        const std::size_t local = static_cast<std::size_t>(y - ty * ts) * ts + (x - tx * ts);
        const T* g = dimg.data() + (static_cast<std::size_t>(y) * width + x) * channels;
        for (int ch = 0; ch < channels; ++ch) sc.grad_tile[ch * plane + local] = g[ch];
      }
  };

  // Adds the gradient of one Gaussian over the pixels it covers in a tile to
  // acc = [d_mx, d_my, d_a, d_b, d_c, d_color...]. Lanes are summed in a
  // fixed order, so the result does not depend on scheduling.
  auto tile_gaussian = [&](int tx, int ty, std::uint32_t gi, T* acc, Scratch& sc) {
    const Prepared<T>& p = prep[gi];
    Range xs, ys;
    if (!clip_to_tile(p, tx, ty, ts, width, height, xs, ys)) return;
    const T* col = colors.data() + static_cast<std::size_t>(gi) * channels;
    const int len = xs.hi - xs.lo + 1;
    T* lanes = sc.lanes.data();
    std::fill(lanes, lanes + stride * ts, T(0));
    T* __restrict e = sc.weight.data();
    T* __restrict w = sc.temp.data();
    for (int y = ys.lo; y <= ys.hi; ++y) {
      const T dy = (static_cast<T>(y) + T(0.5)) - p.my;
      row_weights(p, xs.lo, len, dy, cut, e, sc.sig.data());
      const std::size_t base = static_cast<std::size_t>(y - ty * ts) * ts + (xs.lo - tx * ts);
      for (int i = 0; i < len; ++i) w[i] = T(0);
      for (int ch = 0; ch < channels; ++ch) {
        const T* __restrict g = sc.grad_tile.data() + ch * plane + base;
        T* lane = lanes + (5 + ch) * ts;
        const T c = col[ch];
        for (int i = 0; i < len; ++i) {
          lane[i] += g[i] * e[i];
          w[i] += g[i] * c;
        }
      }
      const T by = p.ib * dy;
      const T cy = p.ic * dy;
      T* __restrict l0 = lanes;
      T* __restrict l1 = lanes + ts;
      T* __restrict l2 = lanes + 2 * ts;
      T* __restrict l3 = lanes + 3 * ts;
      T* __restrict l4 = lanes + 4 * ts;
      for (int i = 0; i < len; ++i) {
        const T dx = (static_cast<T>(xs.lo + i) + T(0.5)) - p.mx;
        const T ux = p.ia * dx + by;  // inverse covariance times d
        const T uy = p.ib * dx + cy;
        const T we = w[i] * e[i];
        l0[i] += we * ux;
        l1[i] += we * uy;
        l2[i] += T(0.5) * we * ux * ux;
        l3[i] += we * ux * uy;
        l4[i] += T(0.5) * we * uy * uy;
      }
    }
    for (std::size_t k = 0; k < stride; ++k) {
      T sum = T(0);
      for (int i = 0; i < len; ++i) sum += lanes[k * ts + i];
      acc[k] += sum;
    }
  };

  ParamGrads<T> out(cloud.size(), channels);
  auto scatter = [&](std::uint32_t gi, const T* acc) {
    out.d_mu[2 * gi] += acc[0];
    out.d_mu[2 * gi + 1] += acc[1];
    out.d_cov[3 * gi] += acc[2];
    out.d_cov[3 * gi + 1] += acc[3];
    out.d_cov[3 * gi + 2] += acc[4];
    for (int ch = 0; ch < channels; ++ch) {
      out.d_color[static_cast<std::size_t>(gi) * channels + ch] += acc[5 + ch];
    }
  };

  if (cfg.deterministic) {
    std::vector<std::size_t> offsets(grid.bins.size() + 1, 0);
    for (std::size_t t = 0; t < grid.bins.size(); ++t) {
      offsets[t + 1] = offsets[t] + grid.bins[t].size();
    }
    std::vector<T> partial(offsets.back() * stride, T(0));
    parallel_for(grid.bins.size(), workers, [&](std::size_t t, int worker) {
      const int tx = static_cast<int>(t % grid.tiles_x);
      const int ty = static_cast<int>(t / grid.tiles_x);
      const auto& bin = grid.bins[t];
      if (bin.empty()) return;
      load_tile(tx, ty, scratch[worker]);
      for (std::size_t k = 0; k < bin.size(); ++k) {
        tile_gaussian(tx, ty, bin[k], partial.data() + (offsets[t] + k) * stride, scratch[worker]);
      }
    });
    for (std::size_t t = 0; t < grid.bins.size(); ++t) {
      const auto& bin = grid.bins[t];
      for (std::size_t k = 0; k < bin.size(); ++k) {
        scatter(bin[k], partial.data() + (offsets[t] + k) * stride);
      }
    }
  } else {
    std::vector<ParamGrads<T>> per_worker(workers, ParamGrads<T>(cloud.size(), channels));
    parallel_for(grid.bins.size(), workers, [&](std::size_t t, int worker) {
      const int tx = static_cast<int>(t % grid.tiles_x);
      const int ty = static_cast<int>(t / grid.tiles_x);
      if (grid.bins[t].empty()) return;
      ParamGrads<T>& mine = per_worker[worker];
      load_tile(tx, ty, scratch[worker]);
      std::vector<T> acc(stride);
      for (const std::uint32_t gi : grid.bins[t]) {
        std::fill(acc.begin(), acc.end(), T(0));
        tile_gaussian(tx, ty, gi, acc.data(), scratch[worker]);
        mine.d_mu[2 * gi] += acc[0];
        mine.d_mu[2 * gi + 1] += acc[1];
        mine.d_cov[3 * gi] += acc[2];
        mine.d_cov[3 * gi + 1] += acc[3];
        mine.d_cov[3 * gi + 2] += acc[4];
        for (int ch = 0; ch < channels; ++ch) {
          mine.d_color[static_cast<std::size_t>(gi) * channels + ch] += acc[5 + ch];
        }
      }
    });
    for (const auto& w : per_worker) {
      std::transform(out.d_mu.begin(), out.d_mu.end(), w.d_mu.begin(), out.d_mu.begin(),
                     std::plus<>());
      std::transform(out.d_cov.begin(), out.d_cov.end(), w.d_cov.begin(), out.d_cov.begin(),
                     std::plus<>());
      std::transform(out.d_color.begin(), out.d_color.end(), w.d_color.begin(),
                     out.d_color.begin(), std::plus<>());
    }
  }
  return out;
}

double median_rate(int repeats, const std::function<void()>& op) {
  if (repeats < 3) throw Error(ErrorCode::kInvalidArgument, "benchmark needs repeats >= 3");
  using clock = std::chrono::steady_clock;
  op();  // warm-up
  std::vector<double> seconds;
  seconds.reserve(repeats);
  for (int i = 0; i < repeats; ++i) {
    const auto start = clock::now();
    op();
    seconds.push_back(std::chrono::duration<double>(clock::now() - start).count());
  }
  std::sort(seconds.begin(), seconds.end());
  const double median = (repeats % 2 == 1)
                            ? seconds[repeats / 2]
                            : 0.5 * (seconds[repeats / 2 - 1] + seconds[repeats / 2]);
  // Guard against clock granularity on trivially small renders.
  return 1.0 / std::max(median, 1e-9);
}

template <typename T>
double benchmark_render(const GaussianCloud<T>& cloud, int width, int height, int repeats,
                        const RasterConfig& cfg) {
  return median_rate(repeats, [&] { (void)render(cloud, width, height, cfg); });
}

#define LIG_INSTANTIATE_RASTER(T)                                                            \
  template TileGrid bin_gaussians<T>(const GaussianCloud<T>&, int, int, int, double, double); \
  template ImagePlane<T> render<T>(const GaussianCloud<T>&, int, int, const RasterConfig&);   \
  template ImagePlane<T> naive_render<T>(const GaussianCloud<T>&, int, int,                   \
                                         const RasterConfig&);                                \
  template ParamGrads<T> render_backward<T>(const GaussianCloud<T>&, const ImagePlane<T>&,    \
                                            const RasterConfig&);                             \
  template double benchmark_render<T>(const GaussianCloud<T>&, int, int, int, const RasterConfig&);

LIG_INSTANTIATE_RASTER(float)
LIG_INSTANTIATE_RASTER(double)

#undef LIG_INSTANTIATE_RASTER

}  // namespace lig
