#include <chrono>
#include <cmath>
#include <cstring>
#include <limits>
#include <memory>
#include <new>
#include <string>

#include "lig/io.hpp"
#include "lig/lig.h"
#include "lig/pipeline.hpp"

struct lig_image {
  lig::Image image;
};

struct lig_model {
  lig::LogModel model;
};

namespace {

thread_local std::string g_last_error;

lig_status fail(lig_status status, std::string message) {
  g_last_error = std::move(message);
  return status;
}

// Runs body and maps any exception onto a status code.
template <typename F>
lig_status guarded(F&& body) {
  try {
    body();
    return LIG_OK;
  } catch (const lig::Error& e) {
    return fail(static_cast<lig_status>(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(LIG_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(LIG_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(LIG_ERR_INTERNAL, "unknown error");
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw lig::Error(lig::ErrorCode::kInvalidArgument, what);
}

lig::LogConfig to_config(const lig_fit_params& p) {
  lig::LogConfig cfg;
  cfg.total_points = p.total_points;
  cfg.ratio_r = p.ratio;
  cfg.down_factor = p.down_factor;
  cfg.fit.iters = p.iters;
  cfg.fit.lr = p.lr;
  cfg.fit.beta1 = p.beta1;
  cfg.fit.beta2 = p.beta2;
  cfg.fit.adam_eps = p.adam_eps;
  cfg.fit.sigma_cut = p.sigma_cut;
  cfg.fit.eps_psd = p.eps_psd;
  cfg.fit.tile_size = p.tile_size;
  cfg.fit.seed = p.seed;
  cfg.fit.init_sigma_scale = p.init_sigma_scale;
  cfg.fit.deterministic = p.deterministic != 0;
  return cfg;
}

}  // namespace

extern "C" {

const char* lig_version(void) { return "1.0.0"; }

const char* lig_status_name(lig_status status) {
  return lig::error_code_name(static_cast<lig::ErrorCode>(status));
}

const char* lig_last_error(void) { return g_last_error.c_str(); }

void lig_fit_params_default(lig_fit_params* params) {
  if (params == nullptr) return;
  const lig::LogConfig cfg;
  params->total_points = 0;
  params->ratio = cfg.ratio_r;
  params->down_factor = cfg.down_factor;
  params->iters = cfg.fit.iters;
  params->lr = cfg.fit.lr;
  params->beta1 = cfg.fit.beta1;
  params->beta2 = cfg.fit.beta2;
  params->adam_eps = cfg.fit.adam_eps;
  params->sigma_cut = cfg.fit.sigma_cut;
  params->eps_psd = cfg.fit.eps_psd;
  params->tile_size = cfg.fit.tile_size;
  params->seed = cfg.fit.seed;
  params->init_sigma_scale = cfg.fit.init_sigma_scale;
  params->single_level = 0;
  params->deterministic = cfg.fit.deterministic ? 1 : 0;
}

lig_status lig_allocate_points(uint64_t total, double ratio, uint64_t* n0, uint64_t* n1) {
  return guarded([&] {
    require(n0 != nullptr && n1 != nullptr, "null output pointer");
    const auto a = lig::allocate_points(total, ratio);
    *n0 = a.n0;
    *n1 = a.n1;
  });
}

lig_status lig_image_create(int32_t width, int32_t height, int32_t channels, const float* data,
                            lig_image** out) {
  return guarded([&] {
    require(out != nullptr, "null output pointer");
    auto img = std::make_unique<lig_image>();
    img->image = lig::Image(width, height, channels);
    if (data != nullptr) {
      std::memcpy(img->image.data().data(), data, img->image.size() * sizeof(float));
    }
    *out = img.release();
  });
}

lig_status lig_image_load(const char* path, lig_image** out) {
  return guarded([&] {
    require(path != nullptr && out != nullptr, "null argument");
    auto img = std::make_unique<lig_image>();
    img->image = lig::load_image(path);
    *out = img.release();
  });
}

lig_status lig_image_save(const lig_image* image, const char* path) {
  return guarded([&] {
    require(image != nullptr && path != nullptr, "null argument");
    lig::save_image(image->image, path);
  });
}

void lig_image_destroy(lig_image* image) { delete image; }

int32_t lig_image_width(const lig_image* image) { return image ? image->image.width() : 0; }
int32_t lig_image_height(const lig_image* image) { return image ? image->image.height() : 0; }
int32_t lig_image_channels(const lig_image* image) { return image ? image->image.channels() : 0; }
const float* lig_image_data(const lig_image* image) {
  return image ? image->image.data().data() : nullptr;
}

lig_status lig_fit(const lig_image* image, const lig_fit_params* params, lig_model** out,
                   lig_fit_report* report) {
  return guarded([&] {
    require(image != nullptr && params != nullptr && out != nullptr, "null argument");
    const lig::LogConfig cfg = to_config(*params);
    const auto start = std::chrono::steady_clock::now();
    lig::LogFit fit = params->single_level ? lig::fit_single(image->image, cfg)
                                           : lig::fit_log(image->image, cfg);
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (report != nullptr) {
      const auto& m = fit.model;
      report->n0 = m.coarse ? m.coarse->cloud.size() : 0;
      report->n1 = m.fine.cloud.size();
      report->coarse_final_loss = fit.coarse_loss.empty()
                                      ? std::numeric_limits<double>::quiet_NaN()
                                      : fit.coarse_loss.back();
      report->fine_final_loss = fit.fine_loss.back();
      report->psnr_db = lig::psnr(lig::reconstruct(m, cfg.fit.raster()), image->image);
      report->wall_seconds = seconds;
    }
    auto model = std::make_unique<lig_model>();
    model->model = std::move(fit.model);
    *out = model.release();
  });
}

lig_status lig_model_load(const char* path, lig_model** out) {
  return guarded([&] {
    require(path != nullptr && out != nullptr, "null argument");
    auto model = std::make_unique<lig_model>();
    model->model = lig::load_model(path);
    *out = model.release();
  });
}

lig_status lig_model_save(const lig_model* model, const char* path) {
  return guarded([&] {
    require(model != nullptr && path != nullptr, "null argument");
    lig::save_model(model->model, path);
  });
}

lig_status lig_model_encode(const lig_model* model, uint8_t* buffer, size_t capacity,
                            size_t* size) {
  return guarded([&] {
    require(model != nullptr && size != nullptr, "null argument");
    const auto bytes = lig::encode_model(model->model);
    *size = bytes.size();
    if (buffer != nullptr) {
      if (capacity < bytes.size()) {
        throw lig::Error(lig::ErrorCode::kInvalidArgument, "buffer too small for encoded model");
      }
      std::memcpy(buffer, bytes.data(), bytes.size());
    }
  });
}

lig_status lig_model_decode(const uint8_t* buffer, size_t size, lig_model** out) {
  return guarded([&] {
    require(out != nullptr && (buffer != nullptr || size == 0), "null argument");
    auto model = std::make_unique<lig_model>();
    model->model = lig::decode_model({buffer, size});
    *out = model.release();
  });
}

void lig_model_destroy(lig_model* model) { delete model; }

lig_status lig_model_get_info(const lig_model* model, lig_model_info* info) {
  return guarded([&] {
    require(model != nullptr && info != nullptr, "null argument");
    const auto& m = model->model;
    *info = lig_model_info{};
    info->version = lig::kModelVersion;
    info->full_w = static_cast<uint32_t>(m.full_w);
    info->full_h = static_cast<uint32_t>(m.full_h);
    info->channels = static_cast<uint32_t>(m.channels);
    info->level_count = m.coarse ? 2 : 1;
    if (m.coarse) {
      info->coarse_w = static_cast<uint32_t>(m.coarse->width);
      info->coarse_h = static_cast<uint32_t>(m.coarse->height);
      info->n0 = m.coarse->cloud.size();
    }
    info->fine_w = static_cast<uint32_t>(m.fine.width);
    info->fine_h = static_cast<uint32_t>(m.fine.height);
    info->n1 = m.fine.cloud.size();
    info->res_min = m.res_min;
    info->res_max = m.res_max;
  });
}

lig_status lig_model_reconstruct(const lig_model* model, lig_image** out) {
  return guarded([&] {
    require(model != nullptr && out != nullptr, "null argument");
    auto img = std::make_unique<lig_image>();
    img->image = lig::reconstruct(model->model);
    *out = img.release();
  });
}

lig_status lig_model_benchmark(const lig_model* model, int32_t repeats, double* fps) {
  return guarded([&] {
    require(model != nullptr && fps != nullptr, "null argument");
    *fps = lig::benchmark_reconstruct(model->model, repeats);
  });
}

lig_status lig_psnr(const lig_image* reconstruction, const lig_image* reference, double* db) {
  return guarded([&] {
    require(reconstruction != nullptr && reference != nullptr && db != nullptr, "null argument");
    *db = lig::psnr(reconstruction->image, reference->image);
  });
}

}  // extern "C"
