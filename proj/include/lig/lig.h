#ifndef LIG_LIG_H_
#define LIG_LIG_H_

/*
 * C interface to the Level-of-Gaussian image codec.
 *
 * Objects are opaque handles owned by the caller and released with the
 * matching *_destroy function. Every fallible call returns a lig_status; on
 * failure lig_last_error() holds a one-line description for the calling
 * thread until its next failing call.
 */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(LIG_BUILDING_LIBRARY)
#    define LIG_API __declspec(dllexport)
#  else
#    define LIG_API __declspec(dllimport)
#  endif
#else
#  define LIG_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum lig_status {
  LIG_OK = 0,
  LIG_ERR_INVALID_ARGUMENT = 1,
  LIG_ERR_DIMENSION_MISMATCH = 2,
  LIG_ERR_DEGENERATE_COVARIANCE = 3,
  LIG_ERR_NON_FINITE = 4,
  LIG_ERR_IO = 5,
  LIG_ERR_FILE_NOT_FOUND = 6,
  LIG_ERR_UNSUPPORTED_BIT_DEPTH = 7,
  LIG_ERR_UNSUPPORTED_COLOR_TYPE = 8,
  LIG_ERR_CORRUPT_IMAGE = 9,
  LIG_ERR_BAD_MAGIC = 10,
  LIG_ERR_UNSUPPORTED_VERSION = 11,
  LIG_ERR_TRUNCATED = 12,
  LIG_ERR_LENGTH_OVERFLOW = 13,
  LIG_ERR_MALFORMED_MODEL = 14,
  LIG_ERR_INTERNAL = 15
} lig_status;

typedef struct lig_image lig_image;
typedef struct lig_model lig_model;

/* Fill with lig_fit_params_default() before overriding fields. */
typedef struct lig_fit_params {
  uint64_t total_points;
  double ratio;
  int32_t down_factor;
  int32_t iters;
  double lr;
  double beta1;
  double beta2;
  double adam_eps;
  double sigma_cut;
  double eps_psd;
  int32_t tile_size;
  uint64_t seed;
  double init_sigma_scale;
  int32_t single_level;  /* nonzero: one cloud of total_points, no coarse level */
  int32_t deterministic; /* nonzero: tile-ordered gradient reduction */
} lig_fit_params;

typedef struct lig_fit_report {
  uint64_t n0;              /* coarse points (0 for single-level) */
  uint64_t n1;              /* fine points */
  double coarse_final_loss; /* NaN for single-level */
  double fine_final_loss;
  double psnr_db;           /* reconstruction vs the input image */
  double wall_seconds;
} lig_fit_report;

typedef struct lig_model_info {
  uint32_t version;
  uint32_t full_w;
  uint32_t full_h;
  uint32_t channels;
  uint32_t level_count;
  uint32_t coarse_w; /* 0 when level_count == 1 */
  uint32_t coarse_h;
  uint64_t n0;
  uint32_t fine_w;
  uint32_t fine_h;
  uint64_t n1;
  float res_min;
  float res_max;
} lig_model_info;

LIG_API const char* lig_version(void);
LIG_API const char* lig_status_name(lig_status status);
LIG_API const char* lig_last_error(void);

LIG_API void lig_fit_params_default(lig_fit_params* params);
LIG_API lig_status lig_allocate_points(uint64_t total, double ratio, uint64_t* n0, uint64_t* n1);

LIG_API lig_status lig_image_create(int32_t width, int32_t height, int32_t channels,
                                    const float* data, lig_image** out);
LIG_API lig_status lig_image_load(const char* path, lig_image** out);
LIG_API lig_status lig_image_save(const lig_image* image, const char* path);
LIG_API void lig_image_destroy(lig_image* image);
LIG_API int32_t lig_image_width(const lig_image* image);
LIG_API int32_t lig_image_height(const lig_image* image);
LIG_API int32_t lig_image_channels(const lig_image* image);
/* Row-major height x width x channels samples. */
LIG_API const float* lig_image_data(const lig_image* image);

/* report may be NULL. */
LIG_API lig_status lig_fit(const lig_image* image, const lig_fit_params* params, lig_model** out,
                           lig_fit_report* report);

LIG_API lig_status lig_model_load(const char* path, lig_model** out);
LIG_API lig_status lig_model_save(const lig_model* model, const char* path);
/* Writes up to capacity bytes; *size always receives the encoded length. */
LIG_API lig_status lig_model_encode(const lig_model* model, uint8_t* buffer, size_t capacity,
                                    size_t* size);
LIG_API lig_status lig_model_decode(const uint8_t* buffer, size_t size, lig_model** out);
LIG_API void lig_model_destroy(lig_model* model);
LIG_API lig_status lig_model_get_info(const lig_model* model, lig_model_info* info);
LIG_API lig_status lig_model_reconstruct(const lig_model* model, lig_image** out);
LIG_API lig_status lig_model_benchmark(const lig_model* model, int32_t repeats, double* fps);

/* PSNR in dB of reconstruction (clamped to [0, 1]) against reference;
 * +infinity for identical images. */
LIG_API lig_status lig_psnr(const lig_image* reconstruction, const lig_image* reference,
                            double* db);

#ifdef __cplusplus
}
#endif

#endif /* LIG_LIG_H_ */
