#ifndef DDNET_H
#define DDNET_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum DdnetStatus {
  DDNET_STATUS_OK = 0,
  DDNET_STATUS_NULL_POINTER = 1,
  DDNET_STATUS_INVALID_ARGUMENT = 2,
  DDNET_STATUS_IO = 3,
  DDNET_STATUS_PRECLASSIFY = 4,
  DDNET_STATUS_TRAINING = 5,
  DDNET_STATUS_PANIC = 6,
} DdnetStatus;

/**
 * Binary change decision per pixel.
 */
typedef struct DdnetChangeMap DdnetChangeMap;

/**
 * Trained network weights.
 */
typedef struct DdnetModel DdnetModel;

/**
 * Single-band image.
 */
typedef struct DdnetRaster DdnetRaster;

/**
 * Changed / unchanged / intermediate labels.
 */
typedef struct DdnetTriMap DdnetTriMap;

/**
 * Training hyperparameters. `mode`: 0 both, 1 no-dct, 2 no-mrc, 3 plain-cnn.
 */
typedef struct DdnetTrainConfig {
  size_t epochs;
  size_t batch_size;
  double lr;
  uint64_t seed;
  size_t r;
  uint32_t mode;
  size_t mask_width;
  double sample_fraction;
} DdnetTrainConfig;

typedef struct DdnetMetrics {
  uint64_t tp;
  uint64_t tn;
  uint64_t fp;
  uint64_t fn_;
  uint64_t oe;
  double pcc;
  double kc;
} DdnetMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread, or null after a
 * successful call. Valid until the next `ddnet_*` call on the same thread.
 */
const char *ddnet_last_error(void);

/**
 * Copies `width * height` non-negative samples, row-major.
 *
 * # Safety
 * `pixels` must point to `width * height` readable doubles; `out` must be
 * writable.
 */
enum DdnetStatus ddnet_raster_new(size_t width,
                                  size_t height,
                                  const double *pixels,
                                  struct DdnetRaster **out);

/**
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum DdnetStatus ddnet_raster_load_pgm(const char *path, struct DdnetRaster **out);

/**
 * # Safety
 * `raster` must come from this library; `path` must be NUL-terminated.
 */
enum DdnetStatus ddnet_raster_save_pgm(const struct DdnetRaster *raster, const char *path);

/**
 * # Safety
 * `raster` must be null or come from this library.
 */
size_t ddnet_raster_width(const struct DdnetRaster *raster);

/**
 * # Safety
 * `raster` must be null or come from this library.
 */
size_t ddnet_raster_height(const struct DdnetRaster *raster);

/**
 * # Safety
 * `raster` must be null or come from this library, and not be used again.
 */
void ddnet_raster_free(struct DdnetRaster *raster);

/**
 * The default synthetic scene (128×128, 4-look speckle) for `seed`.
 *
 * # Safety
 * All three output pointers must be writable.
 */
enum DdnetStatus ddnet_synth_default(uint64_t seed,
                                     struct DdnetRaster **image1,
                                     struct DdnetRaster **image2,
                                     struct DdnetChangeMap **truth);

/**
 * Log-ratio difference image followed by two-stage fuzzy c-means.
 *
 * # Safety
 * Inputs must come from this library; `out` must be writable.
 */
enum DdnetStatus ddnet_preclassify(const struct DdnetRaster *image1,
                                   const struct DdnetRaster *image2,
                                   struct DdnetTriMap **out);

/**
 * Pixels in one class: 0 unchanged, 1 intermediate, 2 changed.
 *
 * # Safety
 * `trimap` must come from this library; `out` must be writable.
 */
enum DdnetStatus ddnet_trimap_count(const struct DdnetTriMap *trimap, uint32_t class_, size_t *out);

/**
 * # Safety
 * `trimap` must be null or come from this library, and not be used again.
 */
void ddnet_trimap_free(struct DdnetTriMap *trimap);

/**
 * The library defaults (50 epochs, batch 64, lr 1e-3, r 7, both branches).
 */
struct DdnetTrainConfig ddnet_train_config_default(void);

/**
 * Draws balanced pseudo-labelled patches from the tri-map and trains.
 *
 * # Safety
 * Inputs must come from this library; `config` readable; `out` writable.
 */
enum DdnetStatus ddnet_train(const struct DdnetRaster *image1,
                             const struct DdnetRaster *image2,
                             const struct DdnetTriMap *trimap,
                             const struct DdnetTrainConfig *config,
                             struct DdnetModel **out);

/**
 * # Safety
 * `path` must be NUL-terminated; `out` writable.
 */
enum DdnetStatus ddnet_model_load(const char *path, struct DdnetModel **out);

/**
 * # Safety
 * `model` must come from this library; `path` must be NUL-terminated.
 */
enum DdnetStatus ddnet_model_save(const struct DdnetModel *model, const char *path);

/**
 * # Safety
 * `model` must be null or come from this library, and not be used again.
 */
void ddnet_model_free(struct DdnetModel *model);

/**
 * Keeps the tri-map's confident labels and classifies the rest.
 *
 * # Safety
 * Inputs must come from this library; `out` writable.
 */
enum DdnetStatus ddnet_infer(const struct DdnetRaster *image1,
                             const struct DdnetRaster *image2,
                             const struct DdnetTriMap *trimap,
                             const struct DdnetModel *model,
                             struct DdnetChangeMap **out);

/**
 * Copies the 0/1 decisions, row-major, into `buf` of length `len`
 * (must equal width × height).
 *
 * # Safety
 * `map` must come from this library; `buf` must hold `len` bytes.
 */
enum DdnetStatus ddnet_changemap_copy(const struct DdnetChangeMap *map, uint8_t *buf, size_t len);

/**
 * # Safety
 * `map` must be null or come from this library.
 */
size_t ddnet_changemap_width(const struct DdnetChangeMap *map);

/**
 * # Safety
 * `map` must be null or come from this library.
 */
size_t ddnet_changemap_height(const struct DdnetChangeMap *map);

/**
 * # Safety
 * `map` must be null or come from this library, and not be used again.
 */
void ddnet_changemap_free(struct DdnetChangeMap *map);

/**
 * Confusion counts, overall error, PCC and kappa (both in percent).
 *
 * # Safety
 * Maps must come from this library; `out` writable.
 */
enum DdnetStatus ddnet_score(const struct DdnetChangeMap *map,
                             const struct DdnetChangeMap *truth,
                             struct DdnetMetrics *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DDNET_H */
