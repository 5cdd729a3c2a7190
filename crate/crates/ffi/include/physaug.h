#ifndef PHYSAUG_H
#define PHYSAUG_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PhysaugStatus {
  PHYSAUG_STATUS_OK = 0,
  PHYSAUG_STATUS_NULL_POINTER = 1,
  PHYSAUG_STATUS_INVALID_ARGUMENT = 2,
  PHYSAUG_STATUS_INVALID_CONFIG = 3,
  PHYSAUG_STATUS_SHAPE_MISMATCH = 4,
  // A panic was caught at the boundary; the handle may be inconsistent.
  PHYSAUG_STATUS_INTERNAL = 5,
} PhysaugStatus;

// Parsed pipeline configuration.
typedef struct PhysaugConfig PhysaugConfig;

// Stream of augmentations of one item; call `k` uses sample index `k`.
typedef struct PhysaugSampler PhysaugSampler;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version, identical to the `physaug` crate version. Static storage.
const char *physaug_version(void);

// Message for the last failed call on this thread, or `""`. Valid until the
// next call into the library on the same thread.
const char *physaug_last_error_message(void);

// Configuration with every field at its default.
//
// # Safety
// `out` must be a valid pointer to writable storage.
enum PhysaugStatus physaug_config_default(struct PhysaugConfig **out);

// Parses a TOML config (same schema as the CLI `--config` file).
//
// # Safety
// `toml` must be a NUL-terminated string; `out` must be writable.
enum PhysaugStatus physaug_config_from_toml(const char *toml, struct PhysaugConfig **out);

// Serializes a config to TOML. Release the string with [`physaug_string_free`].
//
// # Safety
// `cfg` must come from this library; `out` must be writable.
enum PhysaugStatus physaug_config_to_toml(const struct PhysaugConfig *cfg, char **out);

// # Safety
// `cfg` must be null or a handle from this library not yet freed.
void physaug_config_free(struct PhysaugConfig *cfg);

// # Safety
// `s` must be null or a string returned by this library not yet freed.
void physaug_string_free(char *s);

// Seed of the `sample`-th augmentation of the item keyed by `item_key`,
// as used by the batch CLI for a file at that relative path.
//
// # Safety
// `item_key` must be a NUL-terminated string; `out` must be writable.
enum PhysaugStatus physaug_derive_seed(uint64_t global_seed,
                                       const char *item_key,
                                       uint64_t sample,
                                       uint64_t *out);

// Applies the configured mode to a float image with values in `[0, 1]`.
//
// # Safety
// `data` and `out` must each hold `height * width * channels` floats and
// must not overlap.
enum PhysaugStatus physaug_transform_f32(const struct PhysaugConfig *cfg,
                                         const float *data,
                                         size_t height,
                                         size_t width,
                                         size_t channels,
                                         uint64_t seed,
                                         float *out);

// Applies the configured mode to an 8-bit image (`v / 255` in, `round(v * 255)` out).
//
// # Safety
// `data` and `out` must each hold `height * width * channels` bytes and
// must not overlap.
enum PhysaugStatus physaug_transform_u8(const struct PhysaugConfig *cfg,
                                        const uint8_t *data,
                                        size_t height,
                                        size_t width,
                                        size_t channels,
                                        uint64_t seed,
                                        uint8_t *out);

// Creates a sampler; the config is copied, so `cfg` may be freed afterwards.
//
// # Safety
// `cfg` must be a live handle, `item_key` NUL-terminated, `out` writable.
enum PhysaugStatus physaug_sampler_new(const struct PhysaugConfig *cfg,
                                       uint64_t global_seed,
                                       const char *item_key,
                                       struct PhysaugSampler **out);

// Writes the next augmentation of `data`. The counter only advances on success.
//
// # Safety
// As [`physaug_transform_f32`]; `sampler` must be a live handle.
enum PhysaugStatus physaug_sampler_next_f32(struct PhysaugSampler *sampler,
                                            const float *data,
                                            size_t height,
                                            size_t width,
                                            size_t channels,
                                            float *out);

// # Safety
// As [`physaug_transform_u8`]; `sampler` must be a live handle.
enum PhysaugStatus physaug_sampler_next_u8(struct PhysaugSampler *sampler,
                                           const uint8_t *data,
                                           size_t height,
                                           size_t width,
                                           size_t channels,
                                           uint8_t *out);

// # Safety
// `sampler` must be null or a handle from this library not yet freed.
void physaug_sampler_free(struct PhysaugSampler *sampler);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PHYSAUG_H */
