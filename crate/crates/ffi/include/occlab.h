#ifndef OCCLAB_H
#define OCCLAB_H

#include <stdbool.h>
#include <stdint.h>

typedef enum OcclabDesign {
  OCCLAB_DESIGN_BASELINE = 0,
  OCCLAB_DESIGN_CEASER = 1,
  OCCLAB_DESIGN_CEASER_S = 2,
  OCCLAB_DESIGN_SCATTER_CACHE = 3,
  OCCLAB_DESIGN_SASS_CACHE = 4,
  OCCLAB_DESIGN_MIRAGE = 5,
} OcclabDesign;

typedef enum OcclabEviction {
  OCCLAB_EVICTION_NONE = 0,
  OCCLAB_EVICTION_COLD_FILL = 1,
  OCCLAB_EVICTION_SAE = 2,
  OCCLAB_EVICTION_GLE = 3,
} OcclabEviction;

typedef enum OcclabPolicy {
  OCCLAB_POLICY_RANDOM = 0,
  OCCLAB_POLICY_TREE_PLRU = 1,
  OCCLAB_POLICY_WEIGHTED_LRU = 2,
  OCCLAB_POLICY_RRIP = 3,
  OCCLAB_POLICY_FIFO = 4,
} OcclabPolicy;

typedef enum OcclabStatus {
  OCCLAB_STATUS_OK = 0,
  OCCLAB_STATUS_NULL_POINTER = 1,
  OCCLAB_STATUS_INVALID_ARGUMENT = 2,
  OCCLAB_STATUS_INVALID_KEY = 3,
  OCCLAB_STATUS_GEOMETRY = 4,
  OCCLAB_STATUS_IO = 5,
  OCCLAB_STATUS_PARSE = 6,
  OCCLAB_STATUS_PANIC = 7,
} OcclabStatus;

// Opaque cache handle.
typedef struct OcclabCache OcclabCache;

typedef struct OcclabAccessResult {
  bool hit;
  enum OcclabEviction eviction;
  // Line address and domain of the evicted line; zero when none.
  uint64_t victim_line;
  uint16_t victim_domain;
  uint32_t skew;
  uint32_t set;
  uint64_t cost;
} OcclabAccessResult;

typedef struct OcclabStats {
  uint64_t accesses;
  uint64_t hits;
  uint64_t misses;
  uint64_t sae;
  uint64_t gle;
  uint64_t coldfill;
  uint64_t setfill;
} OcclabStats;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the calling thread's last failure, or null. Valid until the
// next failing call on this thread.
const char *occlab_last_error(void);

// Static, NUL-terminated crate version.
const char *occlab_version(void);

// Creates a cache with the design's default geometry.
//
// # Safety
// `out` must be a valid pointer to writable storage for one handle.
enum OcclabStatus occlab_cache_new(enum OcclabDesign design,
                                   enum OcclabPolicy policy,
                                   uint64_t llc_bytes,
                                   uint64_t seed,
                                   struct OcclabCache **out);

// Releases a handle. Null is ignored.
//
// # Safety
// `cache` must come from [`occlab_cache_new`] and not be used afterwards.
void occlab_cache_free(struct OcclabCache *cache);

// # Safety
// `cache` must be a live handle; `out` may be null.
enum OcclabStatus occlab_cache_access(struct OcclabCache *cache,
                                      uint64_t addr,
                                      uint16_t domain,
                                      bool is_store,
                                      struct OcclabAccessResult *out);

// # Safety
// `cache` must be a live handle and `out` valid for writes.
enum OcclabStatus occlab_cache_stats(const struct OcclabCache *cache, struct OcclabStats *out);

// Lines currently held by `domain`.
//
// # Safety
// `cache` must be a live handle and `out` valid for writes.
enum OcclabStatus occlab_cache_lines_of(const struct OcclabCache *cache,
                                        uint16_t domain,
                                        uint64_t *out);

// Fills the cache with spurious lines and clears the counters.
//
// # Safety
// `cache` must be a live handle.
enum OcclabStatus occlab_cache_prefill(struct OcclabCache *cache, uint64_t seed);

// # Safety
// `cache` must be a live handle.
enum OcclabStatus occlab_cache_flush(struct OcclabCache *cache);

// PRESENT-80 on one block. `key` is 10 bytes, most significant first.
//
// # Safety
// `key` must point to 10 readable bytes and `out` be valid for writes.
enum OcclabStatus occlab_present_encrypt(const uint8_t *key, uint64_t block, uint64_t *out);

// AES-128 on one block with the simulator's T-table implementation.
//
// # Safety
// `key` and `input` must point to 16 readable bytes, `output` to 16
// writable bytes.
enum OcclabStatus occlab_aes128_encrypt(const uint8_t *key, const uint8_t *input, uint8_t *output);

// Runs an experiment config (file contents, not a path) and returns the
// rendered result in `*out`, to be released with [`occlab_string_free`].
//
// # Safety
// `config_text` must be a NUL-terminated string and `out` valid for
// writes.
enum OcclabStatus occlab_run_config(const char *config_text, char **out);

// # Safety
// `s` must come from this library and not be freed twice. Null is ignored.
void occlab_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* OCCLAB_H */
