/* Generated by cbindgen from crates/ffi/src/lib.rs. */

#ifndef REPAIR_H
#define REPAIR_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum RpStatus {
  RP_STATUS_OK = 0,
  /**
   * A null pointer or out-of-range parameter.
   */
  RP_STATUS_INVALID_ARGUMENT = 1,
  RP_STATUS_EMPTY_INPUT = 2,
  /**
   * The input is longer than the compressor supports.
   */
  RP_STATUS_TOO_LARGE = 3,
  /**
   * The archive is damaged, truncated, or not an archive.
   */
  RP_STATUS_CORRUPT = 4,
  RP_STATUS_CHECKSUM = 5,
  /**
   * An internal invariant failed; please report it.
   */
  RP_STATUS_INTERNAL = 6,
} RpStatus;

/**
 * Bytes owned by the library.
 */
typedef struct RpBuffer RpBuffer;

/**
 * Size accounting of an archive, as reported by [`rp_stats`].
 */
typedef struct RpStats {
  uint64_t n;
  uint32_t sigma;
  /**
   * Rules in the grammar.
   */
  uint64_t d;
  /**
   * Length of the final text.
   */
  uint64_t t;
  /**
   * Distinct substitution frequencies, or -1 when not recorded.
   */
  int64_t m;
  /**
   * Monotone runs in the grammar encoding.
   */
  uint64_t runs;
  uint64_t grammar_bits;
  uint64_t text_bits;
  uint64_t encoded_bits;
  double lower_bound_bits;
  /**
   * Encoded size over the lower bound, in percent.
   */
  double rate;
  uint64_t archive_bytes;
} RpStats;

/**
 * Compresses `len` bytes at `data` into an archive. `epsilon` sizes the
 * low-frequency queue as a fraction of the input, in (0, 1]; pass 0 for
 * the default. On success `*out` receives a new buffer.
 *
 * # Safety
 * `data` must point to `len` readable bytes and `out` must be writable.
 */
enum RpStatus rp_compress(const uint8_t *data, size_t len, double epsilon, struct RpBuffer **out);

/**
 * Restores the original bytes from an archive.
 *
 * # Safety
 * `data` must point to `len` readable bytes and `out` must be writable.
 */
enum RpStatus rp_decompress(const uint8_t *data, size_t len, struct RpBuffer **out);

/**
 * Fills `*out` with the size accounting of an archive.
 *
 * # Safety
 * `data` must point to `len` readable bytes and `out` must be writable.
 */
enum RpStatus rp_stats(const uint8_t *data, size_t len, struct RpStats *out);

/**
 * Start of the buffer's bytes; valid until the buffer is freed.
 *
 * # Safety
 * `buf` must be null or a live buffer from this library.
 */
const uint8_t *rp_buffer_data(const struct RpBuffer *buf);

/**
 * # Safety
 * `buf` must be null or a live buffer from this library.
 */
size_t rp_buffer_len(const struct RpBuffer *buf);

/**
 * Releases a buffer. Null is ignored.
 *
 * # Safety
 * `buf` must be null or a buffer from this library not yet freed.
 */
void rp_buffer_free(struct RpBuffer *buf);

/**
 * Static description of a status code.
 */
const char *rp_status_message(enum RpStatus status);

/**
 * Message of the last failure on this thread, or null. Valid until the
 * next failing call on the same thread.
 */
const char *rp_last_error(void);

#endif  /* REPAIR_H */
