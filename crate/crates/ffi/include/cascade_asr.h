#ifndef CASCADE_ASR_H
#define CASCADE_ASR_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CasrStatus {
  CASR_STATUS_OK = 0,
  CASR_STATUS_NULL_POINTER = 1,
  CASR_STATUS_INVALID_ARGUMENT = 2,
  CASR_STATUS_IO = 3,
  CASR_STATUS_PARSE = 4,
  CASR_STATUS_COMPUTE = 5,
  CASR_STATUS_PANIC = 6,
} CasrStatus;

typedef struct CasrArpaModel CasrArpaModel;

typedef struct CasrCheckpoint CasrCheckpoint;

/**
 * Dense row-major `f64` matrix.
 */
typedef struct CasrMatrix CasrMatrix;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *casr_last_error(void);

/**
 * # Safety
 * `s` must come from this library or be null.
 */
void casr_string_free(char *s);

/**
 * Number of feature frames for a clip of `duration_s` seconds.
 *
 * # Safety
 * `out` must be writable.
 */
enum CasrStatus casr_frame_count(double duration_s, size_t *out);

/**
 * Copies `rows * cols` values into a new matrix.
 *
 * # Safety
 * `data` must point to `rows * cols` readable values; `out` must be writable.
 */
enum CasrStatus casr_matrix_new(const double *data,
                                size_t rows,
                                size_t cols,
                                struct CasrMatrix **out);

/**
 * # Safety
 * `m` must be a live matrix handle.
 */
size_t casr_matrix_rows(const struct CasrMatrix *m);

/**
 * # Safety
 * `m` must be a live matrix handle.
 */
size_t casr_matrix_cols(const struct CasrMatrix *m);

/**
 * Copies the matrix row-major into `buf`, which must hold `rows * cols`
 * values.
 *
 * # Safety
 * `buf` must point to `len` writable values.
 */
enum CasrStatus casr_matrix_copy(const struct CasrMatrix *m, double *buf, size_t len);

/**
 * # Safety
 * `m` must come from this library or be null.
 */
void casr_matrix_free(struct CasrMatrix *m);

/**
 * Log spectrogram of mono samples with the default frontend settings
 * (20 ms window, 10 ms hop, 161 bins, per-utterance normalization).
 *
 * # Safety
 * `samples` must point to `len` readable values; `out` must be writable.
 */
enum CasrStatus casr_spectrogram(const double *samples,
                                 size_t len,
                                 uint32_t sample_rate,
                                 struct CasrMatrix **out);

/**
 * CTC loss of `labels` given pre-softmax `logits` (frames by symbols, blank
 * last). When `grad_out` is non-null it receives the logit gradient.
 *
 * # Safety
 * `labels` must point to `n_labels` values; `loss_out` must be writable;
 * `grad_out` may be null.
 */
enum CasrStatus casr_ctc_loss(const struct CasrMatrix *logits,
                              const size_t *labels,
                              size_t n_labels,
                              double *loss_out,
                              struct CasrMatrix **grad_out);

/**
 * # Safety
 * `text` must be a nul-terminated string; `out` must be writable.
 */
enum CasrStatus casr_arpa_parse(const char *text, struct CasrArpaModel **out);

/**
 * # Safety
 * `path` must be a nul-terminated string; `out` must be writable.
 */
enum CasrStatus casr_arpa_load(const char *path, struct CasrArpaModel **out);

/**
 * Base-10 log probability of a whole sentence, including the end marker.
 * Out-of-vocabulary words fail unless the model maps them to `<unk>`.
 *
 * # Safety
 * `lm` must be a live handle; `text` nul-terminated; `out` writable.
 */
enum CasrStatus casr_arpa_score(const struct CasrArpaModel *lm,
                                const char *text,
                                double *log10_out);

/**
 * # Safety
 * `lm` must come from this library or be null.
 */
void casr_arpa_free(struct CasrArpaModel *lm);

/**
 * Prefix beam search over per-frame `posteriors` whose last column is the
 * blank and whose other columns follow `alphabet`. With a non-null `lm`
 * the top hypotheses are rescored with weight `alpha`.
 *
 * # Safety
 * `posteriors` must be a live handle; `alphabet` nul-terminated; `lm` may be
 * null; `transcript_out` writable.
 */
enum CasrStatus casr_beam_search(const struct CasrMatrix *posteriors,
                                 const char *alphabet,
                                 size_t beam_width,
                                 const struct CasrArpaModel *lm,
                                 double alpha,
                                 char **transcript_out);

/**
 * # Safety
 * `path` must be a nul-terminated string; `out` must be writable.
 */
enum CasrStatus casr_checkpoint_load(const char *path, struct CasrCheckpoint **out);

/**
 * Per-frame output posteriors of the network for one utterance.
 *
 * # Safety
 * `ckpt` and `features` must be live handles; `out` writable.
 */
enum CasrStatus casr_forward(const struct CasrCheckpoint *ckpt,
                             const struct CasrMatrix *features,
                             struct CasrMatrix **out);

/**
 * Decodes one utterance with the checkpoint. `config_json` may be null or
 * a JSON object of decode settings overriding the defaults. `lm` may be
 * null.
 *
 * # Safety
 * Handles must be live; strings nul-terminated; `transcript_out` writable.
 */
enum CasrStatus casr_decode(const struct CasrCheckpoint *ckpt,
                            const struct CasrMatrix *features,
                            const struct CasrArpaModel *lm,
                            const char *config_json,
                            char **transcript_out);

/**
 * # Safety
 * `ckpt` must come from this library or be null.
 */
void casr_checkpoint_free(struct CasrCheckpoint *ckpt);

/**
 * Word error rate of `hypothesis` against a non-empty `reference`.
 *
 * # Safety
 * Strings must be nul-terminated; `out` writable.
 */
enum CasrStatus casr_wer(const char *hypothesis, const char *reference, double *out);

/**
 * Character error rate of `hypothesis` against a non-empty `reference`.
 *
 * # Safety
 * Strings must be nul-terminated; `out` writable.
 */
enum CasrStatus casr_cer(const char *hypothesis, const char *reference, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CASCADE_ASR_H */
