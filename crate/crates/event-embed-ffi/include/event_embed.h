#ifndef EVENT_EMBED_H
#define EVENT_EMBED_H

/* Generated by cbindgen; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Composition mode.
 */
typedef enum {
  EE_MODE_FULL = 0,
  EE_MODE_VERB_ONLY = 1,
} EeMode;

/**
 * Status code returned by every fallible function.
 */
typedef enum {
  EE_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  EE_STATUS_NULL_POINTER = 1,
  /**
   * A string argument was not valid UTF-8.
   */
  EE_STATUS_INVALID_UTF8 = 2,
  /**
   * A file could not be read or written.
   */
  EE_STATUS_IO = 3,
  /**
   * An input file was malformed; the message names the line.
   */
  EE_STATUS_PARSE = 4,
  /**
   * A contract violation such as inconsistent dimensions or empty input.
   */
  EE_STATUS_INVALID = 5,
  /**
   * A panic was caught at the ABI boundary.
   */
  EE_STATUS_PANIC = 6,
} EeStatus;

/**
 * Opaque handle to a trained model.
 */
typedef struct EeModel EeModel;

/**
 * Training configuration. Obtain defaults from [`ee_hyperparams_default`]
 * and override selectively.
 */
typedef struct {
  /**
   * Ranking margin; must be positive.
   */
  double gamma;
  /**
   * Learning rate; must be positive.
   */
  double eta;
  /**
   * Weight-decay strength; must be non-negative.
   */
  double lambda;
  uint64_t epochs;
  uint64_t seed;
  /**
   * Word embedding width.
   */
  uint32_t dim_word;
  /**
   * Hidden layer width.
   */
  uint32_t dim_hidden;
  /**
   * Event representation width.
   */
  uint32_t dim_event;
  EeMode mode;
  bool freeze_embeddings;
  bool shuffle;
} EeHyperparams;

/**
 * Evaluation counts and derived ratios.
 */
typedef struct {
  uint64_t true_positives;
  uint64_t false_positives;
  uint64_t false_negatives;
  uint64_t true_negatives;
  double precision;
  double recall;
  double f1;
} EeMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the most recent failure on this thread. The pointer
 * stays valid until the next failing call on the same thread; never free it.
 */
const char *ee_last_error_message(void);

/**
 * Default training configuration: margin 1.0, learning rate 0.01, weight
 * decay 1e-4, 200 epochs, 50/50/50 dimensions, full mode.
 */
EeHyperparams ee_hyperparams_default(void);

/**
 * Trains a model on the corpus at `corpus_path`, optionally initializing
 * word embeddings from the text-format table at `embeddings_path` (pass
 * null to skip). On success stores a heap-allocated handle in `*out_model`.
 *
 * # Safety
 * `corpus_path` must point to a nul-terminated string; `embeddings_path`
 * must be null or do the same; `hyper` must be null (defaults) or point to a
 * valid [`EeHyperparams`]; `out_model` must point to writable storage.
 */
EeStatus ee_train_file(const char *corpus_path,
                       const char *embeddings_path,
                       const EeHyperparams *hyper,
                       EeModel **out_model);

/**
 * Reads a model file written by `ee_model_write_file` or the CLI.
 *
 * # Safety
 * `path` must point to a nul-terminated string and `out_model` to writable
 * storage.
 */
EeStatus ee_model_read_file(const char *path, EeModel **out_model);

/**
 * Writes the model to a file in the text model format.
 *
 * # Safety
 * `model` must be a live handle from this library; `path` must point to a
 * nul-terminated string.
 */
EeStatus ee_model_write_file(const EeModel *model, const char *path);

/**
 * Releases a model handle. Passing null is a no-op.
 *
 * # Safety
 * `model` must be null or a handle from this library that has not been
 * freed yet.
 */
void ee_model_free(EeModel *model);

/**
 * Scores one event given in corpus line syntax.
 *
 * # Safety
 * `model` must be a live handle; `event_line` must point to a
 * nul-terminated string; `out_score` must point to writable storage.
 */
EeStatus ee_event_score(const EeModel *model,
                        const char *event_line,
                        EeMode mode,
                        double *out_score);

/**
 * Predicts whether the first event stereotypically precedes the second
 * (strict score comparison; ties predict false).
 *
 * # Safety
 * `model` must be a live handle; both event lines must point to
 * nul-terminated strings; `out_before` must point to writable storage.
 */
EeStatus ee_predict_pair(const EeModel *model,
                         const char *first_line,
                         const char *second_line,
                         EeMode mode,
                         bool *out_before);

/**
 * Evaluates the model on a labeled pairs file; fills `*out_metrics`.
 *
 * # Safety
 * `model` must be a live handle; `pairs_path` must point to a
 * nul-terminated string; `out_metrics` must point to writable storage.
 */
EeStatus ee_evaluate_pairs_file(const EeModel *model,
                                const char *pairs_path,
                                EeMode mode,
                                EeMetrics *out_metrics);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EVENT_EMBED_H */
