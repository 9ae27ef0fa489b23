/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#ifndef SYNBOOT_H
#define SYNBOOT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SbStatus {
  SB_STATUS_OK = 0,
  SB_STATUS_NULL_ARGUMENT = 1,
  SB_STATUS_INVALID_UTF8 = 2,
  SB_STATUS_IO = 3,
  SB_STATUS_PARSE = 4,
  SB_STATUS_INVALID_INPUT = 5,
  SB_STATUS_UNKNOWN_POS_KEY = 6,
  SB_STATUS_INSUFFICIENT_BIN = 7,
  SB_STATUS_RANK_DEFICIENT = 8,
  SB_STATUS_USAGE = 9,
  SB_STATUS_VERIFICATION = 10,
  SB_STATUS_PANIC = 11,
} SbStatus;

typedef struct SbFreqTable SbFreqTable;

typedef struct SbNgram SbNgram;

typedef struct SbTagger SbTagger;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *sb_version(void);

// Message of the last failed call on this thread, or NULL. Valid until the
// next call into the library on this thread.
const char *sb_last_error(void);

// Release a string returned by this library. NULL is ignored.
//
// # Safety
// `s` must be NULL or a string returned through an out-parameter of this
// library that has not been freed.
void sb_string_free(char *s);

// Load a tagger model file.
enum SbStatus sb_tagger_load(const char *path, struct SbTagger **out);

// Tokenize and tag one utterance. The result has one line per token:
// `form TAB UPOS TAB XPOS`, with `_` for a missing XPOS.
enum SbStatus sb_tagger_tag(const struct SbTagger *tagger, const char *utterance, char **out);

void sb_tagger_free(struct SbTagger *tagger);

// Load an n-gram model file.
enum SbStatus sb_ngram_load(const char *path, struct SbNgram **out);

// Train a model on newline-separated sentences of space-separated tokens.
enum SbStatus sb_ngram_train(const char *sentences,
                             size_t order,
                             double discount,
                             uint64_t unk_threshold,
                             struct SbNgram **out);

// Known forms, excluding `<s>`, `</s>` and `<unk>`.
size_t sb_ngram_vocab_size(const struct SbNgram *model);

// Natural-log probability of a space-separated token sequence.
enum SbStatus sb_ngram_sentence_logprob(const struct SbNgram *model,
                                        const char *tokens,
                                        double *out);

// Best filler for position `mask_index` among space-separated `candidates`
// (NULL for the whole model vocabulary).
enum SbStatus sb_ngram_masked_argmax(const struct SbNgram *model,
                                     const char *tokens,
                                     size_t mask_index,
                                     const char *candidates,
                                     char **out_form,
                                     double *out_score);

void sb_ngram_free(struct SbNgram *model);

// Load a frequency table written by the `perturb` command.
enum SbStatus sb_freq_load(const char *path, bool fine, struct SbFreqTable **out);

enum SbStatus sb_freq_count(const struct SbFreqTable *table,
                            const char *key,
                            const char *form,
                            uint64_t *out);

// Frequency-weighted draw from class `key`, avoiding `exclude` (may be
// NULL) unless it is the only form. Deterministic in `(seed, index)`.
enum SbStatus sb_freq_sample(const struct SbFreqTable *table,
                             const char *key,
                             const char *exclude,
                             uint64_t seed,
                             uint64_t index,
                             char **out);

void sb_freq_free(struct SbFreqTable *table);

// Recompute every hash a run manifest lists.
enum SbStatus sb_verify_manifest(const char *path, size_t *out_checked);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SYNBOOT_H */
