/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#ifndef BLUEPRINT_H
#define BLUEPRINT_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum BpStatus {
  BP_STATUS_OK = 0,
  // A required pointer was null, or a string was not UTF-8.
  BP_STATUS_INVALID_ARGUMENT = 1,
  BP_STATUS_IO = 2,
  // Malformed JSON, corpus records or model output.
  BP_STATUS_PARSE = 3,
  // A plan edit or filter could not be applied.
  BP_STATUS_PLAN = 4,
  BP_STATUS_RETRIEVAL = 5,
  // Generation failed before reaching the backend.
  BP_STATUS_ENGINE = 6,
  BP_STATUS_BACKEND = 7,
  BP_STATUS_PANIC = 8,
} BpStatus;

typedef struct BpBlueprint BpBlueprint;

typedef struct BpCorpus BpCorpus;

typedef struct BpEngine BpEngine;

typedef struct BpResult BpResult;

typedef struct BpParams {
  size_t max_input_tokens;
  size_t max_output_tokens;
  size_t max_pairs;
  size_t max_sentences;
} BpParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or null. The pointer is
// valid until the next library call on the same thread.
const char *bp_last_error(void);

// # Safety
// `s` must be null or a string returned by this library, not yet freed.
void bp_string_free(char *s);

struct BpParams bp_params_default(void);

// Creates an engine. `backend` is `"stub"` or a generation server base URL.
//
// # Safety
// `backend` must be a valid C string; `out` must be writable.
enum BpStatus bp_engine_new(const char *backend, uint64_t timeout_ms, struct BpEngine **out);

// # Safety
// `engine` must be null or a live handle from [`bp_engine_new`].
void bp_engine_free(struct BpEngine *engine);

// Loads a JSON-lines corpus file.
//
// # Safety
// `path` must be a valid C string; `out` must be writable.
enum BpStatus bp_corpus_load(const char *path, struct BpCorpus **out);

// Builds a corpus from JSON-lines text held in memory.
//
// # Safety
// `jsonl` must be a valid C string; `out` must be writable.
enum BpStatus bp_corpus_from_jsonl(const char *jsonl, struct BpCorpus **out);

// Number of documents, or 0 for a null handle.
//
// # Safety
// `corpus` must be null or a live corpus handle.
size_t bp_corpus_len(const struct BpCorpus *corpus);

// # Safety
// `corpus` must be null or a live corpus handle.
void bp_corpus_free(struct BpCorpus *corpus);

// Retrieves from `corpus` and runs `model` (`end_to_end`, `iterative` or
// `interactive`). A null `params` means [`bp_params_default`].
//
// # Safety
// Handles must be live, strings valid C strings, `params` null or valid and
// `out` writable.
enum BpStatus bp_summarize(const struct BpEngine *engine,
                           const struct BpCorpus *corpus,
                           const char *query,
                           const char *model,
                           const struct BpParams *params,
                           struct BpResult **out);

// Rewrites the summary of `previous` from `plan`, reusing its input. A
// question-answer plan is forced as is; a question-only plan goes through
// the interactive model.
//
// # Safety
// Handles must be live, `params` null or valid and `out` writable.
enum BpStatus bp_regenerate(const struct BpEngine *engine,
                            const struct BpResult *previous,
                            const struct BpBlueprint *plan,
                            const struct BpParams *params,
                            struct BpResult **out);

// # Safety
// `result` must be live and `out` writable.
enum BpStatus bp_result_to_json(const struct BpResult *result, char **out);

// Copies the result's plan into a new handle.
//
// # Safety
// `result` must be live and `out` writable.
enum BpStatus bp_result_blueprint(const struct BpResult *result, struct BpBlueprint **out);

// The summary as one string, sentences separated by single spaces.
//
// # Safety
// `result` must be live and `out` writable.
enum BpStatus bp_result_summary_text(const struct BpResult *result, char **out);

// # Safety
// `result` must be null or a live result handle.
void bp_result_free(struct BpResult *result);

// Splits decoder output into a plan and summary text. Either out pointer
// may be null when that part is not wanted.
//
// # Safety
// `text` must be a valid C string; non-null out pointers must be writable.
enum BpStatus bp_output_parse(const char *text,
                              bool question_only,
                              struct BpBlueprint **plan_out,
                              char **summary_out);

// # Safety
// `json` must be a valid C string; `out` must be writable.
enum BpStatus bp_blueprint_from_json(const char *json, struct BpBlueprint **out);

// # Safety
// `bp` must be live and `out` writable.
enum BpStatus bp_blueprint_to_json(const struct BpBlueprint *bp, char **out);

// The plan in decoder-prefix form, included pairs only.
//
// # Safety
// `bp` must be live and `out` writable.
enum BpStatus bp_blueprint_serialize(const struct BpBlueprint *bp, char **out);

// Number of pairs, included or not; 0 for a null handle.
//
// # Safety
// `bp` must be null or a live handle.
size_t bp_blueprint_len(const struct BpBlueprint *bp);

// # Safety
// `bp` must be live and `out` writable.
enum BpStatus bp_blueprint_question(const struct BpBlueprint *bp, size_t index, char **out);

// Applies an edit given as JSON, e.g. `{"kind":"toggle_include","target_index":0}`.
//
// # Safety
// `bp` must be live, `edit_json` a valid C string and `out` writable.
enum BpStatus bp_blueprint_apply_edit(const struct BpBlueprint *bp,
                                      const char *edit_json,
                                      struct BpBlueprint **out);

// Removes pairs whose answers are not grounded in `input_text`. A null
// `policy_json` uses the default policy.
//
// # Safety
// `bp` must be live, strings null or valid C strings as noted, and `out`
// writable.
enum BpStatus bp_blueprint_filter(const struct BpBlueprint *bp,
                                  const char *input_text,
                                  const char *policy_json,
                                  struct BpBlueprint **out);

// # Safety
// `bp` must be null or a live handle.
void bp_blueprint_free(struct BpBlueprint *bp);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BLUEPRINT_H */
