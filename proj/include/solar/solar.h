/* C interface to the solar pipeline engine.
 *
 * Every entry point returns a solar_status; SOLAR_OK means success and
 * SOLAR_PARTIAL means the command finished but some of its work failed (for
 * example, a subset of generation requests errored out). Any other status
 * leaves outputs untouched. solar_last_error_message() describes the most
 * recent failure on the calling thread.
 *
 * Strings returned through char** out parameters are heap allocations owned
 * by the caller; release them with solar_string_free.
 */
#ifndef SOLAR_SOLAR_H_
#define SOLAR_SOLAR_H_

#ifdef __cplusplus
extern "C" {
#endif

typedef enum solar_status {
  SOLAR_OK = 0,
  SOLAR_ERROR_CONFIG = 1,
  SOLAR_PARTIAL = 2,
  SOLAR_ERROR_DATA = 3,
  SOLAR_ERROR_IO = 4,
  SOLAR_ERROR_INTERNAL = 5
} solar_status;

typedef struct solar_engine solar_engine;
typedef struct solar_model solar_model;

/* Library version, e.g. "0.1.0". Static storage; do not free. */
const char* solar_version(void);

/* Message for the last failing call on this thread. Static storage; valid
 * until the next solar_* call on the same thread. Empty string when the last
 * call succeeded. */
const char* solar_last_error_message(void);

void solar_string_free(char* text);

/* Builds an engine from a JSON configuration document. NULL or "" uses the
 * built-in defaults. Unknown keys and invalid values are SOLAR_ERROR_CONFIG. */
solar_status solar_engine_create(const char* config_json, solar_engine** out_engine);
void solar_engine_destroy(solar_engine* engine);

/* Runs one pipeline command: "make-problems", "generate", "annotate",
 * "segment", "train-trm", "eval-trm", "compete", "curate" or "report".
 * On SOLAR_OK and SOLAR_PARTIAL, *out_summary_json receives a JSON summary
 * of what happened. */
solar_status solar_engine_run(solar_engine* engine, const char* command,
                              char** out_summary_json);

/* Loads a trained reward model from disk. */
solar_status solar_model_load(const char* path, solar_model** out_model);
void solar_model_destroy(solar_model* model);

/* Scores one response to a question under a reasoning topology ("cot",
 * "tot" or "got"). out_topo receives the regression head's topology-quality
 * estimate in [0, 1]; out_rank the unbounded ranking score. Either output
 * pointer may be NULL when that head's value is not needed. */
solar_status solar_model_score(const solar_model* model, const char* question,
                               const char* response_text, const char* topology,
                               double* out_topo, double* out_rank);

/* Canonical answer-string normalization used for correctness checks. */
solar_status solar_canonicalize_answer(const char* raw, char** out_canonical);

/* Extracts the canonical final answer from a full response text. */
solar_status solar_extract_final_answer(const char* text, char** out_answer);

#ifdef __cplusplus
}
#endif

#endif /* SOLAR_SOLAR_H_ */
