#ifndef MCR_GRAPH_H
#define MCR_GRAPH_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Result code of every call.
 */
typedef enum McrStatus {
  MCR_STATUS_OK = 0,
  MCR_STATUS_NULL_POINTER = 1,
  MCR_STATUS_INVALID_UTF8 = 2,
  MCR_STATUS_SYNTAX_ERROR = 3,
  MCR_STATUS_IO = 4,
  MCR_STATUS_INVALID_MODEL = 5,
  MCR_STATUS_INVALID_ARGUMENT = 6,
  MCR_STATUS_BUFFER_TOO_SMALL = 7,
  MCR_STATUS_PANIC = 8,
} McrStatus;

/*
 A parsed MiniJ file together with its source text.
 */
typedef struct McrGraph McrGraph;

/*
 A trained checkpoint.
 */
typedef struct McrModel McrModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failed call on this thread, or null. The pointer
 stays valid until the next call on the same thread.
 */
const char *mcr_last_error(void);

/*
 Library version as a static string.
 */
const char *mcr_version(void);

/*
 Frees a string returned by this library. Null is ignored.

 # Safety
 `s` must come from this library and not have been freed.
 */
void mcr_string_free(char *s);

/*
 Parses MiniJ `source` into a program graph.

 # Safety
 `source` must be a NUL-terminated string; `out` must be writable.
 */
enum McrStatus mcr_graph_parse(const char *source, struct McrGraph **out);

/*
 # Safety
 `graph` must be null or a live handle from `mcr_graph_parse`.
 */
void mcr_graph_free(struct McrGraph *graph);

/*
 Number of AST nodes.

 # Safety
 `graph` must be a live handle; `out` must be writable.
 */
enum McrStatus mcr_graph_node_count(const struct McrGraph *graph, size_t *out);

/*
 Number of source lines.

 # Safety
 `graph` must be a live handle; `out` must be writable.
 */
enum McrStatus mcr_graph_line_count(const struct McrGraph *graph, uint32_t *out);

/*
 The graph as JSON. Free the result with `mcr_string_free`.

 # Safety
 `graph` must be a live handle; `out` must be writable.
 */
enum McrStatus mcr_graph_to_json(const struct McrGraph *graph, char **out);

/*
 Loads a checkpoint file.

 # Safety
 `path` must be a NUL-terminated string; `out` must be writable.
 */
enum McrStatus mcr_model_load(const char *path, struct McrModel **out);

/*
 # Safety
 `model` must be null or a live handle from `mcr_model_load`.
 */
void mcr_model_free(struct McrModel *model);

/*
 Writes the likelihood score of each source line into `scores`.
 `written` receives the line count; when `capacity` is smaller nothing
 is written to `scores` and `BufferTooSmall` is returned.

 # Safety
 Handles must be live; `scores` must hold `capacity` doubles; `written`
 must be writable.
 */
enum McrStatus mcr_predict_line_scores(const struct McrModel *model,
                                       const struct McrGraph *graph,
                                       double *scores,
                                       size_t capacity,
                                       size_t *written);

/*
 Annotated text listing of the file: lines whose score reaches
 `threshold` are marked. Free the result with `mcr_string_free`.

 # Safety
 Handles must be live; `out` must be writable.
 */
enum McrStatus mcr_predict_report(const struct McrModel *model,
                                  const struct McrGraph *graph,
                                  double threshold,
                                  char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MCR_GRAPH_H */
