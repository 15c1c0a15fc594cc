#ifndef TEMPOJD_H
#define TEMPOJD_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum TjdStatus {
  TJD_STATUS_OK = 0,
  TJD_STATUS_NULL_POINTER = 1,
  TJD_STATUS_INVALID_ARGUMENT = 2,
  // Unreadable, malformed or unsuitable input data.
  TJD_STATUS_DATA_ERROR = 3,
  // Joint diagonalisation hit its sweep limit. Results are still
  // written through `out` and must be freed.
  TJD_STATUS_NOT_CONVERGED = 4,
  TJD_STATUS_BUFFER_TOO_SMALL = 5,
  // A bug inside the library; the message has details.
  TJD_STATUS_PANIC = 6,
} TjdStatus;

typedef enum TjdTraceFormat {
  TJD_TRACE_FORMAT_CSV = 0,
  TJD_TRACE_FORMAT_WHITESPACE = 1,
} TjdTraceFormat;

typedef enum TjdCommand {
  TJD_COMMAND_SYNTH = 0,
  TJD_COMMAND_SAMPLE = 1,
  TJD_COMMAND_ANALYSE = 2,
  TJD_COMMAND_SIR = 3,
  // The full chain, as one experiment of `repro`.
  TJD_COMMAND_REPRO = 4,
} TjdCommand;

// A batch of spanning-tree samples.
typedef struct TjdBatch TjdBatch;

// A joint diagonalisation result.
typedef struct TjdJd TjdJd;

// A mode decomposition.
typedef struct TjdModes TjdModes;

// A contact trace.
typedef struct TjdNetwork TjdNetwork;

// One contact between nodes `a` and `b` over `[start, end]` seconds.
typedef struct TjdContact {
  size_t a;
  size_t b;
  double start;
  double end;
} TjdContact;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *tjd_version(void);

// Message of the last failed call on this thread, or null. The pointer
// stays valid until the next call into the library on this thread.
const char *tjd_last_error(void);

// Reads a trace file.
//
// # Safety
// `path` must be a NUL-terminated string and `out` a writable pointer.
enum TjdStatus tjd_network_load(const char *path,
                                enum TjdTraceFormat format,
                                double granularity,
                                struct TjdNetwork **out);

// Builds a trace from `count` contacts over nodes `0..n_nodes`.
//
// # Safety
// `contacts` must point to `count` readable values (or be null with
// `count == 0`) and `out` must be writable.
enum TjdStatus tjd_network_from_contacts(size_t n_nodes,
                                         const struct TjdContact *contacts,
                                         size_t count,
                                         double granularity,
                                         struct TjdNetwork **out);

// Node count, or 0 for a null handle.
//
// # Safety
// `net` must be null or a live handle.
size_t tjd_network_node_count(const struct TjdNetwork *net);

// Contact count after merging, or 0 for a null handle.
//
// # Safety
// `net` must be null or a live handle.
size_t tjd_network_contact_count(const struct TjdNetwork *net);

// # Safety
// `net` must be null or a handle not freed before.
void tjd_network_free(struct TjdNetwork *net);

// Draws `m` flooding trees with uniform roots and start times. A
// non-positive or infinite `horizon` means no horizon.
//
// # Safety
// `net` must be a live handle and `out` writable.
enum TjdStatus tjd_batch_sample(const struct TjdNetwork *net,
                                size_t m,
                                uint64_t seed,
                                double horizon,
                                struct TjdBatch **out);

// Draws `m` BFS trees from a static graph given as `n_edges` node pairs
// (`2 * n_edges` indices).
//
// # Safety
// `edges` must point to `2 * n_edges` readable indices (or be null with
// `n_edges == 0`) and `out` must be writable.
enum TjdStatus tjd_batch_sample_graph(size_t n_nodes,
                                      const size_t *edges,
                                      size_t n_edges,
                                      size_t m,
                                      uint64_t seed,
                                      struct TjdBatch **out);

// Reads a batch file.
//
// # Safety
// `path` must be a NUL-terminated string and `out` writable.
enum TjdStatus tjd_batch_load(const char *path, struct TjdBatch **out);

// Writes a batch file.
//
// # Safety
// `batch` must be a live handle and `path` a NUL-terminated string.
enum TjdStatus tjd_batch_save(const struct TjdBatch *batch, const char *path);

// A new batch holding only the trees that reached every node.
//
// # Safety
// `batch` must be a live handle and `out` writable.
enum TjdStatus tjd_batch_complete_only(const struct TjdBatch *batch, struct TjdBatch **out);

// Sample count, or 0 for a null handle.
//
// # Safety
// `batch` must be null or a live handle.
size_t tjd_batch_len(const struct TjdBatch *batch);

// Node count, or 0 for a null handle.
//
// # Safety
// `batch` must be null or a live handle.
size_t tjd_batch_node_count(const struct TjdBatch *batch);

// # Safety
// `batch` must be null or a handle not freed before.
void tjd_batch_free(struct TjdBatch *batch);

// Jointly diagonalises the batch's tree matrices. On
// [`TjdStatus::NotConverged`] the result is still written to `out`.
//
// # Safety
// `batch` must be a live handle and `out` writable.
enum TjdStatus tjd_jd_run(const struct TjdBatch *batch,
                          double tol,
                          size_t max_sweeps,
                          struct TjdJd **out);

// Matrix dimension, or 0 for a null handle.
//
// # Safety
// `jd` must be null or a live handle.
size_t tjd_jd_dim(const struct TjdJd *jd);

// Number of jointly diagonalised matrices, or 0 for a null handle.
//
// # Safety
// `jd` must be null or a live handle.
size_t tjd_jd_sample_count(const struct TjdJd *jd);

// Sweeps performed, or 0 for a null handle.
//
// # Safety
// `jd` must be null or a live handle.
size_t tjd_jd_sweeps(const struct TjdJd *jd);

// Per-sample deviations (`tjd_jd_sample_count` values).
//
// # Safety
// `jd` must be a live handle and `buf` must hold `len` doubles.
enum TjdStatus tjd_jd_deviations(const struct TjdJd *jd, double *buf, size_t len);

// The orthogonal basis, `dim * dim` values, columns as basis vectors.
//
// # Safety
// `jd` must be a live handle and `buf` must hold `len` doubles.
enum TjdStatus tjd_jd_basis(const struct TjdJd *jd, double *buf, size_t len);

// The average graph `U diag(C) Uᵀ`, `dim * dim` values.
//
// # Safety
// `jd` must be a live handle and `buf` must hold `len` doubles.
enum TjdStatus tjd_jd_average(const struct TjdJd *jd, double *buf, size_t len);

// # Safety
// `jd` must be null or a handle not freed before.
void tjd_jd_free(struct TjdJd *jd);

// Joint diagonalisation, mixture selection over `1..=k_max` components and
// per-mode average graphs, with default tolerances. On
// [`TjdStatus::NotConverged`] the report is still written to `out`.
//
// # Safety
// `batch` must be a live handle and `out` writable.
enum TjdStatus tjd_modes_decompose(const struct TjdBatch *batch,
                                   size_t k_max,
                                   uint64_t seed,
                                   struct TjdModes **out);

// Selected mixture order, or 0 for a null handle.
//
// # Safety
// `modes` must be null or a live handle.
size_t tjd_modes_k(const struct TjdModes *modes);

// Samples in the report, or 0 for a null handle.
//
// # Safety
// `modes` must be null or a live handle.
size_t tjd_modes_sample_count(const struct TjdModes *modes);

// Mode of every sample (`tjd_modes_sample_count` values).
//
// # Safety
// `modes` must be a live handle and `buf` must hold `len` values.
enum TjdStatus tjd_modes_assignments(const struct TjdModes *modes, size_t *buf, size_t len);

// Members of `mode`, or 0 when the mode is empty or the handle null.
//
// # Safety
// `modes` must be null or a live handle.
size_t tjd_modes_member_count(const struct TjdModes *modes, size_t mode);

// Average graph of `mode`, `n * n` values.
//
// # Safety
// `modes` must be a live handle and `buf` must hold `len` doubles.
enum TjdStatus tjd_modes_hbar(const struct TjdModes *modes, size_t mode, double *buf, size_t len);

// # Safety
// `modes` must be null or a handle not freed before.
void tjd_modes_free(struct TjdModes *modes);

// Runs a pipeline command from a JSON config into `out_dir`, as the
// command-line tool does.
//
// # Safety
// `config_json` and `out_dir` must be NUL-terminated strings.
enum TjdStatus tjd_pipeline_run(enum TjdCommand command,
                                const char *config_json,
                                const char *out_dir);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TEMPOJD_H */
