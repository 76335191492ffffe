#ifndef CADTOPO_H
#define CADTOPO_H

/* C interface to the cadtopo library. All handles are opaque; every call
 * that can fail returns a cadtopo_status and leaves a message retrievable
 * with cadtopo_last_error() on the calling thread. */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define CADTOPO_API __declspec(dllexport)
#else
#define CADTOPO_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum cadtopo_status {
  CADTOPO_OK = 0,
  CADTOPO_E_ARG = 1,       /* bad argument or option value */
  CADTOPO_E_NOT_FOUND = 2, /* unknown suite, entry or object */
  CADTOPO_E_PARSE = 3,     /* malformed catalog or expression */
  CADTOPO_E_IO = 4,
  CADTOPO_E_INTERNAL = 5
} cadtopo_status;

typedef struct cadtopo_catalog cadtopo_catalog;
typedef struct cadtopo_report cadtopo_report;

CADTOPO_API const char* cadtopo_version(void);
CADTOPO_API const char* cadtopo_status_name(cadtopo_status s);
/* Message for the last failing call on this thread; "" when none. */
CADTOPO_API const char* cadtopo_last_error(void);
/* Releases strings returned through char** out-parameters. */
CADTOPO_API void cadtopo_free(void* p);

/* -- catalog -- */

/* dir may be NULL: $CADTOPO_DATA_DIR, else the installed default. */
CADTOPO_API cadtopo_status cadtopo_catalog_open(const char* dir, cadtopo_catalog** out);
CADTOPO_API void cadtopo_catalog_close(cadtopo_catalog* cat);
CADTOPO_API size_t cadtopo_catalog_entry_count(const cadtopo_catalog* cat);
CADTOPO_API const char* cadtopo_catalog_entry_id(const cadtopo_catalog* cat, size_t i);

/* -- suites -- */

CADTOPO_API size_t cadtopo_suite_count(void);
CADTOPO_API const char* cadtopo_suite_id(size_t i);
CADTOPO_API const char* cadtopo_suite_title(size_t i);

typedef struct cadtopo_suite_options {
  const char* suite;
  uint64_t seed;
  int samples;               /* per check side, > 0 */
  int boundary_samples;      /* > 0 */
  int eps_levels;            /* eps floor 2^-eps_levels, 1..30 */
  double inconclusive_cap;   /* in [0, 1] */
  const char* const* shifts; /* NULL keeps the defaults */
  size_t shift_count;
  int workers;               /* >= 1 */
  int timing;                /* nonzero: record wall time (reports stop being reproducible) */
} cadtopo_suite_options;

CADTOPO_API void cadtopo_suite_options_init(cadtopo_suite_options* opt);

CADTOPO_API cadtopo_status cadtopo_run_suite(const cadtopo_catalog* cat, const cadtopo_suite_options* opt,
                                             cadtopo_report** out);
CADTOPO_API void cadtopo_report_free(cadtopo_report* rep);
/* 0 all checks pass, 1 some check failed, 2 some check inconclusive. */
CADTOPO_API int cadtopo_report_exit_code(const cadtopo_report* rep);
CADTOPO_API void cadtopo_report_counts(const cadtopo_report* rep, int* pass, int* fail, int* inconclusive);
/* Pretty-printed report JSON; free with cadtopo_free. */
CADTOPO_API cadtopo_status cadtopo_report_json(const cadtopo_report* rep, char** out);
CADTOPO_API cadtopo_status cadtopo_report_write(const cadtopo_report* rep, const char* path);

/* -- single-cell queries -- */

typedef enum cadtopo_membership { CADTOPO_IN = 0, CADTOPO_OUT = 1, CADTOPO_UNCERTAIN = 2 } cadtopo_membership;
typedef enum cadtopo_closure { CADTOPO_CLOSURE_YES = 0, CADTOPO_CLOSURE_NO = 1, CADTOPO_CLOSURE_UNKNOWN = 2 } cadtopo_closure;

/* object is a named cell or "CAD:index"; n must equal the ambient dimension. */
CADTOPO_API cadtopo_status cadtopo_cell_contains(const cadtopo_catalog* cat, const char* entry, const char* object,
                                                 const double* p, size_t n, cadtopo_membership* out);
CADTOPO_API cadtopo_status cadtopo_closure_contains(const cadtopo_catalog* cat, const char* entry,
                                                    const char* object, const double* p, size_t n, uint64_t seed,
                                                    cadtopo_closure* out);
/* Evaluates a named expression of the entry at p. */
CADTOPO_API cadtopo_status cadtopo_eval_expr(const cadtopo_catalog* cat, const char* entry, const char* name,
                                             const double* p, size_t n, double* out);

/* -- meshes -- */

typedef struct cadtopo_mesh_stats {
  long vertices;
  long faces;
  long edges;
  long boundary_points;
} cadtopo_mesh_stats;

/* Writes ASCII PLY to out_path and boundary samples to <stem>_boundary.ply.
 * resolution must be at least 8. stats may be NULL. */
CADTOPO_API cadtopo_status cadtopo_export_mesh(const cadtopo_catalog* cat, const char* entry, const char* object,
                                               int resolution, const char* out_path, uint64_t seed,
                                               cadtopo_mesh_stats* stats);

#ifdef __cplusplus
}
#endif

#endif
