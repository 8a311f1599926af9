#ifndef HJHOM_H
#define HJHOM_H

/* C interface to the interface-homogenization toolkit. All functionality is
 * reachable through an opaque session: parse a JSON config, optionally adjust
 * it, then run one of the commands. Outputs are written under the session's
 * output directory; numeric results travel through the emitted CSV/JSON files.
 */

#ifdef __cplusplus
extern "C" {
#endif

typedef enum hjh_status {
  HJH_OK = 0,
  HJH_ERR_PARSE = 1,      /* malformed or schema-invalid config */
  HJH_ERR_VALIDATION = 2, /* degenerate instance / failed assumptions */
  HJH_ERR_SOLVER = 3,     /* non-convergence, coverage, I/O during a run */
  HJH_ERR_PROPERTY = 4,   /* property-suite or convergence-trend failure */
  HJH_ERR_USAGE = 5       /* bad arguments to the API itself */
} hjh_status;

typedef struct hjh_session hjh_session;

/* Create a session from a config file or from JSON text. On failure returns
 * the error class and leaves *out untouched; hjh_last_error() has details. */
hjh_status hjh_session_open(const char* config_path, hjh_session** out);
hjh_status hjh_session_open_text(const char* config_json, hjh_session** out);
void hjh_session_close(hjh_session* s);

hjh_status hjh_session_set_out_dir(hjh_session* s, const char* dir);
hjh_status hjh_session_set_jobs(hjh_session* s, int jobs);
/* Numeric override, e.g. ("solver.eps_fix", 1e-9) or ("eps_fix", 1e-9). */
hjh_status hjh_session_override(hjh_session* s, const char* key, double value);

/* command: validate | effective | solve-eps | solve-limit | converge | props.
 * The returned status doubles as the process exit code contract:
 * 0 pass, 2 validation failure, 3 solver failure, 4 property failure. */
hjh_status hjh_run(hjh_session* s, const char* command);

/* One-line summary of the last hjh_run on this session. */
const char* hjh_last_summary(const hjh_session* s);

/* Thread-local message describing the last error from any hjh_* call. */
const char* hjh_last_error(void);

const char* hjh_version(void);

#ifdef __cplusplus
}
#endif

#endif
