/* C interface to the clinical scenario simulator.
 *
 * Every call returns a clinsim_status. On failure a human-readable message is
 * available from clinsim_last_error() on the calling thread. Strings returned
 * through `char**` out-parameters are heap allocated and must be released
 * with clinsim_string_free(). Structured results are JSON text.
 */
#ifndef CLINSIM_CLINSIM_H
#define CLINSIM_CLINSIM_H

#include <stddef.h>

#if defined(_WIN32)
#define CLINSIM_API __declspec(dllexport)
#else
#define CLINSIM_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum clinsim_status {
  CLINSIM_OK = 0,
  CLINSIM_E_INVALID_ARGUMENT = 1,
  CLINSIM_E_PARSE = 2,
  CLINSIM_E_REFERENCE = 3,
  CLINSIM_E_INVALID_CASE = 4,
  CLINSIM_E_NOT_FOUND = 5,
  CLINSIM_E_NOT_ACTIVE = 6,
  CLINSIM_E_MALFORMED = 7,
  CLINSIM_E_IO = 8,
  CLINSIM_E_INTERNAL = 9
} clinsim_status;

typedef struct clinsim_case clinsim_case;
typedef struct clinsim_engine clinsim_engine;

CLINSIM_API const char* clinsim_version(void);
CLINSIM_API const char* clinsim_status_name(clinsim_status status);
/* Message of the last failed call on this thread; "" if none. */
CLINSIM_API const char* clinsim_last_error(void);
CLINSIM_API void clinsim_string_free(char* s);

/* Cases */
CLINSIM_API clinsim_status clinsim_case_parse(const char* json, clinsim_case** out);
CLINSIM_API clinsim_status clinsim_case_load(const char* path, clinsim_case** out);
CLINSIM_API void clinsim_case_free(clinsim_case* c);
CLINSIM_API const char* clinsim_case_id(const clinsim_case* c);
/* JSON array of {severity, path, message}; *count receives its length. */
CLINSIM_API clinsim_status clinsim_case_validate(const clinsim_case* c, char** diagnostics_json,
                                                 size_t* count);
CLINSIM_API clinsim_status clinsim_case_serialize(const clinsim_case* c, char** json);

/* Headless run: replays an action script against a fresh session and
 * returns the session export document. */
CLINSIM_API clinsim_status clinsim_simulate(const clinsim_case* c, const char* script_json,
                                            char** export_json);

/* Engine: case library + session store + HTTP API. */
CLINSIM_API clinsim_status clinsim_engine_create(clinsim_engine** out);
CLINSIM_API void clinsim_engine_free(clinsim_engine* e);
/* Dialogue backend selector: "script" or "external:<url>". NULL reads
 * CLINSIM_BACKEND. Only valid before the first session starts. */
CLINSIM_API clinsim_status clinsim_engine_set_backend(clinsim_engine* e, const char* selector);
CLINSIM_API clinsim_status clinsim_engine_set_educator_token(clinsim_engine* e, const char* token);
/* Copies the case into the engine. */
CLINSIM_API clinsim_status clinsim_engine_add_case(clinsim_engine* e, const clinsim_case* c);
CLINSIM_API clinsim_status clinsim_engine_load_cases(clinsim_engine* e, const char* dir,
                                                     size_t* loaded);
/* In-process request against the HTTP API. `body` may be NULL. The
 * response is a JSON envelope; *http_status receives the status code. */
CLINSIM_API clinsim_status clinsim_engine_request(clinsim_engine* e, const char* method,
                                                  const char* path, const char* body,
                                                  int* http_status, char** response_json);
/* Same as clinsim_engine_request with an Authorization header value such as
 * "Bearer <token>". */
CLINSIM_API clinsim_status clinsim_engine_request_auth(clinsim_engine* e, const char* method,
                                                       const char* path, const char* body,
                                                       const char* authorization, int* http_status,
                                                       char** response_json);
/* Blocks serving HTTP until the process is interrupted. */
CLINSIM_API clinsim_status clinsim_engine_serve(clinsim_engine* e, const char* host, int port);

/* Fetches GET /sessions/{id}/export from a running server. */
CLINSIM_API clinsim_status clinsim_remote_export(const char* host, int port,
                                                 const char* session_id, char** export_json);

/* Requirements toolkit over a corpus directory. */
CLINSIM_API clinsim_status clinsim_re_lint(const char* corpus_dir, char** diagnostics_json,
                                           size_t* count);
/* weights: {clinical_risk, learning_value, complexity} or NULL for defaults. */
CLINSIM_API clinsim_status clinsim_re_prioritize(const char* corpus_dir, const double* weights,
                                                 char** ranking_json);
CLINSIM_API clinsim_status clinsim_re_story_parse(const char* corpus_dir, const char* text,
                                                  char** story_json);

#ifdef __cplusplus
}
#endif

#endif /* CLINSIM_CLINSIM_H */
