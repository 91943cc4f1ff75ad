#ifndef CUSTODIAN_H
#define CUSTODIAN_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define CUST_API __declspec(dllexport)
#else
#define CUST_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes. Values are stable across releases. */
typedef enum cust_status {
  CUST_OK = 0,
  CUST_UNKNOWN_CASE = 1,
  CUST_UNKNOWN_EVIDENCE = 2,
  CUST_UNKNOWN_PRINCIPAL = 3,
  CUST_UNKNOWN_OBJECT = 4,
  CUST_UNKNOWN_TARGET = 5,
  CUST_UNKNOWN_PLUGIN = 6,
  CUST_ACCESS_DENIED = 7,
  CUST_BAD_CREDENTIALS = 8,
  CUST_AUTH_REQUIRED = 9,
  CUST_STORAGE_FAILURE = 10,
  CUST_DIGEST_MISMATCH = 11,
  CUST_DIGEST_UNPARSEABLE = 12,
  CUST_SOURCE_CORRUPT = 13,
  CUST_RANGE_OUT_OF_BOUNDS = 14,
  CUST_EMPTY_BODY = 15,
  CUST_INVALID_ARGUMENT = 16,
  CUST_PARAM_INVALID = 17,
  CUST_PLAN_INVALID = 18,
  CUST_MANIFEST_INVALID = 19,
  CUST_TOOL_FAILED = 20,
  CUST_TIMEOUT = 21,
  CUST_LATEX_ENGINE_MISSING = 22,
  CUST_LATEX_COMPILE_FAILED = 23,
  CUST_REFERENTIAL_FAILURE = 24,
  CUST_INCOMPATIBLE_VERSION = 25,
  CUST_LOCKED = 26,
  CUST_BIND_FAILURE = 27,
  CUST_CASE_CLOSED = 28,
  CUST_BOOTSTRAP_REQUIRED = 29,
  CUST_DUPLICATE = 30,
  CUST_DELETION_REFUSED = 31,
  CUST_INTEGRITY_FAILURE = 32,
  CUST_INTERNAL = 33
} cust_status;

typedef struct cust_engine cust_engine;
typedef struct cust_result cust_result;
typedef struct cust_server cust_server;

/* Flags for cust_engine_open. */
#define CUST_OPEN_ENVIRONMENT 1u /* apply CUSTODIAN_* environment variables after config_text */

CUST_API const char* cust_version(void);

/* Symbolic name of a status ("UNKNOWN_CASE"); "UNKNOWN_STATUS" when out of range. */
CUST_API const char* cust_status_name(cust_status status);

/* Message of the last failed call on this thread; "" when none. Valid until
   the next call on the same thread. */
CUST_API const char* cust_last_error(void);

/* Opens or creates the repository. repo may be NULL when config_text names
   it; config_text holds key=value lines and may be NULL. */
CUST_API cust_status cust_engine_open(const char* repo, const char* config_text, unsigned flags,
                                      cust_engine** out);
CUST_API void cust_engine_close(cust_engine* engine);

/* On success *token_out is a heap string released with cust_free. */
CUST_API cust_status cust_login(cust_engine* engine, const char* username, const char* secret, char** token_out);
CUST_API cust_status cust_logout(cust_engine* engine, const char* token);

/* Runs one operation. args_json is a JSON object (NULL means {}); input is
   an optional raw upload. On success *out receives a result, released with
   cust_result_free. On failure *out is NULL and cust_last_error() explains. */
CUST_API cust_status cust_call(cust_engine* engine, const char* token, const char* op, const char* args_json,
                               const uint8_t* input, size_t input_len, cust_result** out);

/* NUL-terminated JSON text of the reply. */
CUST_API const char* cust_result_json(const cust_result* result);
/* Binary payload (evidence window, rendered text, report). NULL/0 when absent. */
CUST_API const uint8_t* cust_result_bytes(const cust_result* result, size_t* len);
CUST_API const char* cust_result_media_type(const cust_result* result);
CUST_API void cust_result_free(cust_result* result);

/* Operation names understood by cust_call, newline-separated. */
CUST_API const char* cust_operations(void);

/* HTTP service. address NULL and port -1 use the configured values; port 0
   picks a free port. *port_out (optional) receives the bound port. */
CUST_API cust_status cust_serve(cust_engine* engine, const char* address, int port, int allow_remote,
                                const char* static_dir, cust_server** out, int* port_out);
CUST_API void cust_server_stop(cust_server* server);
/* Blocks until the server stops, then frees it. */
CUST_API void cust_server_wait(cust_server* server);

/* Checks an exported ledger file offline. *broken_at receives the first bad
   seq, 0 when intact. Returns CUST_INTEGRITY_FAILURE on a broken chain. */
CUST_API cust_status cust_ledger_verify_export(const char* path, uint64_t* events, uint64_t* broken_at);

CUST_API void cust_free(void* p);

#ifdef __cplusplus
}
#endif

#endif
