#ifndef GEODE_H
#define GEODE_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define GEODE_API __declspec(dllexport)
#else
#define GEODE_API __attribute__((visibility("default")))
#endif

typedef struct geode_engine geode_engine;

typedef enum geode_status {
  GEODE_OK = 0,
  GEODE_ERR_PLAN = 1,
  GEODE_ERR_UPSTREAM = 2,
  GEODE_ERR_BAD_REQUEST = 3,
  GEODE_ERR_INVALID_ARGUMENT = 4,
  GEODE_ERR_INTERNAL = 5
} geode_status;

/*
 * config_json may be NULL. Recognised keys (all optional strings unless
 * noted): net_mode, fixtures, backend, golden_plans, journal,
 * weather_key, geocoder_base_url, weather_base_url, elevation_base_url,
 * seed (integer), use_env (bool, default true). Environment variables
 * are read first when use_env is true; keys override them.
 */
GEODE_API geode_status geode_engine_create(const char* config_json, geode_engine** out);
GEODE_API void geode_engine_destroy(geode_engine* engine);

/*
 * Runs one query. On GEODE_OK, GEODE_ERR_PLAN, GEODE_ERR_UPSTREAM and
 * GEODE_ERR_BAD_REQUEST *response_json receives the response document
 * (free with geode_string_free). session_id and backend may be NULL.
 */
GEODE_API geode_status geode_ask(geode_engine* engine, const char* query, const char* session_id,
                                 const char* backend, char** response_json);

GEODE_API geode_status geode_experts(geode_engine* engine, char** out_json);
GEODE_API geode_status geode_metrics(geode_engine* engine, char** out_json);
GEODE_API geode_status geode_session(geode_engine* engine, const char* session_id, char** out_json);

/* Blocks serving HTTP until the process ends. port 0 picks a free port. */
GEODE_API geode_status geode_serve(geode_engine* engine, const char* host, int port);

GEODE_API void geode_string_free(char* s);

/* Message of the last failure on this thread; never NULL. */
GEODE_API const char* geode_last_error(void);
GEODE_API const char* geode_version(void);

#ifdef __cplusplus
}
#endif

#endif
