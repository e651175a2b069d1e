#include "geode/geode.h"

#include <cstdio>
#include <cstdlib>
#include <cstring>

#include "geode/service.hpp"

struct geode_engine {
  std::unique_ptr<geode::service::Engine> engine;
};

namespace {

thread_local std::string g_last_error;

using geode::Json;

geode_status fail(geode_status status, const std::string& message)
{
  g_last_error = message;
  return status;
}

geode_status status_for(int http)
{
  switch (http) {
  case 200: return GEODE_OK;
  case 400: return GEODE_ERR_BAD_REQUEST;
  case 422: return GEODE_ERR_PLAN;
  case 502: return GEODE_ERR_UPSTREAM;
  default: return GEODE_ERR_INTERNAL;
  }
}

char* dup(const std::string& s)
{
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out)
    std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

std::string str(const Json& doc, const char* key, const std::string& fallback)
{
  if (!doc.contains(key) || doc[key].is_null())
    return fallback;
  if (!doc[key].is_string())
    throw geode::Error(geode::Errc::bad_request, std::string("config key '") + key + "' must be a string");
  return doc[key].get<std::string>();
}

geode::service::EngineConfig parse_config(const char* text)
{
  namespace gw = geode::gateway;
  Json doc = text && *text ? Json::parse(text) : Json::object();
  if (!doc.is_object())
    throw geode::Error(geode::Errc::bad_request, "config must be a JSON object");
  const bool use_env = doc.value("use_env", true);

  geode::service::EngineConfig c;
  if (use_env)
    c.clients = geode::clients::ClientConfig::from_env();
  std::optional<gw::BackendId> backend;
  if (doc.contains("backend"))
    backend = gw::backend_id_from_string(str(doc, "backend", ""));
  if (use_env) {
    c.backend = gw::BackendConfig::from_env(backend);
  } else {
    c.backend.id = backend.value_or(gw::BackendId::canned);
  }

  if (doc.contains("net_mode"))
    c.clients.mode = geode::clients::net_mode_from_string(str(doc, "net_mode", ""));
  c.clients.fixtures = str(doc, "fixtures", c.clients.fixtures);
  c.clients.weather_key = str(doc, "weather_key", c.clients.weather_key);
  c.clients.geocoder_base = str(doc, "geocoder_base_url", c.clients.geocoder_base);
  c.clients.weather_base = str(doc, "weather_base_url", c.clients.weather_base);
  c.clients.elevation_base = str(doc, "elevation_base_url", c.clients.elevation_base);
  if (doc.contains("seed")) {
    if (!doc["seed"].is_number_unsigned())
      throw geode::Error(geode::Errc::bad_request, "config key 'seed' must be a non-negative integer");
    c.clients.seed = doc["seed"].get<std::uint64_t>();
  }
  c.backend.golden_plans = str(doc, "golden_plans", c.backend.golden_plans);
  c.journal = str(doc, "journal", "");
  return c;
}

template <class Fn>
geode_status guarded(Fn&& fn)
{
  try {
    return fn();
  } catch (const Json::exception& e) {
    return fail(GEODE_ERR_BAD_REQUEST, std::string("BAD_REQUEST: invalid JSON: ") + e.what());
  } catch (const geode::Error& e) {
    const int http = geode::service::http_status(e);
    return fail(http == 500 ? GEODE_ERR_INVALID_ARGUMENT : status_for(http), e.what());
  } catch (const std::exception& e) {
    return fail(GEODE_ERR_INTERNAL, e.what());
  }
}

geode_status emit(const Json& doc, char** out)
{
  *out = dup(doc.dump());
  return *out ? GEODE_OK : fail(GEODE_ERR_INTERNAL, "out of memory");
}

} // namespace

extern "C" {

geode_status geode_engine_create(const char* config_json, geode_engine** out)
{
  if (!out)
    return fail(GEODE_ERR_INVALID_ARGUMENT, "out is NULL");
  *out = nullptr;
  return guarded([&] {
    auto engine = std::make_unique<geode::service::Engine>(parse_config(config_json));
    *out = new geode_engine{std::move(engine)};
    return GEODE_OK;
  });
}

void geode_engine_destroy(geode_engine* engine)
{
  delete engine;
}

geode_status geode_ask(geode_engine* engine, const char* query, const char* session_id, const char* backend,
                       char** response_json)
{
  if (!engine || !query || !response_json)
    return fail(GEODE_ERR_INVALID_ARGUMENT, "engine, query and response_json are required");
  *response_json = nullptr;
  return guarded([&] {
    auto opt = [](const char* s) { return s ? std::optional<std::string>(s) : std::nullopt; };
    const auto r = engine->engine->handle_query(query, opt(session_id), opt(backend));
    if (r.error)
      g_last_error = r.error->code + ": " + r.error->message;
    *response_json = dup(to_json(r).dump());
    if (!*response_json)
      return fail(GEODE_ERR_INTERNAL, "out of memory");
    return status_for(r.status);
  });
}

geode_status geode_experts(geode_engine* engine, char** out_json)
{
  if (!engine || !out_json)
    return fail(GEODE_ERR_INVALID_ARGUMENT, "engine and out_json are required");
  return guarded([&] { return emit(engine->engine->experts(), out_json); });
}

geode_status geode_metrics(geode_engine* engine, char** out_json)
{
  if (!engine || !out_json)
    return fail(GEODE_ERR_INVALID_ARGUMENT, "engine and out_json are required");
  return guarded([&] { return emit(engine->engine->metrics(), out_json); });
}

geode_status geode_session(geode_engine* engine, const char* session_id, char** out_json)
{
  if (!engine || !session_id || !out_json)
    return fail(GEODE_ERR_INVALID_ARGUMENT, "engine, session_id and out_json are required");
  *out_json = nullptr;
  return guarded([&] {
    auto s = engine->engine->session(session_id);
    if (!s)
      return fail(GEODE_ERR_BAD_REQUEST, std::string("no session '") + session_id + "'");
    return emit(*s, out_json);
  });
}

geode_status geode_serve(geode_engine* engine, const char* host, int port)
{
  if (!engine)
    return fail(GEODE_ERR_INVALID_ARGUMENT, "engine is NULL");
  return guarded([&] {
    geode::service::HttpServer server(*engine->engine);
    const int bound = server.bind(host ? host : "127.0.0.1", port);
    std::fprintf(stderr, "geode listening on http://%s:%d\n", host ? host : "127.0.0.1", bound);
    server.listen();
    return GEODE_OK;
  });
}

void geode_string_free(char* s)
{
  std::free(s);
}

const char* geode_last_error(void)
{
  return g_last_error.c_str();
}

const char* geode_version(void)
{
  return "0.1.0";
}

} // extern "C"
