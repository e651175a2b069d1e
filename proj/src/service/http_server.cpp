#include "httplib.h"

#include "geode/service.hpp"

namespace geode::service {

namespace {

void send_json(httplib::Response& res, int status, const Json& body)
{
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& code, const std::string& message)
{
  Json err = Json::object();
  err["ok"] = false;
  err["status"] = status;
  err["error"] = {{"code", code}, {"message", message}, {"stage", "request"}};
  send_json(res, status, err);
}

std::optional<std::string> optional_string(const Json& body, const char* key)
{
  if (!body.contains(key) || body[key].is_null())
    return std::nullopt;
  if (!body[key].is_string())
    throw Error(Errc::bad_request, std::string("'") + key + "' must be a string");
  return body[key].get<std::string>();
}

} // namespace

struct HttpServer::Impl {
  explicit Impl(Engine& e) : engine(e) {}
  Engine& engine;
  httplib::Server server;
};

HttpServer::HttpServer(Engine& engine) : impl_(std::make_unique<Impl>(engine))
{
  auto& svr = impl_->server;
  Engine& eng = impl_->engine;

  svr.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
  svr.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
    res.status = 204;
  });

  svr.Post("/api/query", [&eng](const httplib::Request& req, httplib::Response& res) {
    Json body;
    std::string query;
    std::optional<std::string> session, backend;
    try {
      body = Json::parse(req.body);
      if (!body.is_object() || !body.contains("query") || !body["query"].is_string())
        throw Error(Errc::bad_request, "body must be an object with a string 'query'");
      query = body["query"].get<std::string>();
      session = optional_string(body, "session_id");
      backend = optional_string(body, "backend");
    } catch (const Json::exception& e) {
      return send_error(res, 400, errc_code(Errc::bad_request), std::string("invalid JSON: ") + e.what());
    } catch (const Error& e) {
      return send_error(res, 400, errc_code(e.code()), e.detail());
    }
    const auto response = eng.handle_query(query, session, backend);
    send_json(res, response.status, to_json(response));
  });

  svr.Get("/api/experts", [&eng](const httplib::Request&, httplib::Response& res) {
    send_json(res, 200, eng.experts());
  });
  svr.Get("/api/metrics", [&eng](const httplib::Request&, httplib::Response& res) {
    send_json(res, 200, eng.metrics());
  });
  svr.Get("/api/health", [&eng](const httplib::Request&, httplib::Response& res) {
    send_json(res, 200, eng.health());
  });
  svr.Get(R"(/api/sessions/([^/]+))", [&eng](const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1];
    if (auto s = eng.session(id))
      return send_json(res, 200, *s);
    send_error(res, 404, "NOT_FOUND", "no session '" + id + "'");
  });
  svr.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (res.body.empty())
      send_error(res, res.status, "NOT_FOUND", "no such route");
  });
}

HttpServer::~HttpServer()
{
  stop();
}

int HttpServer::bind(const std::string& host, int port)
{
  if (port == 0)
    port = impl_->server.bind_to_any_port(host);
  else if (!impl_->server.bind_to_port(host, port))
    port = -1;
  if (port <= 0)
    throw Error(Errc::precondition, "cannot bind " + host + ":" + std::to_string(port));
  return port;
}

void HttpServer::listen()
{
  impl_->server.listen_after_bind();
}

void HttpServer::stop()
{
  if (impl_->server.is_running())
    impl_->server.stop();
}

} // namespace geode::service
