#include "doctest.h"

#include <thread>

#include "httplib.h"

#include "geode/service.hpp"
#include "../support/world_registry.hpp"

using namespace geode;
using namespace geode::service;

namespace {

struct Running {
  explicit Running(EngineConfig c)
      : engine(std::move(c), std::make_shared<fake::WorldTransport>(), nullptr,
               [] { return fake::kObservedAt + 600; }),
        server(engine)
  {
    port = server.bind("127.0.0.1", 0);
    thread = std::thread([this] { server.listen(); });
    client = std::make_unique<httplib::Client>("127.0.0.1", port);
    for (int i = 0; i < 200 && !client->Get("/api/health"); ++i)
      std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  ~Running()
  {
    server.stop();
    thread.join();
  }

  Engine engine;
  HttpServer server;
  int port = 0;
  std::thread thread;
  std::unique_ptr<httplib::Client> client;
};

EngineConfig config()
{
  EngineConfig c;
  c.clients = testing::world_config();
  c.backend.golden_plans = std::string(GEODE_SOURCE_DIR) + "/data/golden_plans.json";
  return c;
}

Json post(httplib::Client& cli, const Json& body, int& status)
{
  auto res = cli.Post("/api/query", body.dump(), "application/json");
  REQUIRE(res);
  status = res->status;
  return Json::parse(res->body);
}

} // namespace

TEST_SUITE("http") {

TEST_CASE("api routes")
{
  Running svc(config());
  auto& cli = *svc.client;

  auto health = cli.Get("/api/health");
  REQUIRE(health);
  CHECK(health->status == 200);
  CHECK(Json::parse(health->body)["status"] == "ok");

  auto experts = cli.Get("/api/experts");
  REQUIRE(experts);
  CHECK(Json::parse(experts->body)["experts"].size() == svc.engine.registry().entries().size());

  auto metrics = cli.Get("/api/metrics");
  REQUIRE(metrics);
  CHECK(Json::parse(metrics->body)["requests"] == 0);

  int status = 0;
  auto body = post(cli,
                   {{"query", "What is the air quality like in the city known for the Qutub Minar?"},
                    {"session_id", "abc"}},
                   status);
  CHECK(status == 200);
  CHECK(body["ok"] == true);
  CHECK(body["map"]["overlay"]["legend"]["name"] == "US - EPA Index");
  CHECK(body["metrics"]["completion"] == true);

  body = post(cli, {{"query", "What is the weather on Mars?"}, {"session_id", "abc"}}, status);
  CHECK(status == 422);
  CHECK(body["metrics"]["completion"] == false);
  CHECK(body["error"]["code"] == "NO_CANNED_PLAN");

  body = post(cli, {{"query", ""}}, status);
  CHECK(status == 400);
  body = post(cli, {{"q", "x"}}, status);
  CHECK(status == 400);
  body = post(cli, {{"query", "x"}, {"backend", 3}}, status);
  CHECK(status == 400);
  auto bad = cli.Post("/api/query", "{not json", "application/json");
  REQUIRE(bad);
  CHECK(bad->status == 400);
  CHECK(Json::parse(bad->body)["error"]["code"] == "BAD_REQUEST");

  auto session = cli.Get("/api/sessions/abc");
  REQUIRE(session);
  CHECK(session->status == 200);
  CHECK(Json::parse(session->body)["turns"].size() == 2);
  auto missing = cli.Get("/api/sessions/nope");
  REQUIRE(missing);
  CHECK(missing->status == 404);
  auto unknown = cli.Get("/api/nothing");
  REQUIRE(unknown);
  CHECK(unknown->status == 404);

  metrics = cli.Get("/api/metrics");
  const auto m = Json::parse(metrics->body);
  // Malformed bodies are rejected before the engine; the empty query is not.
  CHECK(m["requests"] == 3);
  CHECK(m["completed"] == 1);
  CHECK(m["plan_failures"] == 1);
}

TEST_CASE("concurrent queries")
{
  Running svc(config());
  std::vector<std::thread> threads;
  std::vector<int> statuses(4, 0);
  for (int i = 0; i < 4; ++i)
    threads.emplace_back([&, i] {
      httplib::Client cli("127.0.0.1", svc.port);
      Json body = {{"query", "Where does it rain more, Atlanta or Chicago?"}, {"session_id", "shared"}};
      auto res = cli.Post("/api/query", body.dump(), "application/json");
      statuses[static_cast<std::size_t>(i)] = res ? res->status : -1;
    });
  for (auto& t : threads)
    t.join();
  for (int s : statuses)
    CHECK(s == 200);
  CHECK(svc.engine.session("shared").value()["turns"].size() == 4);
}

}
