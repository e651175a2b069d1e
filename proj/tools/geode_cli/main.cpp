#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "geode/geode.h"

namespace {

using Json = nlohmann::ordered_json;

constexpr int kExitUsage = 64;

struct Options {
  bool offline = false;
  std::string fixtures;
  std::string backend;
  std::string golden;
  std::string out;
  std::string session;
  std::string host = "127.0.0.1";
  long long seed = -1;
  int port = 8080;
  bool json = false;
};

bool env_set(const char* key)
{
  const char* v = std::getenv(key);
  return v && *v;
}

std::string config_json(const Options& o, const char* net_mode)
{
  Json c = Json::object();
  if (net_mode)
    c["net_mode"] = net_mode;
  if (!o.fixtures.empty())
    c["fixtures"] = o.fixtures;
  else if (!env_set("GEODE_FIXTURES"))
    c["fixtures"] = std::string(GEODE_DATA_DIR) + "/fixtures";
  if (!o.golden.empty())
    c["golden_plans"] = o.golden;
  else if (!env_set("GEODE_GOLDEN_PLANS"))
    c["golden_plans"] = std::string(GEODE_DATA_DIR) + "/golden_plans.json";
  if (!o.backend.empty())
    c["backend"] = o.backend;
  if (o.seed >= 0)
    c["seed"] = static_cast<unsigned long long>(o.seed);
  return c.dump();
}

int exit_code(geode_status s)
{
  switch (s) {
  case GEODE_OK: return 0;
  case GEODE_ERR_PLAN: return 1;
  case GEODE_ERR_UPSTREAM: return 2;
  case GEODE_ERR_BAD_REQUEST:
  case GEODE_ERR_INVALID_ARGUMENT: return kExitUsage;
  default: return 70;
  }
}

struct EngineDeleter {
  void operator()(geode_engine* e) const { geode_engine_destroy(e); }
};
using EnginePtr = std::unique_ptr<geode_engine, EngineDeleter>;

EnginePtr open_engine(const Options& o, const char* net_mode, int& code)
{
  geode_engine* raw = nullptr;
  const geode_status s = geode_engine_create(config_json(o, net_mode).c_str(), &raw);
  if (s != GEODE_OK) {
    std::cerr << "geode: " << geode_last_error() << "\n";
    code = exit_code(s);
  }
  return EnginePtr(raw);
}

int run_query(const Options& o, const std::string& query, const char* net_mode)
{
  int code = 0;
  auto engine = open_engine(o, net_mode, code);
  if (!engine)
    return code;
  char* raw = nullptr;
  const geode_status s =
      geode_ask(engine.get(), query.c_str(), o.session.empty() ? nullptr : o.session.c_str(), nullptr, &raw);
  if (!raw) {
    std::cerr << "geode: " << geode_last_error() << "\n";
    return exit_code(s);
  }
  const Json r = Json::parse(raw);
  geode_string_free(raw);

  if (o.json) {
    std::cout << r.dump(2) << "\n";
  } else if (s == GEODE_OK) {
    std::cout << r["answer"].get<std::string>() << "\n\n" << r["plan"].get<std::string>();
    const auto& plan = r["plan"].get_ref<const std::string&>();
    if (!plan.empty() && plan.back() != '\n')
      std::cout << "\n";
  }
  if (s != GEODE_OK) {
    const auto& e = r["error"];
    std::cerr << "geode: " << e["code"].get<std::string>() << ": " << e["message"].get<std::string>() << "\n";
    for (const auto& d : e["diagnostics"])
      if (d.get<std::string>() != e["code"].get<std::string>() + ": " + e["message"].get<std::string>())
        std::cerr << "  " << d.get<std::string>() << "\n";
  }
  if (s == GEODE_OK && !o.out.empty()) {
    std::ofstream out(o.out);
    if (!out) {
      std::cerr << "geode: cannot write " << o.out << "\n";
      return kExitUsage;
    }
    out << r["map"].dump(2) << "\n";
  }
  return exit_code(s);
}

int run_experts(const Options& o)
{
  int code = 0;
  auto engine = open_engine(o, nullptr, code);
  if (!engine)
    return code;
  char* raw = nullptr;
  const geode_status s = geode_experts(engine.get(), &raw);
  if (s != GEODE_OK) {
    std::cerr << "geode: " << geode_last_error() << "\n";
    return exit_code(s);
  }
  const Json doc = Json::parse(raw);
  geode_string_free(raw);
  if (o.json) {
    std::cout << doc.dump(2) << "\n";
    return 0;
  }
  std::size_t width = 0;
  for (const auto& e : doc["experts"])
    width = std::max(width, e["category"].get<std::string>().size());
  for (const auto& e : doc["experts"]) {
    const auto cat = e["category"].get<std::string>();
    std::cout << cat << std::string(width - cat.size() + 2, ' ') << e["signature"].get<std::string>() << "\n";
  }
  return 0;
}

int run_serve(const Options& o)
{
  int code = 0;
  auto engine = open_engine(o, o.offline ? "offline" : nullptr, code);
  if (!engine)
    return code;
  const geode_status s = geode_serve(engine.get(), o.host.c_str(), o.port);
  if (s != GEODE_OK)
    std::cerr << "geode: " << geode_last_error() << "\n";
  return exit_code(s);
}

} // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Geospatial question answering from composed expert calls"};
  app.require_subcommand(1);
  Options o;
  std::string query;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--fixtures", o.fixtures, "Fixture directory");
    sub->add_option("--backend", o.backend, "Planner backend: hosted-a, hosted-b, local, canned");
    sub->add_option("--golden", o.golden, "Golden plans file for the canned backend");
    sub->add_option("--seed", o.seed, "Sampling seed")->check(CLI::NonNegativeNumber);
  };

  auto* ask = app.add_subcommand("ask", "Answer a query");
  ask->add_option("query", query, "Query text")->required();
  ask->add_flag("--offline", o.offline, "Replay recorded fixtures only");
  ask->add_option("--out", o.out, "Write the map artifact here");
  ask->add_option("--session", o.session, "Session id");
  ask->add_flag("--json", o.json, "Print the full response document");
  common(ask);

  auto* record = app.add_subcommand("record", "Answer a query live and persist fixtures");
  record->add_option("query", query, "Query text")->required();
  record->add_option("--out", o.out, "Write the map artifact here");
  record->add_flag("--json", o.json, "Print the full response document");
  common(record);

  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  serve->add_option("--port", o.port, "Port")->check(CLI::Range(0, 65535));
  serve->add_option("--host", o.host, "Bind address");
  serve->add_flag("--offline", o.offline, "Replay recorded fixtures only");
  common(serve);

  auto* experts = app.add_subcommand("experts", "List registered experts");
  experts->add_flag("--json", o.json, "Print the registry document");
  common(experts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0)
      return app.exit(e);
    app.exit(e);
    std::cerr << app.help();
    return kExitUsage;
  }

  if ((*ask || *record) && query.find_first_not_of(" \t\r\n") == std::string::npos) {
    std::cerr << "geode: query is empty\n" << (*ask ? ask : record)->help();
    return kExitUsage;
  }
  if (*ask)
    return run_query(o, query, o.offline ? "offline" : nullptr);
  if (*record)
    return run_query(o, query, "record");
  if (*serve)
    return run_serve(o);
  return run_experts(o);
}
