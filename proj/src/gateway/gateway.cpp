#include "geode/gateway.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "geode/serialize.hpp"

namespace geode::gateway {

namespace {

std::string env(const char* key, const std::string& fallback = {})
{
  const char* v = std::getenv(key);
  return v && *v ? v : fallback;
}

std::string trim(const std::string& s)
{
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos)
    return "";
  return s.substr(b, s.find_last_not_of(" \t\r\n") - b + 1);
}

const char* kGrammar = R"g(plan     = { binding , NL } , ret ;
binding  = IDENT , "=" , expr ;
ret      = "return" , expr , "," , expr ;
expr     = call | IDENT | literal ;
call     = IDENT , "(" , [ arg , { "," , arg } ] , ")" ;
arg      = [ IDENT , "=" ] , expr ;
literal  = STRING | NUMBER | "true" | "false" ;
IDENT    = letter-or-underscore , { letter-digit-underscore } ;
comment  = "#" , to-end-of-line ;)g";

// Chat-style or completion-style HTTP backend.
class HttpBackend final : public Backend {
public:
  HttpBackend(BackendConfig cfg, std::shared_ptr<Transport> transport)
      : cfg_(std::move(cfg)), transport_(std::move(transport)),
        slots_(static_cast<std::ptrdiff_t>(std::max<std::size_t>(1, cfg_.max_in_flight)))
  {
    if (cfg_.url.empty())
      throw Error(Errc::precondition, std::string(to_string(cfg_.id)) + " backend needs an endpoint URL");
    if (cfg_.id != BackendId::local && cfg_.model.empty())
      throw Error(Errc::precondition, std::string(to_string(cfg_.id)) + " backend needs a model name");
  }

  BackendId id() const noexcept override { return cfg_.id; }

  std::string complete(const Completion& c) override
  {
    HttpRequest req;
    req.method = "POST";
    req.url = cfg_.url;
    req.content_type = "application/json";
    req.timeout_s = cfg_.timeout_s;
    Json body = Json::object();
    switch (cfg_.id) {
    case BackendId::hosted_a:
      req.headers = {{"Authorization", "Bearer " + cfg_.key}};
      body["model"] = cfg_.model;
      body["temperature"] = 0;
      body["messages"] = Json::array({{{"role", "user"}, {"content", c.prompt}}});
      break;
    case BackendId::hosted_b:
      req.headers = {{"x-api-key", cfg_.key}, {"anthropic-version", "2023-06-01"}};
      body["model"] = cfg_.model;
      body["max_tokens"] = 2048;
      body["temperature"] = 0;
      body["messages"] = Json::array({{{"role", "user"}, {"content", c.prompt}}});
      break;
    default:
      body["prompt"] = c.prompt;
      body["temperature"] = 0;
      body["max_tokens"] = 2048;
      if (!cfg_.key.empty())
        req.headers = {{"Authorization", "Bearer " + cfg_.key}};
    }
    req.body = body.dump();

    HttpResponse res;
    slots_.acquire();
    try {
      res = transport_->send(req);
    } catch (const Error& e) {
      slots_.release();
      throw Error(Errc::backend_unavailable, std::string(to_string(cfg_.id)) + ": " + e.detail());
    }
    slots_.release();
    if (res.status < 200 || res.status >= 300)
      throw Error(Errc::backend_unavailable,
                  std::string(to_string(cfg_.id)) + " returned HTTP " + std::to_string(res.status));
    try {
      const Json doc = Json::parse(res.body);
      if (cfg_.id == BackendId::hosted_a)
        return doc.at("choices").at(0).at("message").at("content").get<std::string>();
      if (cfg_.id == BackendId::hosted_b) {
        std::string text;
        for (const auto& part : doc.at("content"))
          if (part.value("type", "text") == "text")
            text += part.at("text").get<std::string>();
        return text;
      }
      for (const char* key : {"text", "content", "response", "completion"})
        if (doc.contains(key) && doc[key].is_string())
          return doc[key].get<std::string>();
      return doc.at("choices").at(0).at("text").get<std::string>();
    } catch (const Json::exception&) {
      throw Error(Errc::backend_unavailable, std::string(to_string(cfg_.id)) + " reply is not in the expected shape");
    }
  }

private:
  BackendConfig cfg_;
  std::shared_ptr<Transport> transport_;
  std::counting_semaphore<> slots_;
};

struct Attempt {
  std::optional<plan::TypedPlan> typed;
  std::string source;
  std::string diagnostic;
};

Attempt try_plan(const std::string& output, const plan::Registry& registry)
{
  Attempt a;
  try {
    a.source = plan::extract_plan(output);
    a.typed = plan::typecheck(plan::parse(a.source), registry);
  } catch (const Error& e) {
    if (!is_plan_error(e.code()))
      throw;
    a.diagnostic = e.what();
    if (a.source.empty())
      a.source = output;
  }
  return a;
}

} // namespace

const char* to_string(BackendId id) noexcept
{
  switch (id) {
  case BackendId::hosted_a: return "hosted-a";
  case BackendId::hosted_b: return "hosted-b";
  case BackendId::local: return "local";
  case BackendId::canned: return "canned";
  }
  return "canned";
}

BackendId backend_id_from_string(const std::string& s)
{
  for (BackendId id : {BackendId::hosted_a, BackendId::hosted_b, BackendId::local, BackendId::canned})
    if (s == to_string(id))
      return id;
  throw Error(Errc::bad_request, "unknown backend '" + s + "' (hosted-a, hosted-b, local, canned)");
}

BackendConfig BackendConfig::from_env(std::optional<BackendId> id)
{
  BackendConfig c;
  c.id = id ? *id : backend_id_from_string(env("GEODE_BACKEND", "canned"));
  c.golden_plans = env("GEODE_GOLDEN_PLANS");
  switch (c.id) {
  case BackendId::hosted_a:
    c.url = env("HOSTED_A_URL", "https://api.openai.com/v1/chat/completions");
    c.key = env("HOSTED_A_KEY");
    c.model = env("HOSTED_A_MODEL");
    break;
  case BackendId::hosted_b:
    c.url = env("HOSTED_B_URL", "https://api.anthropic.com/v1/messages");
    c.key = env("HOSTED_B_KEY");
    c.model = env("HOSTED_B_MODEL");
    break;
  case BackendId::local:
    c.url = env("LOCAL_PLANNER_URL");
    break;
  case BackendId::canned: break;
  }
  return c;
}

GoldenPlans load_golden_plans(const std::string& path)
{
  std::ifstream in(path);
  if (!in)
    throw Error(Errc::precondition, "cannot read golden plans file '" + path + "'");
  GoldenPlans out;
  try {
    const Json doc = Json::parse(in);
    for (const auto& [query, text] : doc.items())
      out.emplace_back(query, text.get<std::string>());
  } catch (const Json::exception& e) {
    throw Error(Errc::precondition, "golden plans file '" + path + "' is malformed: " + e.what());
  }
  return out;
}

CannedBackend::CannedBackend(GoldenPlans plans)
{
  for (auto& [q, p] : plans)
    plans_[trim(q)] = std::move(p);
}

std::string CannedBackend::complete(const Completion& request)
{
  auto it = plans_.find(trim(request.query));
  if (it == plans_.end())
    throw Error(Errc::no_canned_plan, "no canned plan for query \"" + request.query + "\"");
  return "```geoplan\n" + it->second + "```\n";
}

std::shared_ptr<Backend> make_backend(const BackendConfig& config, std::shared_ptr<Transport> transport)
{
  if (config.id == BackendId::canned) {
    if (config.golden_plans.empty())
      throw Error(Errc::precondition, "canned backend needs a golden plans file");
    return std::make_shared<CannedBackend>(load_golden_plans(config.golden_plans));
  }
  return std::make_shared<HttpBackend>(config, transport ? std::move(transport) : make_http_transport());
}

std::string assemble_prompt(const std::string& query, const plan::Registry& registry)
{
  std::ostringstream t;
  t << "You are a geospatial planner. Answer the user's question by writing a GeoPlan program that calls\n"
       "the experts listed below. The engine runs the program and shows the returned patch on a map.\n\n"
       "# GeoPlan grammar\n"
    << kGrammar
    << "\n\nRules:\n"
       "- One statement per line. Each name is bound once and used only after it is bound.\n"
       "- Positional arguments come first, then name=value arguments.\n"
       "- Strings use single or double quotes with backslash escapes; numbers are plain decimals;\n"
       "  booleans are true and false.\n"
       "- There are no loops, conditionals, operators or function definitions; use the experts.\n"
       "- The last line returns a textual answer and the most salient patch: return <text>, <patch>\n\n"
       "# Experts\n"
       "Here are all the geospatial experts you have access to as API calls:\n\n";
  for (const auto& e : registry.entries())
    t << "### " << e.sig.name << "\n" << plan::signature_line(e.sig) << "\n" << e.sig.doc << "\n\n";
  t << "# User question:\nQUERY_TAG\n\n"
       "Your output should be exactly in this format, one fenced block and nothing else:\n"
       "```geoplan\n<one statement per line>\nreturn <text answer>, <salient patch>\n```\n";

  std::string prompt = t.str();
  const auto at = prompt.find("QUERY_TAG");
  prompt.replace(at, 9, query);
  return prompt;
}

PlanningFailed::PlanningFailed(std::vector<std::string> diagnostics)
    : Error(Errc::planning_failed,
            "no valid plan after repair: 1) " + diagnostics.at(0) + " 2) " + diagnostics.at(1)),
      diagnostics_(std::move(diagnostics))
{
}

PlanOutcome plan_query(const std::string& query, Backend& backend, const plan::Registry& registry)
{
  if (trim(query).empty())
    throw Error(Errc::bad_request, "query is empty");
  const std::string prompt = assemble_prompt(query, registry);
  PlanOutcome out;

  ++out.backend_calls;
  Attempt first = try_plan(backend.complete({prompt, query}), registry);
  if (first.typed) {
    out.typed = std::move(*first.typed);
    out.source = std::move(first.source);
    return out;
  }
  out.diagnostics.push_back(first.diagnostic);

  const std::string repair = prompt + "\n# Your previous plan:\n```geoplan\n" + first.source +
                             "\n```\n# Fix this error:\n" + first.diagnostic + "\n";
  ++out.backend_calls;
  Attempt second = try_plan(backend.complete({repair, query}), registry);
  if (!second.typed) {
    out.diagnostics.push_back(second.diagnostic);
    throw PlanningFailed(out.diagnostics);
  }
  out.typed = std::move(*second.typed);
  out.source = std::move(second.source);
  return out;
}

std::string elaboration_template(const std::string& answer, const plan::ExecutionTrace& trace)
{
  std::string a = trim(answer);
  if (!a.empty() && a.back() == '.')
    a.pop_back();
  const std::size_t n = trace.calls.size();
  std::string out = "Answer: " + a + ". Computed via " + std::to_string(n) + " expert call" + (n == 1 ? "" : "s");
  if (n == 0)
    return out + ".";
  out += ": ";
  for (std::size_t i = 0; i < n; ++i)
    out += (i ? ", " : "") + trace.calls[i].expert;
  return out + ".";
}

std::string elaborate(const std::string& query, const std::string& answer, const plan::ExecutionTrace& trace,
                      Backend& backend, bool offline)
{
  if (offline || backend.id() == BackendId::canned)
    return elaboration_template(answer, trace);
  std::string calls;
  for (const auto& c : trace.calls)
    calls += (calls.empty() ? "" : ", ") + c.expert;
  const std::string prompt =
      "Generate an elaborated textual answer to the user question from the computed answer. "
      "Reply with the answer text only.\n\nUser question: " + query + "\nComputed answer: " + answer +
      "\nExperts used: " + calls + "\n";
  try {
    std::string text = trim(backend.complete({prompt, query}));
    if (!text.empty())
      return text;
  } catch (const std::exception&) {
  }
  return elaboration_template(answer, trace);
}

} // namespace geode::gateway
