#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>

#include "geode/experts.hpp"
#include "geode/service.hpp"

namespace geode::service {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0)
{
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

std::int64_t wall_seconds()
{
  return std::chrono::duration_cast<std::chrono::seconds>(std::chrono::system_clock::now().time_since_epoch())
      .count();
}

Json trace_json(const plan::TraceRecord& r)
{
  Json j = Json::object();
  j["expert"] = r.expert;
  j["line"] = r.line;
  j["duration_ms"] = r.duration_ms;
  j["age_s"] = r.age_s ? Json(*r.age_s) : Json(nullptr);
  j["outcome"] = r.outcome;
  j["notes"] = r.notes;
  return j;
}

Json turn_json(const Turn& t)
{
  Json j = Json::object();
  j["query"] = t.query;
  j["timestamp"] = t.timestamp;
  j["completion"] = t.completion;
  j["answer"] = t.answer;
  j["error_code"] = t.error_code ? Json(*t.error_code) : Json(nullptr);
  return j;
}

void fill_metrics(QueryResponse& r, const plan::ExecutionTrace& trace)
{
  for (const auto& c : trace.calls) {
    r.metrics.per_expert.push_back({c.expert, c.line, c.duration_ms});
    if (c.age_s)
      r.metrics.freshness_s = std::max(r.metrics.freshness_s.value_or(*c.age_s), *c.age_s);
  }
  r.trace = trace.calls;
}

} // namespace

int http_status(const Error& e)
{
  Errc code = e.code();
  if (const auto* rt = dynamic_cast<const plan::RuntimeError*>(&e))
    return is_upstream_error(rt->inner()) ? 502 : 422;
  if (is_plan_error(code))
    return 422;
  if (is_upstream_error(code) || code == Errc::backend_unavailable)
    return 502;
  if (code == Errc::bad_request)
    return 400;
  return 500;
}

Json to_json(const QueryResponse& r)
{
  Json j = Json::object();
  j["ok"] = !r.error.has_value();
  j["status"] = r.status;
  j["query"] = r.query;
  j["session_id"] = r.session_id ? Json(*r.session_id) : Json(nullptr);
  j["answer"] = r.answer;
  j["elaboration"] = r.elaboration;
  j["plan"] = r.plan;
  j["map"] = r.map ? to_json(*r.map) : Json(nullptr);
  Json trace = Json::array();
  for (const auto& t : r.trace)
    trace.push_back(trace_json(t));
  j["trace"] = std::move(trace);

  Json m = Json::object();
  m["total_ms"] = r.metrics.total_ms;
  m["planning_ms"] = r.metrics.planning_ms;
  m["execution_ms"] = r.metrics.execution_ms;
  Json per = Json::array();
  for (const auto& e : r.metrics.per_expert)
    per.push_back({{"expert", e.expert}, {"line", e.line}, {"ms", e.ms}});
  m["per_expert"] = std::move(per);
  m["freshness_s"] = r.metrics.freshness_s ? Json(*r.metrics.freshness_s) : Json(nullptr);
  m["completion"] = r.metrics.completion;
  m["backend_calls"] = r.metrics.backend_calls;
  j["metrics"] = std::move(m);

  if (r.error) {
    const auto& e = *r.error;
    Json err = Json::object();
    err["code"] = e.code;
    err["message"] = e.message;
    err["stage"] = e.stage;
    err["diagnostics"] = e.diagnostics;
    err["expert"] = e.expert ? Json(*e.expert) : Json(nullptr);
    err["line"] = e.line ? Json(*e.line) : Json(nullptr);
    err["cause"] = e.cause ? Json(*e.cause) : Json(nullptr);
    j["error"] = std::move(err);
  } else {
    j["error"] = nullptr;
  }
  return j;
}

Json strip_durations(Json doc)
{
  if (doc.contains("metrics")) {
    auto& m = doc["metrics"];
    for (const char* k : {"total_ms", "planning_ms", "execution_ms"})
      m.erase(k);
    for (auto& e : m["per_expert"])
      e.erase("ms");
  }
  if (doc.contains("trace"))
    for (auto& t : doc["trace"])
      t.erase("duration_ms");
  return doc;
}

std::optional<double> percentile(std::vector<double> values, double p)
{
  if (values.empty())
    return std::nullopt;
  std::sort(values.begin(), values.end());
  const auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * static_cast<double>(values.size())));
  return values[std::clamp<std::size_t>(rank, 1, values.size()) - 1];
}

void MetricsRecorder::record(const QueryResponse& r)
{
  std::lock_guard lock(mu_);
  ++requests_;
  if (r.metrics.completion)
    ++completed_;
  else if (r.status == 422)
    ++plan_failures_;
  else if (r.status == 502)
    ++upstream_failures_;
  else
    ++other_failures_;
  total_ms_.push_back(r.metrics.total_ms);
  for (const auto& t : r.trace) {
    auto& s = experts_[t.expert];
    ++s.calls;
    if (t.outcome != "ok")
      ++s.errors;
    s.ms.push_back(t.duration_ms);
  }
}

Json MetricsRecorder::snapshot() const
{
  std::lock_guard lock(mu_);
  auto opt = [](std::optional<double> v) { return v ? Json(*v) : Json(nullptr); };
  Json j = Json::object();
  j["requests"] = requests_;
  j["completed"] = completed_;
  j["plan_failures"] = plan_failures_;
  j["upstream_failures"] = upstream_failures_;
  j["other_failures"] = other_failures_;
  j["completion_rate"] =
      requests_ ? Json(static_cast<double>(completed_) / static_cast<double>(requests_)) : Json(nullptr);
  j["latency_ms"] = {{"p50", opt(percentile(total_ms_, 50))}, {"p95", opt(percentile(total_ms_, 95))}};
  Json experts = Json::object();
  for (const auto& [name, s] : experts_)
    experts[name] = {{"calls", s.calls},
                     {"errors", s.errors},
                     {"p50_ms", opt(percentile(s.ms, 50))},
                     {"p95_ms", opt(percentile(s.ms, 95))}};
  j["experts"] = std::move(experts);
  return j;
}

SessionStore::SessionStore(std::string journal) : journal_(std::move(journal)) {}

void SessionStore::append(const std::string& id, Turn turn)
{
  std::lock_guard lock(mu_);
  if (!journal_.empty()) {
    std::ofstream out(journal_, std::ios::app);
    Json line = turn_json(turn);
    line["session_id"] = id;
    out << line.dump() << "\n";
  }
  auto& turns = sessions_[id];
  if (!turns.empty())
    turn.timestamp = std::max(turn.timestamp, turns.back().timestamp);
  turns.push_back(std::move(turn));
}

std::optional<std::vector<Turn>> SessionStore::turns(const std::string& id) const
{
  std::lock_guard lock(mu_);
  auto it = sessions_.find(id);
  if (it == sessions_.end())
    return std::nullopt;
  return it->second;
}

Json SessionStore::to_json(const std::string& id) const
{
  Json j = Json::object();
  j["id"] = id;
  Json turns = Json::array();
  for (const auto& t : this->turns(id).value_or(std::vector<Turn>{}))
    turns.push_back(turn_json(t));
  j["turns"] = std::move(turns);
  return j;
}

Engine::Engine(EngineConfig config, std::shared_ptr<Transport> data, std::shared_ptr<Transport> planner,
               std::function<std::int64_t()> clock)
    : config_(std::move(config)), planner_transport_(std::move(planner)),
      clock_(clock ? std::move(clock) : wall_seconds), sessions_(config_.journal)
{
  upstream_ = std::make_shared<clients::Upstream>(config_.clients, std::move(data), clock_);
  registry_ = make_registry(upstream_);
}

std::shared_ptr<gateway::Backend> Engine::backend_for(const std::optional<std::string>& name)
{
  gateway::BackendConfig cfg = config_.backend;
  if (name) {
    const auto id = gateway::backend_id_from_string(*name);
    if (id != cfg.id)
      cfg = gateway::BackendConfig::from_env(id);
  }
  if (cfg.golden_plans.empty())
    cfg.golden_plans = config_.backend.golden_plans;
  std::lock_guard lock(backends_mu_);
  auto it = backends_.find(cfg.id);
  if (it != backends_.end())
    return it->second;
  try {
    auto b = gateway::make_backend(cfg, planner_transport_);
    backends_[cfg.id] = b;
    return b;
  } catch (const Error& e) {
    if (e.code() != Errc::precondition)
      throw;
    throw Error(Errc::bad_request, std::string("backend '") + gateway::to_string(cfg.id) +
                                       "' is not configured: " + e.detail());
  }
}

QueryResponse Engine::handle_query(const std::string& query, const std::optional<std::string>& session_id,
                                   const std::optional<std::string>& backend_name)
{
  const auto t0 = Clock::now();
  QueryResponse r;
  r.query = query;
  r.session_id = session_id;
  std::string stage = "request";
  plan::ExecutionTrace trace;

  try {
    if (query.find_first_not_of(" \t\r\n") == std::string::npos)
      throw Error(Errc::bad_request, "query is empty");
    auto backend = backend_for(backend_name);

    stage = "planning";
    const auto tp = Clock::now();
    gateway::PlanOutcome planned;
    try {
      planned = gateway::plan_query(query, *backend, *registry_);
    } catch (...) {
      r.metrics.planning_ms = ms_since(tp);
      throw;
    }
    r.metrics.planning_ms = ms_since(tp);
    r.metrics.backend_calls = planned.backend_calls;
    r.plan = planned.source;

    stage = "execution";
    const auto te = Clock::now();
    std::optional<plan::ExecutionResult> executed;
    try {
      executed.emplace(plan::execute(planned.typed, query, &trace));
    } catch (...) {
      r.metrics.execution_ms = ms_since(te);
      throw;
    }
    r.metrics.execution_ms = ms_since(te);
    const auto& result = *executed;
    fill_metrics(r, result.trace);

    r.answer = result.answer;
    r.map = visualize(result.salient);
    r.elaboration = gateway::elaborate(query, result.answer, result.trace, *backend,
                                       config_.clients.mode == clients::NetMode::offline);
    r.metrics.completion = true;
  } catch (const Error& e) {
    if (r.trace.empty())
      fill_metrics(r, trace);
    ErrorInfo info;
    info.code = errc_code(e.code());
    info.message = e.detail();
    info.stage = stage;
    if (const auto* pf = dynamic_cast<const gateway::PlanningFailed*>(&e))
      info.diagnostics = pf->diagnostics();
    else
      info.diagnostics = {e.what()};
    if (const auto* rt = dynamic_cast<const plan::RuntimeError*>(&e)) {
      info.expert = rt->expert();
      info.line = rt->pos().line;
      info.cause = errc_code(rt->inner());
    } else if (const auto* pe = dynamic_cast<const plan::PlanError*>(&e)) {
      info.line = pe->pos().line;
    }
    r.status = http_status(e);
    r.error = std::move(info);
  } catch (const std::exception& e) {
    r.status = 500;
    r.error = ErrorInfo{errc_code(Errc::internal), e.what(), stage, {e.what()}, {}, {}, {}};
  }
  r.metrics.total_ms = ms_since(t0);

  metrics_.record(r);
  if (session_id)
    sessions_.append(*session_id, {query, clock_(), r.metrics.completion, r.answer,
                                   r.error ? std::optional<std::string>(r.error->code) : std::nullopt});
  return r;
}

Json Engine::experts() const
{
  Json rows = Json::array();
  for (const auto& e : registry_->entries()) {
    Json params = Json::array();
    for (const auto& p : e.sig.params)
      params.push_back({{"name", p.name},
                        {"type", plan::to_string(p.type)},
                        {"default", p.fallback ? Json(plan::literal_text(*p.fallback)) : Json(nullptr)}});
    rows.push_back({{"name", e.sig.name},
                    {"category", e.sig.category},
                    {"signature", plan::signature_line(e.sig)},
                    {"params", std::move(params)},
                    {"result", plan::to_string(e.sig.result)},
                    {"variadic", e.sig.variadic},
                    {"doc", e.sig.doc}});
  }
  Json j = Json::object();
  j["experts"] = std::move(rows);
  return j;
}

Json Engine::health() const
{
  Json j = Json::object();
  j["status"] = "ok";
  j["net_mode"] = clients::to_string(config_.clients.mode);
  j["backend"] = gateway::to_string(config_.backend.id);
  j["experts"] = registry_->entries().size();
  return j;
}

std::optional<Json> Engine::session(const std::string& id) const
{
  if (!sessions_.turns(id))
    return std::nullopt;
  return sessions_.to_json(id);
}

} // namespace geode::service
