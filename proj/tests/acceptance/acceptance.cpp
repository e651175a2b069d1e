// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.
#include <dlfcn.h>
#include <netdb.h>
#include <sys/socket.h>

#include <atomic>
#include <cerrno>
#include <chrono>
#include <cstdio>
#include <deque>
#include <functional>
#include <random>
#include <sstream>

#include "geode/gateway.hpp"
#include "geode/raster_ops.hpp"
#include "geode/rbf.hpp"
#include "geode/service.hpp"
#include "../support/oracles.hpp"

using namespace geode;

// ---- network guard ---------------------------------------------------------------

namespace {
std::atomic<int> g_socket_attempts{0};
std::atomic<bool> g_guard{true};
} // namespace

extern "C" int socket(int domain, int type, int protocol)
{
  if (g_guard) {
    ++g_socket_attempts;
    errno = EACCES;
    return -1;
  }
  using Fn = int (*)(int, int, int);
  static Fn real = reinterpret_cast<Fn>(dlsym(RTLD_NEXT, "socket"));
  return real(domain, type, protocol);
}

extern "C" int getaddrinfo(const char* node, const char* service, const struct addrinfo* hints,
                           struct addrinfo** res)
{
  if (g_guard) {
    ++g_socket_attempts;
    return EAI_FAIL;
  }
  using Fn = int (*)(const char*, const char*, const struct addrinfo*, struct addrinfo**);
  static Fn real = reinterpret_cast<Fn>(dlsym(RTLD_NEXT, "getaddrinfo"));
  return real(node, service, hints, res);
}

namespace {

struct Outcome {
  bool ok = true;
  std::string detail;
};

int g_failures = 0;

void report(const char* name, const Outcome& o)
{
  std::printf("%s  %-22s %s\n", o.ok ? "PASS" : "FAIL", name, o.detail.c_str());
  std::fflush(stdout);
  if (!o.ok)
    ++g_failures;
}

void run(const char* name, const std::function<Outcome()>& fn)
{
  try {
    report(name, fn());
  } catch (const std::exception& e) {
    report(name, {false, std::string("threw ") + e.what()});
  }
}

std::string fmt(const char* f, auto... args)
{
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::string data_dir()
{
  return std::string(GEODE_SOURCE_DIR) + "/data";
}

gateway::GoldenPlans golden()
{
  return gateway::load_golden_plans(data_dir() + "/golden_plans.json");
}

service::EngineConfig offline_config()
{
  service::EngineConfig c;
  c.clients.mode = clients::NetMode::offline;
  c.clients.fixtures = data_dir() + "/fixtures";
  c.backend.id = gateway::BackendId::canned;
  c.backend.golden_plans = data_dir() + "/golden_plans.json";
  return c;
}

double ms_since(std::chrono::steady_clock::time_point t0)
{
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

// ---- criteria -----------------------------------------------------------------

Outcome golden_suite()
{
  const auto plans = golden();
  bool threshold = false, intersection = false, imputation = false;
  for (const auto& [q, p] : plans) {
    threshold |= p.find("threshold_expert(") != std::string::npos;
    intersection |= p.find("intersection_expert(") != std::string::npos;
    imputation |= p.find("imputation_expert(") != std::string::npos;
  }
  if (plans.size() != 6 || !threshold || !intersection || !imputation)
    return {false, "golden plans do not cover the required experts"};

  const auto t0 = std::chrono::steady_clock::now();
  service::Engine engine(offline_config());
  int complete = 0;
  double worst = 0;
  std::string failed;
  for (const auto& [q, p] : plans) {
    const auto tq = std::chrono::steady_clock::now();
    const auto r = engine.handle_query(q);
    const double ms = ms_since(tq);
    worst = std::max(worst, ms);
    if (r.metrics.completion && r.map)
      ++complete;
    else
      failed += " [" + q + ": " + (r.error ? r.error->code + " " + r.error->message : "no map") + "]";
  }
  const double total = ms_since(t0);
  return {complete == 6 && worst < 1000 && total < 10000,
          fmt("%d/6 complete, slowest %.1f ms, total %.1f ms%s", complete, worst, total, failed.c_str())};
}

Outcome determinism()
{
  service::Engine a(offline_config());
  service::Engine b(offline_config());
  int identical = 0;
  for (const auto& [q, p] : golden()) {
    const auto ra = a.handle_query(q);
    const auto ra2 = a.handle_query(q);
    const auto rb = b.handle_query(q);
    const auto body = service::strip_durations(service::to_json(ra)).dump();
    const bool same = ra.map && body == service::strip_durations(service::to_json(rb)).dump() &&
                      body == service::strip_durations(service::to_json(ra2)).dump() &&
                      service::to_json(*ra.map).dump() == service::to_json(*rb.map).dump();
    identical += same;
  }
  return {identical == 6, fmt("%d/6 queries byte-identical across 3 runs (durations excluded)", identical)};
}

Outcome correlation()
{
  std::mt19937_64 rng(20240611);
  std::uniform_real_distribution<double> u(-50, 50);
  double worst = 0;
  for (int t = 0; t < 100; ++t) {
    Grid a(8, 8), b(8, 8);
    for (auto& v : a.cells())
      v = u(rng);
    for (std::size_t i = 0; i < 64; ++i)
      b.cells()[i] = 0.3 * a.cells()[i] + u(rng);
    worst = std::max(worst, std::abs(analytics::pearson_correlation(a, b) - oracle::pearson(a.cells(), b.cells())));
  }
  Grid a(8, 8), anti(8, 8);
  for (std::size_t i = 0; i < 64; ++i) {
    a.cells()[i] = u(rng);
    anti.cells()[i] = 7 - 3 * a.cells()[i];
  }
  const double self = analytics::pearson_correlation(a, a);
  const double neg = analytics::pearson_correlation(a, anti);
  const bool ok = worst <= 1e-9 && std::abs(self - 1) <= 1e-12 && std::abs(neg + 1) <= 1e-12;
  return {ok, fmt("max |delta| %.2e over 100 pairs, self %.15f, anti %.15f", worst, self, neg)};
}

Outcome rbf()
{
  std::mt19937 rng(1729);
  std::uniform_real_distribution<double> u(0, 1);

  std::vector<analytics::Sample> flat;
  for (int i = 0; i < 30; ++i)
    flat.push_back({{40 + 3 * u(rng), -100 + 5 * u(rng)}, 12.5});
  double const_err = 0;
  const Grid flat_grid = analytics::rbf_fit_predict(flat, {32, 32, BBox(40, 43, -100, -95)});
  for (double v : flat_grid.cells())
    const_err = std::max(const_err, std::abs(v - 12.5));

  std::uniform_int_distribution<int> count(3, 48);
  double worst_rel = 0;
  bool permutation = true;
  for (int t = 0; t < 20; ++t) {
    const int n = count(rng);
    const double lat0 = -60 + 120 * u(rng), lon0 = -170 + 340 * u(rng);
    const double a = 0.5 + 1.5 * u(rng), b = 6 * u(rng), c = 0.5 + 1.5 * u(rng), d = 6 * u(rng);
    std::vector<analytics::Sample> s;
    for (int i = 0; i < n; ++i) {
      const double la = 2 * u(rng), lo = 3 * u(rng);
      s.push_back({{lat0 + la, lon0 + lo}, 50 + 20 * std::sin(a * la + b) * std::cos(c * lo + d) + 5 * la});
    }
    const auto model = analytics::rbf_fit(s);
    for (const auto& x : s)
      worst_rel = std::max(worst_rel, std::abs(model.predict(x.position) - x.value) / std::abs(x.value));
    const GridSpec spec{16, 16, BBox(lat0, lat0 + 2, lon0, lon0 + 3)};
    const Grid ref = analytics::rbf_fit_predict(s, spec);
    std::shuffle(s.begin(), s.end(), rng);
    permutation &= analytics::rbf_fit_predict(s, spec) == ref;
  }
  const bool ok = const_err <= 1e-6 && worst_rel <= 0.01 && permutation;
  return {ok, fmt("constant err %.1e, worst sample rel err %.2e on 20 sets, permutation %s", const_err, worst_rel,
                  permutation ? "exact" : "differs")};
}

Outcome imputation()
{
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(0, 1);
  int equal = 0;
  std::size_t leftover = 0;
  for (int t = 0; t < 50; ++t) {
    const double frac = 0.1 + 0.5 * u(rng);
    Grid g(8, 8);
    for (auto& v : g.cells())
      v = u(rng) < frac ? kMissing : std::floor(100 * u(rng));
    if (g.present_count() == 0)
      g.cells()[0] = 1;
    const Grid out = analytics::impute_nearest(g);
    equal += out == Grid(8, 8, oracle::impute_brute_force(g.cells(), 8, 8));
    leftover += out.size() - out.present_count();
  }
  return {equal == 50 && leftover == 0, fmt("%d/50 grids equal the oracle, %zu missing cells left", equal, leftover)};
}

Outcome threshold_algebra()
{
  using analytics::ThresholdMode;
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0, 1);
  const BBox box(0, 1, 0, 1);
  auto random_layer = [&](RasterType rt) {
    Grid g(8, 8);
    for (auto& v : g.cells())
      v = u(rng) < 0.15 ? kMissing : (rt == RasterType::binary ? std::floor(2 * u(rng)) : 100 * u(rng));
    return RasterLayer("l", rt, std::nullopt, g, box);
  };
  int ok_cases = 0;
  for (int t = 0; t < 50; ++t) {
    const auto field = random_layer(RasterType::non_color);
    const auto all = analytics::threshold(field, 0, ThresholdMode::greater, true);
    bool ok = true;
    for (std::size_t i = 0; i < 64; ++i)
      ok &= is_missing(field.grid().cells()[i]) ? is_missing(all.grid().cells()[i]) : all.grid().cells()[i] == 1;
    const double cut = u(rng) * 120 - 10;
    const auto gt = analytics::threshold(field, cut, ThresholdMode::greater, false);
    const auto lt = analytics::threshold(field, cut, ThresholdMode::less, false);
    for (std::size_t i = 0; i < 64; ++i)
      if (!is_missing(field.grid().cells()[i]))
        ok &= gt.grid().cells()[i] == 1 || lt.grid().cells()[i] == 1;
    const auto a = random_layer(RasterType::binary), b = random_layer(RasterType::binary);
    ok &= analytics::raster_intersection(a, a).grid() == a.grid();
    ok &= analytics::raster_intersection(a, b).grid() == analytics::raster_intersection(b, a).grid();
    ok_cases += ok;
  }
  return {ok_cases == 50, fmt("%d/50 random cases satisfy all-ones, cover, idempotence, commutativity", ok_cases)};
}

Outcome area()
{
  const auto patch = make_region_patch("cell", {bbox_ring(BBox(0, 1, 0, 1))});
  const double got = patch_area(patch);
  const double want = oracle::band_area(0, 1, 1);
  return {std::abs(got - 0.012364) <= 1e-4 && std::abs(got - want) <= 1e-9,
          fmt("%.6f million km^2 (band oracle %.6f)", got, want)};
}

struct PipelineResult {
  bool executed = false;
  std::optional<Errc> code;
  std::optional<Errc> inner;
};

PipelineResult pipeline(const std::string& text, const plan::Registry& registry)
{
  PipelineResult r;
  try {
    const auto typed = plan::typecheck(plan::parse(plan::extract_plan(text)), registry);
    r.executed = true;
    plan::execute(typed);
  } catch (const plan::RuntimeError& e) {
    r.code = e.code();
    r.inner = e.inner();
  } catch (const Error& e) {
    r.code = e.code();
  }
  return r;
}

Outcome plan_language()
{
  service::Engine engine(offline_config());
  const auto& registry = engine.registry();
  std::ostringstream detail;

  int round_trips = 0;
  const auto plans = golden();
  for (const auto& [q, text] : plans) {
    const auto ast = plan::parse(text);
    const auto printed = plan::print_plan(ast);
    round_trips += plan::same_structure(ast, plan::parse(printed)) && plan::print_plan(plan::parse(printed)) == printed;
  }
  detail << round_trips << "/" << plans.size() << " round trips; ";

  const std::string delhi = "d = patch_location_expert(\"Delhi\")\n";
  const std::vector<std::pair<std::string, Errc>> corpus = {
      {delhi + "t = temperature_expert(d\nreturn describe(t), t\n", Errc::syntax},
      {delhi + "d = patch_location_expert(\"Paris\")\nreturn describe(d), d\n", Errc::ssa_rebind},
      {delhi + "t = temprature_expert(d)\nreturn describe(t), t\n", Errc::unknown_expert},
      {delhi + "a = air_quality_expert(d, parameter=\"pm25\")\nreturn describe(a), a\n", Errc::enum_violation},
      {delhi + "return d\n", Errc::return_arity},
      {"Delhi is usually hot and humid in summer, so no program is needed.", Errc::extraction},
      {delhi + "t = temperature_expert(d, \"patch\", 3)\nreturn describe(t), t\n", Errc::arity},
      {delhi + "a = threshold_expert(d, 1.2.3)\nreturn describe(a), a\n", Errc::bad_literal},
      {delhi + "t = temperature_expert(d)\n", Errc::missing_return},
      {"t = temperature_expert(d)\n" + delhi + "return describe(t), t\n", Errc::unbound_reference},
  };
  int designated = 0;
  bool reached = false;
  for (const auto& [text, want] : corpus) {
    const auto r = pipeline("```geoplan\n" + text + "```", registry);
    designated += r.code == want;
    reached |= r.executed;
    if (r.code != want)
      detail << "[got " << (r.code ? errc_code(*r.code) : "success") << " want " << errc_code(want) << "] ";
  }
  const auto wrong_types = pipeline(delhi + "return d, \"Delhi\"\n", registry);
  const bool types_ok = wrong_types.code == Errc::return_type && !wrong_types.executed;
  detail << designated << "/10 malformed plans give their code" << (types_ok ? " (+return types)" : "")
         << (reached ? ", some reached execution" : ", none executed") << "; ";

  // Single-token mutations of golden plans.
  std::mt19937_64 rng(4242);
  std::vector<std::string> vocab = {"(", ")", ",", "=", "return", "\"Delhi\"", "'pm10'", "0.5", "-3", "true",
                                    "1e999", "@", "\"", "x", "\n", "''"};
  for (const auto& [q, text] : plans)
    for (const auto& t : plan::lex(text))
      if (t.kind != plan::Tok::end && t.length)
        vocab.push_back(text.substr(t.offset, t.length));
  int succeeded = 0, rejected = 0, runtime = 0, leaked = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto& text = plans[rng() % plans.size()].second;
    auto tokens = plan::lex(text);
    tokens.pop_back();
    const auto& tok = tokens[rng() % tokens.size()];
    const auto& word = vocab[rng() % vocab.size()];
    std::string mutated = text;
    switch (rng() % 4) {
    case 0: mutated.erase(tok.offset, tok.length); break;
    case 1: mutated.replace(tok.offset, tok.length, word); break;
    case 2: mutated.insert(tok.offset, word + " "); break;
    default: mutated.insert(tok.offset + tok.length, " " + text.substr(tok.offset, tok.length)); break;
    }
    const auto r = pipeline(mutated, registry);
    if (!r.code) {
      ++succeeded;
    } else if (!r.executed) {
      ++rejected;
    } else {
      ++runtime;
      const Errc in = r.inner.value_or(*r.code);
      if (in == Errc::unknown_expert || in == Errc::arity || in == Errc::enum_violation || in == Errc::type_mismatch)
        ++leaked;
    }
  }
  detail << "1000 mutations: " << rejected << " rejected, " << runtime << " runtime errors, " << succeeded
         << " ran, " << leaked << " static errors at runtime";
  const bool ok = round_trips == static_cast<int>(plans.size()) && designated == 10 && !reached && types_ok &&
                  leaked == 0;
  return {ok, detail.str()};
}

class Scripted final : public gateway::Backend {
public:
  explicit Scripted(std::deque<std::string> replies) : replies_(std::move(replies)) {}
  gateway::BackendId id() const noexcept override { return gateway::BackendId::local; }
  std::string complete(const gateway::Completion&) override
  {
    ++calls;
    auto r = replies_.front();
    replies_.pop_front();
    return r;
  }
  int calls = 0;

private:
  std::deque<std::string> replies_;
};

Outcome repair_loop()
{
  service::Engine engine(offline_config());
  const std::string bad = "```geoplan\nd = patch_location_expert(\"Delhi\"\nreturn describe(d), d\n```";
  const std::string good = "```geoplan\nd = patch_location_expert(\"Delhi\")\nreturn describe(d), d\n```";
  Scripted fixed({bad, good});
  const auto out = gateway::plan_query("Show me Delhi", fixed, engine.registry());
  const bool first = fixed.calls == 2 && out.backend_calls == 2;

  Scripted broken({bad, bad, good});
  std::size_t diagnostics = 0;
  bool failed = false;
  try {
    gateway::plan_query("Show me Delhi", broken, engine.registry());
  } catch (const gateway::PlanningFailed& e) {
    failed = e.code() == Errc::planning_failed;
    diagnostics = e.diagnostics().size();
  }
  return {first && failed && diagnostics == 2 && broken.calls == 2,
          fmt("(malformed, valid): success after %d calls; (malformed, malformed): %s with %zu diagnostics after %d calls",
              fixed.calls, failed ? "PLANNING_FAILED" : "no failure", diagnostics, broken.calls)};
}

Outcome offline_isolation()
{
  // Arm check: a live engine must trip the guard.
  g_socket_attempts = 0;
  service::EngineConfig live = offline_config();
  live.clients.mode = clients::NetMode::live;
  live.clients.geocoder_base = "http://127.0.0.1:9";
  live.clients.weather_base = "http://127.0.0.1:9";
  live.clients.elevation_base = "http://127.0.0.1:9";
  service::Engine probe(live);
  const auto pr = probe.handle_query(golden().front().first);
  const int armed = g_socket_attempts.exchange(0);

  service::Engine engine(offline_config());
  int complete = 0;
  for (const auto& [q, p] : golden())
    complete += engine.handle_query(q).metrics.completion;
  const int attempts = g_socket_attempts.load();
  return {armed > 0 && pr.status == 502 && complete == 6 && attempts == 0,
          fmt("guard armed (%d blocked in live mode), offline suite %d/6 with %d socket attempts", armed, complete,
              attempts)};
}

} // namespace

int main()
{
  run("golden-suite", golden_suite);
  run("determinism", determinism);
  run("correlation-oracle", correlation);
  run("rbf-properties", rbf);
  run("imputation-oracle", imputation);
  run("threshold-algebra", threshold_algebra);
  run("area", area);
  run("plan-language", plan_language);
  run("repair-loop", repair_loop);
  run("offline-isolation", offline_isolation);
  std::printf("%d of 10 criteria failed\n", g_failures);
  return g_failures ? 1 : 0;
}
