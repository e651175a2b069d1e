#include <chrono>
#include <cstdlib>
#include <thread>

#include "geode/clients.hpp"

namespace geode::clients {

namespace {

double steady_seconds()
{
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
}

std::int64_t system_seconds()
{
  return std::chrono::duration_cast<std::chrono::seconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

void env_into(const char* key, std::string& out)
{
  if (const char* v = std::getenv(key); v && *v)
    out = v;
}

} // namespace

const char* to_string(NetMode m) noexcept
{
  switch (m) {
  case NetMode::live: return "live";
  case NetMode::record: return "record";
  case NetMode::offline: return "offline";
  }
  return "live";
}

NetMode net_mode_from_string(const std::string& s)
{
  if (s == "live")
    return NetMode::live;
  if (s == "record")
    return NetMode::record;
  if (s == "offline")
    return NetMode::offline;
  throw Error(Errc::precondition, "network mode must be live, record or offline, got '" + s + "'");
}

ClientConfig ClientConfig::from_env()
{
  ClientConfig c;
  std::string mode;
  env_into("GEODE_NET_MODE", mode);
  if (!mode.empty())
    c.mode = net_mode_from_string(mode);
  env_into("GEODE_FIXTURES", c.fixtures);
  env_into("WEATHER_API_KEY", c.weather_key);
  env_into("GEOCODER_BASE_URL", c.geocoder_base);
  env_into("WEATHER_BASE_URL", c.weather_base);
  env_into("ELEVATION_BASE_URL", c.elevation_base);
  return c;
}

TokenBucket::TokenBucket(double rate_per_s, double burst)
    : rate_(rate_per_s), burst_(burst), tokens_(burst), last_(steady_seconds())
{
  if (!(rate_per_s > 0) || !(burst >= 1))
    throw Error(Errc::precondition, "token bucket needs rate > 0 and burst >= 1");
}

void TokenBucket::acquire()
{
  for (;;) {
    double wait = 0;
    {
      std::lock_guard lock(mu_);
      const double now = steady_seconds();
      tokens_ = std::min(burst_, tokens_ + (now - last_) * rate_);
      last_ = now;
      if (tokens_ >= 1.0) {
        tokens_ -= 1.0;
        return;
      }
      wait = (1.0 - tokens_) / rate_;
    }
    std::this_thread::sleep_for(std::chrono::duration<double>(wait));
  }
}

Upstream::Upstream(ClientConfig config, std::shared_ptr<Transport> transport,
                   std::function<std::int64_t()> clock)
    : config_(std::move(config)), transport_(std::move(transport)),
      clock_(clock ? std::move(clock) : system_seconds)
{
  if (config_.mode != NetMode::live) {
    if (config_.fixtures.empty())
      throw Error(Errc::precondition,
                  std::string(to_string(config_.mode)) + " mode needs a fixture directory");
    store_ = std::make_unique<FixtureStore>(config_.fixtures, clock_);
  }
}

TokenBucket& Upstream::bucket(const std::string& base)
{
  std::lock_guard lock(mu_);
  auto& b = buckets_[base];
  if (!b) {
    const double rate = base == config_.geocoder_base ? config_.geocoder_rate : config_.default_rate;
    b = std::make_unique<TokenBucket>(rate, 1.0);
  }
  return *b;
}

Transport& Upstream::transport()
{
  std::lock_guard lock(mu_);
  if (!transport_)
    transport_ = make_http_transport();
  return *transport_;
}

FetchResult Upstream::get(const std::string& client_id, const std::string& base,
                          const std::string& path, const Params& params, const Params& secret)
{
  const std::string canonical = canonical_request(client_id, params);
  if (config_.mode == NetMode::offline) {
    auto rec = store_->find(canonical);
    if (!rec)
      throw Error(Errc::fixture_miss, "no fixture for " + canonical);
    return {std::move(rec->body), rec->recorded_at};
  }

  bucket(base).acquire();
  Params all = params;
  all.insert(all.end(), secret.begin(), secret.end());
  HttpRequest req;
  req.url = build_url(base, path, all);
  req.headers = {{"User-Agent", "geode/0.1"}, {"Accept", "application/json"}};
  req.timeout_s = config_.timeout_s;
  ++network_calls_;
  HttpResponse res = transport().send(req);
  if (res.status < 200 || res.status >= 300)
    throw Error(Errc::upstream_unavailable,
                client_id + " returned HTTP " + std::to_string(res.status));
  if (config_.mode == NetMode::record) {
    const auto rec = store_->put(client_id, canonical, std::move(res.body));
    return {rec.body, rec.recorded_at};
  }
  return {std::move(res.body), std::nullopt};
}

} // namespace geode::clients
