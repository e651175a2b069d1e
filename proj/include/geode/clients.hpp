#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "geode/geopatch.hpp"
#include "geode/transport.hpp"

namespace geode::clients {

enum class NetMode { live, record, offline };
const char* to_string(NetMode m) noexcept;
NetMode net_mode_from_string(const std::string& s);

using Params = std::vector<std::pair<std::string, std::string>>;

/// Fixed 6-decimal rendering used in requests and canonical keys.
std::string fmt6(double v);

/// `client?k=v&...` with keys sorted. Secrets and base URLs are never part
/// of the canonical form.
std::string canonical_request(const std::string& client_id, Params params);

/// Lowercase hex SHA-256.
std::string sha256_hex(const std::string& data);

struct UpstreamRecord {
  std::string client_id;
  std::string canonical;
  std::string body;
  /// Seconds since the Unix epoch, UTC.
  std::int64_t recorded_at = 0;
};

/// Directory of records, one `<sha256(canonical)>.json` per record plus
/// `index.json`. Access is serialized.
class FixtureStore {
public:
  explicit FixtureStore(std::string dir, std::function<std::int64_t()> clock = {});

  const std::string& dir() const noexcept { return dir_; }
  std::optional<UpstreamRecord> find(const std::string& canonical) const;
  /// Replaces any record under the same key; recorded_at never decreases.
  UpstreamRecord put(const std::string& client_id, const std::string& canonical, std::string body);
  std::size_t size() const;

private:
  void write_index() const;

  std::string dir_;
  std::function<std::int64_t()> clock_;
  mutable std::mutex mu_;
  std::map<std::string, std::pair<std::string, std::int64_t>> index_;
};

/// Blocking token bucket.
class TokenBucket {
public:
  TokenBucket(double rate_per_s, double burst);
  void acquire();

private:
  std::mutex mu_;
  double rate_;
  double burst_;
  double tokens_;
  double last_;
};

struct ClientConfig {
  NetMode mode = NetMode::live;
  std::string fixtures;
  std::string geocoder_base = "https://nominatim.openstreetmap.org";
  std::string weather_base = "https://api.weatherapi.com";
  std::string elevation_base = "https://api.open-meteo.com";
  std::string weather_key;
  std::uint64_t seed = 1729;
  std::size_t bulk_samples = 48;
  std::size_t grid_size = kDefaultGridSize;
  double geocoder_rate = 2.0;
  double default_rate = 10.0;
  std::size_t max_in_flight = 8;
  double min_success = 0.75;
  double timeout_s = 30.0;

  /// Overlays GEODE_NET_MODE, GEODE_FIXTURES, WEATHER_API_KEY,
  /// GEOCODER_BASE_URL, WEATHER_BASE_URL, ELEVATION_BASE_URL.
  static ClientConfig from_env();
};

struct FetchResult {
  std::string body;
  /// Set when the body came from (or went into) the fixture store.
  std::optional<std::int64_t> recorded_at;
};

/// Mode-aware gateway shared by all data clients.
class Upstream {
public:
  Upstream(ClientConfig config, std::shared_ptr<Transport> transport = nullptr,
           std::function<std::int64_t()> clock = {});

  const ClientConfig& config() const noexcept { return config_; }
  std::int64_t now() const { return clock_(); }

  /// `secret` params are sent but excluded from the canonical request.
  FetchResult get(const std::string& client_id, const std::string& base, const std::string& path,
                  const Params& params, const Params& secret = {});

  /// Number of requests handed to the transport.
  std::size_t network_calls() const noexcept { return network_calls_; }

private:
  TokenBucket& bucket(const std::string& base);
  Transport& transport();

  ClientConfig config_;
  std::shared_ptr<Transport> transport_;
  std::function<std::int64_t()> clock_;
  std::unique_ptr<FixtureStore> store_;
  std::mutex mu_;
  std::map<std::string, std::unique_ptr<TokenBucket>> buckets_;
  std::atomic<std::size_t> network_calls_{0};
};

GeoPatch geocode_point(Upstream& up, const std::string& name);
GeoPatch geocode_patch(Upstream& up, const std::string& name);

struct WeatherObs {
  double temp_c = 0;
  double humidity = 0;
  double precip_mm = 0;
  std::int64_t observed_at = 0;
  std::map<std::string, double> air_quality;
};

WeatherObs current_weather(Upstream& up, const LatLon& p);
/// Same, also reporting the reference time for age computation (fixture
/// recorded_at offline, the clock otherwise).
WeatherObs weather_at(Upstream& up, const LatLon& p, std::int64_t& ref);

/// Batched in requests of at most 100 coordinates.
std::vector<double> elevations(Upstream& up, const std::vector<LatLon>& points);

enum class Field { humidity, precipitation, temperature, elevation, air_quality };

struct FieldSource {
  Field field;
  std::string parameter;
  std::string name;
  std::string unit;
  std::string colormap;
};

/// Registration table lookup; `parameter` only matters for air quality.
FieldSource field_source(Field field, const std::string& parameter = {});
const std::vector<std::string>& air_quality_parameters();

struct SampleSet {
  std::vector<LatLon> points;
  /// True when rejection sampling ran out of attempts and bbox fill was used.
  bool bbox_fill = false;
};

/// Seeded uniform draw over the bbox, rejection-sampled into the boundary.
SampleSet sample_patch(const GeoPatch& patch, std::size_t n, std::uint64_t seed);

enum class RetrieveMode { patch, point };
RetrieveMode retrieve_mode_from_string(const std::string& s);

struct FieldResult {
  GeoPatch patch;
  /// Age of the oldest observation used, seconds.
  std::optional<double> age_s;
  std::vector<std::string> notes;
};

FieldResult retrieve_field(Upstream& up, const GeoPatch& patch, const FieldSource& source,
                           RetrieveMode mode);

} // namespace geode::clients
