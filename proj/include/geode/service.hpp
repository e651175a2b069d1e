#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "geode/clients.hpp"
#include "geode/gateway.hpp"
#include "geode/plan.hpp"
#include "geode/serialize.hpp"

namespace geode::service {

// ---- map artifacts ------------------------------------------------------------

struct Legend {
  std::string name;
  std::string unit;
  double min = 0;
  double max = 0;
  std::string colormap;
};

struct Overlay {
  /// Base64 PNG, RGBA, one pixel per raster cell, row 0 north.
  std::string png_base64;
  std::size_t width = 0;
  std::size_t height = 0;
  BBox bounds;
  Legend legend;
};

struct MapArtifact {
  /// FeatureCollection in [lon, lat] order.
  Json geojson;
  std::optional<Overlay> overlay;
  LatLon center;
  int zoom = 2;
};

/// floor(log2(360 / span)) clamped to [2, 16]; point extents get 16.
int suggested_zoom(const BBox& bbox);

/// Colormapped RGBA pixels (4 bytes per cell) for a raster layer; missing
/// cells are fully transparent.
std::vector<std::uint8_t> render_rgba(const RasterLayer& raster, Legend* legend = nullptr);

std::vector<std::uint8_t> encode_png(const std::vector<std::uint8_t>& rgba, std::size_t width,
                                     std::size_t height);
std::vector<std::uint8_t> decode_png(const std::vector<std::uint8_t>& png, std::size_t& width,
                                     std::size_t& height);
std::string base64_encode(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> base64_decode(const std::string& text);

MapArtifact visualize(const GeoPatch& patch);
Json to_json(const MapArtifact& map);

// ---- responses ------------------------------------------------------------------

struct ExpertTiming {
  std::string expert;
  int line = 0;
  double ms = 0;
};

struct QueryMetrics {
  double total_ms = 0;
  double planning_ms = 0;
  double execution_ms = 0;
  std::vector<ExpertTiming> per_expert;
  /// Largest upstream observation age in seconds.
  std::optional<double> freshness_s;
  bool completion = false;
  int backend_calls = 0;
};

struct ErrorInfo {
  std::string code;
  std::string message;
  /// planning, execution or request.
  std::string stage;
  std::vector<std::string> diagnostics;
  std::optional<std::string> expert;
  std::optional<int> line;
  std::optional<std::string> cause;
};

struct QueryResponse {
  int status = 200;
  std::string query;
  std::optional<std::string> session_id;
  std::string answer;
  std::string elaboration;
  std::string plan;
  std::optional<MapArtifact> map;
  std::vector<plan::TraceRecord> trace;
  QueryMetrics metrics;
  std::optional<ErrorInfo> error;
};

Json to_json(const QueryResponse& response);

/// Copy of a response document with wall-clock durations removed.
Json strip_durations(Json doc);

/// 422 for plan errors, 502 for upstream errors, 400 for bad requests, 500
/// otherwise. Runtime errors map by their inner code.
int http_status(const Error& e);

// ---- metrics and sessions ---------------------------------------------------------

class MetricsRecorder {
public:
  void record(const QueryResponse& response);
  Json snapshot() const;

private:
  struct ExpertStats {
    std::size_t calls = 0;
    std::size_t errors = 0;
    std::vector<double> ms;
  };

  mutable std::mutex mu_;
  std::size_t requests_ = 0;
  std::size_t completed_ = 0;
  std::size_t plan_failures_ = 0;
  std::size_t upstream_failures_ = 0;
  std::size_t other_failures_ = 0;
  std::vector<double> total_ms_;
  std::map<std::string, ExpertStats> experts_;
};

/// Nearest-rank percentile; nullopt for an empty sample.
std::optional<double> percentile(std::vector<double> values, double p);

struct Turn {
  std::string query;
  std::int64_t timestamp = 0;
  bool completion = false;
  std::string answer;
  std::optional<std::string> error_code;
};

class SessionStore {
public:
  /// Turns are also appended as JSON lines to `journal` when non-empty.
  explicit SessionStore(std::string journal = {});

  void append(const std::string& id, Turn turn);
  std::optional<std::vector<Turn>> turns(const std::string& id) const;
  Json to_json(const std::string& id) const;

private:
  std::string journal_;
  mutable std::mutex mu_;
  std::map<std::string, std::vector<Turn>> sessions_;
};

// ---- engine -----------------------------------------------------------------------

struct EngineConfig {
  clients::ClientConfig clients;
  gateway::BackendConfig backend;
  std::string journal;
};

class Engine {
public:
  /// `data` carries upstream data requests, `planner` backend requests; both
  /// default to the HTTP transport.
  explicit Engine(EngineConfig config, std::shared_ptr<Transport> data = nullptr,
                  std::shared_ptr<Transport> planner = nullptr, std::function<std::int64_t()> clock = {});

  QueryResponse handle_query(const std::string& query, const std::optional<std::string>& session_id = {},
                             const std::optional<std::string>& backend = {});

  const plan::Registry& registry() const noexcept { return *registry_; }
  const EngineConfig& config() const noexcept { return config_; }
  Json experts() const;
  Json metrics() const { return metrics_.snapshot(); }
  Json health() const;
  std::optional<Json> session(const std::string& id) const;
  clients::Upstream& upstream() noexcept { return *upstream_; }

private:
  std::shared_ptr<gateway::Backend> backend_for(const std::optional<std::string>& name);

  EngineConfig config_;
  std::shared_ptr<Transport> planner_transport_;
  std::function<std::int64_t()> clock_;
  std::shared_ptr<clients::Upstream> upstream_;
  std::shared_ptr<plan::Registry> registry_;
  std::mutex backends_mu_;
  std::map<gateway::BackendId, std::shared_ptr<gateway::Backend>> backends_;
  MetricsRecorder metrics_;
  SessionStore sessions_;
};

// ---- HTTP -------------------------------------------------------------------------

class HttpServer {
public:
  explicit HttpServer(Engine& engine);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds and returns the port (an ephemeral one when `port` is 0).
  int bind(const std::string& host, int port);
  /// Blocks until stop().
  void listen();
  void stop();

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

} // namespace geode::service
