#include <algorithm>
#include <exception>
#include <random>
#include <thread>

#include "geode/clients.hpp"
#include "geode/geometry.hpp"
#include "geode/serialize.hpp"

namespace geode::clients {

namespace {

Json parse_body(const std::string& client, const std::string& body)
{
  try {
    return Json::parse(body);
  } catch (const Json::exception&) {
    throw Error(Errc::upstream_unavailable, client + " returned a malformed document");
  }
}

double number_of(const Json& j)
{
  if (j.is_string())
    return std::stod(j.get<std::string>());
  return j.get<double>();
}

struct Hit {
  std::string display;
  LatLon position;
  std::optional<BBox> bbox;
  std::vector<Ring> rings;
};

std::vector<Ring> rings_from_geojson(const Json& geom)
{
  std::vector<Ring> out;
  if (!geom.is_object() || !geom.contains("type"))
    return out;
  const std::string type = geom["type"].get<std::string>();
  auto add_polygon = [&](const Json& poly) {
    for (const auto& ring : poly) {
      std::vector<LatLon> v;
      for (const auto& c : ring)
        v.emplace_back(number_of(c[1]), number_of(c[0]));
      try {
        out.push_back(make_ring(std::move(v)));
      } catch (const Error&) {
        // Simplified rings can come back self-touching; skip them.
      }
    }
  };
  if (type == "Polygon")
    add_polygon(geom["coordinates"]);
  else if (type == "MultiPolygon")
    for (const auto& poly : geom["coordinates"])
      add_polygon(poly);
  return out;
}

Hit geocode(Upstream& up, const std::string& name, bool with_polygon)
{
  if (name.empty())
    throw Error(Errc::precondition, "place name is empty");
  const auto& cfg = up.config();
  Params params{{"q", name}, {"format", "jsonv2"}, {"limit", "1"}};
  if (with_polygon) {
    params.emplace_back("polygon_geojson", "1");
    params.emplace_back("polygon_threshold", "0.005");
  }
  const FetchResult res = up.get("geocoder", cfg.geocoder_base, "/search", params);
  const Json doc = parse_body("geocoder", res.body);
  if (!doc.is_array())
    throw Error(Errc::upstream_unavailable, "geocoder returned a non-list document");
  if (doc.empty())
    throw Error(Errc::geocode_not_found, "no match for '" + name + "'");
  const Json& hit = doc[0];
  try {
    Hit h{hit.value("display_name", name), LatLon(number_of(hit.at("lat")), number_of(hit.at("lon"))),
          std::nullopt, {}};
    if (hit.contains("boundingbox")) {
      const auto& b = hit["boundingbox"];
      h.bbox = BBox(number_of(b[0]), number_of(b[1]), number_of(b[2]), number_of(b[3]));
    }
    if (with_polygon && hit.contains("geojson"))
      h.rings = rings_from_geojson(hit["geojson"]);
    return h;
  } catch (const Json::exception& e) {
    throw Error(Errc::upstream_unavailable, std::string("geocoder hit is malformed: ") + e.what());
  }
}

template <class Fn>
std::vector<std::exception_ptr> fan_out(std::size_t n, std::size_t max_in_flight, Fn fn)
{
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t workers = std::min(n, std::max<std::size_t>(1, max_in_flight));
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w)
    pool.emplace_back(worker);
  worker();
  for (auto& t : pool)
    t.join();
  return errors;
}

double field_value(const WeatherObs& obs, const FieldSource& src)
{
  switch (src.field) {
  case Field::humidity: return obs.humidity;
  case Field::precipitation: return obs.precip_mm;
  case Field::temperature: return obs.temp_c;
  case Field::air_quality: {
    auto it = obs.air_quality.find(src.parameter);
    if (it == obs.air_quality.end())
      throw Error(Errc::upstream_unavailable, "air quality block lacks '" + src.parameter + "'");
    return it->second;
  }
  case Field::elevation: break;
  }
  throw Error(Errc::internal, "elevation is not a weather field");
}

} // namespace

GeoPatch geocode_point(Upstream& up, const std::string& name)
{
  const Hit h = geocode(up, name, false);
  return make_point_patch(h.position, h.display).with_name(name);
}

GeoPatch geocode_patch(Upstream& up, const std::string& name)
{
  Hit h = geocode(up, name, true);
  if (h.rings.empty()) {
    if (!h.bbox || h.bbox->degenerate())
      return make_point_patch(h.position, h.display).with_name(name);
    h.rings.push_back(bbox_ring(*h.bbox));
  }
  std::optional<LatLon> location;
  if (bbox_of_rings(h.rings).contains(h.position, 0))
    location = h.position;
  return make_region_patch(name, std::move(h.rings), location);
}

WeatherObs current_weather(Upstream& up, const LatLon& p)
{
  std::int64_t ref = 0;
  return weather_at(up, p, ref);
}

WeatherObs weather_at(Upstream& up, const LatLon& p, std::int64_t& ref)
{
  const auto& cfg = up.config();
  Params params{{"q", fmt6(p.lat()) + "," + fmt6(p.lon())}, {"aqi", "yes"}};
  const FetchResult res =
      up.get("weather", cfg.weather_base, "/v1/current.json", params, {{"key", cfg.weather_key}});
  ref = res.recorded_at.value_or(up.now());
  const Json doc = parse_body("weather", res.body);
  if (doc.contains("error"))
    throw Error(Errc::upstream_unavailable,
                "weather: " + doc["error"].value("message", std::string("unknown error")));
  try {
    const Json& cur = doc.at("current");
    WeatherObs obs;
    obs.temp_c = number_of(cur.at("temp_c"));
    obs.humidity = number_of(cur.at("humidity"));
    obs.precip_mm = number_of(cur.at("precip_mm"));
    obs.observed_at = cur.at("last_updated_epoch").get<std::int64_t>();
    if (cur.contains("air_quality"))
      for (const auto& [k, v] : cur["air_quality"].items())
        if (v.is_number())
          obs.air_quality[k] = v.get<double>();
    return obs;
  } catch (const Json::exception& e) {
    throw Error(Errc::upstream_unavailable, std::string("weather document is malformed: ") + e.what());
  }
}

std::vector<double> elevations(Upstream& up, const std::vector<LatLon>& points)
{
  const auto& cfg = up.config();
  std::vector<double> out;
  out.reserve(points.size());
  for (std::size_t start = 0; start < points.size(); start += 100) {
    const std::size_t end = std::min(points.size(), start + 100);
    std::string lats, lons;
    for (std::size_t i = start; i < end; ++i) {
      lats += (i > start ? "," : "") + fmt6(points[i].lat());
      lons += (i > start ? "," : "") + fmt6(points[i].lon());
    }
    const FetchResult res = up.get("elevation", cfg.elevation_base, "/v1/elevation",
                                   {{"latitude", lats}, {"longitude", lons}});
    const Json doc = parse_body("elevation", res.body);
    if (!doc.contains("elevation") || !doc["elevation"].is_array() ||
        doc["elevation"].size() != end - start)
      throw Error(Errc::upstream_unavailable, "elevation response does not match the request");
    for (const auto& v : doc["elevation"])
      out.push_back(number_of(v));
  }
  return out;
}

const std::vector<std::string>& air_quality_parameters()
{
  static const std::vector<std::string> params{"co", "no2", "o3", "so2", "pm2_5", "pm10", "us-epa-index"};
  return params;
}

FieldSource field_source(Field field, const std::string& parameter)
{
  switch (field) {
  case Field::humidity: return {field, "", "Humidity (%)", "%", "Blues"};
  case Field::precipitation: return {field, "", "Precipitation (mm)", "mm", "Blues"};
  case Field::temperature: return {field, "", "Temperature (Celsius)", "°C", "magma"};
  case Field::elevation: return {field, "", "Elevation (m)", "m", "gray"};
  case Field::air_quality: break;
  }
  static const std::map<std::string, std::pair<std::string, std::string>> info{
      {"co", {"Carbon Monoxide (ug/m3)", "Greys"}},
      {"no2", {"Nitrogen dioxide (ug/m3)", "Oranges"}},
      {"o3", {"Ozone (ug/m3)", "Blues"}},
      {"so2", {"Sulfur Dioxide (ug/m3)", "YlOrBr"}},
      {"pm2_5", {"PM2.5 (ug/m3)", "magma"}},
      {"pm10", {"PM10 (ug/m3)", "magma"}},
      {"us-epa-index", {"US - EPA Index", "magma"}},
  };
  auto it = info.find(parameter);
  if (it == info.end())
    throw Error(Errc::enum_violation, "unknown air quality parameter '" + parameter + "'");
  const std::string unit = parameter == "us-epa-index" ? "" : "µg/m³";
  return {field, parameter, it->second.first, unit, it->second.second};
}

SampleSet sample_patch(const GeoPatch& patch, std::size_t n, std::uint64_t seed)
{
  SampleSet out;
  const BBox& b = patch.bbox();
  if (b.degenerate()) {
    out.points.assign(n, patch.location());
    return out;
  }
  std::mt19937_64 gen(seed);
  auto uniform = [&] { return static_cast<double>(gen() >> 11) * 0x1.0p-53; };
  auto draw = [&] {
    const double lat = b.min_lat() + uniform() * b.lat_span();
    const double lon = b.min_lon() + uniform() * b.lon_span();
    return LatLon(lat, lon);
  };
  const auto& rings = patch.vector().boundary;
  const std::size_t cap = 100 * n;
  for (std::size_t tries = 0; out.points.size() < n && tries < cap; ++tries) {
    const LatLon p = draw();
    if (rings.empty() || geometry::point_in_boundary(rings, p))
      out.points.push_back(p);
  }
  if (out.points.size() < n) {
    out.bbox_fill = true;
    while (out.points.size() < n)
      out.points.push_back(draw());
  }
  return out;
}

RetrieveMode retrieve_mode_from_string(const std::string& s)
{
  if (s == "patch")
    return RetrieveMode::patch;
  if (s == "point")
    return RetrieveMode::point;
  throw Error(Errc::enum_violation, "mode must be 'patch' or 'point', got '" + s + "'");
}

FieldResult retrieve_field(Upstream& up, const GeoPatch& patch, const FieldSource& source,
                           RetrieveMode mode)
{
  const auto& cfg = up.config();
  const bool weather = source.field != Field::elevation;

  if (mode == RetrieveMode::point) {
    const LatLon at = patch.location();
    double value = 0;
    std::optional<double> age;
    if (weather) {
      std::int64_t ref = 0;
      const WeatherObs obs = weather_at(up, at, ref);
      value = field_value(obs, source);
      age = static_cast<double>(std::max<std::int64_t>(0, ref - obs.observed_at));
    } else {
      value = elevations(up, {at}).front();
    }
    return {patch.with_points({DataPoint{at, patch.name(), value, source.unit}}), age, {}};
  }

  if (patch.bbox().degenerate())
    throw Error(Errc::precondition, "mode='patch' needs a region; use mode='point' for '" +
                                        patch.name() + "'");
  const SampleSet set = sample_patch(patch, cfg.bulk_samples, cfg.seed);
  const std::size_t n = set.points.size();
  std::vector<double> values(n, kMissing);
  std::vector<std::int64_t> ages(n, -1);
  std::vector<std::exception_ptr> errors(n);

  if (weather) {
    errors = fan_out(n, cfg.max_in_flight, [&](std::size_t i) {
      std::int64_t ref = 0;
      const WeatherObs obs = weather_at(up, set.points[i], ref);
      values[i] = field_value(obs, source);
      ages[i] = std::max<std::int64_t>(0, ref - obs.observed_at);
    });
  } else {
    const std::vector<double> elev = elevations(up, set.points);
    std::copy(elev.begin(), elev.end(), values.begin());
  }

  std::vector<PointSample> samples;
  std::optional<double> age;
  std::exception_ptr first_error;
  std::optional<Errc> common;
  bool mixed = false;
  for (std::size_t i = 0; i < n; ++i) {
    if (errors[i]) {
      try {
        std::rethrow_exception(errors[i]);
      } catch (const Error& e) {
        if (!first_error)
          first_error = errors[i];
        if (common && *common != e.code())
          mixed = true;
        common = e.code();
      } catch (...) {
        if (!first_error)
          first_error = errors[i];
        mixed = true;
      }
      continue;
    }
    samples.push_back({set.points[i].lat(), set.points[i].lon(), values[i]});
    if (ages[i] >= 0)
      age = std::max(age.value_or(0.0), static_cast<double>(ages[i]));
  }

  const double ok = static_cast<double>(samples.size());
  if (ok < cfg.min_success * static_cast<double>(n)) {
    const std::string what = std::to_string(n - samples.size()) + " of " + std::to_string(n) +
                             " samples failed for " + source.name;
    if (!mixed && common) {
      try {
        std::rethrow_exception(first_error);
      } catch (const Error& e) {
        throw Error(e.code(), what + ": " + e.detail());
      }
    }
    throw Error(Errc::upstream_unavailable, what);
  }

  FieldResult r{set_raster_from_points(patch, samples, source.name, RasterType::non_color,
                                       source.colormap, source.unit, cfg.grid_size),
                age, {}};
  if (samples.size() < n)
    r.notes.push_back(std::to_string(n - samples.size()) + " of " + std::to_string(n) +
                      " samples failed");
  if (set.bbox_fill)
    r.notes.push_back("boundary sampling fell back to the bbox");
  return r;
}

} // namespace geode::clients
