#include "world.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>
#include <vector>

#include "json.hpp"

namespace geode::fake {

namespace {

using Json = nlohmann::ordered_json;

struct Place {
  std::vector<std::string> names;
  std::string display;
  double lat, lon;
  // (lon, lat) vertices of one outer ring; empty for point places.
  std::vector<std::pair<double, double>> ring;
  double half = 0.05;
};

const std::vector<Place>& gazetteer()
{
  static const std::vector<Place> places{
      {{"qutub minar", "qutb minar"},
       "Qutub Minar, Mehrauli, South Delhi, Delhi, 110030, India",
       28.5245, 77.1855,
       {{77.1849, 28.5240}, {77.1861, 28.5240}, {77.1861, 28.5250}, {77.1849, 28.5250}}},
      {{"delhi", "new delhi"},
       "Delhi, India",
       28.6517, 77.2219,
       {{76.84, 28.55}, {76.95, 28.41}, {77.10, 28.40}, {77.22, 28.47}, {77.35, 28.52},
        {77.31, 28.66}, {77.34, 28.82}, {77.18, 28.88}, {77.05, 28.70}, {76.93, 28.82},
        {76.85, 28.70}}},
      {{"telengana", "telangana"},
       "Telangana, India",
       17.8496, 79.1152,
       {{77.20, 17.10}, {77.60, 16.20}, {78.60, 15.80}, {79.50, 16.40}, {80.40, 16.90},
        {81.30, 17.80}, {80.70, 18.80}, {79.90, 19.90}, {78.80, 19.60}, {78.20, 18.60},
        {77.50, 18.70}}},
      {{"bangladesh"},
       "Bangladesh",
       24.4769, 90.2934,
       {{88.00, 24.40}, {88.70, 22.00}, {89.90, 21.70}, {91.20, 22.20}, {92.30, 20.60},
        {92.70, 22.00}, {92.40, 24.90}, {91.60, 25.20}, {90.00, 25.30}, {89.80, 26.60},
        {88.60, 26.40}, {88.50, 25.30}}},
      {{"atlanta", "atlanta, ga"}, "Atlanta, Fulton County, Georgia, United States", 33.7490, -84.3880, {}, 0.2},
      {{"chicago", "chicago, il"}, "Chicago, Cook County, Illinois, United States", 41.8781, -87.6298, {}, 0.3},
      {{"paris"}, "Paris, Ile-de-France, France", 48.8566, 2.3522, {}, 0.1},
      {{"rome", "roma"}, "Roma, Lazio, Italy", 41.8933, 12.4829, {}, 0.2},
  };
  return places;
}

std::string lower_trim(std::string s)
{
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  const auto b = s.find_first_not_of(" \t");
  const auto e = s.find_last_not_of(" \t");
  return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}

std::string dec(double v, int places)
{
  std::ostringstream ss;
  ss.setf(std::ios::fixed);
  ss.precision(places);
  ss << v;
  return ss.str();
}

double round_to(double v, double step) { return std::round(v / step) * step; }

Json search(const Query& q)
{
  Json out = Json::array();
  auto it = q.find("q");
  if (it == q.end())
    return out;
  const std::string name = lower_trim(it->second);
  for (const auto& p : gazetteer()) {
    if (std::find(p.names.begin(), p.names.end(), name) == p.names.end())
      continue;
    double s = p.lat - p.half, n = p.lat + p.half, w = p.lon - p.half, e = p.lon + p.half;
    Json geom;
    if (!p.ring.empty()) {
      s = n = p.ring[0].second;
      w = e = p.ring[0].first;
      Json ring = Json::array();
      for (const auto& [lon, lat] : p.ring) {
        ring.push_back(Json::array({lon, lat}));
        s = std::min(s, lat);
        n = std::max(n, lat);
        w = std::min(w, lon);
        e = std::max(e, lon);
      }
      ring.push_back(ring[0]);
      geom = {{"type", "Polygon"}, {"coordinates", Json::array({ring})}};
    } else {
      geom = {{"type", "Point"}, {"coordinates", Json::array({p.lon, p.lat})}};
    }
    Json hit = Json::object();
    hit["place_id"] = 1000 + (&p - gazetteer().data());
    hit["lat"] = dec(p.lat, 7);
    hit["lon"] = dec(p.lon, 7);
    hit["category"] = "boundary";
    hit["type"] = "administrative";
    hit["display_name"] = p.display;
    hit["boundingbox"] = Json::array({dec(s, 7), dec(n, 7), dec(w, 7), dec(e, 7)});
    if (q.count("polygon_geojson") && q.at("polygon_geojson") == "1")
      hit["geojson"] = geom;
    out.push_back(hit);
    break;
  }
  return out;
}

Json current(double lat, double lon)
{
  const double pm25 = std::max(2.0, 45 + 30 * std::sin(lat * 1.3) * std::cos(lon * 0.9) + 8 * std::sin(lon * 0.37));
  const double pm10 = 1.6 * pm25 + 10 * std::cos(lat * 0.7);
  const int epa = std::clamp(1 + static_cast<int>(pm25 / 16.0), 1, 6);
  Json aq = Json::object();
  aq["co"] = round_to(320 + 120 * std::sin(lat * 0.8 + lon * 0.3), 0.1);
  aq["no2"] = round_to(std::max(0.5, 25 + 18 * std::cos(lat * 0.6 - lon * 0.45)), 0.1);
  aq["o3"] = round_to(std::max(1.0, 70 + 25 * std::sin(lon * 0.5)), 0.1);
  aq["so2"] = round_to(std::max(0.1, 8 + 6 * std::sin(lat * 1.7)), 0.1);
  aq["pm2_5"] = round_to(pm25, 0.1);
  aq["pm10"] = round_to(pm10, 0.1);
  aq["us-epa-index"] = epa;
  aq["gb-defra-index"] = std::clamp(epa + 1, 1, 10);

  Json cur = Json::object();
  cur["last_updated_epoch"] = kObservedAt;
  cur["last_updated"] = "2025-10-16 07:45";
  cur["temp_c"] = round_to(32 - 0.55 * (std::abs(lat) - 20) + 3 * std::sin(lon / 5.0) + 1.5 * std::cos(lat * 2.1), 0.1);
  cur["humidity"] = std::clamp(static_cast<int>(std::lround(62 + 25 * std::sin(lat / 2.0) * std::cos(lon / 3.0) + 6 * std::sin(lat * 3.1 + lon))), 5, 100);
  cur["precip_mm"] = round_to(std::max(0.0, 1.2 + 1.4 * std::sin(lat / 2.5 + lon / 4.0) + 0.4 * std::cos(lon * 1.7)), 0.01);
  cur["air_quality"] = aq;

  Json loc = Json::object();
  loc["lat"] = round_to(lat, 0.01);
  loc["lon"] = round_to(lon, 0.01);
  loc["tz_id"] = "UTC";
  return {{"location", loc}, {"current", cur}};
}

double elevation(double lat, double lon)
{
  double h = 350 + 220 * std::sin(lat * 0.9) * std::cos(lon * 0.7) + 60 * std::sin(lat * 3 + lon * 2);
  // Deccan ridge in the synthetic Telangana.
  const double d2 = std::pow(lat - 19.2, 2) + std::pow((lon - 78.6) * 1.2, 2);
  h += 420 * std::exp(-d2 / 0.6);
  return round_to(std::max(0.0, h), 0.1);
}

std::vector<double> split_numbers(const std::string& s)
{
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ','))
    out.push_back(std::stod(tok));
  return out;
}

HttpResponse json_response(int status, const Json& j) { return {status, j.dump()}; }

} // namespace

std::string url_decode(const std::string& s)
{
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '%' && i + 2 < s.size()) {
      out += static_cast<char>(std::stoi(s.substr(i + 1, 2), nullptr, 16));
      i += 2;
    } else if (s[i] == '+') {
      out += ' ';
    } else {
      out += s[i];
    }
  }
  return out;
}

HttpResponse handle(const std::string& path, const Query& q)
{
  try {
    if (path == "/search")
      return json_response(200, search(q));
    if (path == "/v1/current.json") {
      if (!q.count("key") || q.at("key").empty())
        return json_response(401, {{"error", {{"code", 1002}, {"message", "API key is invalid or not provided."}}}});
      const auto c = split_numbers(q.at("q"));
      if (c.size() != 2 || std::abs(c[0]) > 90)
        return json_response(400, {{"error", {{"code", 1006}, {"message", "No matching location found."}}}});
      return json_response(200, current(c[0], c[1]));
    }
    if (path == "/v1/elevation") {
      const auto lats = split_numbers(q.at("latitude"));
      const auto lons = split_numbers(q.at("longitude"));
      if (lats.size() != lons.size() || lats.size() > 100)
        return json_response(400, {{"error", true}, {"reason", "latitude and longitude must have the same number of elements"}});
      Json e = Json::array();
      for (std::size_t i = 0; i < lats.size(); ++i)
        e.push_back(elevation(lats[i], lons[i]));
      return json_response(200, {{"elevation", e}});
    }
  } catch (const std::exception& e) {
    return json_response(400, {{"error", {{"message", e.what()}}}});
  }
  return json_response(404, {{"error", {{"message", "not found"}}}});
}

HttpResponse WorldTransport::send(const HttpRequest& request)
{
  ++calls_;
  const auto scheme = request.url.find("://");
  const auto path_start = request.url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
  std::string target = path_start == std::string::npos ? "/" : request.url.substr(path_start);
  Query q;
  const auto qpos = target.find('?');
  if (qpos != std::string::npos) {
    std::stringstream ss(target.substr(qpos + 1));
    std::string kv;
    while (std::getline(ss, kv, '&')) {
      const auto eq = kv.find('=');
      q[url_decode(kv.substr(0, eq))] = eq == std::string::npos ? "" : url_decode(kv.substr(eq + 1));
    }
    target.resize(qpos);
  }
  return handle(target, q);
}

} // namespace geode::fake
