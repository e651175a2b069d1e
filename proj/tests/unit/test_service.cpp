#include "doctest.h"

#include <fstream>
#include <set>

#include "geode/colormap.hpp"
#include "geode/service.hpp"
#include "../support/temp_dir.hpp"
#include "../support/world_registry.hpp"

using namespace geode;
using namespace geode::service;

namespace {

const char* kQutub = "What is the air quality like in the city known for the Qutub Minar?";

std::string data_dir()
{
  return std::string(GEODE_SOURCE_DIR) + "/data";
}

EngineConfig world_engine_config()
{
  EngineConfig c;
  c.clients = testing::world_config();
  c.backend.id = gateway::BackendId::canned;
  c.backend.golden_plans = data_dir() + "/golden_plans.json";
  return c;
}

std::unique_ptr<Engine> world_engine(EngineConfig c = world_engine_config())
{
  return std::make_unique<Engine>(std::move(c), std::make_shared<fake::WorldTransport>(), nullptr,
                                  [] { return fake::kObservedAt + 600; });
}

std::unique_ptr<Engine> offline_engine(const std::string& fixtures = data_dir() + "/fixtures")
{
  auto c = world_engine_config();
  c.clients.mode = clients::NetMode::offline;
  c.clients.fixtures = fixtures;
  struct NoNetwork final : Transport {
    HttpResponse send(const HttpRequest& r) override { FAIL("network request in offline mode: " << r.url); return {}; }
  };
  return std::make_unique<Engine>(std::move(c), std::make_shared<NoNetwork>());
}

GeoPatch square_patch(const std::string& name)
{
  return make_region_patch(name, {make_ring({{10, 20}, {10, 21}, {11, 21}, {11, 20}})});
}

std::vector<std::uint8_t> overlay_pixels(const Overlay& o)
{
  std::size_t w = 0, h = 0;
  auto px = decode_png(base64_decode(o.png_base64), w, h);
  CHECK(w == o.width);
  CHECK(h == o.height);
  return px;
}

// Structural GeoJSON checks: type tags, closed rings, CCW exteriors, lon-lat order.
void check_geojson(const Json& fc, const BBox& bbox)
{
  REQUIRE(fc["type"] == "FeatureCollection");
  auto check_position = [&](const Json& p) {
    REQUIRE(p.is_array());
    REQUIRE(p.size() == 2);
    const double lon = p[0], lat = p[1];
    CHECK(bbox.contains({lat, lon}, 1e-6));
  };
  auto check_ring = [&](const Json& ring) {
    REQUIRE(ring.size() >= 4);
    CHECK(ring.front() == ring.back());
    double twice_area = 0;
    for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
      check_position(ring[i]);
      twice_area += ring[i][0].get<double>() * ring[i + 1][1].get<double>() -
                    ring[i + 1][0].get<double>() * ring[i][1].get<double>();
    }
    CHECK(twice_area > 0);
  };
  for (const auto& f : fc["features"]) {
    REQUIRE(f["type"] == "Feature");
    REQUIRE(f.contains("properties"));
    const auto& g = f["geometry"];
    const std::string type = g["type"];
    if (type == "Point") {
      check_position(g["coordinates"]);
      CHECK(f["properties"].contains("name"));
      CHECK(f["properties"].contains("value"));
      CHECK(f["properties"].contains("unit"));
    } else if (type == "Polygon") {
      for (const auto& ring : g["coordinates"])
        check_ring(ring);
    } else if (type == "MultiPolygon") {
      for (const auto& poly : g["coordinates"])
        for (const auto& ring : poly)
          check_ring(ring);
    } else {
      FAIL("unexpected geometry type " << type);
    }
  }
}

} // namespace

TEST_SUITE("service") {

TEST_CASE("zoom heuristic")
{
  CHECK(suggested_zoom(BBox(-90, 90, -180, 180)) == 2);
  CHECK(suggested_zoom(BBox(0, 1, 0, 1)) == 8);
  CHECK(suggested_zoom(BBox(0, 0.5, 0, 3)) == 6);
  CHECK(suggested_zoom(BBox(0, 1e-4, 0, 1e-4)) == 16);
  CHECK(suggested_zoom(BBox::around({1, 2})) == 16);
}

TEST_CASE("png and base64 round trip")
{
  std::vector<std::uint8_t> px(3 * 2 * 4);
  for (std::size_t i = 0; i < px.size(); ++i)
    px[i] = static_cast<std::uint8_t>(i * 11);
  const auto png = encode_png(px, 3, 2);
  CHECK(png.size() > 8);
  CHECK(png[1] == 'P');
  std::size_t w = 0, h = 0;
  CHECK(decode_png(base64_decode(base64_encode(png)), w, h) == px);
  CHECK(w == 3);
  CHECK(h == 2);
  CHECK(base64_encode({'a', 'b'}) == "YWI=");
  CHECK(base64_decode("YWI=") == std::vector<std::uint8_t>{'a', 'b'});
}

TEST_CASE("point patch gives a marker only")
{
  const auto m = visualize(make_point_patch({28.5245, 77.1855}, "Qutub Minar"));
  REQUIRE(m.geojson["features"].size() == 1);
  CHECK(m.geojson["features"][0]["geometry"]["type"] == "Point");
  CHECK(m.geojson["features"][0]["geometry"]["coordinates"][0] == 77.1855);
  CHECK(m.geojson["features"][0]["properties"]["name"] == "Qutub Minar");
  CHECK_FALSE(m.overlay);
  CHECK(m.zoom == 16);
  CHECK(m.center == LatLon(28.5245, 77.1855));
}

TEST_CASE("binary overlay uses two opaque colours")
{
  Grid g(4, 4);
  for (std::size_t i = 0; i < 16; ++i)
    g.cells()[i] = i % 3 == 0 ? kMissing : static_cast<double>(i % 2);
  const auto base = square_patch("hot");
  const auto patch = base.with_raster(RasterLayer("hot", RasterType::binary, "Oranges", g, base.bbox()));
  const auto m = visualize(patch);
  REQUIRE(m.overlay);
  const auto px = overlay_pixels(*m.overlay);
  std::set<std::array<std::uint8_t, 3>> colours;
  for (std::size_t i = 0; i < 16; ++i) {
    const bool missing = is_missing(g.cells()[i]);
    CHECK((px[i * 4 + 3] == 0) == missing);
    if (!missing) {
      CHECK(px[i * 4 + 3] == 255);
      colours.insert({px[i * 4], px[i * 4 + 1], px[i * 4 + 2]});
    }
  }
  CHECK(colours.size() == 2);
  CHECK(m.overlay->legend.min == 0);
  CHECK(m.overlay->legend.max == 1);
}

TEST_CASE("field overlay matches the raster")
{
  const auto base = square_patch("field");
  Grid g(64, 64);
  for (std::size_t r = 0; r < 64; ++r)
    for (std::size_t c = 0; c < 64; ++c)
      g.at(r, c) = (r == 5 && c == 7) ? kMissing : 10.0 + 0.5 * static_cast<double>(r) - 0.25 * static_cast<double>(c);
  const auto patch = base.with_raster(RasterLayer("Temperature", RasterType::non_color, "Oranges", g, base.bbox(), "°C"));
  const auto m = visualize(patch);
  REQUIRE(m.overlay);
  CHECK(m.overlay->width == 64);
  CHECK(m.overlay->height == 64);
  CHECK(m.overlay->bounds == patch.bbox());
  CHECK(m.overlay->legend.name == "Temperature");
  CHECK(m.overlay->legend.unit == "°C");
  CHECK(m.overlay->legend.colormap == "Oranges");
  CHECK(m.overlay->legend.min == doctest::Approx(10.0 - 0.25 * 63));
  CHECK(m.overlay->legend.max == doctest::Approx(10.0 + 0.5 * 63));
  CHECK(m.overlay->legend.min < m.overlay->legend.max);
  const auto px = overlay_pixels(*m.overlay);
  const auto& table = colormap("Oranges");
  CHECK(px[(5 * 64 + 7) * 4 + 3] == 0);
  CHECK(px[(63 * 64 + 0) * 4 + 0] == table.back().r);
  CHECK(px[(0 * 64 + 63) * 4 + 0] == table.front().r);
  std::size_t transparent = 0;
  for (std::size_t i = 0; i < 64 * 64; ++i)
    transparent += px[i * 4 + 3] == 0;
  CHECK(transparent == 1);
  check_geojson(m.geojson, patch.bbox());
}

TEST_CASE("clockwise rings are flipped for the wire")
{
  const auto cw = make_region_patch("cw", {make_ring({{10, 20}, {11, 20}, {11, 21}, {10, 21}})});
  const auto m = visualize(cw);
  check_geojson(m.geojson, cw.bbox());
  const auto two = make_region_patch(
      "two", {make_ring({{10, 20}, {10, 21}, {11, 21}}), make_ring({{12, 22}, {13, 23}, {12, 23}})});
  const auto m2 = visualize(two);
  CHECK(m2.geojson["features"][0]["geometry"]["type"] == "MultiPolygon");
  check_geojson(m2.geojson, two.bbox());
}

TEST_CASE("golden query end to end")
{
  auto engine = world_engine();
  const auto r = engine->handle_query(kQutub);
  REQUIRE_MESSAGE(!r.error, (r.error ? r.error->message : ""));
  CHECK(r.status == 200);
  CHECK(r.metrics.completion);
  REQUIRE(r.map);
  REQUIRE(r.map->overlay);
  CHECK(r.map->overlay->legend.name == "US - EPA Index");
  CHECK(r.map->overlay->legend.colormap == "magma");
  CHECK(r.answer.find("US EPA") != std::string::npos);
  CHECK(r.elaboration.rfind("Answer: ", 0) == 0);
  CHECK(r.metrics.backend_calls == 1);
  CHECK(r.metrics.total_ms + 1 >= r.metrics.planning_ms + r.metrics.execution_ms);
  CHECK(r.metrics.planning_ms >= 0);
  CHECK(r.metrics.per_expert.size() == r.trace.size());
  REQUIRE(r.metrics.freshness_s);
  CHECK(*r.metrics.freshness_s == 600);
  check_geojson(r.map->geojson, r.map->overlay->bounds);

  const auto j = to_json(r);
  CHECK(j["ok"] == true);
  CHECK(j["map"]["overlay"]["image"].get<std::string>().rfind("data:image/png;base64,", 0) == 0);
  CHECK(j["metrics"]["completion"] == true);
}

TEST_CASE("every golden query completes against the synthetic world")
{
  auto engine = world_engine();
  for (const auto& [q, text] : testing::golden_plans()) {
    const auto r = engine->handle_query(q);
    CHECK_MESSAGE(r.metrics.completion, q << ": " << (r.error ? r.error->message : ""));
    CHECK(r.map);
  }
}

TEST_CASE("failure responses")
{
  auto engine = world_engine();
  SUBCASE("no canned plan")
  {
    const auto r = engine->handle_query("What is the weather on Mars?");
    CHECK(r.status == 422);
    CHECK_FALSE(r.metrics.completion);
    REQUIRE(r.error);
    CHECK(r.error->code == "NO_CANNED_PLAN");
    CHECK(r.error->stage == "planning");
    CHECK_FALSE(r.map);
    CHECK(to_json(r)["map"].is_null());
  }
  SUBCASE("empty query")
  {
    const auto r = engine->handle_query("  ");
    CHECK(r.status == 400);
    CHECK(r.error->code == "BAD_REQUEST");
  }
  SUBCASE("unconfigured backend override")
  {
    const auto r = engine->handle_query(kQutub, std::nullopt, std::string("local"));
    CHECK(r.status == 400);
  }
  SUBCASE("unknown backend")
  {
    CHECK(engine->handle_query(kQutub, std::nullopt, std::string("gpt")).status == 400);
  }
  SUBCASE("upstream miss")
  {
    testing::TempDir empty;
    auto offline = offline_engine(empty.str());
    const auto r = offline->handle_query(kQutub);
    CHECK(r.status == 502);
    REQUIRE(r.error);
    CHECK(r.error->code == "EXPERT_RUNTIME");
    CHECK(r.error->cause == "FIXTURE_MISS");
    CHECK(r.error->stage == "execution");
    CHECK(r.error->expert == "patch_location_expert");
    CHECK(r.error->line == 2);
    REQUIRE_FALSE(r.trace.empty());
    CHECK(r.trace.back().outcome == "FIXTURE_MISS");
  }
}

TEST_CASE("metrics")
{
  auto engine = world_engine();
  auto m = engine->metrics();
  CHECK(m["requests"] == 0);
  CHECK(m["completed"] == 0);
  CHECK(m["plan_failures"] == 0);
  CHECK(m["upstream_failures"] == 0);
  CHECK(m["experts"].empty());
  CHECK(m["completion_rate"].is_null());

  engine->handle_query(kQutub);
  m = engine->metrics();
  CHECK(m["completion_rate"] == 1.0);
  CHECK(m["experts"]["air_quality_expert"]["calls"] == 2);
  CHECK(m["experts"]["air_quality_expert"]["errors"] == 0);
  CHECK(m["latency_ms"]["p50"].get<double>() >= 0);

  engine->handle_query("What is the weather on Mars?");
  m = engine->metrics();
  CHECK(m["completion_rate"] == 0.5);
  CHECK(m["plan_failures"] == 1);
  CHECK(m["requests"] == 2);

  CHECK(percentile({}, 50) == std::nullopt);
  CHECK(percentile({3, 1, 2, 4}, 50) == 2);
  CHECK(percentile({3, 1, 2, 4}, 95) == 4);
  CHECK(percentile({7}, 95) == 7);
}

TEST_CASE("sessions")
{
  testing::TempDir dir;
  auto c = world_engine_config();
  c.journal = (dir.path() / "journal.jsonl").string();
  auto engine = world_engine(c);
  CHECK_FALSE(engine->session("s1"));
  engine->handle_query(kQutub, std::string("s1"));
  engine->handle_query("What is the weather on Mars?", std::string("s1"));
  engine->handle_query(kQutub);
  const auto s = engine->session("s1");
  REQUIRE(s);
  REQUIRE((*s)["turns"].size() == 2);
  CHECK((*s)["turns"][0]["completion"] == true);
  CHECK((*s)["turns"][1]["error_code"] == "NO_CANNED_PLAN");
  CHECK((*s)["turns"][0]["timestamp"] <= (*s)["turns"][1]["timestamp"]);

  std::ifstream in(c.journal);
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) {
    CHECK(Json::parse(line)["session_id"] == "s1");
    ++lines;
  }
  CHECK(lines == 2);
}

TEST_CASE("offline replay is deterministic and network free")
{
  auto a = offline_engine();
  auto b = offline_engine();
  for (const auto& [q, text] : testing::golden_plans()) {
    const auto ra = a->handle_query(q);
    const auto rb = b->handle_query(q);
    const auto ra2 = a->handle_query(q);
    REQUIRE_MESSAGE(ra.metrics.completion, q << ": " << (ra.error ? ra.error->message : ""));
    CHECK(to_json(*ra.map).dump() == to_json(*rb.map).dump());
    CHECK(strip_durations(to_json(ra)).dump() == strip_durations(to_json(rb)).dump());
    CHECK(strip_durations(to_json(ra)).dump() == strip_durations(to_json(ra2)).dump());
    CHECK(ra.metrics.freshness_s.has_value() != (q.find("Telengana") != std::string::npos));
  }
  CHECK(a->upstream().network_calls() == 0);
}

TEST_CASE("rain query answer is frozen by the fixtures")
{
  auto engine = offline_engine();
  const auto r = engine->handle_query("Where does it rain more, Atlanta or Chicago?");
  REQUIRE(r.metrics.completion);
  const bool atlanta = r.answer.find("Atlanta") != std::string::npos;
  const bool chicago = r.answer.find("Chicago") != std::string::npos;
  CHECK(atlanta != chicago);
}

TEST_CASE("experts table")
{
  auto engine = world_engine();
  const auto t = engine->experts();
  CHECK(t["experts"].size() == engine->registry().entries().size());
  CHECK(t["experts"].size() >= 13);
  CHECK(t["experts"][0].contains("signature"));
  CHECK(engine->health()["status"] == "ok");
}

}
