#include "geode/serialize.hpp"

namespace geode {

namespace {

Json latlon_json(const LatLon& p) { return Json::array({p.lat(), p.lon()}); }

LatLon latlon_from(const Json& j)
{
  if (!j.is_array() || j.size() != 2)
    throw Error(Errc::bad_request, "coordinate must be [lat, lon]");
  return {j[0].get<double>(), j[1].get<double>()};
}

const Json& need(const Json& j, const char* key)
{
  if (!j.is_object() || !j.contains(key))
    throw Error(Errc::bad_request, std::string("missing key '") + key + "'");
  return j.at(key);
}

} // namespace

Json grid_to_json(const Grid& grid)
{
  Json cells = Json::array();
  for (double v : grid.cells()) {
    if (is_missing(v))
      cells.push_back(nullptr);
    else
      cells.push_back(v);
  }
  return cells;
}

Grid grid_from_json(const Json& cells, std::size_t rows, std::size_t cols)
{
  if (!cells.is_array())
    throw Error(Errc::bad_request, "grid must be an array");
  std::vector<double> v;
  v.reserve(cells.size());
  for (const auto& c : cells)
    v.push_back(c.is_null() ? kMissing : c.get<double>());
  return {rows, cols, std::move(v)};
}

Json patch_to_json(const GeoPatch& patch)
{
  const auto& v = patch.vector();
  Json vec = Json::object();
  vec["location"] = latlon_json(v.location);
  vec["bbox"] = Json::array({v.bbox.min_lat(), v.bbox.max_lat(), v.bbox.min_lon(), v.bbox.max_lon()});
  Json boundary = Json::array();
  for (const auto& ring : v.boundary) {
    Json r = Json::array();
    for (const auto& p : ring)
      r.push_back(latlon_json(p));
    boundary.push_back(std::move(r));
  }
  vec["boundary"] = std::move(boundary);
  Json points = Json::array();
  for (const auto& dp : v.points) {
    Json p = Json::object();
    p["lat"] = dp.position.lat();
    p["lon"] = dp.position.lon();
    p["name"] = dp.name;
    if (dp.value)
      p["value"] = *dp.value;
    if (!dp.unit.empty())
      p["unit"] = dp.unit;
    points.push_back(std::move(p));
  }
  vec["points"] = std::move(points);

  Json doc = Json::object();
  doc["name"] = patch.name();
  doc["vector"] = std::move(vec);
  if (const auto& r = patch.raster()) {
    Json ras = Json::object();
    ras["name"] = r->name();
    ras["rtype"] = to_string(r->rtype());
    if (r->colormap())
      ras["colormap"] = *r->colormap();
    if (!r->unit().empty())
      ras["unit"] = r->unit();
    ras["rows"] = r->grid().rows();
    ras["cols"] = r->grid().cols();
    ras["grid"] = grid_to_json(r->grid());
    doc["raster"] = std::move(ras);
  }
  return doc;
}

GeoPatch patch_from_json(const Json& doc)
{
  try {
    const Json& vec = need(doc, "vector");
    const Json& bb = need(vec, "bbox");
    if (!bb.is_array() || bb.size() != 4)
      throw Error(Errc::bad_request, "bbox must have 4 numbers");
    VectorLayer v{latlon_from(need(vec, "location")),
                  BBox(bb[0].get<double>(), bb[1].get<double>(), bb[2].get<double>(),
                       bb[3].get<double>()),
                  {},
                  {}};
    for (const auto& ring : vec.value("boundary", Json::array())) {
      std::vector<LatLon> pts;
      for (const auto& p : ring)
        pts.push_back(latlon_from(p));
      v.boundary.push_back(make_ring(std::move(pts)));
    }
    for (const auto& p : vec.value("points", Json::array())) {
      DataPoint dp{{need(p, "lat").get<double>(), need(p, "lon").get<double>()},
                   need(p, "name").get<std::string>(),
                   std::nullopt,
                   p.value("unit", std::string{})};
      if (p.contains("value") && !p.at("value").is_null())
        dp.value = p.at("value").get<double>();
      v.points.push_back(std::move(dp));
    }
    std::optional<RasterLayer> raster;
    if (doc.contains("raster") && !doc.at("raster").is_null()) {
      const Json& r = doc.at("raster");
      const auto rows = need(r, "rows").get<std::size_t>();
      const auto cols = need(r, "cols").get<std::size_t>();
      std::optional<std::string> cmap;
      if (r.contains("colormap"))
        cmap = r.at("colormap").get<std::string>();
      raster.emplace(need(r, "name").get<std::string>(),
                     raster_type_from_string(need(r, "rtype").get<std::string>()), cmap,
                     grid_from_json(need(r, "grid"), rows, cols), v.bbox,
                     r.value("unit", std::string{}));
    }
    return {doc.value("name", std::string{}), std::move(v), std::move(raster)};
  } catch (const Json::exception& e) {
    throw Error(Errc::bad_request, std::string("malformed patch document: ") + e.what());
  }
}

} // namespace geode
