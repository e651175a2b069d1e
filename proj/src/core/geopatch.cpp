#include "geode/geopatch.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <sstream>
#include <utility>

#include "geode/colormap.hpp"
#include "geode/geometry.hpp"
#include "geode/rbf.hpp"

namespace geode {

namespace {

std::string fmt_coord(double lat, double lon)
{
  std::ostringstream os;
  os << "(" << lat << ", " << lon << ")";
  return os.str();
}

} // namespace

double wrap_longitude(double lon)
{
  if (lon >= -180.0 && lon <= 180.0)
    return lon;
  double r = std::fmod(lon + 180.0, 360.0);
  if (r < 0.0)
    r += 360.0;
  return r - 180.0;
}

LatLon::LatLon(double lat, double lon)
{
  if (!std::isfinite(lat) || !std::isfinite(lon))
    throw Error(Errc::coordinate_range, "non-finite coordinate " + fmt_coord(lat, lon));
  if (lat < -90.0 || lat > 90.0)
    throw Error(Errc::coordinate_range, "latitude out of [-90, 90]: " + fmt_coord(lat, lon));
  lat_ = lat;
  lon_ = wrap_longitude(lon);
}

BBox::BBox(double min_lat, double max_lat, double min_lon, double max_lon)
    : min_lat_(min_lat), max_lat_(max_lat), min_lon_(min_lon), max_lon_(max_lon)
{
  for (double v : {min_lat, max_lat, min_lon, max_lon})
    if (!std::isfinite(v))
      throw Error(Errc::coordinate_range, "non-finite bbox coordinate");
  if (min_lat < -90.0 || max_lat > 90.0)
    throw Error(Errc::coordinate_range, "bbox latitude out of [-90, 90]");
  if (min_lon < -360.0 || max_lon > 360.0)
    throw Error(Errc::coordinate_range, "bbox longitude out of [-360, 360]");
  if (min_lat > max_lat || min_lon > max_lon)
    throw Error(Errc::invalid_geometry, "bbox min exceeds max");
  if (max_lon - min_lon > 360.0)
    throw Error(Errc::invalid_geometry, "bbox longitude span exceeds 360");
}

bool BBox::contains(const LatLon& p, double eps) const noexcept
{
  if (p.lat() < min_lat_ - eps || p.lat() > max_lat_ + eps)
    return false;
  for (double lon : {p.lon(), p.lon() + 360.0, p.lon() - 360.0})
    if (lon >= min_lon_ - eps && lon <= max_lon_ + eps)
      return true;
  return false;
}

LatLon BBox::center() const
{
  return {0.5 * (min_lat_ + max_lat_), 0.5 * (min_lon_ + max_lon_)};
}

const char* to_string(RasterType t) noexcept
{
  switch (t) {
  case RasterType::color: return "color";
  case RasterType::non_color: return "non_color";
  case RasterType::binary: return "binary";
  }
  return "non_color";
}

RasterType raster_type_from_string(const std::string& s)
{
  if (s == "color")
    return RasterType::color;
  if (s == "non_color")
    return RasterType::non_color;
  if (s == "binary")
    return RasterType::binary;
  throw Error(Errc::raster_type, "unknown raster type '" + s + "'");
}

Grid::Grid(std::size_t rows, std::size_t cols, double fill)
    : Grid(rows, cols, std::vector<double>(rows * cols, fill))
{
}

Grid::Grid(std::size_t rows, std::size_t cols, std::vector<double> cells)
    : rows_(rows), cols_(cols), cells_(std::move(cells))
{
  if (rows == 0 || cols == 0)
    throw Error(Errc::shape_mismatch, "grid dimensions must be at least 1x1");
  if (cells_.size() != rows * cols)
    throw Error(Errc::shape_mismatch, "grid cell count does not match dimensions");
}

Grid Grid::from_rows(const std::vector<std::vector<double>>& rows)
{
  if (rows.empty() || rows.front().empty())
    throw Error(Errc::shape_mismatch, "grid dimensions must be at least 1x1");
  const std::size_t cols = rows.front().size();
  std::vector<double> cells;
  cells.reserve(rows.size() * cols);
  for (const auto& r : rows) {
    if (r.size() != cols)
      throw Error(Errc::shape_mismatch, "grid rows differ in length");
    cells.insert(cells.end(), r.begin(), r.end());
  }
  return {rows.size(), cols, std::move(cells)};
}

std::size_t Grid::present_count() const noexcept
{
  return static_cast<std::size_t>(
      std::count_if(cells_.begin(), cells_.end(), [](double v) { return !is_missing(v); }));
}

bool operator==(const Grid& a, const Grid& b) noexcept
{
  if (!a.same_shape(b))
    return false;
  for (std::size_t i = 0; i < a.cells_.size(); ++i) {
    const double x = a.cells_[i];
    const double y = b.cells_[i];
    if (is_missing(x) != is_missing(y))
      return false;
    if (!is_missing(x) && x != y)
      return false;
  }
  return true;
}

LatLon cell_to_latlon(const GridSpec& spec, std::size_t row, std::size_t col)
{
  if (row >= spec.rows || col >= spec.cols) {
    std::ostringstream os;
    os << "cell (" << row << ", " << col << ") outside " << spec.rows << "x" << spec.cols
       << " grid";
    throw Error(Errc::index_out_of_range, os.str());
  }
  const double lat = spec.bbox.max_lat() - (static_cast<double>(row) + 0.5) * spec.cell_lat();
  const double lon = spec.bbox.min_lon() + (static_cast<double>(col) + 0.5) * spec.cell_lon();
  return {lat, lon};
}

CellIndex latlon_to_cell(const GridSpec& spec, const LatLon& p)
{
  if (!spec.bbox.contains(p))
    throw Error(Errc::out_of_bounds,
                "position " + fmt_coord(p.lat(), p.lon()) + " outside grid extent");
  double lon = p.lon();
  if (lon < spec.bbox.min_lon() - 1e-9)
    lon += 360.0;
  else if (lon > spec.bbox.max_lon() + 1e-9)
    lon -= 360.0;

  auto index = [](double offset, double step, std::size_t n) -> std::size_t {
    if (step <= 0.0)
      return 0;
    const double f = std::floor(offset / step);
    if (f <= 0.0)
      return 0;
    return std::min(static_cast<std::size_t>(f), n - 1);
  };
  return {index(spec.bbox.max_lat() - p.lat(), spec.cell_lat(), spec.rows),
          index(lon - spec.bbox.min_lon(), spec.cell_lon(), spec.cols)};
}

RasterLayer::RasterLayer(std::string name, RasterType rtype, std::optional<std::string> colormap,
                         Grid grid, BBox bbox, std::string unit)
    : name_(std::move(name)), rtype_(rtype), colormap_(std::move(colormap)),
      grid_(std::move(grid)), bbox_(bbox), unit_(std::move(unit))
{
  if (grid_.rows() == 0 || grid_.cols() == 0)
    throw Error(Errc::shape_mismatch, "raster grid must be at least 1x1");
  if (rtype_ == RasterType::binary) {
    for (double v : grid_.cells())
      if (!is_missing(v) && v != 0.0 && v != 1.0)
        throw Error(Errc::raster_type, "binary raster holds a value other than 0/1");
  }
  if (colormap_ && !is_registered_colormap(*colormap_))
    throw Error(Errc::precondition, "unknown colormap '" + *colormap_ + "'");
}

RasterLayer RasterLayer::with_grid(Grid grid) const
{
  return with_grid(std::move(grid), rtype_);
}

RasterLayer RasterLayer::with_grid(Grid grid, RasterType rtype) const
{
  if (!grid.same_shape(grid_))
    throw Error(Errc::shape_mismatch, "replacement grid has a different shape");
  return {name_, rtype, colormap_, std::move(grid), bbox_, unit_};
}

RasterLayer RasterLayer::with_name(std::string name) const
{
  return {std::move(name), rtype_, colormap_, grid_, bbox_, unit_};
}

Ring make_ring(std::vector<LatLon> vertices)
{
  std::vector<LatLon> v;
  v.reserve(vertices.size() + 1);
  for (const auto& p : vertices)
    if (v.empty() || !(v.back() == p))
      v.push_back(p);
  if (v.size() > 1 && v.front() == v.back())
    v.pop_back();

  std::set<std::pair<double, double>> distinct;
  for (const auto& p : v)
    distinct.emplace(p.lat(), p.lon());
  if (distinct.size() < 3)
    throw Error(Errc::invalid_geometry, "ring needs at least 3 distinct vertices");

  v.push_back(v.front());
  if (!geometry::ring_is_simple(v))
    throw Error(Errc::invalid_geometry, "ring is self-intersecting");
  return v;
}

Ring bbox_ring(const BBox& b)
{
  if (b.degenerate())
    throw Error(Errc::empty_geometry, "degenerate bbox has no ring");
  return make_ring({{b.min_lat(), b.min_lon()},
                    {b.min_lat(), b.max_lon()},
                    {b.max_lat(), b.max_lon()},
                    {b.max_lat(), b.min_lon()}});
}

void VectorLayer::validate() const
{
  if (!bbox.contains(location, 1e-7))
    throw Error(Errc::invalid_geometry, "location lies outside bbox");
  for (const auto& ring : boundary) {
    if (ring.size() < 4 || !(ring.front() == ring.back()))
      throw Error(Errc::invalid_geometry, "boundary ring is not closed");
  }
  if (!boundary.empty()) {
    const BBox hull = bbox_of_rings(boundary);
    const double eps = 1e-9;
    if (std::abs(hull.min_lat() - bbox.min_lat()) > eps ||
        std::abs(hull.max_lat() - bbox.max_lat()) > eps ||
        std::abs(hull.min_lon() - bbox.min_lon()) > eps ||
        std::abs(hull.max_lon() - bbox.max_lon()) > eps)
      throw Error(Errc::invalid_geometry, "bbox differs from boundary hull");
  }
  for (const auto& p : points)
    if (p.name.empty())
      throw Error(Errc::invalid_geometry, "data point without a name");
}

const char* to_string(PatchType t) noexcept
{
  switch (t) {
  case PatchType::point: return "point";
  case PatchType::region: return "region";
  case PatchType::field: return "field";
  }
  return "region";
}

GeoPatch::GeoPatch(std::string name, VectorLayer vector, std::optional<RasterLayer> raster)
    : name_(std::move(name)), vector_(std::move(vector)), raster_(std::move(raster))
{
  vector_.validate();
  if (raster_ && !(raster_->bbox() == vector_.bbox))
    throw Error(Errc::shape_mismatch, "raster bbox differs from vector bbox");
}

PatchType GeoPatch::ptype() const noexcept
{
  if (raster_)
    return PatchType::field;
  if (vector_.boundary.empty())
    return PatchType::point;
  return PatchType::region;
}

GeoPatch GeoPatch::with_name(std::string name) const
{
  GeoPatch p = *this;
  p.name_ = std::move(name);
  return p;
}

GeoPatch GeoPatch::with_raster(RasterLayer raster) const
{
  if (!(raster.bbox() == vector_.bbox))
    throw Error(Errc::shape_mismatch, "raster bbox differs from vector bbox");
  GeoPatch p = *this;
  p.raster_ = std::move(raster);
  return p;
}

GeoPatch GeoPatch::without_raster() const
{
  GeoPatch p = *this;
  p.raster_.reset();
  return p;
}

GeoPatch GeoPatch::with_points(std::vector<DataPoint> points) const
{
  for (const auto& dp : points)
    if (dp.name.empty())
      throw Error(Errc::invalid_geometry, "data point without a name");
  GeoPatch p = *this;
  p.vector_.points = std::move(points);
  return p;
}

GeoPatch make_point_patch(const LatLon& position, const std::string& name)
{
  if (name.empty())
    throw Error(Errc::precondition, "point patch needs a name");
  VectorLayer v{position, BBox::around(position), {}, {DataPoint{position, name, std::nullopt, ""}}};
  return {name, std::move(v)};
}

GeoPatch make_region_patch(const std::string& name, std::vector<Ring> boundary,
                           std::optional<LatLon> location)
{
  const BBox hull = bbox_of_rings(boundary);
  LatLon loc = location ? *location : geometry::centroid(boundary);
  if (!hull.contains(loc))
    loc = hull.center();
  VectorLayer v{loc, hull, std::move(boundary), {}};
  return {name, std::move(v)};
}

BBox bbox_of_rings(const std::vector<Ring>& boundary)
{
  double min_lat = 90.0, max_lat = -90.0, min_lon = 360.0, max_lon = -360.0;
  bool any = false;
  for (const auto& ring : boundary) {
    for (const auto& p : ring) {
      any = true;
      min_lat = std::min(min_lat, p.lat());
      max_lat = std::max(max_lat, p.lat());
      min_lon = std::min(min_lon, p.lon());
      max_lon = std::max(max_lon, p.lon());
    }
  }
  if (!any)
    throw Error(Errc::empty_geometry, "boundary has no vertices");
  return {min_lat, max_lat, min_lon, max_lon};
}

double bbox_area(const BBox& b)
{
  constexpr double deg = std::numbers::pi / 180.0;
  const double band = std::sin(b.max_lat() * deg) - std::sin(b.min_lat() * deg);
  return kEarthRadiusKm * kEarthRadiusKm * b.lon_span() * deg * band / 1e6;
}

double patch_area(const GeoPatch& patch)
{
  const auto& v = patch.vector();
  if (!v.boundary.empty())
    return geometry::boundary_area_km2(v.boundary) / 1e6;
  if (patch.bbox().degenerate())
    return 0.0;
  return bbox_area(patch.bbox());
}

const std::vector<DataPoint>& get_data_points(const GeoPatch& patch)
{
  return patch.vector().points;
}

GeoPatch set_raster_from_points(const GeoPatch& patch, const std::vector<PointSample>& samples,
                                const std::string& name, RasterType rtype,
                                const std::string& colormap, const std::string& unit,
                                std::size_t grid_size)
{
  if (samples.empty())
    throw Error(Errc::empty_input, "no samples to build a raster from");
  if (patch.bbox().degenerate())
    throw Error(Errc::precondition, "raster needs a non-degenerate bbox");

  std::vector<analytics::Sample> fit;
  fit.reserve(samples.size());
  for (const auto& s : samples) {
    LatLon p(s.lat, s.lon);
    if (!patch.bbox().contains(p))
      throw Error(Errc::out_of_bounds, "sample " + fmt_coord(s.lat, s.lon) + " outside patch bbox");
    fit.push_back({p, s.value});
  }
  const GridSpec spec{grid_size, grid_size, patch.bbox()};
  Grid grid = analytics::rbf_fit_predict(fit, spec);
  std::optional<std::string> cmap;
  if (!colormap.empty())
    cmap = colormap;
  return patch.with_raster(RasterLayer(name, rtype, cmap, std::move(grid), patch.bbox(), unit));
}

} // namespace geode
