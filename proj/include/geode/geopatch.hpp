#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "geode/error.hpp"

namespace geode {

/// Mean Earth radius used for all area computations, km.
inline constexpr double kEarthRadiusKm = 6371.0;

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();
inline bool is_missing(double v) noexcept { return std::isnan(v); }

/// Geographic position. Latitude outside [-90, 90] is rejected; longitude is
/// wrapped into [-180, 180].
class LatLon {
public:
  LatLon() = default;
  LatLon(double lat, double lon);

  double lat() const noexcept { return lat_; }
  double lon() const noexcept { return lon_; }

  friend bool operator==(const LatLon&, const LatLon&) = default;

private:
  double lat_ = 0.0;
  double lon_ = 0.0;
};

double wrap_longitude(double lon);

/// Axis-aligned extent, serialized as [min_lat, max_lat, min_lon, max_lon].
/// Longitudes may run past 180 (up to a 360 degree span) so that bands
/// crossing the antimeridian or covering the globe stay representable.
class BBox {
public:
  BBox() = default;
  BBox(double min_lat, double max_lat, double min_lon, double max_lon);

  static BBox around(const LatLon& p) { return {p.lat(), p.lat(), p.lon(), p.lon()}; }

  double min_lat() const noexcept { return min_lat_; }
  double max_lat() const noexcept { return max_lat_; }
  double min_lon() const noexcept { return min_lon_; }
  double max_lon() const noexcept { return max_lon_; }
  double lat_span() const noexcept { return max_lat_ - min_lat_; }
  double lon_span() const noexcept { return max_lon_ - min_lon_; }

  bool degenerate() const noexcept { return lat_span() <= 0.0 || lon_span() <= 0.0; }
  bool contains(const LatLon& p, double eps = 1e-9) const noexcept;
  LatLon center() const;

  friend bool operator==(const BBox&, const BBox&) = default;

private:
  double min_lat_ = 0.0;
  double max_lat_ = 0.0;
  double min_lon_ = 0.0;
  double max_lon_ = 0.0;
};

enum class RasterType { color = 0, non_color = 1, binary = 2 };

const char* to_string(RasterType t) noexcept;
RasterType raster_type_from_string(const std::string& s);

/// Row-major 2-D grid. Row 0 is the northernmost row, column 0 the
/// westernmost. Missing cells hold NaN.
class Grid {
public:
  Grid() = default;
  Grid(std::size_t rows, std::size_t cols, double fill = 0.0);
  Grid(std::size_t rows, std::size_t cols, std::vector<double> cells);
  static Grid from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return cells_.size(); }

  double at(std::size_t r, std::size_t c) const { return cells_[r * cols_ + c]; }
  double& at(std::size_t r, std::size_t c) { return cells_[r * cols_ + c]; }
  const std::vector<double>& cells() const noexcept { return cells_; }
  std::vector<double>& cells() noexcept { return cells_; }

  std::size_t present_count() const noexcept;
  bool same_shape(const Grid& o) const noexcept { return rows_ == o.rows_ && cols_ == o.cols_; }

  /// Bitwise comparison that treats NaN == NaN.
  friend bool operator==(const Grid& a, const Grid& b) noexcept;

private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> cells_;
};

struct GridSpec {
  std::size_t rows = 64;
  std::size_t cols = 64;
  BBox bbox;

  double cell_lat() const noexcept { return bbox.lat_span() / static_cast<double>(rows); }
  double cell_lon() const noexcept { return bbox.lon_span() / static_cast<double>(cols); }
};

inline constexpr std::size_t kDefaultGridSize = 64;

struct CellIndex {
  std::size_t row = 0;
  std::size_t col = 0;
  friend bool operator==(const CellIndex&, const CellIndex&) = default;
};

/// Cell-center coordinates; throws index_out_of_range.
LatLon cell_to_latlon(const GridSpec& spec, std::size_t row, std::size_t col);
/// Cell containing `p`; points on the south/east edge belong to the last
/// row/column. Throws out_of_bounds when `p` lies outside the bbox.
CellIndex latlon_to_cell(const GridSpec& spec, const LatLon& p);

class RasterLayer {
public:
  RasterLayer(std::string name, RasterType rtype, std::optional<std::string> colormap, Grid grid,
              BBox bbox, std::string unit = {});

  const std::string& name() const noexcept { return name_; }
  RasterType rtype() const noexcept { return rtype_; }
  const std::optional<std::string>& colormap() const noexcept { return colormap_; }
  const Grid& grid() const noexcept { return grid_; }
  const BBox& bbox() const noexcept { return bbox_; }
  /// Unit label for legends; empty for dimensionless layers.
  const std::string& unit() const noexcept { return unit_; }
  GridSpec spec() const { return {grid_.rows(), grid_.cols(), bbox_}; }

  RasterLayer with_grid(Grid grid) const;
  RasterLayer with_grid(Grid grid, RasterType rtype) const;
  RasterLayer with_name(std::string name) const;

private:
  std::string name_;
  RasterType rtype_;
  std::optional<std::string> colormap_;
  Grid grid_;
  BBox bbox_;
  std::string unit_;
};

struct DataPoint {
  LatLon position;
  std::string name;
  std::optional<double> value;
  std::string unit;
};

/// Closed ring: first vertex equals last vertex.
using Ring = std::vector<LatLon>;

/// Closes `vertices` if needed and checks for >= 3 distinct vertices and no
/// self-intersection. Throws invalid_geometry.
Ring make_ring(std::vector<LatLon> vertices);
Ring bbox_ring(const BBox& b);

struct VectorLayer {
  LatLon location;
  BBox bbox;
  std::vector<Ring> boundary;
  std::vector<DataPoint> points;

  /// Throws invalid_geometry when an invariant does not hold.
  void validate() const;
};

enum class PatchType { point, region, field };
const char* to_string(PatchType t) noexcept;

/// Immutable geospatial value: mandatory vector layer, optional raster.
class GeoPatch {
public:
  GeoPatch(std::string name, VectorLayer vector, std::optional<RasterLayer> raster = std::nullopt);

  const std::string& name() const noexcept { return name_; }
  const VectorLayer& vector() const noexcept { return vector_; }
  const std::optional<RasterLayer>& raster() const noexcept { return raster_; }
  const LatLon& location() const noexcept { return vector_.location; }
  const BBox& bbox() const noexcept { return vector_.bbox; }
  PatchType ptype() const noexcept;

  GeoPatch with_name(std::string name) const;
  GeoPatch with_raster(RasterLayer raster) const;
  GeoPatch without_raster() const;
  GeoPatch with_points(std::vector<DataPoint> points) const;

private:
  std::string name_;
  VectorLayer vector_;
  std::optional<RasterLayer> raster_;
};

GeoPatch make_point_patch(const LatLon& position, const std::string& name);

/// Region patch whose bbox is the hull of `boundary`.
GeoPatch make_region_patch(const std::string& name, std::vector<Ring> boundary,
                           std::optional<LatLon> location = std::nullopt);

BBox bbox_of_rings(const std::vector<Ring>& boundary);

/// Boundary area in million km^2. Falls back to the bbox rectangle when the
/// boundary is empty; point patches have zero area.
double patch_area(const GeoPatch& patch);
double bbox_area(const BBox& b);

const std::vector<DataPoint>& get_data_points(const GeoPatch& patch);

struct PointSample {
  double lat;
  double lon;
  double value;
};

/// Fits an RBF field to `samples` on the default grid over the patch bbox
/// and attaches it as the patch raster.
GeoPatch set_raster_from_points(const GeoPatch& patch, const std::vector<PointSample>& samples,
                                const std::string& name, RasterType rtype,
                                const std::string& colormap, const std::string& unit = {},
                                std::size_t grid_size = kDefaultGridSize);

} // namespace geode
