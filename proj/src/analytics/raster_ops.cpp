#include "geode/raster_ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <tuple>

#include "geode/geometry.hpp"

namespace geode::analytics {

namespace {

std::string short_number(double v)
{
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

std::vector<Ring> boundary_or_bbox(const GeoPatch& p)
{
  if (!p.vector().boundary.empty())
    return p.vector().boundary;
  if (p.bbox().degenerate())
    throw Error(Errc::precondition,
                "patch '" + p.name() + "' has neither a boundary nor an areal bbox");
  return {bbox_ring(p.bbox())};
}

} // namespace

Grid impute_nearest(const Grid& grid)
{
  if (grid.present_count() == 0)
    throw Error(Errc::empty_input, "cannot impute a raster with no present cells");
  const long rows = static_cast<long>(grid.rows());
  const long cols = static_cast<long>(grid.cols());
  Grid out = grid;
  const long max_ring = std::max(rows, cols);

  for (long r = 0; r < rows; ++r) {
    for (long c = 0; c < cols; ++c) {
      if (!is_missing(grid.at(r, c)))
        continue;
      std::tuple<long, long, long> best{std::numeric_limits<long>::max(), 0, 0};
      bool found = false;
      for (long ring = 1; ring <= max_ring; ++ring) {
        // Cells at Chebyshev distance `ring` from (r, c).
        for (long rr = r - ring; rr <= r + ring; ++rr) {
          if (rr < 0 || rr >= rows)
            continue;
          const bool edge_row = rr == r - ring || rr == r + ring;
          const long step = edge_row ? 1 : 2 * ring;
          for (long cc = c - ring; cc <= c + ring; cc += step) {
            if (cc < 0 || cc >= cols || is_missing(grid.at(rr, cc)))
              continue;
            const long d2 = (rr - r) * (rr - r) + (cc - c) * (cc - c);
            const std::tuple<long, long, long> cand{d2, rr, cc};
            if (cand < best) {
              best = cand;
              found = true;
            }
          }
        }
        // Every cell beyond this ring is at least (ring + 1)^2 away.
        if (found && std::get<0>(best) < (ring + 1) * (ring + 1))
          break;
      }
      out.at(r, c) = grid.at(std::get<1>(best), std::get<2>(best));
    }
  }
  return out;
}

RasterLayer impute_nearest(const RasterLayer& layer)
{
  return layer.with_grid(impute_nearest(layer.grid()));
}

Grid resample_nearest(const Grid& src, const BBox& src_bbox, const GridSpec& target)
{
  const GridSpec src_spec{src.rows(), src.cols(), src_bbox};
  Grid out(target.rows, target.cols, kMissing);
  for (std::size_t r = 0; r < target.rows; ++r) {
    for (std::size_t c = 0; c < target.cols; ++c) {
      const LatLon p = cell_to_latlon(target, r, c);
      if (!src_bbox.contains(p))
        continue;
      const CellIndex idx = latlon_to_cell(src_spec, p);
      out.at(r, c) = src.at(idx.row, idx.col);
    }
  }
  return out;
}

double pearson_correlation(const Grid& a, const Grid& b)
{
  if (!a.same_shape(b))
    throw Error(Errc::shape_mismatch, "correlation needs equal grid shapes");
  std::vector<std::pair<double, double>> joint;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double x = a.cells()[i];
    const double y = b.cells()[i];
    if (!is_missing(x) && !is_missing(y))
      joint.emplace_back(x, y);
  }
  if (joint.size() < 2)
    throw Error(Errc::undefined_correlation, "fewer than 2 jointly present cells");
  const double n = static_cast<double>(joint.size());
  double mx = 0.0, my = 0.0;
  for (const auto& [x, y] : joint) {
    mx += x;
    my += y;
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (const auto& [x, y] : joint) {
    const double dx = x - mx;
    const double dy = y - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0)
    throw Error(Errc::undefined_correlation, "correlation of a constant layer is undefined");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double pearson_correlation(const RasterLayer& a, const RasterLayer& b)
{
  if (a.grid().same_shape(b.grid()))
    return pearson_correlation(a.grid(), b.grid());
  const bool a_finer = a.grid().size() >= b.grid().size();
  const RasterLayer& fine = a_finer ? a : b;
  const RasterLayer& coarse = a_finer ? b : a;
  const Grid resampled = resample_nearest(coarse.grid(), coarse.bbox(), fine.spec());
  if (resampled.present_count() == 0)
    throw Error(Errc::shape_mismatch, "layers do not overlap after resampling");
  return a_finer ? pearson_correlation(fine.grid(), resampled)
                 : pearson_correlation(resampled, fine.grid());
}

ThresholdMode threshold_mode_from_string(const std::string& s)
{
  if (s == "greater")
    return ThresholdMode::greater;
  if (s == "less")
    return ThresholdMode::less;
  throw Error(Errc::precondition, "threshold mode must be 'greater' or 'less', got '" + s + "'");
}

RasterLayer threshold(const RasterLayer& layer, double t, ThresholdMode mode, bool relative)
{
  if (relative && !(t >= 0.0 && t <= 1.0))
    throw Error(Errc::range_error, "relative threshold must lie in [0, 1], got " + short_number(t));
  if (!std::isfinite(t))
    throw Error(Errc::range_error, "threshold is not finite");
  const Grid& g = layer.grid();
  if (g.present_count() == 0)
    throw Error(Errc::empty_input, "cannot threshold a raster with no present cells");

  double cutoff = t;
  if (relative) {
    const double lo = raster_stats(layer, Stat::min);
    const double hi = raster_stats(layer, Stat::max);
    cutoff = lo + t * (hi - lo);
  }
  Grid out(g.rows(), g.cols(), kMissing);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double v = g.cells()[i];
    if (is_missing(v))
      continue;
    const bool hit = mode == ThresholdMode::greater ? v >= cutoff : v <= cutoff;
    out.cells()[i] = hit ? 1.0 : 0.0;
  }
  const std::string label =
      layer.name() + (mode == ThresholdMode::greater ? " >= " : " <= ") + short_number(cutoff);
  return RasterLayer(label, RasterType::binary, layer.colormap(), std::move(out), layer.bbox(),
                     layer.unit());
}

RasterLayer raster_intersection(const RasterLayer& a, const RasterLayer& b)
{
  if (a.rtype() != RasterType::binary || b.rtype() != RasterType::binary)
    throw Error(Errc::raster_type, "raster intersection needs two binary rasters");
  if (!a.grid().same_shape(b.grid()) || !(a.bbox() == b.bbox()))
    throw Error(Errc::shape_mismatch, "raster intersection needs identical grids and extents");
  Grid out(a.grid().rows(), a.grid().cols(), kMissing);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double x = a.grid().cells()[i];
    const double y = b.grid().cells()[i];
    if (is_missing(x) || is_missing(y))
      continue;
    out.cells()[i] = (x == 1.0 && y == 1.0) ? 1.0 : 0.0;
  }
  const std::string name = a.name() == b.name() ? a.name() : a.name() + " & " + b.name();
  return RasterLayer(name, RasterType::binary, a.colormap(), std::move(out), a.bbox());
}

GeoPatch vector_intersection(const GeoPatch& a, const GeoPatch& b)
{
  const auto ra = boundary_or_bbox(a);
  const auto rb = boundary_or_bbox(b);
  const std::string name = a.name() + " & " + b.name();
  std::vector<Ring> rings = geometry::intersect_boundaries(ra, rb);

  if (rings.empty()) {
    const LatLon mid(0.5 * (a.location().lat() + b.location().lat()),
                     0.5 * (a.location().lon() + b.location().lon()));
    VectorLayer v{mid, BBox::around(mid), {}, {}};
    return {name + " (empty intersection)", std::move(v)};
  }

  GeoPatch out = make_region_patch(name, rings);
  std::vector<DataPoint> points;
  for (const auto* src : {&a, &b})
    for (const auto& dp : src->vector().points)
      if (geometry::point_in_boundary(rings, dp.position))
        points.push_back(dp);
  return out.with_points(std::move(points));
}

Stat stat_from_string(const std::string& s)
{
  if (s == "min")
    return Stat::min;
  if (s == "max")
    return Stat::max;
  if (s == "mean")
    return Stat::mean;
  if (s == "std")
    return Stat::std;
  throw Error(Errc::precondition, "unknown statistic '" + s + "'");
}

double raster_stats(const RasterLayer& layer, Stat stat)
{
  std::vector<double> v;
  for (double x : layer.grid().cells())
    if (!is_missing(x))
      v.push_back(x);
  if (v.empty())
    throw Error(Errc::empty_input, "raster has no present cells");
  switch (stat) {
  case Stat::min: return *std::min_element(v.begin(), v.end());
  case Stat::max: return *std::max_element(v.begin(), v.end());
  case Stat::mean:
  case Stat::std: {
    double sum = 0.0;
    for (double x : v)
      sum += x;
    const double mean = sum / static_cast<double>(v.size());
    if (stat == Stat::mean)
      return mean;
    if (v.size() < 2)
      throw Error(Errc::empty_input, "standard deviation needs at least 2 present cells");
    double ss = 0.0;
    for (double x : v)
      ss += (x - mean) * (x - mean);
    return std::sqrt(ss / static_cast<double>(v.size()));
  }
  }
  return 0.0;
}

GeoPatch raster_argmax(const GeoPatch& patch)
{
  if (!patch.raster())
    throw Error(Errc::missing_raster, "patch '" + patch.name() + "' has no raster data");
  const RasterLayer& layer = *patch.raster();
  const Grid& g = layer.grid();
  bool found = false;
  std::size_t best_r = 0, best_c = 0;
  double best = 0.0;
  for (std::size_t r = 0; r < g.rows(); ++r) {
    for (std::size_t c = 0; c < g.cols(); ++c) {
      const double v = g.at(r, c);
      if (is_missing(v))
        continue;
      if (!found || v > best) {
        best = v;
        best_r = r;
        best_c = c;
        found = true;
      }
    }
  }
  if (!found)
    throw Error(Errc::empty_input, "raster has no present cells");
  const LatLon pos = cell_to_latlon(layer.spec(), best_r, best_c);
  const std::string name = "max of " + layer.name();
  GeoPatch out = make_point_patch(pos, name);
  return out.with_points({DataPoint{pos, name, best, layer.unit()}});
}

GeoPatch mask_to_region(const GeoPatch& field, const GeoPatch& region)
{
  if (!field.raster())
    throw Error(Errc::missing_raster, "patch '" + field.name() + "' has no raster data");
  const auto rings = boundary_or_bbox(region);
  const RasterLayer& layer = *field.raster();
  Grid g = layer.grid();
  const GridSpec spec = layer.spec();
  for (std::size_t r = 0; r < g.rows(); ++r)
    for (std::size_t c = 0; c < g.cols(); ++c)
      if (!geometry::point_in_boundary(rings, cell_to_latlon(spec, r, c)))
        g.at(r, c) = kMissing;
  return field.with_raster(layer.with_grid(std::move(g)));
}

} // namespace geode::analytics
