#pragma once

#include <string>

#include "geode/geopatch.hpp"

namespace geode::analytics {

/// Fills each missing cell with the nearest present cell (Euclidean distance
/// in index space, ties to the smallest row then column).
Grid impute_nearest(const Grid& grid);
RasterLayer impute_nearest(const RasterLayer& layer);

/// Nearest-neighbour lookup of `src` (registered to `src_bbox`) at every
/// cell center of `target`; centers outside `src_bbox` come out missing.
Grid resample_nearest(const Grid& src, const BBox& src_bbox, const GridSpec& target);

/// Lag-zero Pearson coefficient over jointly present cells.
double pearson_correlation(const Grid& a, const Grid& b);
/// Resamples the coarser layer onto the finer grid first when shapes differ.
double pearson_correlation(const RasterLayer& a, const RasterLayer& b);

enum class ThresholdMode { greater, less };
ThresholdMode threshold_mode_from_string(const std::string& s);

/// Inclusive comparison against c = t (absolute) or min + t (max - min)
/// (relative). Output is binary; missing stays missing.
RasterLayer threshold(const RasterLayer& layer, double t, ThresholdMode mode, bool relative);

/// Cellwise AND of two binary layers on identical grids.
RasterLayer raster_intersection(const RasterLayer& a, const RasterLayer& b);

/// Geometric intersection of the boundaries (bbox rectangle stands in for a
/// missing boundary) with both patches' data points filtered to the result.
GeoPatch vector_intersection(const GeoPatch& a, const GeoPatch& b);

enum class Stat { min, max, mean, std };
Stat stat_from_string(const std::string& s);

/// Statistic over present cells; `std` is the population deviation.
double raster_stats(const RasterLayer& layer, Stat stat);

/// Point patch at the center of the maximum cell (row-major tie-break).
GeoPatch raster_argmax(const GeoPatch& patch);

/// Marks raster cells whose centers fall outside `region`'s boundary as missing.
GeoPatch mask_to_region(const GeoPatch& field, const GeoPatch& region);

} // namespace geode::analytics
