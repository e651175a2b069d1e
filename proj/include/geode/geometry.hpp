#pragma once

#include <vector>

#include "geode/geopatch.hpp"

namespace geode::geometry {

/// Signed spherical area of a ring in km^2, positive for counter-clockwise
/// rings (lon as x, lat as y). Edges are straight in lat/lon.
double ring_area_signed_km2(const Ring& ring);

/// Planar shoelace area in square degrees (lon as x, lat as y).
double ring_planar_area(const Ring& ring);

/// Per ring: true when the ring lies inside an odd number of other rings.
std::vector<bool> hole_flags(const std::vector<Ring>& rings);

/// Boundary area in km^2 with holes subtracted.
double boundary_area_km2(const std::vector<Ring>& rings);

/// Ray-casting test; boundary points count as inside.
bool point_in_ring(const Ring& ring, const LatLon& p);

/// Even-odd containment over all rings.
bool point_in_boundary(const std::vector<Ring>& rings, const LatLon& p);

bool ring_is_simple(const Ring& ring);
bool ring_is_convex(const Ring& ring);

/// Counter-clockwise copy of `ring`.
Ring counter_clockwise(const Ring& ring);

/// Area-weighted planar centroid over all rings (holes subtract).
LatLon centroid(const std::vector<Ring>& rings);

/// Clips `subject` against the convex ring `clip` (Sutherland-Hodgman).
/// Returns an empty ring when the intersection is empty or degenerate.
Ring clip_to_convex(const Ring& subject, const Ring& clip);

/// Intersection of two boundaries. Convex pairs take the exact clipping
/// path; anything else is rasterized at `resolution` x `resolution` over the
/// overlap of the two hulls and traced back into rings.
std::vector<Ring> intersect_boundaries(const std::vector<Ring>& a, const std::vector<Ring>& b,
                                       int resolution = 256);

/// Traces a cell mask into simple rectilinear rings. `mask` is row-major with
/// row 0 at the north edge of `extent`.
std::vector<Ring> trace_mask(const std::vector<unsigned char>& mask, int rows, int cols,
                             const BBox& extent);

} // namespace geode::geometry
