#include "geode/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <optional>
#include <utility>

namespace geode::geometry {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;
constexpr double kDegenerateArea = 1e-12;

struct Vec {
  double x; // lon
  double y; // lat
};

Vec vec(const LatLon& p) { return {p.lon(), p.lat()}; }

double cross(const Vec& o, const Vec& a, const Vec& b)
{
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

int sign(double v, double eps = 0.0)
{
  if (v > eps)
    return 1;
  if (v < -eps)
    return -1;
  return 0;
}

bool on_segment(const Vec& a, const Vec& b, const Vec& p)
{
  return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= p.y &&
         p.y <= std::max(a.y, b.y);
}

bool segments_touch(const Vec& a, const Vec& b, const Vec& c, const Vec& d)
{
  const int d1 = sign(cross(c, d, a));
  const int d2 = sign(cross(c, d, b));
  const int d3 = sign(cross(a, b, c));
  const int d4 = sign(cross(a, b, d));
  if (d1 * d2 < 0 && d3 * d4 < 0)
    return true;
  if (d1 == 0 && on_segment(c, d, a))
    return true;
  if (d2 == 0 && on_segment(c, d, b))
    return true;
  if (d3 == 0 && on_segment(a, b, c))
    return true;
  if (d4 == 0 && on_segment(a, b, d))
    return true;
  return false;
}

// Integral of -sin(lat) dlon along a straight lat/lon edge, radians.
double edge_band(const LatLon& a, const LatLon& b)
{
  const double dlon = (b.lon() - a.lon()) * kDeg;
  const double phi1 = a.lat() * kDeg;
  const double phi2 = b.lat() * kDeg;
  const double half = 0.5 * (phi2 - phi1);
  const double sinc = std::abs(half) < 1e-12 ? 1.0 : std::sin(half) / half;
  return -dlon * std::sin(0.5 * (phi1 + phi2)) * sinc;
}

BBox ring_hull(const Ring& r) { return bbox_of_rings({r}); }

bool hulls_overlap(const BBox& a, const BBox& b)
{
  return a.min_lat() <= b.max_lat() && b.min_lat() <= a.max_lat() && a.min_lon() <= b.max_lon() &&
         b.min_lon() <= a.max_lon();
}

std::optional<BBox> hull_overlap(const BBox& a, const BBox& b)
{
  const double min_lat = std::max(a.min_lat(), b.min_lat());
  const double max_lat = std::min(a.max_lat(), b.max_lat());
  const double min_lon = std::max(a.min_lon(), b.min_lon());
  const double max_lon = std::min(a.max_lon(), b.max_lon());
  if (min_lat >= max_lat || min_lon >= max_lon)
    return std::nullopt;
  return BBox(min_lat, max_lat, min_lon, max_lon);
}

std::vector<Ring> rasterized_intersection(const std::vector<Ring>& a, const std::vector<Ring>& b,
                                          int resolution)
{
  const auto extent = hull_overlap(bbox_of_rings(a), bbox_of_rings(b));
  if (!extent)
    return {};
  const GridSpec spec{static_cast<std::size_t>(resolution), static_cast<std::size_t>(resolution),
                      *extent};
  std::vector<unsigned char> mask(static_cast<std::size_t>(resolution) * resolution, 0);
  for (int r = 0; r < resolution; ++r) {
    for (int c = 0; c < resolution; ++c) {
      const LatLon p = cell_to_latlon(spec, r, c);
      mask[static_cast<std::size_t>(r) * resolution + c] =
          point_in_boundary(a, p) && point_in_boundary(b, p) ? 1 : 0;
    }
  }
  return trace_mask(mask, resolution, resolution, *extent);
}

// Splits a closed vertex loop at repeated vertices into simple loops.
void split_loops(std::vector<std::pair<int, int>> loop, std::vector<std::vector<std::pair<int, int>>>& out)
{
  // loop is open here (no closing duplicate)
  std::map<std::pair<int, int>, std::size_t> seen;
  std::vector<std::pair<int, int>> stack;
  for (const auto& v : loop) {
    auto it = seen.find(v);
    if (it != seen.end()) {
      std::vector<std::pair<int, int>> piece(stack.begin() + static_cast<long>(it->second),
                                             stack.end());
      for (std::size_t k = it->second + 1; k < stack.size(); ++k)
        seen.erase(stack[k]);
      stack.resize(it->second + 1);
      if (piece.size() >= 3)
        out.push_back(std::move(piece));
    } else {
      seen.emplace(v, stack.size());
      stack.push_back(v);
    }
  }
  if (stack.size() >= 3)
    out.push_back(std::move(stack));
}

std::vector<std::pair<int, int>> drop_collinear(const std::vector<std::pair<int, int>>& loop)
{
  const std::size_t n = loop.size();
  std::vector<std::pair<int, int>> out;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& prev = loop[(i + n - 1) % n];
    const auto& cur = loop[i];
    const auto& next = loop[(i + 1) % n];
    const long cx = static_cast<long>(cur.second - prev.second) * (next.first - cur.first) -
                    static_cast<long>(cur.first - prev.first) * (next.second - cur.second);
    if (cx != 0)
      out.push_back(cur);
  }
  return out;
}

} // namespace

double ring_area_signed_km2(const Ring& ring)
{
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < ring.size(); ++i)
    sum += edge_band(ring[i], ring[i + 1]);
  return kEarthRadiusKm * kEarthRadiusKm * sum;
}

double ring_planar_area(const Ring& ring)
{
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < ring.size(); ++i)
    sum += ring[i].lon() * ring[i + 1].lat() - ring[i + 1].lon() * ring[i].lat();
  return 0.5 * sum;
}

std::vector<bool> hole_flags(const std::vector<Ring>& rings)
{
  std::vector<bool> flags(rings.size(), false);
  for (std::size_t i = 0; i < rings.size(); ++i) {
    if (rings[i].empty())
      continue;
    int depth = 0;
    for (std::size_t j = 0; j < rings.size(); ++j)
      if (j != i && point_in_ring(rings[j], rings[i].front()))
        ++depth;
    flags[i] = depth % 2 == 1;
  }
  return flags;
}

double boundary_area_km2(const std::vector<Ring>& rings)
{
  const auto holes = hole_flags(rings);
  double total = 0.0;
  for (std::size_t i = 0; i < rings.size(); ++i) {
    const double a = std::abs(ring_area_signed_km2(rings[i]));
    total += holes[i] ? -a : a;
  }
  return std::max(total, 0.0);
}

bool point_in_ring(const Ring& ring, const LatLon& p)
{
  const Vec q = vec(p);
  bool inside = false;
  for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
    const Vec a = vec(ring[i]);
    const Vec b = vec(ring[i + 1]);
    if (sign(cross(a, b, q), 1e-15) == 0 && on_segment(a, b, q))
      return true;
    if ((a.y > q.y) != (b.y > q.y)) {
      const double x = a.x + (q.y - a.y) * (b.x - a.x) / (b.y - a.y);
      if (q.x < x)
        inside = !inside;
    }
  }
  return inside;
}

bool point_in_boundary(const std::vector<Ring>& rings, const LatLon& p)
{
  bool inside = false;
  for (const auto& r : rings)
    if (point_in_ring(r, p))
      inside = !inside;
  return inside;
}

bool ring_is_simple(const Ring& ring)
{
  const std::size_t n = ring.size() < 2 ? 0 : ring.size() - 1; // edge count
  if (n < 3)
    return false;
  std::vector<Vec> v(ring.size());
  std::transform(ring.begin(), ring.end(), v.begin(), vec);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec& a = v[i];
    const Vec& b = v[i + 1];
    const double ax0 = std::min(a.x, b.x), ax1 = std::max(a.x, b.x);
    const double ay0 = std::min(a.y, b.y), ay1 = std::max(a.y, b.y);
    // Adjacent edge doubling back onto this one.
    const Vec& c = v[i + 2 <= n ? i + 2 : 1];
    if (sign(cross(a, b, c)) == 0 && ((c.x - b.x) * (a.x - b.x) + (c.y - b.y) * (a.y - b.y)) > 0)
      return false;
    for (std::size_t j = i + 2; j < n; ++j) {
      if (i == 0 && j == n - 1)
        continue;
      const Vec& cj = v[j];
      const Vec& dj = v[j + 1];
      if (std::max(cj.x, dj.x) < ax0 || std::min(cj.x, dj.x) > ax1 || std::max(cj.y, dj.y) < ay0 ||
          std::min(cj.y, dj.y) > ay1)
        continue;
      if (segments_touch(a, b, cj, dj))
        return false;
    }
  }
  return true;
}

bool ring_is_convex(const Ring& ring)
{
  const std::size_t n = ring.size() < 2 ? 0 : ring.size() - 1;
  if (n < 3)
    return false;
  int dir = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec a = vec(ring[i]);
    const Vec b = vec(ring[(i + 1) % n]);
    const Vec c = vec(ring[(i + 2) % n]);
    const int s = sign(cross(a, b, c), 1e-15);
    if (s == 0)
      continue;
    if (dir == 0)
      dir = s;
    else if (s != dir)
      return false;
  }
  return dir != 0;
}

Ring counter_clockwise(const Ring& ring)
{
  if (ring_planar_area(ring) >= 0.0)
    return ring;
  return Ring(ring.rbegin(), ring.rend());
}

LatLon centroid(const std::vector<Ring>& rings)
{
  const auto holes = hole_flags(rings);
  double area = 0.0, cx = 0.0, cy = 0.0;
  double sx = 0.0, sy = 0.0;
  std::size_t count = 0;
  for (std::size_t k = 0; k < rings.size(); ++k) {
    const Ring r = counter_clockwise(rings[k]);
    const double w = holes[k] ? -1.0 : 1.0;
    for (std::size_t i = 0; i + 1 < r.size(); ++i) {
      const Vec a = vec(r[i]);
      const Vec b = vec(r[i + 1]);
      const double f = a.x * b.y - b.x * a.y;
      area += w * f;
      cx += w * (a.x + b.x) * f;
      cy += w * (a.y + b.y) * f;
      sx += a.x;
      sy += a.y;
      ++count;
    }
  }
  if (count == 0)
    throw Error(Errc::empty_geometry, "centroid of empty boundary");
  if (std::abs(area) < kDegenerateArea)
    return {sy / static_cast<double>(count), sx / static_cast<double>(count)};
  return {cy / (3.0 * area), cx / (3.0 * area)};
}

Ring clip_to_convex(const Ring& subject, const Ring& clip)
{
  const Ring c = counter_clockwise(clip);
  std::vector<Vec> poly;
  for (std::size_t i = 0; i + 1 < subject.size(); ++i)
    poly.push_back(vec(subject[i]));

  for (std::size_t e = 0; e + 1 < c.size() && !poly.empty(); ++e) {
    const Vec a = vec(c[e]);
    const Vec b = vec(c[e + 1]);
    auto inside = [&](const Vec& p) { return cross(a, b, p) >= 0.0; };
    auto intersect = [&](const Vec& p, const Vec& q) {
      const double cp = cross(a, b, p);
      const double cq = cross(a, b, q);
      const double t = cp / (cp - cq);
      return Vec{p.x + t * (q.x - p.x), p.y + t * (q.y - p.y)};
    };
    std::vector<Vec> out;
    for (std::size_t i = 0; i < poly.size(); ++i) {
      const Vec& cur = poly[i];
      const Vec& prev = poly[(i + poly.size() - 1) % poly.size()];
      const bool in_cur = inside(cur);
      const bool in_prev = inside(prev);
      if (in_cur) {
        if (!in_prev)
          out.push_back(intersect(prev, cur));
        out.push_back(cur);
      } else if (in_prev) {
        out.push_back(intersect(prev, cur));
      }
    }
    poly = std::move(out);
  }
  if (poly.size() < 3)
    return {};
  Ring r;
  for (const auto& p : poly)
    if (r.empty() || r.back().lat() != p.y || r.back().lon() != p.x)
      r.emplace_back(std::clamp(p.y, -90.0, 90.0), p.x);
  if (r.size() > 1 && r.front() == r.back())
    r.pop_back();
  if (r.size() < 3)
    return {};
  r.push_back(r.front());
  if (std::abs(ring_planar_area(r)) < kDegenerateArea)
    return {};
  return r;
}

std::vector<Ring> intersect_boundaries(const std::vector<Ring>& a, const std::vector<Ring>& b,
                                       int resolution)
{
  if (a.empty() || b.empty())
    return {};
  const auto ha = hole_flags(a);
  const auto hb = hole_flags(b);
  const bool any_holes = std::find(ha.begin(), ha.end(), true) != ha.end() ||
                         std::find(hb.begin(), hb.end(), true) != hb.end();
  if (any_holes)
    return rasterized_intersection(a, b, resolution);

  std::vector<Ring> out;
  for (const auto& ra : a) {
    for (const auto& rb : b) {
      if (!hulls_overlap(ring_hull(ra), ring_hull(rb)))
        continue;
      std::vector<Ring> pieces;
      bool exact = false;
      if (ring_is_convex(rb) || ring_is_convex(ra)) {
        const Ring clipped = ring_is_convex(rb) ? clip_to_convex(ra, rb) : clip_to_convex(rb, ra);
        if (clipped.empty()) {
          exact = true;
        } else if (ring_is_simple(clipped)) {
          pieces.push_back(counter_clockwise(clipped));
          exact = true;
        }
      }
      if (!exact)
        pieces = rasterized_intersection({ra}, {rb}, resolution);
      for (auto& p : pieces)
        if (std::abs(ring_planar_area(p)) >= kDegenerateArea)
          out.push_back(std::move(p));
    }
  }
  return out;
}

std::vector<Ring> trace_mask(const std::vector<unsigned char>& mask, int rows, int cols,
                             const BBox& extent)
{
  auto filled = [&](int r, int c) {
    return r >= 0 && c >= 0 && r < rows && c < cols &&
           mask[static_cast<std::size_t>(r) * cols + c] != 0;
  };
  using V = std::pair<int, int>; // (row line, col line)
  std::multimap<V, V> edges;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      if (!filled(r, c))
        continue;
      if (!filled(r + 1, c))
        edges.emplace(V{r + 1, c}, V{r + 1, c + 1});
      if (!filled(r, c + 1))
        edges.emplace(V{r + 1, c + 1}, V{r, c + 1});
      if (!filled(r - 1, c))
        edges.emplace(V{r, c + 1}, V{r, c});
      if (!filled(r, c - 1))
        edges.emplace(V{r, c}, V{r + 1, c});
    }
  }

  std::vector<std::vector<V>> loops;
  while (!edges.empty()) {
    auto first = edges.begin();
    const V start = first->first;
    V prev = first->first;
    V cur = first->second;
    edges.erase(first);
    std::vector<V> loop{start};
    while (!(cur == start)) {
      loop.push_back(cur);
      auto [lo, hi] = edges.equal_range(cur);
      if (lo == hi)
        break;
      auto pick = lo;
      if (std::next(lo) != hi) {
        // Pinch vertex: prefer the left turn so diagonal cells separate.
        const int dr = cur.first - prev.first;
        const int dc = cur.second - prev.second;
        for (auto it = lo; it != hi; ++it) {
          const int nr = it->second.first - cur.first;
          const int nc = it->second.second - cur.second;
          // Geographic frame: x = col, y = -row. Left turn has positive cross.
          const long cx = static_cast<long>(dc) * (-nr) - static_cast<long>(-dr) * nc;
          if (cx > 0) {
            pick = it;
            break;
          }
        }
      }
      prev = cur;
      cur = pick->second;
      edges.erase(pick);
    }
    std::vector<std::vector<V>> simple;
    split_loops(std::move(loop), simple);
    for (auto& s : simple) {
      auto reduced = drop_collinear(s);
      if (reduced.size() >= 3)
        loops.push_back(std::move(reduced));
    }
  }

  const double dlat = extent.lat_span() / rows;
  const double dlon = extent.lon_span() / cols;
  std::vector<Ring> rings;
  for (const auto& loop : loops) {
    Ring r;
    for (const auto& [i, j] : loop)
      r.emplace_back(extent.max_lat() - i * dlat, extent.min_lon() + j * dlon);
    r.push_back(r.front());
    if (std::abs(ring_planar_area(r)) >= kDegenerateArea)
      rings.push_back(std::move(r));
  }
  return rings;
}

} // namespace geode::geometry
