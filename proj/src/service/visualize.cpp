#include <png.h>
#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>

#include "geode/colormap.hpp"
#include "geode/service.hpp"

namespace geode::service {

namespace {

Json position(const LatLon& p)
{
  return Json::array({p.lon(), p.lat()});
}

// Exterior rings go out counter-clockwise in lon/lat.
Json ring_coords(const Ring& ring)
{
  double twice_area = 0;
  for (std::size_t i = 0; i + 1 < ring.size(); ++i)
    twice_area += ring[i].lon() * ring[i + 1].lat() - ring[i + 1].lon() * ring[i].lat();
  Json out = Json::array();
  if (twice_area >= 0)
    for (const auto& p : ring)
      out.push_back(position(p));
  else
    for (auto it = ring.rbegin(); it != ring.rend(); ++it)
      out.push_back(position(*it));
  return out;
}

Json feature(Json geometry, Json properties)
{
  Json f = Json::object();
  f["type"] = "Feature";
  f["geometry"] = std::move(geometry);
  f["properties"] = std::move(properties);
  return f;
}

std::string default_colormap(RasterType t)
{
  return t == RasterType::binary ? "gray" : "viridis";
}

} // namespace

int suggested_zoom(const BBox& bbox)
{
  const double span = std::max(bbox.lat_span(), bbox.lon_span());
  if (!(span > 0))
    return 16;
  const int z = static_cast<int>(std::floor(std::log2(360.0 / span)));
  return std::clamp(z, 2, 16);
}

std::vector<std::uint8_t> render_rgba(const RasterLayer& raster, Legend* legend)
{
  const auto& cells = raster.grid().cells();
  double lo = INFINITY, hi = -INFINITY;
  for (double v : cells)
    if (!is_missing(v)) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  const bool any = lo <= hi;
  const std::string cmap_name = raster.colormap().value_or(default_colormap(raster.rtype()));
  if (legend)
    *legend = {raster.name(), raster.unit(), any ? lo : 0.0, any ? hi : 0.0,
               raster.rtype() == RasterType::color ? "" : cmap_name};

  std::vector<std::uint8_t> rgba(cells.size() * 4, 0);
  const ColormapTable* table = raster.rtype() == RasterType::color ? nullptr : &colormap(cmap_name);
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const double v = cells[i];
    if (is_missing(v))
      continue;
    Rgb c;
    if (!table) {
      const auto packed = static_cast<std::uint32_t>(std::clamp(v, 0.0, 16777215.0));
      c = {static_cast<std::uint8_t>(packed >> 16), static_cast<std::uint8_t>(packed >> 8),
           static_cast<std::uint8_t>(packed)};
    } else {
      c = colormap_lookup(*table, hi > lo ? (v - lo) / (hi - lo) : 0.5);
    }
    rgba[i * 4] = c.r;
    rgba[i * 4 + 1] = c.g;
    rgba[i * 4 + 2] = c.b;
    rgba[i * 4 + 3] = 255;
  }
  return rgba;
}

std::vector<std::uint8_t> encode_png(const std::vector<std::uint8_t>& rgba, std::size_t width, std::size_t height)
{
  if (width == 0 || height == 0 || rgba.size() != width * height * 4)
    throw Error(Errc::precondition, "RGBA buffer does not match the image size");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw Error(Errc::internal, "png_create_write_struct failed");
  }
  std::vector<std::uint8_t> out;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(Errc::internal, "PNG encoding failed");
  }
  png_set_write_fn(
      png, &out,
      [](png_structp p, png_bytep data, png_size_t n) {
        auto* buf = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(p));
        buf->insert(buf->end(), data, data + n);
      },
      nullptr);
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8,
               PNG_COLOR_TYPE_RGBA, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (std::size_t r = 0; r < height; ++r)
    png_write_row(png, const_cast<png_bytep>(rgba.data() + r * width * 4));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

std::vector<std::uint8_t> decode_png(const std::vector<std::uint8_t>& bytes, std::size_t& width, std::size_t& height)
{
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size()))
    throw Error(Errc::bad_request, std::string("not a PNG image: ") + image.message);
  image.format = PNG_FORMAT_RGBA;
  std::vector<std::uint8_t> out(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, out.data(), 0, nullptr)) {
    png_image_free(&image);
    throw Error(Errc::bad_request, std::string("PNG decoding failed: ") + image.message);
  }
  width = image.width;
  height = image.height;
  return out;
}

std::string base64_encode(const std::vector<std::uint8_t>& bytes)
{
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(),
                                static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::vector<std::uint8_t> base64_decode(const std::string& text)
{
  std::vector<std::uint8_t> out(3 * (text.size() / 4) + 3);
  const int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(text.data()),
                                static_cast<int>(text.size()));
  if (n < 0)
    throw Error(Errc::bad_request, "invalid base64");
  std::size_t pad = 0;
  if (!text.empty() && text.back() == '=')
    pad = text.size() > 1 && text[text.size() - 2] == '=' ? 2 : 1;
  out.resize(static_cast<std::size_t>(n) - pad);
  return out;
}

MapArtifact visualize(const GeoPatch& patch)
{
  MapArtifact m;
  Json features = Json::array();
  const auto& v = patch.vector();
  if (!v.boundary.empty()) {
    Json geometry = Json::object();
    if (v.boundary.size() == 1) {
      geometry["type"] = "Polygon";
      geometry["coordinates"] = Json::array({ring_coords(v.boundary[0])});
    } else {
      geometry["type"] = "MultiPolygon";
      Json polys = Json::array();
      for (const auto& ring : v.boundary)
        polys.push_back(Json::array({ring_coords(ring)}));
      geometry["coordinates"] = std::move(polys);
    }
    Json props = Json::object();
    props["name"] = patch.name();
    props["ptype"] = to_string(patch.ptype());
    props["area_million_km2"] = patch_area(patch);
    features.push_back(feature(std::move(geometry), std::move(props)));
  }
  for (const auto& p : v.points) {
    Json geometry = Json::object();
    geometry["type"] = "Point";
    geometry["coordinates"] = position(p.position);
    Json props = Json::object();
    props["name"] = p.name;
    props["value"] = p.value ? Json(*p.value) : Json(nullptr);
    props["unit"] = p.unit;
    features.push_back(feature(std::move(geometry), std::move(props)));
  }
  m.geojson = Json::object();
  m.geojson["type"] = "FeatureCollection";
  m.geojson["features"] = std::move(features);

  if (const auto& r = patch.raster()) {
    Overlay o;
    const auto rgba = render_rgba(*r, &o.legend);
    o.width = r->grid().cols();
    o.height = r->grid().rows();
    o.bounds = r->bbox();
    o.png_base64 = base64_encode(encode_png(rgba, o.width, o.height));
    m.overlay = std::move(o);
  }
  m.center = patch.location();
  m.zoom = suggested_zoom(patch.bbox());
  return m;
}

Json to_json(const MapArtifact& map)
{
  Json j = Json::object();
  j["geojson"] = map.geojson;
  if (map.overlay) {
    const auto& o = *map.overlay;
    Json ov = Json::object();
    ov["image"] = "data:image/png;base64," + o.png_base64;
    ov["width"] = o.width;
    ov["height"] = o.height;
    ov["bounds"] = {{"south", o.bounds.min_lat()},
                    {"north", o.bounds.max_lat()},
                    {"west", o.bounds.min_lon()},
                    {"east", o.bounds.max_lon()}};
    ov["legend"] = {{"name", o.legend.name},
                    {"unit", o.legend.unit},
                    {"min", o.legend.min},
                    {"max", o.legend.max},
                    {"colormap", o.legend.colormap}};
    j["overlay"] = std::move(ov);
  } else {
    j["overlay"] = nullptr;
  }
  j["center"] = {{"lat", map.center.lat()}, {"lon", map.center.lon()}};
  j["zoom"] = map.zoom;
  return j;
}

} // namespace geode::service
