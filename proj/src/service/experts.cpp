#include "geode/experts.hpp"

#include "geode/raster_ops.hpp"

namespace geode {

using plan::CallContext;
using plan::ExpertSignature;
using plan::Param;
using plan::Type;
using plan::Value;

namespace {

const GeoPatch& patch_arg(const std::vector<Value>& a, std::size_t i) { return std::get<GeoPatch>(a[i]); }
const std::string& text_arg(const std::vector<Value>& a, std::size_t i) { return std::get<std::string>(a[i]); }

const RasterLayer& raster_of(const GeoPatch& p)
{
  if (!p.raster())
    throw Error(Errc::missing_raster, "patch '" + p.name() + "' has no raster data");
  return *p.raster();
}

Param patch_param(const std::string& name = "patch") { return {name, Type::patch(), {}}; }
Param mode_param() { return {"mode", Type::one_of({"patch", "point"}), Value(std::string("patch"))}; }

} // namespace

const std::vector<std::string>& named_experts()
{
  static const std::vector<std::string> names{
      "point_location_expert", "patch_location_expert", "imputation_expert", "correlation_expert",
      "data_to_text_expert",   "threshold_expert",      "intersection_expert", "humidity_expert",
      "precipitation_expert",  "temperature_expert",    "air_quality_expert",  "elevation_expert",
      "elaborate_expert"};
  return names;
}

std::string data_to_text(const Value& v)
{
  if (const auto* s = std::get_if<std::string>(&v))
    return *s;
  if (const auto* d = std::get_if<double>(&v))
    return plan::format_number(*d);
  if (const auto* b = std::get_if<bool>(&v))
    return *b ? "true" : "false";
  const auto& p = std::get<GeoPatch>(v);
  std::string out = p.name() + " patch (" + to_string(p.ptype());
  if (p.ptype() != PatchType::point)
    out += ", area " + plan::format_number(patch_area(p)) + " million sq km";
  return out + ")";
}

std::string data_to_text(const std::vector<Value>& values)
{
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i)
    out += (i ? ", " : "") + data_to_text(values[i]);
  return out;
}

std::shared_ptr<plan::Registry> make_registry(std::shared_ptr<clients::Upstream> up, Elaborator elaborate)
{
  auto reg = std::make_shared<plan::Registry>();
  auto& r = *reg;

  r.add({"point_location_expert", {{"name", Type::text(), {}}}, Type::patch(),
         "Point location (latitude, longitude) of any place or address by name.", false, "retrieval"},
        [up](const std::vector<Value>& a, CallContext&) -> Value {
          return clients::geocode_point(*up, text_arg(a, 0));
        });
  r.add({"patch_location_expert", {{"name", Type::text(), {}}}, Type::patch(),
         "Location and boundary polygon of any place by name.", false, "retrieval"},
        [up](const std::vector<Value>& a, CallContext&) -> Value {
          return clients::geocode_patch(*up, text_arg(a, 0));
        });
  r.add({"imputation_expert", {patch_param()}, Type::patch(),
         "Fills missing raster cells with the nearest present cell value.", false, "analysis"},
        [](const std::vector<Value>& a, CallContext&) -> Value {
          const GeoPatch& p = patch_arg(a, 0);
          return p.with_raster(analytics::impute_nearest(raster_of(p)));
        });
  r.add({"correlation_expert", {patch_param("patch1"), patch_param("patch2")}, Type::number(),
         "Pearson correlation between the rasters of two patches.", false, "analysis"},
        [](const std::vector<Value>& a, CallContext&) -> Value {
          return analytics::pearson_correlation(raster_of(patch_arg(a, 0)), raster_of(patch_arg(a, 1)));
        });
  r.add({"data_to_text_expert", {{"data", Type::any(), {}}}, Type::text(),
         "String representation of any value.", false, "functional"},
        [](const std::vector<Value>& a, CallContext&) -> Value { return data_to_text(a[0]); });
  r.add({"threshold_expert",
         {patch_param(),
          {"threshold", Type::number(), {}},
          {"mode", Type::one_of({"greater", "less"}), Value(std::string("greater"))},
          {"relative", Type::boolean(), Value(true)}},
         Type::patch(),
         "Binary raster of cells at or above (greater) or at or below (less) a threshold; relative "
         "thresholds are fractions between 0.0 and 1.0 of the value range.",
         false, "analysis"},
        [](const std::vector<Value>& a, CallContext&) -> Value {
          const GeoPatch& p = patch_arg(a, 0);
          return p.with_raster(analytics::threshold(raster_of(p), std::get<double>(a[1]),
                                                    analytics::threshold_mode_from_string(text_arg(a, 2)),
                                                    std::get<bool>(a[3])));
        });
  r.add({"intersection_expert",
         {patch_param("patch1"), patch_param("patch2"),
          {"mode", Type::one_of({"raster", "vector"}), Value(std::string("raster"))}},
         Type::patch(),
         "Intersection of two patches: cellwise AND of binary rasters over the same region, or the "
         "geometric intersection of their boundaries.",
         false, "analysis"},
        [](const std::vector<Value>& a, CallContext&) -> Value {
          const GeoPatch& p1 = patch_arg(a, 0);
          const GeoPatch& p2 = patch_arg(a, 1);
          if (text_arg(a, 2) == "vector")
            return analytics::vector_intersection(p1, p2);
          return p1.with_raster(analytics::raster_intersection(raster_of(p1), raster_of(p2)))
              .with_name(p1.name() + " & " + p2.name());
        });

  auto field_expert = [&](const std::string& name, clients::Field field, const std::string& what) {
    r.add({name, {patch_param(), mode_param()}, Type::patch(),
           "Current " + what + " over the patch as a raster (mode 'patch') or at its location as a data "
           "point (mode 'point').",
           false, "retrieval"},
          [up, field](const std::vector<Value>& a, CallContext& ctx) -> Value {
            auto res = clients::retrieve_field(*up, patch_arg(a, 0), clients::field_source(field),
                                               clients::retrieve_mode_from_string(text_arg(a, 1)));
            ctx.age_s = res.age_s;
            ctx.notes = std::move(res.notes);
            return std::move(res.patch);
          });
  };
  field_expert("humidity_expert", clients::Field::humidity, "relative humidity (%)");
  field_expert("precipitation_expert", clients::Field::precipitation, "precipitation (mm)");
  field_expert("temperature_expert", clients::Field::temperature, "temperature (Celsius)");

  r.add({"air_quality_expert",
         {patch_param(),
          {"parameter", Type::one_of(clients::air_quality_parameters()), Value(std::string("pm2_5"))},
          mode_param()},
         Type::patch(),
         "Current air quality parameter over the patch (mode 'patch') or at its location (mode 'point'); "
         "us-epa-index is a 1-6 category, the rest are ug/m3.",
         false, "retrieval"},
        [up](const std::vector<Value>& a, CallContext& ctx) -> Value {
          auto res = clients::retrieve_field(*up, patch_arg(a, 0),
                                             clients::field_source(clients::Field::air_quality, text_arg(a, 1)),
                                             clients::retrieve_mode_from_string(text_arg(a, 2)));
          ctx.age_s = res.age_s;
          ctx.notes = std::move(res.notes);
          return std::move(res.patch);
        });
  field_expert("elevation_expert", clients::Field::elevation, "elevation (m)");
  r.add({"elaborate_expert", {{"answer", Type::text(), {}}}, Type::text(),
         "Elaborated textual answer to the user query from a short answer.", false, "functional"},
        [elaborate](const std::vector<Value>& a, CallContext& ctx) -> Value {
          if (elaborate)
            return elaborate(ctx.query, text_arg(a, 0));
          return text_arg(a, 0);
        });

  r.add({"max_location_expert", {patch_param()}, Type::patch(),
         "Point patch at the raster cell holding the maximum value.", false, "analysis"},
        [](const std::vector<Value>& a, CallContext&) -> Value { return analytics::raster_argmax(patch_arg(a, 0)); });
  r.add({"raster_stats_expert",
         {patch_param(), {"stat", Type::one_of({"min", "max", "mean", "std"}), Value(std::string("mean"))}},
         Type::number(), "Statistic over present raster cells; std is the population standard deviation.",
         false, "analysis"},
        [](const std::vector<Value>& a, CallContext&) -> Value {
          return analytics::raster_stats(raster_of(patch_arg(a, 0)), analytics::stat_from_string(text_arg(a, 1)));
        });
  r.add({"mask_expert", {patch_param(), patch_param("region")}, Type::patch(),
         "Marks raster cells outside the region boundary as missing.", false, "analysis"},
        [](const std::vector<Value>& a, CallContext&) -> Value {
          return analytics::mask_to_region(patch_arg(a, 0), patch_arg(a, 1));
        });

  plan::register_builtins(r);
  return reg;
}

} // namespace geode
