#include "geode/error.hpp"

namespace geode {

const char* errc_code(Errc code) noexcept
{
  switch (code) {
  case Errc::coordinate_range: return "COORD_RANGE";
  case Errc::empty_geometry: return "EMPTY_GEOMETRY";
  case Errc::invalid_geometry: return "INVALID_GEOMETRY";
  case Errc::index_out_of_range: return "INDEX_RANGE";
  case Errc::empty_input: return "EMPTY_INPUT";
  case Errc::out_of_bounds: return "OUT_OF_BOUNDS";
  case Errc::numerical_failure: return "NUMERICAL_FAILURE";
  case Errc::shape_mismatch: return "SHAPE_MISMATCH";
  case Errc::undefined_correlation: return "UNDEFINED_CORRELATION";
  case Errc::range_error: return "RANGE";
  case Errc::raster_type: return "RASTER_TYPE";
  case Errc::missing_raster: return "MISSING_RASTER";
  case Errc::missing_value: return "MISSING_VALUE";
  case Errc::format_error: return "FORMAT";
  case Errc::precondition: return "PRECONDITION";
  case Errc::geocode_not_found: return "GEOCODE_NOT_FOUND";
  case Errc::upstream_unavailable: return "UPSTREAM_UNAVAILABLE";
  case Errc::fixture_miss: return "FIXTURE_MISS";
  case Errc::extraction: return "PLAN_EXTRACTION";
  case Errc::syntax: return "PLAN_SYNTAX";
  case Errc::bad_literal: return "PLAN_BAD_LITERAL";
  case Errc::ssa_rebind: return "PLAN_SSA_REBIND";
  case Errc::missing_return: return "PLAN_MISSING_RETURN";
  case Errc::return_arity: return "PLAN_RETURN_ARITY";
  case Errc::unknown_expert: return "PLAN_UNKNOWN_EXPERT";
  case Errc::arity: return "PLAN_ARITY";
  case Errc::type_mismatch: return "PLAN_TYPE";
  case Errc::enum_violation: return "PLAN_ENUM";
  case Errc::return_type: return "PLAN_RETURN_TYPE";
  case Errc::unbound_reference: return "PLAN_UNBOUND_REF";
  case Errc::expert_runtime: return "EXPERT_RUNTIME";
  case Errc::backend_unavailable: return "BACKEND_UNAVAILABLE";
  case Errc::planning_failed: return "PLANNING_FAILED";
  case Errc::no_canned_plan: return "NO_CANNED_PLAN";
  case Errc::bad_request: return "BAD_REQUEST";
  case Errc::internal: return "INTERNAL";
  }
  return "INTERNAL";
}

Error::Error(Errc code, const std::string& message)
    : std::runtime_error(std::string(errc_code(code)) + ": " + message), code_(code), detail_(message)
{
}

bool is_plan_error(Errc code) noexcept
{
  switch (code) {
  case Errc::extraction:
  case Errc::syntax:
  case Errc::bad_literal:
  case Errc::ssa_rebind:
  case Errc::missing_return:
  case Errc::return_arity:
  case Errc::unknown_expert:
  case Errc::arity:
  case Errc::type_mismatch:
  case Errc::enum_violation:
  case Errc::return_type:
  case Errc::unbound_reference:
  case Errc::planning_failed:
  case Errc::no_canned_plan:
    return true;
  default:
    return false;
  }
}

bool is_upstream_error(Errc code) noexcept
{
  switch (code) {
  case Errc::geocode_not_found:
  case Errc::upstream_unavailable:
  case Errc::fixture_miss:
  case Errc::backend_unavailable:
    return true;
  default:
    return false;
  }
}

} // namespace geode
