#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace geode {

/// Stable error classes. The string form (see `errc_code`) is part of the
/// wire contract: planners are re-prompted with it and the HTTP layer maps
/// it to status codes.
enum class Errc {
  coordinate_range,
  empty_geometry,
  invalid_geometry,
  index_out_of_range,
  empty_input,
  out_of_bounds,
  numerical_failure,
  shape_mismatch,
  undefined_correlation,
  range_error,
  raster_type,
  missing_raster,
  missing_value,
  format_error,
  precondition,
  geocode_not_found,
  upstream_unavailable,
  fixture_miss,
  extraction,
  syntax,
  bad_literal,
  ssa_rebind,
  missing_return,
  return_arity,
  unknown_expert,
  arity,
  type_mismatch,
  enum_violation,
  return_type,
  unbound_reference,
  expert_runtime,
  backend_unavailable,
  planning_failed,
  no_canned_plan,
  bad_request,
  internal,
};

const char* errc_code(Errc code) noexcept;

class Error : public std::runtime_error {
public:
  Error(Errc code, const std::string& message);

  Errc code() const noexcept { return code_; }
  /// Message without the code prefix.
  const std::string& detail() const noexcept { return detail_; }

private:
  Errc code_;
  std::string detail_;
};

/// True for errors produced while extracting/parsing/typechecking a plan.
bool is_plan_error(Errc code) noexcept;
/// True for errors caused by an upstream data source or planner backend.
bool is_upstream_error(Errc code) noexcept;

} // namespace geode
