#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace geode {

struct Rgb {
  std::uint8_t r, g, b;
};

using ColormapTable = std::array<Rgb, 256>;

bool is_registered_colormap(std::string_view name) noexcept;
std::vector<std::string> colormap_names();

/// Throws precondition for unknown names.
const ColormapTable& colormap(std::string_view name);

/// Maps `t` in [0, 1] (clamped) onto the table.
Rgb colormap_lookup(const ColormapTable& table, double t) noexcept;

} // namespace geode
