#include "geode/colormap.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "geode/error.hpp"

namespace geode {

namespace {

struct NamedTable {
  std::string_view name;
  ColormapTable table;
};

const std::array<NamedTable, 7>& tables()
{
  static const std::array<NamedTable, 7> kTables = {{
#include "colormap_data.inc"
  }};
  return kTables;
}

} // namespace

bool is_registered_colormap(std::string_view name) noexcept
{
  const auto& t = tables();
  return std::any_of(t.begin(), t.end(), [&](const NamedTable& n) { return n.name == name; });
}

std::vector<std::string> colormap_names()
{
  std::vector<std::string> out;
  for (const auto& n : tables())
    out.emplace_back(n.name);
  return out;
}

const ColormapTable& colormap(std::string_view name)
{
  for (const auto& n : tables())
    if (n.name == name)
      return n.table;
  throw Error(Errc::precondition, "unknown colormap '" + std::string(name) + "'");
}

Rgb colormap_lookup(const ColormapTable& table, double t) noexcept
{
  if (!(t > 0.0))
    return table.front();
  if (t >= 1.0)
    return table.back();
  const auto idx = static_cast<std::size_t>(std::lround(t * 255.0));
  return table[std::min<std::size_t>(idx, 255)];
}

} // namespace geode
