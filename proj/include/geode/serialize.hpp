#pragma once

#include <string>

#include "json.hpp"

#include "geode/geopatch.hpp"

namespace geode {

using Json = nlohmann::ordered_json;

/// Canonical patch document. Key order is fixed so dumps are byte-stable.
Json patch_to_json(const GeoPatch& patch);
/// Throws bad_request on malformed documents and the usual geometry errors
/// on invariant violations.
GeoPatch patch_from_json(const Json& doc);

Json grid_to_json(const Grid& grid);
Grid grid_from_json(const Json& cells, std::size_t rows, std::size_t cols);

} // namespace geode
