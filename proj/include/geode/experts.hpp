#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "geode/clients.hpp"
#include "geode/plan.hpp"

namespace geode {

/// (query, answer) -> elaborated text.
using Elaborator = std::function<std::string(const std::string& query, const std::string& answer)>;

/// Builtins plus the named experts and the analysis extras, bound to `upstream`.
std::shared_ptr<plan::Registry> make_registry(std::shared_ptr<clients::Upstream> upstream,
                                              Elaborator elaborate = {});

/// Names of the experts that mirror the published expert list.
const std::vector<std::string>& named_experts();

/// Numbers to 4 significant digits, patches as
/// "<name> patch (<kind>, area <a> million sq km)", lists comma-joined.
std::string data_to_text(const plan::Value& value);
std::string data_to_text(const std::vector<plan::Value>& values);

} // namespace geode
