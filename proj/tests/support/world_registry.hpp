#pragma once

#include <fstream>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "geode/experts.hpp"
#include "geode/serialize.hpp"
#include "world.hpp"

namespace testing {

inline geode::clients::ClientConfig world_config()
{
  geode::clients::ClientConfig c;
  c.geocoder_base = "http://geocoder.test";
  c.weather_base = "http://weather.test";
  c.elevation_base = "http://elevation.test";
  c.weather_key = "k";
  c.geocoder_rate = 1e6;
  c.default_rate = 1e6;
  return c;
}

/// Registry answering from the in-process synthetic world.
inline std::shared_ptr<geode::plan::Registry> world_registry()
{
  auto up = std::make_shared<geode::clients::Upstream>(
      world_config(), std::make_shared<geode::fake::WorldTransport>(),
      [] { return geode::fake::kObservedAt + 600; });
  return geode::make_registry(up);
}

inline std::vector<std::pair<std::string, std::string>> golden_plans()
{
  std::ifstream in(std::string(GEODE_SOURCE_DIR) + "/data/golden_plans.json");
  const auto doc = geode::Json::parse(in);
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& [q, p] : doc.items())
    out.emplace_back(q, p.get<std::string>());
  return out;
}

} // namespace testing
