#pragma once

#include <map>
#include <string>

#include "geode/transport.hpp"

namespace geode::fake {

using Query = std::map<std::string, std::string>;

/// Synthetic stand-in for the geocoder, weather and elevation services.
/// Places are a fixed gazetteer; weather, air quality and elevation are
/// smooth analytic fields of (lat, lon).
HttpResponse handle(const std::string& path, const Query& query);

/// Fixed observation time reported by the weather endpoint.
inline constexpr long long kObservedAt = 1760600700;

std::string url_decode(const std::string& s);

/// In-process transport answering from the synthetic world.
class WorldTransport final : public Transport {
public:
  HttpResponse send(const HttpRequest& request) override;
  std::size_t calls() const noexcept { return calls_; }

private:
  std::size_t calls_ = 0;
};

} // namespace geode::fake
