#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace geode {

using Headers = std::vector<std::pair<std::string, std::string>>;

struct HttpRequest {
  std::string method = "GET";
  /// Absolute URL including the query string.
  std::string url;
  Headers headers;
  std::string body;
  std::string content_type;
  double timeout_s = 30.0;
};

struct HttpResponse {
  int status = 0;
  std::string body;
};

/// Blocking HTTP exchange. Implementations throw Error(upstream_unavailable)
/// on transport failures; non-2xx statuses are returned, not thrown.
class Transport {
public:
  virtual ~Transport() = default;
  virtual HttpResponse send(const HttpRequest& request) = 0;
};

/// Real network transport (http and https).
std::shared_ptr<Transport> make_http_transport();

/// Percent-encodes a query component.
std::string url_encode(const std::string& s);

/// Builds `base + path + "?" + k=v&...` with every value encoded.
std::string build_url(const std::string& base, const std::string& path,
                      const std::vector<std::pair<std::string, std::string>>& params);

} // namespace geode
