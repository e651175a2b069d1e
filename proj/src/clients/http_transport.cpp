#include "httplib.h"

#include "geode/error.hpp"
#include "geode/transport.hpp"

namespace geode {

namespace {

class HttpTransport final : public Transport {
public:
  HttpResponse send(const HttpRequest& req) override
  {
    const auto scheme_end = req.url.find("://");
    if (scheme_end == std::string::npos)
      throw Error(Errc::precondition, "not an absolute URL: " + req.url);
    const auto path_start = req.url.find('/', scheme_end + 3);
    const std::string origin = req.url.substr(0, path_start);
    const std::string target = path_start == std::string::npos ? "/" : req.url.substr(path_start);

    httplib::Client cli(origin);
    const auto secs = static_cast<time_t>(req.timeout_s);
    const auto usecs = static_cast<time_t>((req.timeout_s - static_cast<double>(secs)) * 1e6);
    cli.set_connection_timeout(secs, usecs);
    cli.set_read_timeout(secs, usecs);
    cli.set_write_timeout(secs, usecs);
    cli.set_follow_location(true);

    httplib::Headers headers;
    for (const auto& [k, v] : req.headers)
      headers.emplace(k, v);

    httplib::Result res = req.method == "POST"
                              ? cli.Post(target, headers, req.body, req.content_type)
                              : cli.Get(target, headers);
    if (!res)
      throw Error(Errc::upstream_unavailable,
                  origin + ": " + httplib::to_string(res.error()));
    return {res->status, res->body};
  }
};

} // namespace

std::shared_ptr<Transport> make_http_transport() { return std::make_shared<HttpTransport>(); }

std::string url_encode(const std::string& s)
{
  static const char* hex = "0123456789ABCDEF";
  std::string out;
  for (unsigned char c : s) {
    if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
      out += static_cast<char>(c);
    } else {
      out += '%';
      out += hex[c >> 4];
      out += hex[c & 15];
    }
  }
  return out;
}

std::string build_url(const std::string& base, const std::string& path,
                      const std::vector<std::pair<std::string, std::string>>& params)
{
  std::string url = base;
  while (!url.empty() && url.back() == '/')
    url.pop_back();
  url += path;
  char sep = '?';
  for (const auto& [k, v] : params) {
    url += sep;
    url += url_encode(k) + "=" + url_encode(v);
    sep = '&';
  }
  return url;
}

} // namespace geode
