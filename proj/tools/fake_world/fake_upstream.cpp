// Serves the synthetic world over HTTP on localhost.
#include "httplib.h"

#include <cstdio>
#include <cstdlib>

#include "world.hpp"

int main(int argc, char** argv)
{
  const int port = argc > 1 ? std::atoi(argv[1]) : 8765;
  httplib::Server server;
  server.Get(R"(/.*)", [](const httplib::Request& req, httplib::Response& res) {
    geode::fake::Query q;
    for (const auto& [k, v] : req.params)
      q[k] = v;
    const auto out = geode::fake::handle(req.path, q);
    res.status = out.status;
    res.set_content(out.body, "application/json");
  });
  std::printf("fake upstream on http://127.0.0.1:%d\n", port);
  std::fflush(stdout);
  return server.listen("127.0.0.1", port) ? 0 : 1;
}
