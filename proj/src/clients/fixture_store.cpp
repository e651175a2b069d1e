#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <openssl/sha.h>

#include "geode/clients.hpp"
#include "geode/serialize.hpp"

namespace geode::clients {

namespace fs = std::filesystem;

namespace {

std::int64_t system_seconds()
{
  return std::chrono::duration_cast<std::chrono::seconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

std::string read_file(const fs::path& p)
{
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& data)
{
  const fs::path tmp = p.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << data;
    if (!out)
      throw Error(Errc::internal, "cannot write " + tmp.string());
  }
  fs::rename(tmp, p);
}

} // namespace

std::string fmt6(double v)
{
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  if (std::string(buf) == "-0.000000")
    return "0.000000";
  return buf;
}

std::string canonical_request(const std::string& client_id, Params params)
{
  std::sort(params.begin(), params.end());
  std::string out = client_id;
  char sep = '?';
  for (const auto& [k, v] : params) {
    out += sep;
    out += k + "=" + v;
    sep = '&';
  }
  return out;
}

std::string sha256_hex(const std::string& data)
{
  unsigned char md[SHA256_DIGEST_LENGTH];
  SHA256(reinterpret_cast<const unsigned char*>(data.data()), data.size(), md);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned char c : md) {
    out += hex[c >> 4];
    out += hex[c & 15];
  }
  return out;
}

FixtureStore::FixtureStore(std::string dir, std::function<std::int64_t()> clock)
    : dir_(std::move(dir)), clock_(clock ? std::move(clock) : system_seconds)
{
  if (dir_.empty())
    throw Error(Errc::precondition, "fixture store needs a directory");
  const fs::path index = fs::path(dir_) / "index.json";
  if (!fs::exists(index))
    return;
  try {
    const Json doc = Json::parse(read_file(index));
    for (const auto& r : doc.at("records"))
      index_[r.at("key").get<std::string>()] = {r.at("client").get<std::string>(),
                                                r.at("recorded_at").get<std::int64_t>()};
  } catch (const Json::exception& e) {
    throw Error(Errc::bad_request, "corrupt fixture index " + index.string() + ": " + e.what());
  }
}

std::optional<UpstreamRecord> FixtureStore::find(const std::string& canonical) const
{
  std::lock_guard lock(mu_);
  const fs::path p = fs::path(dir_) / (sha256_hex(canonical) + ".json");
  if (!fs::exists(p))
    return std::nullopt;
  try {
    const Json doc = Json::parse(read_file(p));
    if (doc.at("request").get<std::string>() != canonical)
      return std::nullopt;
    return UpstreamRecord{doc.at("client").get<std::string>(), canonical,
                          doc.at("body").get<std::string>(), doc.at("recorded_at").get<std::int64_t>()};
  } catch (const Json::exception& e) {
    throw Error(Errc::bad_request, "corrupt fixture " + p.string() + ": " + e.what());
  }
}

UpstreamRecord FixtureStore::put(const std::string& client_id, const std::string& canonical,
                                 std::string body)
{
  std::lock_guard lock(mu_);
  fs::create_directories(dir_);
  const std::string key = sha256_hex(canonical);
  std::int64_t at = clock_();
  if (auto it = index_.find(key); it != index_.end())
    at = std::max(at, it->second.second);

  Json doc = Json::object();
  doc["client"] = client_id;
  doc["request"] = canonical;
  doc["recorded_at"] = at;
  doc["body"] = body;
  write_file(fs::path(dir_) / (key + ".json"), doc.dump(1) + "\n");
  index_[key] = {client_id, at};
  write_index();
  return {client_id, canonical, std::move(body), at};
}

std::size_t FixtureStore::size() const
{
  std::lock_guard lock(mu_);
  return index_.size();
}

void FixtureStore::write_index() const
{
  Json records = Json::array();
  for (const auto& [key, v] : index_)
    records.push_back({{"key", key}, {"client", v.first}, {"recorded_at", v.second}});
  Json doc = Json::object();
  doc["records"] = std::move(records);
  write_file(fs::path(dir_) / "index.json", doc.dump(1) + "\n");
}

} // namespace geode::clients
