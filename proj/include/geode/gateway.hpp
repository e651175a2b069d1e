#pragma once

#include <map>
#include <memory>
#include <semaphore>
#include <string>
#include <vector>

#include "geode/plan.hpp"
#include "geode/transport.hpp"

namespace geode::gateway {

enum class BackendId { hosted_a, hosted_b, local, canned };
const char* to_string(BackendId id) noexcept;
BackendId backend_id_from_string(const std::string& s);

struct BackendConfig {
  BackendId id = BackendId::canned;
  std::string url;
  std::string key;
  std::string model;
  double timeout_s = 60.0;
  std::size_t max_in_flight = 4;
  std::string golden_plans;

  /// Reads GEODE_BACKEND, HOSTED_A_KEY/URL/MODEL, HOSTED_B_KEY/URL/MODEL,
  /// LOCAL_PLANNER_URL and GEODE_GOLDEN_PLANS; `id` overrides GEODE_BACKEND.
  static BackendConfig from_env(std::optional<BackendId> id = std::nullopt);
};

struct Completion {
  std::string prompt;
  /// The user query; only the canned backend looks at it.
  std::string query;
};

class Backend {
public:
  virtual ~Backend() = default;
  virtual BackendId id() const noexcept = 0;
  /// Throws backend_unavailable on transport failures.
  virtual std::string complete(const Completion& request) = 0;
};

/// Query text -> plan text, in file order.
using GoldenPlans = std::vector<std::pair<std::string, std::string>>;
GoldenPlans load_golden_plans(const std::string& path);

/// Answers golden queries with their plan in a fenced block; anything else is
/// no_canned_plan.
class CannedBackend final : public Backend {
public:
  explicit CannedBackend(GoldenPlans plans);
  BackendId id() const noexcept override { return BackendId::canned; }
  std::string complete(const Completion& request) override;

private:
  std::map<std::string, std::string> plans_;
};

std::shared_ptr<Backend> make_backend(const BackendConfig& config,
                                      std::shared_ptr<Transport> transport = nullptr);

/// Base prompt with the query substituted for QUERY_TAG.
std::string assemble_prompt(const std::string& query, const plan::Registry& registry);

struct PlanOutcome {
  plan::TypedPlan typed;
  std::string source;
  int backend_calls = 0;
  /// Diagnostics of rejected attempts (empty when the first one passed).
  std::vector<std::string> diagnostics;
};

class PlanningFailed : public Error {
public:
  explicit PlanningFailed(std::vector<std::string> diagnostics);
  const std::vector<std::string>& diagnostics() const noexcept { return diagnostics_; }

private:
  std::vector<std::string> diagnostics_;
};

/// Backend output -> extract -> parse -> typecheck, with one repair round.
PlanOutcome plan_query(const std::string& query, Backend& backend, const plan::Registry& registry);

/// "Answer: <answer>. Computed via <n> expert calls: <names>."
std::string elaboration_template(const std::string& answer, const plan::ExecutionTrace& trace);

/// Backend elaboration for live backends; the template for the canned backend,
/// when `offline`, or on any backend failure.
std::string elaborate(const std::string& query, const std::string& answer,
                      const plan::ExecutionTrace& trace, Backend& backend, bool offline = false);

} // namespace geode::gateway
