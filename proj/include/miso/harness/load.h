#ifndef MISO_HARNESS_LOAD_H_
#define MISO_HARNESS_LOAD_H_

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "miso/harness/topology.h"

namespace miso::harness {

enum class Scenario { kMisoSingle, kMisoMulti2of3, kBaselineSso };

std::string ScenarioName(Scenario scenario);
std::optional<Scenario> ParseScenario(const std::string& name);

struct LoadOptions {
  Scenario scenario = Scenario::kMisoSingle;
  double rate = 50;        // login arrivals per second
  double duration_s = 30;  // arrival window
  // Logins cycle through the first |user_pool| fixture users.
  int user_pool = 16;
  // Sequential logins per pool user before measuring (multi-IdP scenarios
  // enroll with all three IdPs here).
  int warmup_rounds = 1;
};

struct LoadSample {
  Scenario scenario = Scenario::kMisoSingle;
  double rate = 0;
  double duration_s = 0;
  int attempted = 0;
  int completed = 0;
  int errors = 0;
  double mean_ms = 0;
  double p50_ms = 0;
  double p95_ms = 0;
  double max_ms = 0;
  std::vector<std::string> error_samples;

  nlohmann::json ToJson() const;
};

// Open-loop load: one login starts every 1/rate seconds regardless of how
// many are in flight. A login counts only if the RP session check succeeds.
LoadSample RunLoad(const Topology& topology, const LoadOptions& options);

std::string FormatLoadTable(const std::vector<LoadSample>& samples);

struct SoakReport {
  int logins = 0;
  int errors = 0;
  int distinct_users = 0;
  int distinct_subs = 0;
  double wall_s = 0;
  std::vector<std::string> error_samples;

  bool passed() const { return errors == 0 && distinct_subs == distinct_users; }
  nlohmann::json ToJson() const;
};

// Starts |concurrent| logins of distinct users at once against the first MISO
// RP and checks that all succeed with pairwise distinct subs.
SoakReport RunConcurrentSoak(const Topology& topology, int concurrent);

}  // namespace miso::harness

#endif  // MISO_HARNESS_LOAD_H_
