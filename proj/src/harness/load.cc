#include "miso/harness/load.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <latch>
#include <mutex>
#include <set>
#include <stdexcept>
#include <thread>

#include "miso/harness/driver.h"
#include "miso/idp/fixtures.h"

namespace miso::harness {
namespace {

using Clock = std::chrono::steady_clock;
constexpr size_t kMaxErrorSamples = 5;

struct ScenarioPlan {
  const RpNode* rp = nullptr;
  std::vector<std::string> idps;
  std::optional<int> m;
  std::vector<std::string> enroll_idps;
};

ScenarioPlan PlanFor(const Topology& topology, Scenario scenario) {
  ScenarioPlan plan;
  auto miso = topology.MisoRps();
  switch (scenario) {
    case Scenario::kMisoSingle:
      if (miso.empty() || topology.idps.empty()) throw std::invalid_argument("no MISO RP/IdP");
      plan.rp = miso.front();
      plan.idps = {topology.idps.front().id};
      break;
    case Scenario::kMisoMulti2of3:
      if (miso.empty() || topology.idps.size() < 3) {
        throw std::invalid_argument("2-of-3 needs a MISO RP and three IdPs");
      }
      plan.rp = miso.front();
      plan.enroll_idps = {topology.idps[0].id, topology.idps[1].id, topology.idps[2].id};
      plan.idps = {topology.idps[0].id, topology.idps[1].id};
      plan.m = 2;
      break;
    case Scenario::kBaselineSso: {
      auto baseline = topology.BaselineRps();
      if (baseline.empty()) throw std::invalid_argument("no baseline RP");
      plan.rp = baseline.front();
      break;
    }
  }
  return plan;
}

double Percentile(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) return 0;
  size_t rank = static_cast<size_t>(std::ceil(p * sorted.size()));
  return sorted[std::clamp<size_t>(rank, 1, sorted.size()) - 1];
}

}  // namespace

std::string ScenarioName(Scenario scenario) {
  switch (scenario) {
    case Scenario::kMisoSingle: return "miso_single";
    case Scenario::kMisoMulti2of3: return "miso_multi_2of3";
    case Scenario::kBaselineSso: return "baseline_sso";
  }
  return "unknown";
}

std::optional<Scenario> ParseScenario(const std::string& name) {
  for (auto s : {Scenario::kMisoSingle, Scenario::kMisoMulti2of3, Scenario::kBaselineSso}) {
    if (ScenarioName(s) == name) return s;
  }
  return std::nullopt;
}

nlohmann::json LoadSample::ToJson() const {
  return {{"scenario", ScenarioName(scenario)},
          {"rate", rate},
          {"duration_s", duration_s},
          {"attempted", attempted},
          {"completed", completed},
          {"errors", errors},
          {"mean_ms", mean_ms},
          {"p50_ms", p50_ms},
          {"p95_ms", p95_ms},
          {"max_ms", max_ms},
          {"error_samples", error_samples}};
}

LoadSample RunLoad(const Topology& topology, const LoadOptions& options) {
  LoadSample sample;
  sample.scenario = options.scenario;
  sample.rate = options.rate;
  sample.duration_s = options.duration_s;
  const ScenarioPlan plan = PlanFor(topology, options.scenario);
  const int pool = std::max(1, options.user_pool);
  if (topology.users_per_idp > 0 && pool > topology.users_per_idp) {
    throw std::invalid_argument("user pool of " + std::to_string(pool) + " exceeds the " +
                                std::to_string(topology.users_per_idp) +
                                " fixture users per IdP");
  }
  const long arrivals =
      options.rate > 0 ? std::lround(options.rate * options.duration_s) : 0;
  if (arrivals <= 0) return sample;

  std::mutex mu;
  std::vector<double> latencies;
  auto record = [&](const LoginResult& r) {
    std::lock_guard lock(mu);
    if (r.ok) {
      latencies.push_back(r.latency_ms);
      return;
    }
    ++sample.errors;
    if (sample.error_samples.size() < kMaxErrorSamples) {
      sample.error_samples.push_back(r.failing_url + " -> " + r.error);
    }
  };

  for (int round = 0; round < options.warmup_rounds; ++round) {
    for (int u = 0; u < pool; ++u) {
      const auto& idps = plan.enroll_idps.empty() ? plan.idps : plan.enroll_idps;
      LoginResult r = DriveLogin(topology, *plan.rp, {idp::FixtureUsername(u), idps, plan.m});
      if (!r.ok) {
        throw std::runtime_error("warm-up login failed: " + r.failing_url + " -> " + r.error);
      }
    }
  }

  std::vector<std::thread> workers;
  workers.reserve(arrivals);
  const auto start = Clock::now();
  for (long i = 0; i < arrivals; ++i) {
    std::this_thread::sleep_until(start + std::chrono::duration_cast<Clock::duration>(
                                              std::chrono::duration<double>(i / options.rate)));
    LoginRequest request{idp::FixtureUsername(static_cast<int>(i % pool)), plan.idps, plan.m};
    workers.emplace_back([&, request] { record(DriveLogin(topology, *plan.rp, request)); });
  }
  for (auto& w : workers) w.join();

  sample.attempted = static_cast<int>(arrivals);
  sample.completed = static_cast<int>(latencies.size());
  std::sort(latencies.begin(), latencies.end());
  if (!latencies.empty()) {
    double total = 0;
    for (double l : latencies) total += l;
    sample.mean_ms = total / latencies.size();
    sample.p50_ms = Percentile(latencies, 0.50);
    sample.p95_ms = Percentile(latencies, 0.95);
    sample.max_ms = latencies.back();
  }
  return sample;
}

std::string FormatLoadTable(const std::vector<LoadSample>& samples) {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof(line), "%-16s %8s %8s %9s %7s %9s %9s %9s\n", "scenario", "rate/s",
                "attempt", "complete", "errors", "mean_ms", "p50_ms", "p95_ms");
  out += line;
  for (const auto& s : samples) {
    std::snprintf(line, sizeof(line), "%-16s %8.1f %8d %9d %7d %9.2f %9.2f %9.2f\n",
                  ScenarioName(s.scenario).c_str(), s.rate, s.attempted, s.completed, s.errors,
                  s.mean_ms, s.p50_ms, s.p95_ms);
    out += line;
  }
  return out;
}

nlohmann::json SoakReport::ToJson() const {
  return {{"logins", logins},
          {"errors", errors},
          {"distinct_users", distinct_users},
          {"distinct_subs", distinct_subs},
          {"wall_s", wall_s},
          {"error_samples", error_samples},
          {"passed", passed()}};
}

SoakReport RunConcurrentSoak(const Topology& topology, int concurrent) {
  SoakReport report;
  const ScenarioPlan plan = PlanFor(topology, Scenario::kMisoSingle);
  if (topology.users_per_idp > 0 && concurrent > topology.users_per_idp) {
    throw std::invalid_argument("soak needs " + std::to_string(concurrent) +
                                " fixture users per IdP");
  }
  std::vector<LoginResult> results(concurrent);
  std::latch ready(concurrent + 1);
  std::vector<std::thread> workers;
  for (int i = 0; i < concurrent; ++i) {
    workers.emplace_back([&, i] {
      ready.arrive_and_wait();
      results[i] = DriveLogin(topology, *plan.rp, {idp::FixtureUsername(i), plan.idps});
    });
  }
  const auto start = Clock::now();
  ready.arrive_and_wait();
  for (auto& w : workers) w.join();
  report.wall_s = std::chrono::duration<double>(Clock::now() - start).count();

  std::set<std::string> subs;
  for (const auto& r : results) {
    ++report.logins;
    if (!r.ok) {
      ++report.errors;
      if (report.error_samples.size() < kMaxErrorSamples) {
        report.error_samples.push_back(r.failing_url + " -> " + r.error);
      }
      continue;
    }
    subs.insert(r.sub);
  }
  report.distinct_users = concurrent;
  report.distinct_subs = static_cast<int>(subs.size());
  return report;
}

}  // namespace miso::harness
