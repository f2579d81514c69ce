#include "miso/harness/games.h"

#include <algorithm>
#include <map>
#include <random>
#include <sstream>

#include "miso/harness/driver.h"
#include "miso/net/url.h"

namespace miso::harness {
namespace {

using nlohmann::json;

// Values at least this long are treated as unguessable identifiers.
constexpr size_t kHighEntropyLength = 16;
constexpr size_t kMaxRecordedFailures = 5;
// Shorter secrets are only matched exactly; as substrings they would turn up
// by chance inside random tokens.
constexpr size_t kMinSubstringLength = 8;

// Per-login values that are fresh nonces or user input, so they may differ
// between logins without revealing the originating RP.
const std::set<std::string>& PerLoginNames() {
  static const std::set<std::string> kNames = {"state", "code", "username", "password",
                                               "Authorization"};
  return kNames;
}

bool IsTapEndpoint(const std::string& endpoint) {
  return endpoint.find("/debug/") != std::string::npos ||
         endpoint.find("/healthz") != std::string::npos;
}

std::string JoinNames(const std::set<std::string>& names) {
  std::string out;
  for (const auto& n : names) out += (out.empty() ? "" : ",") + n;
  return out;
}

const IdpNode& ChooseIdp(const Topology& topology, const GameOptions& options) {
  if (!options.idp.empty()) {
    if (const IdpNode* idp = topology.FindIdp(options.idp)) return *idp;
    throw std::invalid_argument("unknown idp " + options.idp);
  }
  if (topology.idps.empty()) throw std::invalid_argument("topology has no IdPs");
  return topology.idps.front();
}

std::vector<const RpNode*> TwoRps(const Topology& topology) {
  auto rps = topology.MisoRps();
  if (rps.size() < 2) throw std::invalid_argument("games need two MISO relying parties");
  rps.resize(2);
  return rps;
}

void RecordFailure(GameReport& report, const std::string& who, const LoginResult& result) {
  ++report.login_failures;
  if (report.failures.size() < kMaxRecordedFailures) {
    report.failures.push_back(who + ": step " + std::to_string(result.failing_step) + " " +
                              result.failing_url + " -> " + result.error);
  }
}

void AddViolation(GameReport& report, const std::string& text) {
  if (std::find(report.violations.begin(), report.violations.end(), text) ==
      report.violations.end()) {
    report.violations.push_back(text);
  }
}

// Every value a party observed, tagged with where it was seen.
struct View {
  std::map<std::string, std::string> values;  // value -> "endpoint name"

  void Add(const std::vector<net::TranscriptEntry>& entries) {
    for (const auto& e : entries) {
      if (IsTapEndpoint(e.endpoint)) continue;
      for (const auto& [name, value] : e.values) values.emplace(value, e.endpoint + " " + name);
    }
  }
  void AddLog(const std::vector<json>& log) {
    for (const auto& entry : log) {
      const json flat = entry.flatten();
      for (const auto& item : flat.items()) {
        std::string value = item.value().is_string() ? item.value().get<std::string>()
                                                     : item.value().dump();
        values.emplace(value, "log " + item.key());
      }
    }
  }
};

// Raw uids and attribute values the mixer received from IdPs.
struct IdpSecrets {
  std::set<std::string> uids;
  std::set<std::string> attribute_values;

  void Add(const std::vector<net::TranscriptEntry>& mixer_entries) {
    for (const auto& e : mixer_entries) {
      if (e.direction != "response") continue;
      for (const auto& [name, value] : e.values) {
        if (name == "uid") uids.insert(value);
        if (name.rfind("attributes.", 0) == 0) attribute_values.insert(value);
      }
    }
  }
};

bool Reveals(const std::string& value, const std::string& secret) {
  if (secret.empty()) return false;
  if (secret.size() < kMinSubstringLength) return value == secret;
  return value.find(secret) != std::string::npos;
}

void CheckNoRawIdentifiers(GameReport& report, const std::string& rp_id, const View& view,
                           const IdpSecrets& secrets, bool include_attributes) {
  for (const auto& [value, where] : view.values) {
    for (const auto& uid : secrets.uids) {
      if (Reveals(value, uid)) {
        AddViolation(report, rp_id + " saw raw uid " + uid + " in " + where);
      }
    }
    if (!include_attributes) continue;
    for (const auto& attr : secrets.attribute_values) {
      if (Reveals(value, attr)) {
        AddViolation(report, rp_id + " saw IdP attribute " + attr + " in " + where);
      }
    }
  }
}

void CheckSharedValues(GameReport& report, const std::string& a_name, const View& a,
                       const std::string& b_name, const View& b) {
  for (const auto& [value, where] : a.values) {
    if (value.size() < kHighEntropyLength) continue;
    auto it = b.values.find(value);
    if (it != b.values.end()) {
      AddViolation(report, a_name + " (" + where + ") and " + b_name + " (" + it->second +
                               ") share value " + value);
    }
  }
}

struct PairedLogins {
  GameReport report;
  std::vector<View> rp_views{2};
  View idp_view;
  IdpSecrets secrets;
  std::set<std::string> subs[2];
};

// Logs a random user into both RPs per trial, collecting every party's view.
PairedLogins RunPairedLogins(const Topology& topology, const GameOptions& options,
                             const std::string& name) {
  PairedLogins out;
  out.report.game = name;
  out.report.trials = options.trials;
  if (options.trials <= 0 || options.users.empty()) return out;
  const IdpNode& idp = ChooseIdp(topology, options);
  auto rps = TwoRps(topology);
  std::mt19937_64 rng(options.seed);

  for (const auto* rp : rps) ClearTranscript(rp->url);
  ClearTranscript(topology.mixer_url);
  ClearTranscript(idp.url);

  for (int t = 0; t < options.trials; ++t) {
    const std::string& user = options.users[rng() % options.users.size()];
    std::string trial_subs[2];
    for (int b = 0; b < 2; ++b) {
      LoginResult r = DriveLogin(topology, *rps[b], {user, {idp.id}, std::nullopt, "grant"});
      ++out.report.logins;
      if (!r.ok) {
        RecordFailure(out.report, rps[b]->id + "/" + user, r);
        continue;
      }
      trial_subs[b] = r.sub;
      out.subs[b].insert(r.sub);
    }
    if (!trial_subs[0].empty() && trial_subs[0] == trial_subs[1]) {
      AddViolation(out.report, "user " + user + " has the same sub " + trial_subs[0] +
                                   " at " + rps[0]->id + " and " + rps[1]->id);
    }
  }
  for (int b = 0; b < 2; ++b) {
    out.rp_views[b].Add(FetchTranscript(rps[b]->url));
    out.rp_views[b].AddLog(FetchRpLog(rps[b]->url));
  }
  out.idp_view.Add(FetchTranscript(idp.url));
  out.secrets.Add(FetchTranscript(topology.mixer_url));
  return out;
}

void CheckSubsAgainstRawIds(PairedLogins& run, const std::vector<const RpNode*>& rps) {
  for (int b = 0; b < 2; ++b) {
    for (const auto& sub : run.subs[b]) {
      for (const auto& uid : run.secrets.uids) {
        if (Reveals(sub, uid)) {
          AddViolation(run.report, rps[b]->id + " sub " + sub + " reveals raw uid " + uid);
        }
      }
      if (b == 1 && run.subs[0].count(sub)) {
        AddViolation(run.report, "sub " + sub + " seen at both " + rps[0]->id + " and " +
                                     rps[1]->id);
      }
    }
  }
}

}  // namespace

json GameReport::ToJson() const {
  return {{"game", game},
          {"trials", trials},
          {"logins", logins},
          {"login_failures", login_failures},
          {"violations", violations},
          {"failures", failures},
          {"passed", passed()}};
}

GameReport RunIdpUnlinkabilityGame(const Topology& topology, const GameOptions& options) {
  GameReport report;
  report.game = "idp";
  report.trials = options.trials;
  if (options.trials <= 0 || options.users.empty()) return report;
  const IdpNode& idp = ChooseIdp(topology, options);
  auto rps = TwoRps(topology);
  std::set<std::string> cid_rps;
  for (const auto* rp : rps) {
    if (!rp->client_id.empty()) cid_rps.insert(rp->client_id);
  }
  std::mt19937_64 rng(options.seed);

  // Per originating RP: the name set of every request the IdP received, and
  // every (endpoint, name, value) for values that are not per-login nonces.
  std::set<std::string> shapes[2];
  std::set<std::string> values[2];
  bool seen[2] = {false, false};

  for (int t = 0; t < options.trials; ++t) {
    const int b = static_cast<int>(rng() % 2);
    const std::string& user = options.users[rng() % options.users.size()];
    ClearTranscript(idp.url);
    LoginResult r = DriveLogin(topology, *rps[b], {user, {idp.id}, std::nullopt, "grant"});
    ++report.logins;
    if (!r.ok) {
      RecordFailure(report, rps[b]->id + "/" + user, r);
      continue;
    }
    seen[b] = true;
    bool saw_client_id = false;
    for (const auto& e : FetchTranscript(idp.url)) {
      if (e.direction != "request" || IsTapEndpoint(e.endpoint)) continue;
      shapes[b].insert(e.endpoint + " {" + JoinNames(e.names) + "}");
      for (const auto& [name, value] : e.values) {
        for (const auto& cid : cid_rps) {
          if (value.find(cid) != std::string::npos) {
            AddViolation(report, idp.id + " received an RP client id in " + e.endpoint + " " +
                                     name);
          }
        }
        if (name == "client_id") {
          saw_client_id = true;
          if (!idp.mixer_client_id.empty() && value != idp.mixer_client_id) {
            AddViolation(report, idp.id + " received client_id " + value +
                                     " instead of the mixer's");
          }
        }
        if (!PerLoginNames().count(name)) values[b].insert(e.endpoint + " " + name + "=" + value);
      }
    }
    if (!saw_client_id) AddViolation(report, idp.id + " never received the mixer's client_id");
  }

  if (seen[0] && seen[1]) {
    for (int b = 0; b < 2; ++b) {
      for (const auto& shape : shapes[b]) {
        if (!shapes[1 - b].count(shape)) {
          AddViolation(report, "request shape only seen for " + rps[b]->id + ": " + shape);
        }
      }
      for (const auto& v : values[b]) {
        if (!values[1 - b].count(v)) {
          AddViolation(report, "distinguishing field for " + rps[b]->id + ": " + v);
        }
      }
    }
  }
  return report;
}

GameReport RunRpUnlinkabilityGame(const Topology& topology, const GameOptions& options) {
  PairedLogins run = RunPairedLogins(topology, options, "rp");
  if (run.report.logins == 0) return run.report;
  auto rps = TwoRps(topology);
  CheckSubsAgainstRawIds(run, rps);
  for (int b = 0; b < 2; ++b) {
    CheckNoRawIdentifiers(run.report, rps[b]->id, run.rp_views[b], run.secrets, false);
  }
  CheckSharedValues(run.report, rps[0]->id, run.rp_views[0], rps[1]->id, run.rp_views[1]);
  return run.report;
}

GameReport RunCollusiveGame(const Topology& topology, const GameOptions& options) {
  PairedLogins run = RunPairedLogins(topology, options, "collusive");
  if (run.report.logins == 0) return run.report;
  auto rps = TwoRps(topology);
  CheckSubsAgainstRawIds(run, rps);
  for (int b = 0; b < 2; ++b) {
    CheckNoRawIdentifiers(run.report, rps[b]->id, run.rp_views[b], run.secrets, true);
    CheckSharedValues(run.report, "idp", run.idp_view, rps[b]->id, run.rp_views[b]);
  }
  CheckSharedValues(run.report, rps[0]->id, run.rp_views[0], rps[1]->id, run.rp_views[1]);
  return run.report;
}

bool SubsetReport::passed() const {
  if (enrollment_sub.empty() || rows.empty()) return false;
  return std::all_of(rows.begin(), rows.end(), [](const auto& r) { return r.matches; });
}

json SubsetReport::ToJson() const {
  json rows_json = json::array();
  for (const auto& r : rows) {
    rows_json.push_back({{"idps", r.idps},
                         {"expected_success", r.expected_success},
                         {"success", r.success},
                         {"sub", r.sub},
                         {"error", r.error},
                         {"matches", r.matches}});
  }
  return {{"enrollment_sub", enrollment_sub},
          {"enrollment_error", enrollment_error},
          {"rows", rows_json},
          {"passed", passed()}};
}

std::string SubsetReport::FormatTable() const {
  std::ostringstream out;
  out << "enrollment sub: " << (enrollment_sub.empty() ? enrollment_error : enrollment_sub)
      << "\n";
  for (const auto& r : rows) {
    std::string set = "{" + JoinIdps(r.idps) + "}";
    out << "  " << set << std::string(set.size() < 24 ? 24 - set.size() : 1, ' ')
        << (r.success ? "success " + r.sub.substr(0, 16) + "..." : "fail " + r.error)
        << "  expected " << (r.expected_success ? "success" : "threshold_not_met")
        << (r.matches ? "  ok" : "  MISMATCH") << "\n";
  }
  return out.str();
}

SubsetReport RunSubsetOracle(const Topology& topology, const RpNode& rp,
                             const std::string& username, const std::vector<std::string>& idps,
                             int m) {
  SubsetReport report;
  LoginResult enroll = DriveLogin(topology, rp, {username, idps, m, "grant"});
  if (!enroll.ok) {
    report.enrollment_error = enroll.error;
    return report;
  }
  report.enrollment_sub = enroll.sub;

  const size_t n = idps.size();
  for (size_t mask = 1; mask < (size_t{1} << n); ++mask) {
    SubsetOutcome row;
    for (size_t i = 0; i < n; ++i) {
      if (mask & (size_t{1} << i)) row.idps.push_back(idps[i]);
    }
    const int size = static_cast<int>(row.idps.size());
    row.expected_success = size >= m;
    LoginResult r = DriveLogin(topology, rp, {username, row.idps, std::min(m, size), "grant"});
    row.success = r.ok;
    row.sub = r.sub;
    row.error = r.error;
    row.matches = row.expected_success ? (r.ok && r.sub == report.enrollment_sub)
                                       : (!r.ok && r.error == "threshold_not_met");
    report.rows.push_back(std::move(row));
  }
  return report;
}

}  // namespace miso::harness
