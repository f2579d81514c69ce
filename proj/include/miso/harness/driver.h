#ifndef MISO_HARNESS_DRIVER_H_
#define MISO_HARNESS_DRIVER_H_

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "miso/harness/topology.h"
#include "miso/harness/user_agent.h"
#include "miso/net/transcript.h"

namespace miso::harness {

struct LoginRequest {
  std::string username;
  // IdPs to authenticate with; empty lets the RP/mixer pick the default.
  std::vector<std::string> idps;
  std::optional<int> m;
  std::string consent = "grant";
};

struct LoginResult {
  bool ok = false;
  std::string sub;
  nlohmann::json account;  // the RP's /me response
  // On failure: index into |hops| of the terminal response, and its details.
  int failing_step = -1;
  std::string failing_url;
  int status = 0;
  std::string error;
  std::vector<Hop> hops;
  double latency_ms = 0;
};

// Logs |request.username| into |rp| as a browser would, starting at /login
// and ending at /me. Uses |agent| when given so cookies persist across calls.
LoginResult DriveLogin(const Topology& topology, const RpNode& rp, const LoginRequest& request,
                       UserAgent* agent = nullptr);

// Debug taps served by services started with transcript recording.
std::vector<net::TranscriptEntry> FetchTranscript(const std::string& base_url);
void ClearTranscript(const std::string& base_url);
std::vector<nlohmann::json> FetchRpLog(const std::string& rp_url);

std::string JoinIdps(const std::vector<std::string>& idps);

}  // namespace miso::harness

#endif  // MISO_HARNESS_DRIVER_H_
