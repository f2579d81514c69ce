#ifndef MISO_NET_TRANSCRIPT_H_
#define MISO_NET_TRANSCRIPT_H_

#include <cstdint>
#include <deque>
#include <map>
#include <mutex>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "miso/net/http.h"

namespace miso::net {

// One message as seen by the party that received it.
struct TranscriptEntry {
  uint64_t seq = 0;
  std::string party;
  std::string direction;  // "request" (served) or "response" (to our call)
  std::string endpoint;   // e.g. "GET /auth_IdP" or "POST /token_IdP"
  std::set<std::string> names;
  std::map<std::string, std::string> values;

  nlohmann::json ToJson() const;
  static TranscriptEntry FromJson(const nlohmann::json& j);
};

// Bounded in-memory tap of everything a service receives. Recording never
// alters protocol behaviour; it is only reachable through the debug endpoint.
class Transcript {
 public:
  explicit Transcript(std::string party, size_t capacity = 50000);

  const std::string& party() const { return party_; }

  void RecordRequest(const Request& request);
  void RecordResponse(std::string_view method, const Url& url,
                      const HttpResponse& response);

  std::vector<TranscriptEntry> Snapshot() const;
  void Clear();

  nlohmann::json ToJson() const;
  static std::vector<TranscriptEntry> FromJson(const nlohmann::json& j);

 private:
  void Push(TranscriptEntry entry);

  const std::string party_;
  const size_t capacity_;
  mutable std::mutex mu_;
  std::deque<TranscriptEntry> entries_;
  uint64_t next_seq_ = 0;
};

}  // namespace miso::net

#endif  // MISO_NET_TRANSCRIPT_H_
