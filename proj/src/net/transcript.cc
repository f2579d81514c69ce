#include "miso/net/transcript.h"

namespace miso::net {
namespace {

void Flatten(const nlohmann::json& j, const std::string& prefix,
             TranscriptEntry& entry) {
  if (j.is_object()) {
    for (auto it = j.begin(); it != j.end(); ++it) {
      std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
      Flatten(it.value(), key, entry);
    }
    return;
  }
  if (prefix.empty()) return;
  entry.names.insert(prefix);
  entry.values[prefix] = j.is_string() ? j.get<std::string>() : j.dump();
}

}  // namespace

nlohmann::json TranscriptEntry::ToJson() const {
  return {{"seq", seq},       {"party", party}, {"direction", direction},
          {"endpoint", endpoint}, {"names", names}, {"values", values}};
}

TranscriptEntry TranscriptEntry::FromJson(const nlohmann::json& j) {
  TranscriptEntry e;
  e.seq = j.value("seq", uint64_t{0});
  e.party = j.value("party", "");
  e.direction = j.value("direction", "");
  e.endpoint = j.value("endpoint", "");
  e.names = j.value("names", std::set<std::string>{});
  e.values = j.value("values", std::map<std::string, std::string>{});
  return e;
}

Transcript::Transcript(std::string party, size_t capacity)
    : party_(std::move(party)), capacity_(capacity) {}

void Transcript::RecordRequest(const Request& request) {
  TranscriptEntry entry;
  entry.party = party_;
  entry.direction = "request";
  entry.endpoint = request.method + " " + request.path;
  for (const auto* params : {&request.query, &request.form}) {
    for (const auto& [k, v] : *params) {
      entry.names.insert(k);
      entry.values[k] = v;
    }
  }
  if (auto token = request.BearerToken()) {
    entry.names.insert("Authorization");
    entry.values["Authorization"] = *token;
  }
  auto content_type = request.Header("content-type");
  if (content_type && content_type->find("application/json") != std::string::npos) {
    Flatten(nlohmann::json::parse(request.body, nullptr, false), "", entry);
  }
  Push(std::move(entry));
}

void Transcript::RecordResponse(std::string_view method, const Url& url,
                                const HttpResponse& response) {
  TranscriptEntry entry;
  entry.party = party_;
  entry.direction = "response";
  entry.endpoint = std::string(method) + " " + url.Origin() + url.path;
  Flatten(response.Json(), "", entry);
  Push(std::move(entry));
}

void Transcript::Push(TranscriptEntry entry) {
  std::lock_guard lock(mu_);
  entry.seq = next_seq_++;
  entries_.push_back(std::move(entry));
  while (entries_.size() > capacity_) entries_.pop_front();
}

std::vector<TranscriptEntry> Transcript::Snapshot() const {
  std::lock_guard lock(mu_);
  return {entries_.begin(), entries_.end()};
}

void Transcript::Clear() {
  std::lock_guard lock(mu_);
  entries_.clear();
}

nlohmann::json Transcript::ToJson() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& e : Snapshot()) arr.push_back(e.ToJson());
  return {{"party", party_}, {"entries", std::move(arr)}};
}

std::vector<TranscriptEntry> Transcript::FromJson(const nlohmann::json& j) {
  std::vector<TranscriptEntry> out;
  if (!j.is_object() || !j.contains("entries")) return out;
  for (const auto& e : j["entries"]) out.push_back(TranscriptEntry::FromJson(e));
  return out;
}

}  // namespace miso::net
