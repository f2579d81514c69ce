#include "miso/rp/rp_service.h"

#include <chrono>
#include <cstdio>

#include "miso/common/file_util.h"
#include "miso/crypto/random.h"
#include "miso/enclave/attestation_platform.h"
#include "miso/oauth/oauth.h"

namespace miso::rp {
namespace {

using nlohmann::json;

constexpr char kPinnedFile[] = "pinned_mixer.json";
constexpr char kCredentialsFile[] = "credentials.json";
constexpr char kAccountsFile[] = "accounts.json";
constexpr size_t kLogCapacity = 20000;

int64_t UnixSeconds(TimePoint t) {
  return std::chrono::duration_cast<std::chrono::seconds>(t.time_since_epoch()).count();
}

// Descriptor of the IdP set a login used, part of the account key.
std::string IdpSetDescriptor(const std::string& idp_list, bool has_m) {
  if (idp_list.empty()) return "default";
  if (has_m || idp_list.find(',') != std::string::npos) return "multi";
  return idp_list;
}

}  // namespace

RpOptions RpOptions::FromConfig(const KeyValueConfig& config) {
  RpOptions o;
  o.rp_id = config.GetOr("rp_id", o.rp_id);
  o.state_dir = config.Require("state_dir");
  o.baseline_mode = config.GetBool("baseline_mode", false);
  if (o.baseline_mode) {
    o.provider_url = config.Require("idp_url");
  } else {
    o.provider_url = config.Require("mixer_url");
    o.expected_measurement = crypto::DigestFromHex(config.Require("expected_measurement"));
    o.tee_public_key = crypto::HexDecode(config.Require("tee_public_key"));
  }
  o.public_url = config.GetOr("public_url", "");
  o.client_id = config.GetOr("client_id", "");
  o.client_secret = config.GetOr("client_secret", "");
  o.record_transcript = config.GetBool("debug_transcript", false);
  o.server.worker_threads = static_cast<int>(config.GetInt("worker_threads", 16));
  o.client.ca_cert_file = config.GetOr("ca_cert", "");
  o.server.tls_cert_file = config.GetOr("tls_cert", "");
  o.server.tls_key_file = config.GetOr("tls_key", "");
  return o;
}

RpService::RpService(RpOptions options)
    : options_(std::move(options)),
      transcript_(std::make_shared<net::Transcript>(options_.rp_id)),
      http_(options_.client, options_.record_transcript ? transcript_ : nullptr) {
  if (options_.state_dir.empty()) throw ConfigError("rp state_dir is required");
  while (!options_.provider_url.empty() && options_.provider_url.back() == '/') {
    options_.provider_url.pop_back();
  }
  std::filesystem::create_directories(options_.state_dir);
  if (auto saved = ReadFileIfExists(options_.state_dir / kAccountsFile)) {
    for (const auto& a : json::parse(*saved)) {
      RpAccount account{a.at("account_id"), a.at("idp_set"), a.at("sub"),
                        a.value("attributes", std::map<std::string, std::string>{}),
                        a.at("first_login"), a.at("last_login")};
      accounts_[account.idp_set + "|" + account.sub] = account;
      ++next_account_;
    }
  }
}

RpService::~RpService() { Stop(); }

int RpService::Listen(const std::string& host, int port) {
  server_ = std::make_unique<net::HttpServer>(options_.server);
  if (options_.record_transcript) server_->AttachTranscript(transcript_);
  server_->Get("/login", [this](const net::Request& r) { return HandleLogin(r); });
  server_->Get("/cb", [this](const net::Request& r) { return HandleCallback(r); });
  server_->Get("/me", [this](const net::Request& r) { return HandleMe(r); });
  if (options_.record_transcript) {
    server_->Get("/debug/log", [this](const net::Request& r) { return HandleLog(r); });
  }
  int bound = server_->Bind(host, port);
  base_url_ = options_.public_url.empty()
                  ? std::string(server_->tls() ? "https" : "http") + "://" + host + ":" +
                        std::to_string(bound)
                  : options_.public_url;
  while (!base_url_.empty() && base_url_.back() == '/') base_url_.pop_back();
  Bootstrap();
  server_->Start();
  return bound;
}

void RpService::Stop() {
  if (server_) server_->Stop();
}

std::string RpService::Endpoint(const char* mixer_path, const char* idp_path) const {
  return options_.provider_url + (options_.baseline_mode ? idp_path : mixer_path);
}

void RpService::Bootstrap() {
  if (!options_.baseline_mode) VerifyAndPin();
  EnsureRegistered();
}

void RpService::VerifyAndPin() {
  auto resp = http_.Get(options_.provider_url + "/attestation");
  json body = resp.Json();
  if (!resp.ok() || !body.is_object()) {
    throw AttestationError("cannot fetch attestation from " + options_.provider_url);
  }
  enclave::AttestationReport report;
  try {
    report.payload = crypto::HexDecode(body.at("pk_server").get<std::string>());
    report.measurement = crypto::DigestFromHex(body.at("measurement").get<std::string>());
    report.signature = crypto::HexDecode(body.at("signature").get<std::string>());
  } catch (const std::exception& e) {
    throw AttestationError(std::string("malformed attestation: ") + e.what());
  }
  if (!enclave::VerifyAttestation(options_.tee_public_key, report,
                                  options_.expected_measurement)) {
    throw AttestationError("mixer attestation does not verify");
  }

  const auto pinned_path = options_.state_dir / kPinnedFile;
  if (auto saved = ReadFileIfExists(pinned_path)) {
    json pinned = json::parse(*saved);
    crypto::Bytes pk = crypto::HexDecode(pinned.at("pk_server").get<std::string>());
    crypto::Digest measurement = crypto::DigestFromHex(pinned.at("measurement").get<std::string>());
    if (!crypto::ConstantTimeEquals(pk, report.payload) || measurement != report.measurement) {
      throw RepinRequired("mixer key or measurement differs from the pinned values in " +
                          pinned_path.string());
    }
    return;
  }
  json pinned = {{"pk_server", crypto::HexEncode(report.payload)},
                 {"measurement", crypto::HexEncode(report.measurement)},
                 {"pinned_at", UnixSeconds(options_.clock())}};
  AtomicWriteFile(pinned_path, pinned.dump(2));
}

std::optional<PinnedMixer> RpService::pinned() const {
  auto saved = ReadFileIfExists(options_.state_dir / kPinnedFile);
  if (!saved) return std::nullopt;
  json j = json::parse(*saved);
  return PinnedMixer{crypto::HexDecode(j.at("pk_server").get<std::string>()),
                     crypto::DigestFromHex(j.at("measurement").get<std::string>()),
                     j.at("pinned_at").get<int64_t>()};
}

void RpService::EnsureRegistered() {
  if (!options_.client_id.empty() && !options_.client_secret.empty()) {
    client_id_ = options_.client_id;
    client_secret_ = options_.client_secret;
    return;
  }
  const auto path = options_.state_dir / kCredentialsFile;
  if (auto saved = ReadFileIfExists(path)) {
    json c = json::parse(*saved);
    if (c.value("redirect_uri", "") == redirect_uri() &&
        c.value("provider_url", "") == options_.provider_url) {
      client_id_ = c.at("client_id");
      client_secret_ = c.at("client_secret");
      return;
    }
  }
  auto resp = http_.PostJson(options_.provider_url + "/register",
                             {{"redirect_uri", redirect_uri()}, {"client_name", options_.rp_id}});
  json body = resp.Json();
  if (!resp.ok() || !body.is_object() || !body.contains("client_id")) {
    throw std::runtime_error("registration at " + options_.provider_url + " failed: " +
                             (resp.status == 0 ? resp.error : std::to_string(resp.status)));
  }
  client_id_ = body["client_id"];
  client_secret_ = body["client_secret"];
  AtomicWriteFile(path,
                  json{{"client_id", client_id_},
                       {"client_secret", client_secret_},
                       {"redirect_uri", redirect_uri()},
                       {"provider_url", options_.provider_url}}
                      .dump(2),
                  true);
}

net::Reply RpService::HandleLogin(const net::Request& req) {
  const std::string idp_list = req.Param("idp_list").value_or("");
  auto m = req.Param("m");

  Session session{crypto::GenSecretToken(), IdpSetDescriptor(idp_list, m.has_value()),
                  std::nullopt, options_.clock()};
  net::Params params = {{"response_type", "code"},
                        {"client_id", client_id_},
                        {"redirect_uri", redirect_uri()},
                        {"state", session.state_rp}};
  if (!options_.baseline_mode) {
    if (!idp_list.empty()) params["idp_list"] = idp_list;
    if (m) params["m"] = *m;
  }
  std::string sid = crypto::GenSecretToken();
  {
    std::lock_guard lock(mu_);
    const TimePoint cutoff = options_.clock() - oauth::kSessionLifetime;
    if (sessions_.size() > 4096) {
      for (auto it = sessions_.begin(); it != sessions_.end();) {
        it = it->second.created_at < cutoff ? sessions_.erase(it) : std::next(it);
      }
    }
    sessions_[sid] = std::move(session);
  }
  return net::Reply::Redirect(
             net::AppendQuery(Endpoint("/auth_mixer", "/auth_IdP"), params))
      .SetCookie(kRpSessionCookie, sid);
}

net::Reply RpService::HandleCallback(const net::Request& req) {
  auto sid = req.Cookie(kRpSessionCookie);
  const std::string state = req.Param("state").value_or("");
  std::string idp_set;
  {
    std::lock_guard lock(mu_);
    auto it = sid ? sessions_.find(*sid) : sessions_.end();
    if (it == sessions_.end() || it->second.state_rp.empty() ||
        options_.clock() - it->second.created_at >= oauth::kSessionLifetime ||
        !crypto::ConstantTimeEquals(state, it->second.state_rp)) {
      return net::Reply::Error(403, "state_mismatch");
    }
    it->second.state_rp.clear();
    idp_set = it->second.idp_set;
  }

  if (auto error = req.Param("error")) {
    AppendLog({{"event", "login_cancelled"}, {"error", *error}});
    return net::Reply::Json(400, {{"error", *error}, {"message", "login cancelled"}});
  }
  auto code = req.Param("code");
  if (!code) return net::Reply::Error(400, oauth::kInvalidRequest);

  auto token_resp = http_.PostForm(Endpoint("/token_mixer", "/token_IdP"),
                                   {{"grant_type", "authorization_code"},
                                    {"code", *code},
                                    {"redirect_uri", redirect_uri()},
                                    {"client_id", client_id_},
                                    {"client_secret", client_secret_}});
  json token = token_resp.Json();
  if (!token_resp.ok() || !token.is_object() || !token.contains("access_token")) {
    AppendLog({{"event", "login_failed"}, {"step", "token"}, {"status", token_resp.status}});
    return net::Reply::Json(502, {{"error", "login_failed"}, {"step", "token"}});
  }
  auto res_resp = http_.Get(Endpoint("/res_mixer", "/res_IdP"),
                            {{"Authorization", "Bearer " + token["access_token"].get<std::string>()}});
  json res = res_resp.Json();
  const char* sub_field = options_.baseline_mode ? "uid" : "sub";
  if (!res_resp.ok() || !res.is_object() || !res.contains(sub_field) ||
      !res[sub_field].is_string()) {
    AppendLog({{"event", "login_failed"}, {"step", "resource"}, {"status", res_resp.status}});
    return net::Reply::Json(502, {{"error", "login_failed"}, {"step", "resource"}});
  }
  std::map<std::string, std::string> attributes;
  if (res.contains("attributes") && res["attributes"].is_object()) {
    for (const auto& [name, value] : res["attributes"].items()) {
      if (value.is_string()) attributes[name] = value.get<std::string>();
    }
  }
  RpAccount account = UpsertAccount(idp_set, res[sub_field].get<std::string>(), attributes);
  AppendLog({{"event", "login"},
             {"account_id", account.account_id},
             {"sub", account.sub},
             {"idp_set", idp_set},
             {"attributes", attributes}});
  {
    std::lock_guard lock(mu_);
    auto it = sessions_.find(*sid);
    if (it != sessions_.end()) it->second.account_id = account.account_id;
  }
  return net::Reply::Redirect(base_url_ + "/me");
}

RpAccount RpService::UpsertAccount(const std::string& idp_set, const std::string& sub,
                                   const std::map<std::string, std::string>& attributes) {
  const int64_t now = UnixSeconds(options_.clock());
  std::lock_guard lock(mu_);
  const std::string key = idp_set + "|" + sub;
  auto it = accounts_.find(key);
  if (it != accounts_.end()) {
    it->second.last_login = now;
    it->second.attributes = attributes;
    return it->second;
  }
  char id[32];
  std::snprintf(id, sizeof(id), "acct-%05d", next_account_++);
  RpAccount account{id, idp_set, sub, attributes, now, now};
  accounts_[key] = account;
  PersistAccountsLocked();
  return account;
}

void RpService::PersistAccountsLocked() const {
  json arr = json::array();
  for (const auto& [key, a] : accounts_) {
    arr.push_back({{"account_id", a.account_id},
                   {"idp_set", a.idp_set},
                   {"sub", a.sub},
                   {"attributes", a.attributes},
                   {"first_login", a.first_login},
                   {"last_login", a.last_login}});
  }
  AtomicWriteFile(options_.state_dir / kAccountsFile, arr.dump(2));
}

net::Reply RpService::HandleMe(const net::Request& req) {
  auto sid = req.Cookie(kRpSessionCookie);
  std::lock_guard lock(mu_);
  auto it = sid ? sessions_.find(*sid) : sessions_.end();
  if (it == sessions_.end() || !it->second.account_id) {
    return net::Reply::Error(401, "not_logged_in");
  }
  for (const auto& [key, a] : accounts_) {
    if (a.account_id == *it->second.account_id) {
      return net::Reply::Json(200, {{"account_id", a.account_id},
                                    {"idp_set", a.idp_set},
                                    {"sub", a.sub},
                                    {"attributes", a.attributes}});
    }
  }
  return net::Reply::Error(401, "not_logged_in");
}

net::Reply RpService::HandleLog(const net::Request&) {
  return net::Reply::Json(200, Log());
}

void RpService::AppendLog(json entry) {
  entry["rp"] = options_.rp_id;
  std::lock_guard lock(mu_);
  if (log_.size() >= kLogCapacity) log_.erase(log_.begin());
  log_.push_back(std::move(entry));
}

std::vector<RpAccount> RpService::Accounts() const {
  std::lock_guard lock(mu_);
  std::vector<RpAccount> out;
  for (const auto& [key, a] : accounts_) out.push_back(a);
  return out;
}

std::vector<json> RpService::Log() const {
  std::lock_guard lock(mu_);
  return log_;
}

}  // namespace miso::rp
