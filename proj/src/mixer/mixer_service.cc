#include "miso/mixer/mixer_service.h"

#include <openssl/bio.h>
#include <openssl/pem.h>
#include <openssl/x509.h>

#include <algorithm>
#include <charconv>
#include <stdexcept>

#include "miso/common/file_util.h"
#include "miso/crypto/random.h"
#include "miso/oauth/oauth.h"

namespace miso::mixer {
namespace {

using crypto::Digest;
using crypto::RawUserId;
using nlohmann::json;

constexpr char kPrfKeyLabel[] = "prf_key";
constexpr char kServerKeyLabel[] = "server_key";
constexpr char kSaltsLabel[] = "salts";
constexpr char kTagsLabel[] = "tags";
constexpr char kRpsLabel[] = "rps";
constexpr char kIdpCredentialsLabel[] = "idp_credentials";
constexpr char kPoliciesLabel[] = "policies";

// DER SubjectPublicKeyInfo of the certificate in |pem_path|.
crypto::Bytes CertificatePublicKey(const std::filesystem::path& pem_path) {
  std::string pem = ReadFileOrThrow(pem_path);
  BIO* bio = BIO_new_mem_buf(pem.data(), static_cast<int>(pem.size()));
  X509* cert = bio ? PEM_read_bio_X509(bio, nullptr, nullptr, nullptr) : nullptr;
  BIO_free(bio);
  if (cert == nullptr) throw std::runtime_error("cannot parse certificate " + pem_path.string());
  EVP_PKEY* key = X509_get0_pubkey(cert);
  int len = key ? i2d_PUBKEY(key, nullptr) : -1;
  crypto::Bytes der(len > 0 ? len : 0);
  uint8_t* out = der.data();
  if (len <= 0 || i2d_PUBKEY(key, &out) != len) {
    X509_free(cert);
    throw std::runtime_error("cannot encode certificate key " + pem_path.string());
  }
  X509_free(cert);
  return der;
}

std::vector<std::string> SplitList(const std::string& text) {
  std::vector<std::string> out;
  size_t start = 0;
  while (start <= text.size()) {
    size_t comma = text.find(',', start);
    if (comma == std::string::npos) comma = text.size();
    std::string item = text.substr(start, comma - start);
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) out.push_back(item);
    start = comma + 1;
  }
  return out;
}

std::optional<int> ParseInt(const std::string& text) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) return std::nullopt;
  return value;
}

}  // namespace

const std::set<std::string>& KnownAttributes() {
  static const std::set<std::string> kKnown = {"display_name", "email"};
  return kKnown;
}

MixerOptions MixerOptions::FromConfig(const KeyValueConfig& config) {
  MixerOptions o;
  o.state_dir = config.Require("state_dir");
  o.platform_dir = config.GetOr("platform_dir", "");
  o.seal_mode = enclave::ParseSealMode(config.GetOr("seal_mode", "mrenclave"));
  o.program_descriptor = config.GetOr("program_descriptor", kDefaultProgramDescriptor);
  o.signer_name = config.GetOr("signer_name", o.signer_name);
  o.public_url = config.GetOr("public_url", "");
  o.default_m = static_cast<int>(config.GetInt("default_m", 0));
  o.allow_http_loopback = config.GetBool("allow_http_loopback", true);
  o.record_transcript = config.GetBool("debug_transcript", false);
  o.insecure_leak_cid_rp = config.GetBool("debug.insecure_leak_cid_rp", false);
  o.insecure_passthrough_uid = config.GetBool("debug.insecure_passthrough_uid", false);
  o.server.worker_threads = static_cast<int>(config.GetInt("worker_threads", 16));
  o.client.ca_cert_file = config.GetOr("ca_cert", "");
  if (!config.GetBool("plaintext", false)) {
    if (!config.Has("tls_cert") || !config.Has("tls_key")) {
      throw ConfigError("set tls_cert and tls_key, or plaintext = true");
    }
    o.server.tls_cert_file = config.Require("tls_cert");
    o.server.tls_key_file = config.Require("tls_key");
  }
  for (const auto& id : config.SubKeys("idp")) {
    const std::string prefix = "idp." + id + ".";
    IdpEndpoint e;
    e.idp_id = id;
    e.auth_url = config.Require(prefix + "auth_url");
    e.token_url = config.Require(prefix + "token_url");
    e.res_url = config.Require(prefix + "res_url");
    e.register_url = config.GetOr(prefix + "register_url", "");
    e.client_id = config.GetOr(prefix + "client_id", "");
    e.client_secret = config.GetOr(prefix + "client_secret", "");
    if (e.register_url.empty() && (e.client_id.empty() || e.client_secret.empty())) {
      throw ConfigError("idp " + id + " needs client_id and client_secret, or register_url");
    }
    o.idps.push_back(std::move(e));
  }
  if (o.idps.empty()) throw ConfigError("no idp.<id>.* entries configured");
  return o;
}

MixerService::MixerService(MixerOptions options)
    : options_(std::move(options)),
      transcript_(std::make_shared<net::Transcript>("mixer")),
      http_(options_.client, options_.record_transcript ? transcript_ : nullptr),
      codes_(options_.clock, oauth::kCodeLifetime),
      tokens_(options_.clock, oauth::kTokenLifetime) {
  if (options_.state_dir.empty()) throw ConfigError("mixer state_dir is required");
  if (options_.platform_dir.empty()) options_.platform_dir = options_.state_dir / "platform";
  std::sort(options_.idps.begin(), options_.idps.end(),
            [](const auto& a, const auto& b) { return a.idp_id < b.idp_id; });
  std::filesystem::create_directories(options_.state_dir);

  platform_ = enclave::AttestationPlatform::Open(options_.platform_dir);
  identity_ = platform_->Install(crypto::AsBytes(options_.program_descriptor),
                                 options_.signer_name);
  auto sealed = [this](const char* label) {
    return SealedFile(platform_, identity_.eid, options_.state_dir, label, options_.seal_mode);
  };

  SealedFile prf_file = sealed(kPrfKeyLabel);
  if (auto bytes = prf_file.Read()) {
    prf_key_ = crypto::PrfKey::FromBytes(*bytes);
    crypto::SecureWipe(*bytes);
  } else {
    prf_key_ = crypto::PrfKey::Generate();
    prf_file.Write(prf_key_->bytes());
  }

  SealedFile server_key_file = sealed(kServerKeyLabel);
  if (auto seed = server_key_file.Read()) {
    server_key_ = crypto::SigningKey::FromSeed(*seed);
    crypto::SecureWipe(*seed);
  } else {
    server_key_ = crypto::SigningKey::Generate();
    crypto::Bytes fresh_seed = server_key_->seed();
    server_key_file.Write(fresh_seed);
    crypto::SecureWipe(fresh_seed);
  }
  server_public_key_ = options_.server.tls_cert_file.empty()
                           ? server_key_->public_key()
                           : CertificatePublicKey(options_.server.tls_cert_file);
  attestation_ = platform_->Attest(identity_.eid, server_public_key_);

  salts_ = std::make_unique<SaltTable>(sealed(kSaltsLabel));
  tags_ = std::make_unique<TagTable>(sealed(kTagsLabel));
  rps_ = std::make_unique<RpRegistry>(sealed(kRpsLabel));
  idp_credentials_ = std::make_unique<IdpCredentialStore>(sealed(kIdpCredentialsLabel));
  policies_ = std::make_unique<PolicyStore>(sealed(kPoliciesLabel));
}

MixerService::~MixerService() { Stop(); }

int MixerService::Listen(const std::string& host, int port) {
  server_ = std::make_unique<net::HttpServer>(options_.server);
  if (options_.record_transcript) server_->AttachTranscript(transcript_);
  server_->Get("/auth_mixer", [this](const net::Request& r) { return HandleAuthorize(r); });
  server_->Get("/callback", [this](const net::Request& r) { return HandleCallback(r); });
  server_->Post("/token_mixer", [this](const net::Request& r) { return HandleToken(r); });
  server_->Get("/res_mixer", [this](const net::Request& r) { return HandleResource(r); });
  server_->Get("/attestation", [this](const net::Request& r) { return HandleAttestation(r); });
  server_->Post("/register", [this](const net::Request& r) { return HandleRegister(r); });
  server_->Get("/policy", [this](const net::Request& r) { return HandlePolicyForm(r); });
  server_->Post("/policy", [this](const net::Request& r) { return HandlePolicy(r); });
  int bound = server_->Bind(host, port);
  base_url_ = options_.public_url.empty()
                  ? std::string(server_->tls() ? "https" : "http") + "://" + host + ":" +
                        std::to_string(bound)
                  : options_.public_url;
  while (!base_url_.empty() && base_url_.back() == '/') base_url_.pop_back();
  EnsureIdpCredentials();
  server_->Start();
  return bound;
}

void MixerService::Stop() {
  if (server_) server_->Stop();
}

void MixerService::EnsureIdpCredentials() {
  const std::string uri_mixer = callback_url();
  for (const auto& idp : options_.idps) {
    if (!idp.client_id.empty() && !idp.client_secret.empty()) {
      idp_credentials_->Put(idp.idp_id, {idp.client_id, idp.client_secret, uri_mixer});
      continue;
    }
    auto existing = idp_credentials_->Find(idp.idp_id);
    if (existing && existing->redirect_uri == uri_mixer) continue;
    auto resp = http_.PostJson(idp.register_url,
                               {{"redirect_uri", uri_mixer}, {"client_name", "MISO mixer"}});
    json body = resp.Json();
    if (!resp.ok() || !body.is_object() || !body.contains("client_id") ||
        !body.contains("client_secret")) {
      throw std::runtime_error("registration at " + idp.idp_id + " failed: " +
                               (resp.status == 0 ? resp.error : std::to_string(resp.status)));
    }
    idp_credentials_->Put(idp.idp_id, {body["client_id"], body["client_secret"], uri_mixer});
  }
}

RpRecord MixerService::RegisterRp(const std::string& redirect_uri) {
  return rps_->Register(redirect_uri);
}

const IdpEndpoint* MixerService::FindIdp(const std::string& idp_id) const {
  for (const auto& idp : options_.idps) {
    if (idp.idp_id == idp_id) return &idp;
  }
  return nullptr;
}

const char* MixerService::PhaseName(Phase phase) {
  switch (phase) {
    case Phase::kAwaitIdpAuth: return "await_idp_auth";
    case Phase::kAwaitNextIdp: return "await_next_idp";
    case Phase::kFinalized: return "finalized";
    case Phase::kFailed: return "failed";
  }
  return "unknown";
}

std::string MixerService::StartSubFlowLocked(Session& session) {
  SubFlow& flow = session.flows[session.current];
  const IdpEndpoint* idp = FindIdp(flow.idp_id);
  auto credential = idp_credentials_->Find(flow.idp_id);
  if (idp == nullptr || !credential) {
    throw std::runtime_error("no credentials for " + flow.idp_id);
  }
  flow.state_mixer = crypto::GenSecretToken();
  state_index_[flow.state_mixer] = session.id;
  net::Params params = {{"response_type", "code"},
                        {"client_id", credential->client_id},
                        {"redirect_uri", callback_url()},
                        {"state", flow.state_mixer}};
  if (options_.insecure_leak_cid_rp) params["rp_client_id"] = session.cid_rp;
  return net::AppendQuery(idp->auth_url, params);
}

void MixerService::SweepSessionsLocked() {
  if (++created_since_sweep_ < 256) return;
  created_since_sweep_ = 0;
  const TimePoint cutoff = options_.clock() - oauth::kSessionLifetime;
  for (auto it = sessions_.begin(); it != sessions_.end();) {
    if (it->second.created_at > cutoff) {
      ++it;
      continue;
    }
    for (const auto& flow : it->second.flows) state_index_.erase(flow.state_mixer);
    it = sessions_.erase(it);
  }
}

net::Reply MixerService::HandleAuthorize(const net::Request& req) {
  auto rp = rps_->Find(req.Param("client_id").value_or(""));
  if (!rp) return net::Reply::Error(401, oauth::kInvalidClient);
  if (req.Param("redirect_uri").value_or("") != rp->redirect_uri) {
    return net::Reply::Error(400, oauth::kInvalidRedirectUri);
  }
  auto response_type = req.Param("response_type");
  if (!response_type) return net::Reply::Error(400, oauth::kInvalidRequest);
  if (*response_type != "code") return net::Reply::Error(400, oauth::kUnsupportedResponseType);
  auto state_rp = req.Param("state");
  if (!state_rp || state_rp->empty()) return net::Reply::Error(400, oauth::kInvalidRequest);

  std::vector<std::string> idp_list = SplitList(req.Param("idp_list").value_or(""));
  if (idp_list.empty()) {
    if (options_.idps.size() != 1) return net::Reply::Error(400, oauth::kInvalidRequest);
    idp_list.push_back(options_.idps.front().idp_id);
  }
  std::sort(idp_list.begin(), idp_list.end());
  idp_list.erase(std::unique(idp_list.begin(), idp_list.end()), idp_list.end());
  for (const auto& id : idp_list) {
    if (FindIdp(id) == nullptr) return net::Reply::Error(400, "unknown_idp");
  }
  const int n = static_cast<int>(idp_list.size());

  auto m_param = req.Param("m");
  int m = options_.default_m > 0 ? std::min(options_.default_m, n) : std::max(1, n - 1);
  if (m_param) {
    auto parsed = ParseInt(*m_param);
    if (!parsed) return net::Reply::Error(400, oauth::kInvalidRequest);
    if (*parsed < 1 || *parsed > n) return net::Reply::Error(400, "invalid_threshold");
    m = *parsed;
  }

  Session session;
  session.id = crypto::GenSecretToken();
  session.cid_rp = rp->client_id;
  session.state_rp = *state_rp;
  session.redirect_uri = rp->redirect_uri;
  session.multi = n >= 2 || m_param.has_value();
  session.m = session.multi ? m : 1;
  session.created_at = options_.clock();
  for (const auto& id : idp_list) session.flows.push_back(SubFlow{id, "", "", std::nullopt, {}});

  std::string location;
  {
    std::lock_guard lock(sessions_mu_);
    SweepSessionsLocked();
    auto [it, inserted] = sessions_.emplace(session.id, std::move(session));
    location = StartSubFlowLocked(it->second);
    return net::Reply::Redirect(location).SetCookie(kSessionCookie, it->first);
  }
}

void MixerService::FailSession(const std::string& session_id) {
  std::lock_guard lock(sessions_mu_);
  auto it = sessions_.find(session_id);
  if (it == sessions_.end()) return;
  it->second.phase = Phase::kFailed;
  for (auto& flow : it->second.flows) crypto::SecureWipe(flow.token_mixer);
}

net::Reply MixerService::HandleCallback(const net::Request& req) {
  const std::string state = req.Param("state").value_or("");
  std::string session_id;
  std::string state_rp;
  std::string redirect_uri;
  std::string idp_id;
  size_t index = 0;
  {
    std::lock_guard lock(sessions_mu_);
    auto idx = state_index_.find(state);
    if (state.empty() || idx == state_index_.end()) {
      return net::Reply::Error(400, "invalid_state");
    }
    session_id = idx->second;
    state_index_.erase(idx);
    auto it = sessions_.find(session_id);
    if (it == sessions_.end()) return net::Reply::Error(400, "invalid_state");
    Session& session = it->second;
    if (options_.clock() - session.created_at >= oauth::kSessionLifetime) {
      session.phase = Phase::kFailed;
      return net::Reply::Error(400, "session_expired");
    }
    if (session.phase == Phase::kFailed || session.phase == Phase::kFinalized ||
        session.flows[session.current].state_mixer != state) {
      return net::Reply::Error(400, "invalid_state");
    }
    state_rp = session.state_rp;
    redirect_uri = session.redirect_uri;
    index = session.current;
    idp_id = session.flows[index].idp_id;
  }

  if (auto error = req.Param("error")) {
    FailSession(session_id);
    std::string code = *error == oauth::kAccessDenied ? *error : "server_error";
    return net::Reply::Redirect(
        net::AppendQuery(redirect_uri, {{"error", code}, {"state", state_rp}}));
  }
  auto code = req.Param("code");
  if (!code || code->empty()) {
    FailSession(session_id);
    return net::Reply::Error(400, oauth::kInvalidRequest);
  }

  const IdpEndpoint* idp = FindIdp(idp_id);
  auto credential = idp_credentials_->Find(idp_id);
  net::HttpResponse token_resp =
      http_.PostForm(idp->token_url, {{"grant_type", "authorization_code"},
                                      {"code", *code},
                                      {"redirect_uri", callback_url()},
                                      {"client_id", credential->client_id},
                                      {"client_secret", credential->client_secret}});
  json token_body = token_resp.Json();
  if (!token_resp.ok() || !token_body.is_object() || !token_body.contains("access_token") ||
      !token_body["access_token"].is_string()) {
    FailSession(session_id);
    return net::Reply::Error(502, "idp_token_exchange_failed");
  }
  std::string token_mixer = token_body["access_token"].get<std::string>();
  {
    std::lock_guard lock(sessions_mu_);
    auto it = sessions_.find(session_id);
    if (it != sessions_.end()) it->second.flows[index].token_mixer = token_mixer;
  }
  net::HttpResponse res_resp =
      http_.Get(idp->res_url, {{"Authorization", "Bearer " + token_mixer}});
  crypto::SecureWipe(token_mixer);
  token_resp.body.clear();

  json res_body = res_resp.Json();
  std::optional<std::string> uid;
  std::map<std::string, std::string> attributes;
  if (res_resp.ok() && res_body.is_object() && res_body.contains("uid") &&
      res_body["uid"].is_string() && !res_body["uid"].get<std::string>().empty()) {
    uid = res_body["uid"].get<std::string>();
    if (res_body.contains("attributes") && res_body["attributes"].is_object()) {
      for (const auto& [name, value] : res_body["attributes"].items()) {
        if (value.is_string()) attributes[name] = value.get<std::string>();
      }
    }
  }

  std::string next_location;
  {
    std::lock_guard lock(sessions_mu_);
    auto it = sessions_.find(session_id);
    if (it == sessions_.end()) return net::Reply::Error(400, "invalid_state");
    Session& session = it->second;
    crypto::SecureWipe(session.flows[index].token_mixer);
    if (!uid) {
      session.phase = Phase::kFailed;
      return net::Reply::Error(502, "idp_resource_failed");
    }
    session.flows[index].uid = std::move(uid);
    session.flows[index].attributes = std::move(attributes);
    ++session.current;
    if (session.current < session.flows.size()) {
      session.phase = Phase::kAwaitNextIdp;
      next_location = StartSubFlowLocked(session);
    }
  }
  if (!next_location.empty()) return net::Reply::Redirect(next_location);
  return Finalize(session_id);
}

std::variant<MixerService::Blinded, net::Reply> MixerService::Blind(const Session& session) {
  std::vector<RawUserId> raws;
  for (const auto& flow : session.flows) raws.push_back({flow.idp_id, *flow.uid});
  const crypto::PrfKey& key = *prf_key_;

  if (options_.insecure_passthrough_uid) {
    std::string joined;
    for (const auto& raw : raws) joined += (joined.empty() ? "" : ",") + raw.uid;
    return Blinded{joined, crypto::DeriveMultiPreUid(key, raws, session.cid_rp)};
  }

  if (!session.multi) {
    Digest pre_uid = crypto::DerivePreUid(key, raws.front(), session.cid_rp);
    crypto::Salt salt = salts_->GetOrCreate(pre_uid);
    Digest uid = crypto::DeriveUid(key, raws.front(), session.cid_rp, salt);
    return Blinded{crypto::HexEncode(uid), pre_uid};
  }

  std::set<Digest> tags;
  for (const auto& raw : raws) tags.insert(crypto::DeriveTag(key, raw));
  TagMatch match = tags_->Match(session.cid_rp, tags);
  switch (match.kind) {
    case TagMatch::Kind::kAmbiguous:
      return net::Reply::Error(409, "ambiguous_match");
    case TagMatch::Kind::kPartial:
      return net::Reply::Error(403, "threshold_not_met");
    case TagMatch::Kind::kMatched:
      return Blinded{crypto::HexEncode(match.record->uid), match.record->policy_key};
    case TagMatch::Kind::kNone:
      break;
  }
  Digest pre_uid = crypto::DeriveMultiPreUid(key, raws, session.cid_rp);
  crypto::Salt salt = salts_->GetOrCreate(pre_uid);
  TagRecord record;
  record.tags = std::move(tags);
  record.n = static_cast<int>(raws.size());
  record.m = session.m;
  record.cid_rp = session.cid_rp;
  record.uid = crypto::DeriveMultiUid(key, raws, session.cid_rp, salt);
  record.policy_key = pre_uid;
  TagRecord stored = tags_->EnrollOrGet(std::move(record));
  return Blinded{crypto::HexEncode(stored.uid), stored.policy_key};
}

net::Reply MixerService::Finalize(const std::string& session_id) {
  Session snapshot;
  {
    std::lock_guard lock(sessions_mu_);
    auto it = sessions_.find(session_id);
    if (it == sessions_.end()) return net::Reply::Error(400, "invalid_state");
    snapshot = it->second;
  }
  auto blinded = Blind(snapshot);
  if (auto* error = std::get_if<net::Reply>(&blinded)) {
    FailSession(session_id);
    return *error;
  }
  const Blinded& result = std::get<Blinded>(blinded);

  Grant grant{snapshot.cid_rp, snapshot.redirect_uri, result.sub, {}};
  for (const auto& name : policies_->Allowed(result.policy_key)) {
    for (const auto& flow : snapshot.flows) {
      auto attr = flow.attributes.find(name);
      if (attr != flow.attributes.end()) {
        grant.attributes.emplace(name, attr->second);
        break;
      }
    }
  }
  {
    std::lock_guard lock(sessions_mu_);
    auto it = sessions_.find(session_id);
    if (it != sessions_.end()) {
      it->second.phase = Phase::kFinalized;
      it->second.policy_key = result.policy_key;
      if (!options_.insecure_passthrough_uid) {
        it->second.uid_blinded = crypto::DigestFromHex(result.sub);
      }
    }
  }
  std::string code_rp = codes_.Issue(std::move(grant));
  return net::Reply::Redirect(
      net::AppendQuery(snapshot.redirect_uri, {{"code", code_rp}, {"state", snapshot.state_rp}}));
}

net::Reply MixerService::HandleToken(const net::Request& req) {
  auto grant_type = req.Param("grant_type");
  if (!grant_type) return net::Reply::Error(400, oauth::kInvalidRequest);
  if (*grant_type != "authorization_code") {
    return net::Reply::Error(400, oauth::kUnsupportedGrantType);
  }
  auto rp = rps_->Find(req.Param("client_id").value_or(""));
  if (!rp || !crypto::ConstantTimeEquals(req.Param("client_secret").value_or(""),
                                         rp->client_secret)) {
    return net::Reply::Error(401, oauth::kInvalidClient);
  }
  auto grant = codes_.Take(req.Param("code").value_or(""));
  if (!grant || grant->cid_rp != rp->client_id ||
      grant->redirect_uri != req.Param("redirect_uri").value_or("")) {
    return net::Reply::Error(400, oauth::kInvalidGrant);
  }
  std::string token_rp = tokens_.Issue(std::move(*grant));
  return net::Reply::Json(200, {{"access_token", token_rp},
                                {"token_type", "Bearer"},
                                {"expires_in", tokens_.lifetime().count()}})
      .AddHeader("Cache-Control", "no-store");
}

net::Reply MixerService::HandleResource(const net::Request& req) {
  auto bearer = req.BearerToken();
  auto grant = bearer ? tokens_.Peek(*bearer) : std::nullopt;
  if (!grant) {
    return net::Reply::Error(401, oauth::kInvalidToken)
        .AddHeader("WWW-Authenticate", "Bearer error=\"invalid_token\"");
  }
  return net::Reply::Json(200, {{"sub", grant->sub}, {"attributes", grant->attributes}});
}

net::Reply MixerService::HandleAttestation(const net::Request&) {
  return net::Reply::Json(200, {{"pk_server", crypto::HexEncode(attestation_.payload)},
                                {"measurement", crypto::HexEncode(attestation_.measurement)},
                                {"signature", crypto::HexEncode(attestation_.signature)}});
}

net::Reply MixerService::HandleRegister(const net::Request& req) {
  json body = json::parse(req.body, nullptr, false);
  if (!body.is_object() || !body.contains("redirect_uri") || !body["redirect_uri"].is_string()) {
    return net::Reply::Error(400, oauth::kInvalidRedirectUri);
  }
  std::string uri = body["redirect_uri"].get<std::string>();
  if (!oauth::IsAcceptableRedirectUri(uri, options_.allow_http_loopback)) {
    return net::Reply::Error(400, oauth::kInvalidRedirectUri);
  }
  RpRecord record = RegisterRp(uri);
  return net::Reply::Json(201, {{"client_id", record.client_id},
                                {"client_secret", record.client_secret}});
}

std::optional<MixerService::Session> MixerService::SessionFromCookie(
    const net::Request& req) const {
  auto sid = req.Cookie(kSessionCookie);
  if (!sid) return std::nullopt;
  std::lock_guard lock(sessions_mu_);
  auto it = sessions_.find(*sid);
  if (it == sessions_.end() ||
      options_.clock() - it->second.created_at >= oauth::kSessionLifetime) {
    return std::nullopt;
  }
  return it->second;
}

namespace {

// Policy key of a session whose user has proven account ownership: the
// enrollment key once finalized, or the single-IdP preUID after its inner flow.
std::optional<Digest> OwnedPolicyKey(const std::optional<Digest>& finalized_key, bool multi,
                                     const std::optional<std::string>& first_uid,
                                     const std::string& first_idp, const crypto::PrfKey& key,
                                     const std::string& cid_rp) {
  if (finalized_key) return finalized_key;
  if (!multi && first_uid) return crypto::DerivePreUid(key, {first_idp, *first_uid}, cid_rp);
  return std::nullopt;
}

}  // namespace

net::Reply MixerService::HandlePolicyForm(const net::Request& req) {
  auto session = SessionFromCookie(req);
  if (!session) return net::Reply::Error(401, "login_required");
  auto key = OwnedPolicyKey(session->policy_key, session->multi, session->flows.front().uid,
                            session->flows.front().idp_id, *prf_key_, session->cid_rp);
  if (!key) return net::Reply::Error(401, "login_required");
  std::set<std::string> allowed = policies_->Allowed(*key);
  std::string boxes;
  for (const auto& name : KnownAttributes()) {
    boxes += "<label><input type=\"checkbox\" name=\"allow_" + name + "\" value=\"1\"" +
             (allowed.count(name) ? " checked" : "") + "> " + name + "</label>\n";
  }
  return net::Reply::Html(
      200,
      "<!doctype html><html><head><title>Disclosure preferences</title></head><body>\n"
      "<h1>Attributes shared with this application</h1>\n"
      "<form method=\"post\" action=\"/policy\">\n" +
          boxes +
          "<button>Save</button>\n</form></body></html>\n");
}

net::Reply MixerService::HandlePolicy(const net::Request& req) {
  auto session = SessionFromCookie(req);
  if (!session) return net::Reply::Error(401, "login_required");
  auto key = OwnedPolicyKey(session->policy_key, session->multi, session->flows.front().uid,
                            session->flows.front().idp_id, *prf_key_, session->cid_rp);
  if (!key) return net::Reply::Error(401, "login_required");

  std::set<std::string> attributes;
  for (const auto& name : SplitList(req.Param("attributes").value_or(""))) {
    attributes.insert(name);
  }
  for (const auto& name : KnownAttributes()) {
    if (req.form.count("allow_" + name)) attributes.insert(name);
  }
  for (const auto& name : attributes) {
    if (!KnownAttributes().count(name)) return net::Reply::Error(400, "invalid_attribute");
  }
  policies_->Set(*key, attributes);
  return net::Reply::Json(200, {{"allowed", attributes}});
}

json MixerService::DebugDumpSessions() const {
  std::lock_guard lock(sessions_mu_);
  json out = json::array();
  for (const auto& [id, s] : sessions_) {
    json flows = json::array();
    for (const auto& f : s.flows) {
      flows.push_back({{"idp_id", f.idp_id},
                       {"state_mixer", f.state_mixer},
                       {"token_mixer", f.token_mixer},
                       {"uid", f.uid.value_or("")},
                       {"attributes", f.attributes}});
    }
    out.push_back({{"session_id", id},
                   {"cid_rp", s.cid_rp},
                   {"state_rp", s.state_rp},
                   {"mode", s.multi ? "multi" : "single"},
                   {"m", s.m},
                   {"phase", PhaseName(s.phase)},
                   {"flows", flows},
                   {"uid_blinded", s.uid_blinded ? crypto::HexEncode(*s.uid_blinded) : ""}});
  }
  return out;
}

std::map<std::string, crypto::Bytes> MixerService::DebugUnsealAll() const {
  std::map<std::string, crypto::Bytes> out;
  for (const char* label : {kPrfKeyLabel, kServerKeyLabel, kSaltsLabel, kTagsLabel, kRpsLabel,
                            kIdpCredentialsLabel, kPoliciesLabel}) {
    SealedFile file(platform_, identity_.eid, options_.state_dir, label, options_.seal_mode);
    if (auto bytes = file.Read()) out[label] = std::move(*bytes);
  }
  return out;
}

}  // namespace miso::mixer
