#include "miso/idp/idp_service.h"

#include <openssl/evp.h>

#include <stdexcept>

#include "miso/common/file_util.h"
#include "miso/crypto/encoding.h"
#include "miso/crypto/identity.h"
#include "miso/crypto/random.h"
#include "miso/oauth/oauth.h"

namespace miso::idp {
namespace {

constexpr char kClientsFile[] = "clients.json";

crypto::Digest HashPassword(const std::string& password, crypto::ByteView salt,
                            int iterations) {
  crypto::Digest out;
  if (PKCS5_PBKDF2_HMAC(password.data(), static_cast<int>(password.size()),
                        salt.data(), static_cast<int>(salt.size()), iterations,
                        EVP_sha256(), static_cast<int>(out.size()), out.data()) != 1) {
    throw std::runtime_error("PBKDF2 failed");
  }
  return out;
}

std::string HtmlEscape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&#39;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

}  // namespace

IdpOptions IdpOptions::FromConfig(const KeyValueConfig& config) {
  IdpOptions o;
  o.idp_id = config.Require("idp_id");
  o.display_name = config.GetOr("display_name", o.idp_id);
  o.state_dir = config.GetOr("state_dir", "");
  if (auto path = config.Get("fixtures")) o.fixtures = Fixtures::Load(*path);
  o.auto_consent = config.GetBool("auto_consent", false);
  o.allow_http_loopback = config.GetBool("allow_http_loopback", true);
  o.record_transcript = config.GetBool("debug_transcript", false);
  o.server.worker_threads = static_cast<int>(config.GetInt("worker_threads", 16));
  o.server.tls_cert_file = config.GetOr("tls_cert", "");
  o.server.tls_key_file = config.GetOr("tls_key", "");
  return o;
}

IdpService::IdpService(IdpOptions options)
    : options_(std::move(options)),
      transcript_(std::make_shared<net::Transcript>(options_.idp_id)),
      codes_(options_.clock, oauth::kCodeLifetime),
      tokens_(options_.clock, oauth::kTokenLifetime) {
  if (options_.display_name.empty()) options_.display_name = options_.idp_id;
  for (const auto& fu : options_.fixtures.users) {
    if (users_by_uid_.count(fu.uid) || users_by_name_.count(fu.username)) {
      throw std::invalid_argument("duplicate fixture user " + fu.username);
    }
    IdpUser user;
    user.uid = fu.uid;
    user.username = fu.username;
    user.password_salt = crypto::RandomBytes(16);
    user.password_hash =
        HashPassword(fu.password, user.password_salt, options_.fixtures.pbkdf2_iterations);
    user.attributes = fu.attributes;
    auto [it, inserted] = users_by_name_.emplace(fu.username, std::move(user));
    users_by_uid_[fu.uid] = &it->second;
  }
  for (const auto& c : options_.fixtures.clients) {
    clients_[c.client_id] = {c.client_id, c.client_secret, c.redirect_uri, c.client_name};
  }
  if (!options_.state_dir.empty()) {
    std::filesystem::create_directories(options_.state_dir);
    if (auto saved = ReadFileIfExists(options_.state_dir / kClientsFile)) {
      for (const auto& c : nlohmann::json::parse(*saved)) {
        IdpClient client{c.at("client_id"), c.at("client_secret"),
                         c.at("redirect_uri"), c.value("client_name", "")};
        clients_[client.client_id] = client;
      }
    }
  }
}

IdpService::~IdpService() { Stop(); }

int IdpService::Listen(const std::string& host, int port) {
  server_ = std::make_unique<net::HttpServer>(options_.server);
  if (options_.record_transcript) server_->AttachTranscript(transcript_);
  server_->Get("/auth_IdP", [this](const net::Request& r) { return HandleAuthorizeGet(r); });
  server_->Post("/auth_IdP", [this](const net::Request& r) { return HandleAuthorizePost(r); });
  server_->Post("/token_IdP", [this](const net::Request& r) { return HandleToken(r); });
  server_->Get("/res_IdP", [this](const net::Request& r) { return HandleResource(r); });
  server_->Post("/register", [this](const net::Request& r) { return HandleRegister(r); });
  int bound = server_->Bind(host, port);
  base_url_ = std::string(server_->tls() ? "https" : "http") + "://" + host + ":" +
              std::to_string(bound);
  server_->Start();
  return bound;
}

void IdpService::Stop() {
  if (server_) server_->Stop();
}

IdpClient IdpService::RegisterClient(const std::string& redirect_uri,
                                     const std::string& client_name) {
  IdpClient client;
  client.client_id = options_.idp_id + "-" + crypto::HexEncode(crypto::RandomBytes(12));
  client.client_secret = crypto::GenSecretToken();
  client.redirect_uri = redirect_uri;
  client.client_name = client_name;
  std::lock_guard lock(clients_mu_);
  clients_[client.client_id] = client;
  PersistClientsLocked();
  return client;
}

std::optional<IdpClient> IdpService::FindClient(const std::string& client_id) const {
  std::lock_guard lock(clients_mu_);
  auto it = clients_.find(client_id);
  if (it == clients_.end()) return std::nullopt;
  return it->second;
}

void IdpService::PersistClientsLocked() const {
  if (options_.state_dir.empty()) return;
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& [id, c] : clients_) {
    arr.push_back({{"client_id", c.client_id},
                   {"client_secret", c.client_secret},
                   {"redirect_uri", c.redirect_uri},
                   {"client_name", c.client_name}});
  }
  AtomicWriteFile(options_.state_dir / kClientsFile, arr.dump(2), true);
}

std::optional<net::Reply> IdpService::ValidateAuthorizeRequest(
    const net::Request& req, IdpClient* client) const {
  auto client_id = req.Param("client_id");
  auto redirect_uri = req.Param("redirect_uri");
  if (!client_id || !redirect_uri) {
    return net::Reply::Error(400, oauth::kInvalidRequest);
  }
  auto found = FindClient(*client_id);
  if (!found) return net::Reply::Error(400, oauth::kInvalidClient);
  if (*redirect_uri != found->redirect_uri) {
    return net::Reply::Error(400, "redirect_uri_mismatch");
  }
  if (req.Param("response_type").value_or("") != "code") {
    return net::Reply::Error(400, oauth::kUnsupportedResponseType);
  }
  *client = *found;
  return std::nullopt;
}

net::Reply IdpService::LoginPage(int status, const net::Request& req,
                                 const IdpClient& client,
                                 const std::string& message) const {
  std::string hidden;
  for (const char* name : {"response_type", "client_id", "redirect_uri", "state"}) {
    if (auto v = req.Param(name)) {
      hidden += "<input type=\"hidden\" name=\"" + std::string(name) + "\" value=\"" +
                HtmlEscape(*v) + "\">\n";
    }
  }
  std::string requester = client.client_name.empty() ? client.client_id : client.client_name;
  std::string html =
      "<!doctype html><html><head><title>" + HtmlEscape(options_.display_name) +
      " sign in</title></head><body>\n<h1>Sign in to " +
      HtmlEscape(options_.display_name) + "</h1>\n" +
      (message.empty() ? "" : "<p class=\"error\">" + HtmlEscape(message) + "</p>\n") +
      "<p><strong>" + HtmlEscape(requester) +
      "</strong> is requesting access to your identity.</p>\n"
      "<form method=\"post\" action=\"/auth_IdP\">\n" +
      hidden +
      "<label>Username <input name=\"username\"></label>\n"
      "<label>Password <input name=\"password\" type=\"password\"></label>\n"
      "<button name=\"consent\" value=\"grant\">Allow</button>\n"
      "<button name=\"consent\" value=\"deny\">Deny</button>\n"
      "</form></body></html>\n";
  return net::Reply::Html(status, std::move(html));
}

const IdpUser* IdpService::Authenticate(const std::string& username,
                                        const std::string& password) const {
  auto it = users_by_name_.find(username);
  if (it == users_by_name_.end()) return nullptr;
  const IdpUser& user = it->second;
  crypto::Digest candidate =
      HashPassword(password, user.password_salt, options_.fixtures.pbkdf2_iterations);
  return crypto::ConstantTimeEquals(candidate, user.password_hash) ? &user : nullptr;
}

net::Reply IdpService::HandleAuthorizeGet(const net::Request& req) {
  IdpClient client;
  if (auto error = ValidateAuthorizeRequest(req, &client)) return *error;
  return LoginPage(200, req, client, "");
}

net::Reply IdpService::HandleAuthorizePost(const net::Request& req) {
  IdpClient client;
  if (auto error = ValidateAuthorizeRequest(req, &client)) return *error;
  net::Params back;
  if (auto state = req.Param("state")) back["state"] = *state;

  std::string consent = req.Param("consent").value_or(options_.auto_consent ? "grant" : "");
  if (consent == "deny") {
    back["error"] = std::string(oauth::kAccessDenied);
    return net::Reply::Redirect(net::AppendQuery(client.redirect_uri, back));
  }
  const IdpUser* user =
      Authenticate(req.Param("username").value_or(""), req.Param("password").value_or(""));
  if (user == nullptr) return LoginPage(401, req, client, "Invalid username or password.");
  if (consent != "grant") return LoginPage(400, req, client, "Please allow or deny access.");

  back["code"] = codes_.Issue({client.client_id, client.redirect_uri, user->uid});
  return net::Reply::Redirect(net::AppendQuery(client.redirect_uri, back));
}

net::Reply IdpService::HandleToken(const net::Request& req) {
  auto grant_type = req.Param("grant_type");
  if (!grant_type) return net::Reply::Error(400, oauth::kInvalidRequest);
  if (*grant_type != "authorization_code") {
    return net::Reply::Error(400, oauth::kUnsupportedGrantType);
  }
  auto client = FindClient(req.Param("client_id").value_or(""));
  if (!client || !crypto::ConstantTimeEquals(req.Param("client_secret").value_or(""),
                                             client->client_secret)) {
    return net::Reply::Error(401, oauth::kInvalidClient);
  }
  auto code = codes_.Take(req.Param("code").value_or(""));
  if (!code || code->client_id != client->client_id ||
      code->redirect_uri != req.Param("redirect_uri").value_or("")) {
    return net::Reply::Error(400, oauth::kInvalidGrant);
  }
  std::string token = tokens_.Issue({client->client_id, code->uid});
  return net::Reply::Json(200, {{"access_token", token},
                                {"token_type", "Bearer"},
                                {"expires_in", tokens_.lifetime().count()}})
      .AddHeader("Cache-Control", "no-store");
}

net::Reply IdpService::HandleResource(const net::Request& req) {
  auto bearer = req.BearerToken();
  auto grant = bearer ? tokens_.Peek(*bearer) : std::nullopt;
  if (!grant) {
    return net::Reply::Error(401, oauth::kInvalidToken)
        .AddHeader("WWW-Authenticate", "Bearer error=\"invalid_token\"");
  }
  auto it = users_by_uid_.find(grant->uid);
  if (it == users_by_uid_.end()) return net::Reply::Error(401, oauth::kInvalidToken);
  return net::Reply::Json(200, {{"uid", it->second->uid},
                                {"attributes", it->second->attributes}});
}

net::Reply IdpService::HandleRegister(const net::Request& req) {
  auto body = nlohmann::json::parse(req.body, nullptr, false);
  if (!body.is_object() || !body.contains("redirect_uri") ||
      !body["redirect_uri"].is_string()) {
    return net::Reply::Error(400, oauth::kInvalidRequest);
  }
  std::string uri = body["redirect_uri"].get<std::string>();
  if (!oauth::IsAcceptableRedirectUri(uri, options_.allow_http_loopback)) {
    return net::Reply::Error(400, oauth::kInvalidRedirectUri);
  }
  IdpClient client = RegisterClient(uri, body.value("client_name", ""));
  return net::Reply::Json(201, {{"client_id", client.client_id},
                                {"client_secret", client.client_secret}});
}

}  // namespace miso::idp
