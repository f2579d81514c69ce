#ifndef MISO_IDP_IDP_SERVICE_H_
#define MISO_IDP_IDP_SERVICE_H_

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "miso/common/clock.h"
#include "miso/common/config.h"
#include "miso/crypto/bytes.h"
#include "miso/idp/fixtures.h"
#include "miso/net/http.h"
#include "miso/net/http_server.h"
#include "miso/net/transcript.h"
#include "miso/oauth/expiring_store.h"

namespace miso::idp {

struct IdpUser {
  std::string uid;
  std::string username;
  crypto::Bytes password_salt;
  crypto::Digest password_hash{};
  std::map<std::string, std::string> attributes;
};

struct IdpClient {
  std::string client_id;
  std::string client_secret;
  std::string redirect_uri;
  std::string client_name;
};

struct IdpOptions {
  std::string idp_id = "idp-a";
  std::string display_name;
  // Registered clients are persisted here as clients.json; empty keeps them
  // in memory only.
  std::filesystem::path state_dir;
  Fixtures fixtures;
  // Treat a login form without a consent field as "grant". Headless runs only.
  bool auto_consent = false;
  bool allow_http_loopback = true;
  bool record_transcript = false;
  net::ServerOptions server;
  Clock clock = SystemClock();

  // Keys: idp_id, display_name, state_dir, fixtures (path), auto_consent,
  // allow_http_loopback, debug_transcript, worker_threads, tls_cert, tls_key.
  static IdpOptions FromConfig(const KeyValueConfig& config);
};

// OAuth 2.0 authorization-code identity provider:
//   GET/POST /auth_IdP, POST /token_IdP, GET /res_IdP, POST /register.
class IdpService {
 public:
  explicit IdpService(IdpOptions options);
  ~IdpService();

  // Binds and starts serving; returns the bound port.
  int Listen(const std::string& host, int port);
  void Stop();

  const std::string& idp_id() const { return options_.idp_id; }
  std::string base_url() const { return base_url_; }
  std::shared_ptr<net::Transcript> transcript() const { return transcript_; }

  IdpClient RegisterClient(const std::string& redirect_uri,
                           const std::string& client_name);
  std::optional<IdpClient> FindClient(const std::string& client_id) const;

  net::Reply HandleAuthorizeGet(const net::Request& req);
  net::Reply HandleAuthorizePost(const net::Request& req);
  net::Reply HandleToken(const net::Request& req);
  net::Reply HandleResource(const net::Request& req);
  net::Reply HandleRegister(const net::Request& req);

 private:
  struct CodeGrant {
    std::string client_id;
    std::string redirect_uri;
    std::string uid;
  };
  struct TokenGrant {
    std::string client_id;
    std::string uid;
  };

  // Validates response_type/client_id/redirect_uri. On failure returns the
  // error reply; never redirects to an unverified URI.
  std::optional<net::Reply> ValidateAuthorizeRequest(const net::Request& req,
                                                     IdpClient* client) const;
  const IdpUser* Authenticate(const std::string& username,
                              const std::string& password) const;
  net::Reply LoginPage(int status, const net::Request& req, const IdpClient& client,
                       const std::string& message) const;
  void PersistClientsLocked() const;

  IdpOptions options_;
  std::shared_ptr<net::Transcript> transcript_;
  std::unique_ptr<net::HttpServer> server_;
  std::string base_url_;

  std::map<std::string, IdpUser> users_by_name_;
  std::map<std::string, const IdpUser*> users_by_uid_;

  mutable std::mutex clients_mu_;
  std::map<std::string, IdpClient> clients_;

  oauth::ExpiringStore<CodeGrant> codes_;
  oauth::ExpiringStore<TokenGrant> tokens_;
};

}  // namespace miso::idp

#endif  // MISO_IDP_IDP_SERVICE_H_
