#ifndef MISO_RP_RP_SERVICE_H_
#define MISO_RP_RP_SERVICE_H_

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "miso/common/clock.h"
#include "miso/common/config.h"
#include "miso/crypto/bytes.h"
#include "miso/net/http.h"
#include "miso/net/http_client.h"
#include "miso/net/http_server.h"
#include "miso/net/transcript.h"

namespace miso::rp {

inline constexpr char kRpSessionCookie[] = "rp_sid";

// The mixer's attestation did not verify; the RP refuses to register.
class AttestationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The mixer's key or measurement differs from the pinned one.
class RepinRequired : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PinnedMixer {
  crypto::Bytes pk_server;
  crypto::Digest measurement{};
  int64_t pinned_at = 0;  // unix seconds
};

struct RpAccount {
  std::string account_id;
  std::string idp_set;
  std::string sub;
  std::map<std::string, std::string> attributes;
  int64_t first_login = 0;
  int64_t last_login = 0;
};

struct RpOptions {
  std::string rp_id = "rp-0";
  std::filesystem::path state_dir;
  // Mixer base URL, or the IdP base URL in baseline mode.
  std::string provider_url;
  // Talk plain OAuth 2.0 to an IdP instead of the mixer.
  bool baseline_mode = false;
  // Required unless baseline_mode.
  crypto::Digest expected_measurement{};
  crypto::Bytes tee_public_key;
  // Externally visible base URL; defaults to the bound address.
  std::string public_url;
  // Optional static credentials; otherwise the RP registers itself.
  std::string client_id;
  std::string client_secret;
  bool record_transcript = false;
  net::ServerOptions server;
  net::ClientOptions client;
  Clock clock = SystemClock();

  // Keys: rp_id, state_dir, mixer_url, idp_url, baseline_mode,
  // expected_measurement (hex), tee_public_key (hex), public_url, client_id,
  // client_secret, debug_transcript, worker_threads, ca_cert, tls_cert,
  // tls_key.
  static RpOptions FromConfig(const KeyValueConfig& config);
};

// Demo relying party: GET /login, GET /cb, GET /me.
class RpService {
 public:
  explicit RpService(RpOptions options);
  ~RpService();

  // Binds, bootstraps trust in the provider (attestation check, pinning,
  // registration), then starts serving. Throws AttestationError or
  // RepinRequired when trust cannot be established.
  int Listen(const std::string& host, int port);
  void Stop();

  std::string base_url() const { return base_url_; }
  std::string redirect_uri() const { return base_url_ + "/cb"; }
  const std::string& rp_id() const { return options_.rp_id; }
  const std::string& client_id() const { return client_id_; }
  std::optional<PinnedMixer> pinned() const;
  std::vector<RpAccount> Accounts() const;
  std::vector<nlohmann::json> Log() const;
  std::shared_ptr<net::Transcript> transcript() const { return transcript_; }

  net::Reply HandleLogin(const net::Request& req);
  net::Reply HandleCallback(const net::Request& req);
  net::Reply HandleMe(const net::Request& req);
  net::Reply HandleLog(const net::Request& req);

 private:
  struct Session {
    std::string state_rp;
    std::string idp_set;
    std::optional<std::string> account_id;
    TimePoint created_at;
  };

  void Bootstrap();
  void VerifyAndPin();
  void EnsureRegistered();
  std::string Endpoint(const char* mixer_path, const char* idp_path) const;
  RpAccount UpsertAccount(const std::string& idp_set, const std::string& sub,
                          const std::map<std::string, std::string>& attributes);
  void PersistAccountsLocked() const;
  void AppendLog(nlohmann::json entry);

  RpOptions options_;
  std::shared_ptr<net::Transcript> transcript_;
  net::HttpClient http_;
  std::unique_ptr<net::HttpServer> server_;
  std::string base_url_;
  std::string client_id_;
  std::string client_secret_;

  mutable std::mutex mu_;
  std::map<std::string, Session> sessions_;
  std::map<std::string, RpAccount> accounts_;  // keyed by idp_set + "|" + sub
  std::vector<nlohmann::json> log_;
  int next_account_ = 1;
};

}  // namespace miso::rp

#endif  // MISO_RP_RP_SERVICE_H_
