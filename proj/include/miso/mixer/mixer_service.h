#ifndef MISO_MIXER_MIXER_SERVICE_H_
#define MISO_MIXER_MIXER_SERVICE_H_

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "miso/common/clock.h"
#include "miso/common/config.h"
#include "miso/crypto/identity.h"
#include "miso/crypto/prf.h"
#include "miso/crypto/signature.h"
#include "miso/enclave/attestation_platform.h"
#include "miso/mixer/stores.h"
#include "miso/net/http.h"
#include "miso/net/http_client.h"
#include "miso/net/http_server.h"
#include "miso/net/transcript.h"
#include "miso/oauth/expiring_store.h"

namespace miso::mixer {

inline constexpr char kDefaultProgramDescriptor[] = "miso-mixer-v1";
inline constexpr char kSessionCookie[] = "miso_sid";

// Attribute names a disclosure policy may allow.
const std::set<std::string>& KnownAttributes();

struct IdpEndpoint {
  std::string idp_id;
  std::string auth_url;
  std::string token_url;
  std::string res_url;
  // Dynamic registration endpoint, used when no static credentials are given.
  std::string register_url;
  std::string client_id;
  std::string client_secret;
};

struct MixerOptions {
  std::filesystem::path state_dir;
  // Per-host platform secrets; defaults to <state_dir>/platform.
  std::filesystem::path platform_dir;
  enclave::SealMode seal_mode = enclave::SealMode::kMrEnclave;
  std::string program_descriptor = kDefaultProgramDescriptor;
  std::string signer_name = "miso-dev-signer";
  // Externally visible base URL; defaults to the bound address.
  std::string public_url;
  std::vector<IdpEndpoint> idps;
  // Threshold used when a multi-IdP request omits m; 0 means n-1 (at least 1).
  int default_m = 0;
  bool allow_http_loopback = true;
  bool record_transcript = false;
  // Negative controls for the harness. Both break the privacy properties.
  bool insecure_leak_cid_rp = false;
  bool insecure_passthrough_uid = false;
  net::ServerOptions server;
  net::ClientOptions client;
  Clock clock = SystemClock();

  // Keys: state_dir, platform_dir, seal_mode, program_descriptor, signer_name,
  // public_url, default_m, allow_http_loopback, debug_transcript,
  // worker_threads, tls_cert, tls_key, plaintext, ca_cert,
  // debug.insecure_leak_cid_rp, debug.insecure_passthrough_uid, and
  // idp.<id>.{auth_url,token_url,res_url,register_url,client_id,client_secret}.
  static MixerOptions FromConfig(const KeyValueConfig& config);
};

// The mixer: an IdP toward relying parties and an OAuth client toward IdPs,
// running inside a simulated enclave.
//
// Routes: GET /auth_mixer, GET /callback, POST /token_mixer, GET /res_mixer,
// GET /attestation, POST /register, GET|POST /policy.
class MixerService {
 public:
  // Installs the enclave and loads (or creates) the sealed state. Throws
  // enclave::SealTamperError when sealed state cannot be opened.
  explicit MixerService(MixerOptions options);
  ~MixerService();

  // Binds, obtains IdP credentials, then starts serving. Returns the port.
  int Listen(const std::string& host, int port);
  void Stop();

  std::string base_url() const { return base_url_; }
  std::string callback_url() const { return base_url_ + "/callback"; }
  const enclave::EnclaveIdentity& identity() const { return identity_; }
  crypto::Bytes platform_public_key() const { return platform_->GetPublicKey(); }
  crypto::Bytes server_public_key() const { return server_public_key_; }
  enclave::AttestationReport attestation() const { return attestation_; }
  std::shared_ptr<net::Transcript> transcript() const { return transcript_; }

  RpRecord RegisterRp(const std::string& redirect_uri);
  std::optional<IdpCredential> idp_credential(const std::string& idp_id) const {
    return idp_credentials_->Find(idp_id);
  }

  // Test views: live sessions as JSON, and every sealed file's plaintext.
  nlohmann::json DebugDumpSessions() const;
  std::map<std::string, crypto::Bytes> DebugUnsealAll() const;

  net::Reply HandleAuthorize(const net::Request& req);
  net::Reply HandleCallback(const net::Request& req);
  net::Reply HandleToken(const net::Request& req);
  net::Reply HandleResource(const net::Request& req);
  net::Reply HandleAttestation(const net::Request& req);
  net::Reply HandleRegister(const net::Request& req);
  net::Reply HandlePolicyForm(const net::Request& req);
  net::Reply HandlePolicy(const net::Request& req);

 private:
  enum class Phase { kAwaitIdpAuth, kAwaitNextIdp, kFinalized, kFailed };

  struct SubFlow {
    std::string idp_id;
    std::string state_mixer;
    std::string token_mixer;  // held only between token and resource calls
    std::optional<std::string> uid;
    std::map<std::string, std::string> attributes;
  };

  struct Session {
    std::string id;
    std::string cid_rp;
    std::string state_rp;
    std::string redirect_uri;
    bool multi = false;
    int m = 1;
    std::vector<SubFlow> flows;
    size_t current = 0;
    Phase phase = Phase::kAwaitIdpAuth;
    std::optional<crypto::Digest> uid_blinded;
    std::optional<crypto::Digest> policy_key;
    TimePoint created_at;
  };

  struct Grant {
    std::string cid_rp;
    std::string redirect_uri;
    std::string sub;
    std::map<std::string, std::string> attributes;
  };

  struct Blinded {
    std::string sub;
    crypto::Digest policy_key{};
  };

  const IdpEndpoint* FindIdp(const std::string& idp_id) const;
  std::string StartSubFlowLocked(Session& session);
  net::Reply Finalize(const std::string& session_id);
  // Computes the blinded identifier for a completed session, or an error reply.
  std::variant<Blinded, net::Reply> Blind(const Session& session);
  void FailSession(const std::string& session_id);
  std::optional<Session> SessionFromCookie(const net::Request& req) const;
  void SweepSessionsLocked();
  void EnsureIdpCredentials();

  static const char* PhaseName(Phase phase);

  MixerOptions options_;
  std::shared_ptr<enclave::AttestationPlatform> platform_;
  enclave::EnclaveIdentity identity_;
  std::optional<crypto::PrfKey> prf_key_;
  std::optional<crypto::SigningKey> server_key_;
  crypto::Bytes server_public_key_;
  enclave::AttestationReport attestation_;

  std::unique_ptr<SaltTable> salts_;
  std::unique_ptr<TagTable> tags_;
  std::unique_ptr<RpRegistry> rps_;
  std::unique_ptr<IdpCredentialStore> idp_credentials_;
  std::unique_ptr<PolicyStore> policies_;

  std::shared_ptr<net::Transcript> transcript_;
  net::HttpClient http_;
  std::unique_ptr<net::HttpServer> server_;
  std::string base_url_;

  mutable std::mutex sessions_mu_;
  std::map<std::string, Session> sessions_;
  std::map<std::string, std::string> state_index_;  // state_mixer -> session id
  int created_since_sweep_ = 0;

  oauth::ExpiringStore<Grant> codes_;
  oauth::ExpiringStore<Grant> tokens_;
};

}  // namespace miso::mixer

#endif  // MISO_MIXER_MIXER_SERVICE_H_
