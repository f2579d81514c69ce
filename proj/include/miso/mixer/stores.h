#ifndef MISO_MIXER_STORES_H_
#define MISO_MIXER_STORES_H_

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "miso/crypto/bytes.h"
#include "miso/crypto/identity.h"
#include "miso/enclave/attestation_platform.h"
#include "miso/enclave/sealing.h"

namespace miso::mixer {

// A byte string sealed to one enclave under a fixed label, stored as
// "<dir>/<label>.sealed".
class SealedFile {
 public:
  SealedFile(std::shared_ptr<const enclave::AttestationPlatform> platform,
             enclave::EnclaveId eid, std::filesystem::path dir, std::string label,
             enclave::SealMode mode);

  // nullopt when the file does not exist. Throws SealTamperError when it
  // exists but does not unseal.
  std::optional<crypto::Bytes> Read() const;
  void Write(crypto::ByteView plaintext) const;

  std::optional<nlohmann::json> ReadJson() const;
  void WriteJson(const nlohmann::json& doc) const;

  const std::string& label() const { return label_; }
  std::filesystem::path path() const;

 private:
  std::shared_ptr<const enclave::AttestationPlatform> platform_;
  enclave::EnclaveId eid_;
  std::filesystem::path dir_;
  std::string label_;
  enclave::SealMode mode_;
};

// preUID -> salt. Entries are never replaced.
class SaltTable {
 public:
  explicit SaltTable(SealedFile file);

  // Returns the stored salt, or generates, persists and returns a new one.
  // Concurrent callers for the same key all receive the first writer's salt.
  crypto::Salt GetOrCreate(const crypto::Digest& pre_uid);
  std::optional<crypto::Salt> Find(const crypto::Digest& pre_uid) const;
  size_t size() const;

 private:
  SealedFile file_;
  mutable std::mutex mu_;
  std::map<crypto::Digest, crypto::Salt> salts_;
};

struct TagRecord {
  std::set<crypto::Digest> tags;
  int n = 0;
  int m = 0;
  std::string cid_rp;
  crypto::Digest uid{};
  // Disclosure-policy key of the enrolled identity set.
  crypto::Digest policy_key{};
};

struct TagMatch {
  enum class Kind {
    kNone,       // no stored record shares a tag with the presented set
    kMatched,    // exactly one record reaches its threshold
    kPartial,    // some overlap, no record reaches its threshold
    kAmbiguous,  // more than one record reaches its threshold
  };
  Kind kind = Kind::kNone;
  std::optional<TagRecord> record;
};

// Multi-IdP enrollments, matched per relying party.
class TagTable {
 public:
  explicit TagTable(SealedFile file);

  TagMatch Match(const std::string& cid_rp, const std::set<crypto::Digest>& tags) const;
  // Stores |record| unless an enrollment for the same cid_rp already matches
  // its tag set, in which case the existing record is returned instead.
  TagRecord EnrollOrGet(TagRecord record);
  size_t size() const;

 private:
  TagMatch MatchLocked(const std::string& cid_rp,
                       const std::set<crypto::Digest>& tags) const;
  void PersistLocked() const;

  SealedFile file_;
  mutable std::mutex mu_;
  std::vector<TagRecord> records_;
};

struct RpRecord {
  std::string client_id;
  std::string client_secret;
  std::string redirect_uri;
};

class RpRegistry {
 public:
  explicit RpRegistry(SealedFile file);

  RpRecord Register(const std::string& redirect_uri);
  std::optional<RpRecord> Find(const std::string& client_id) const;
  size_t size() const;

 private:
  SealedFile file_;
  mutable std::mutex mu_;
  std::map<std::string, RpRecord> rps_;
};

// The mixer's own client registration at one IdP.
struct IdpCredential {
  std::string client_id;
  std::string client_secret;
  std::string redirect_uri;
};

class IdpCredentialStore {
 public:
  explicit IdpCredentialStore(SealedFile file);

  std::optional<IdpCredential> Find(const std::string& idp_id) const;
  void Put(const std::string& idp_id, const IdpCredential& credential);

 private:
  SealedFile file_;
  mutable std::mutex mu_;
  std::map<std::string, IdpCredential> credentials_;
};

// Attribute names a user allows to be forwarded, keyed by an identity- and
// RP-scoped PRF image. Absent means none.
class PolicyStore {
 public:
  explicit PolicyStore(SealedFile file);

  std::set<std::string> Allowed(const crypto::Digest& key) const;
  void Set(const crypto::Digest& key, const std::set<std::string>& attributes);

 private:
  SealedFile file_;
  mutable std::mutex mu_;
  std::map<crypto::Digest, std::set<std::string>> policies_;
};

}  // namespace miso::mixer

#endif  // MISO_MIXER_STORES_H_
