#ifndef MISO_ENCLAVE_ATTESTATION_PLATFORM_H_
#define MISO_ENCLAVE_ATTESTATION_PLATFORM_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <string_view>

#include "miso/crypto/bytes.h"
#include "miso/crypto/signature.h"
#include "miso/enclave/sealing.h"

namespace miso::enclave {

using EnclaveId = uint64_t;

class EnclaveError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EnclaveIdentity {
  crypto::Digest measurement{};  // SHA-256 of the program descriptor
  crypto::Digest signer_id{};    // SHA-256 of the signer name
  EnclaveId eid = 0;
};

// Platform signature binding a program measurement to a payload (in practice
// the service's public key).
struct AttestationReport {
  crypto::Digest measurement{};
  crypto::Bytes payload;
  crypto::Bytes signature;
};

// The byte string the platform key signs for a report.
crypto::Bytes AttestationMessage(const crypto::Digest& measurement,
                                 crypto::ByteView payload);

// True iff the signature verifies under |platform_public_key| and the report
// carries |expected_measurement|. Never throws.
bool VerifyAttestation(crypto::ByteView platform_public_key,
                       const AttestationReport& report,
                       const crypto::Digest& expected_measurement);

// Software stand-in for an attested-execution functionality: installs
// programs, signs attestations with a platform key and seals data to enclave
// identities.
//
// Per-host state (the master sealing secret and the platform signing seed)
// lives in plain files under the platform directory; the simulation models
// which identities can decrypt, not hardware protection of those secrets.
class AttestationPlatform {
 public:
  // Loads the platform secrets from |platform_dir|, creating them on first use.
  static std::shared_ptr<AttestationPlatform> Open(
      const std::filesystem::path& platform_dir);

  EnclaveIdentity Install(crypto::ByteView program_descriptor,
                          std::string_view signer_name);
  EnclaveIdentity Identity(EnclaveId eid) const;

  // getpk
  crypto::Bytes GetPublicKey() const;

  // Throws EnclaveError for an unknown eid.
  AttestationReport Attest(EnclaveId eid, crypto::ByteView payload) const;

  SealedBlob Seal(EnclaveId eid, std::string_view label,
                  crypto::ByteView plaintext, SealMode mode) const;
  // Throws SealTamperError if the blob was sealed for another identity,
  // label or mode, or was modified.
  crypto::Bytes Unseal(EnclaveId eid, std::string_view label,
                       const SealedBlob& blob, SealMode mode) const;

 private:
  AttestationPlatform(crypto::Bytes master_seal_secret,
                      crypto::SigningKey platform_key);

  crypto::Bytes SealingKey(const EnclaveIdentity& id, std::string_view label,
                           SealMode mode) const;

  const crypto::Bytes master_seal_secret_;
  const crypto::SigningKey platform_key_;

  mutable std::mutex mu_;
  std::map<EnclaveId, EnclaveIdentity> enclaves_;
  EnclaveId next_eid_ = 1;
};

}  // namespace miso::enclave

#endif  // MISO_ENCLAVE_ATTESTATION_PLATFORM_H_
