#include "miso/enclave/attestation_platform.h"

#include <openssl/evp.h>

#include <system_error>

#include "miso/common/file_util.h"
#include "miso/crypto/encoding.h"
#include "miso/crypto/prf.h"
#include "miso/crypto/random.h"

namespace miso::enclave {
namespace {

constexpr char kMasterSecretFile[] = "seal_master.key";
constexpr char kPlatformSeedFile[] = "platform_ed25519.key";

crypto::Bytes LoadOrCreateSecret(const std::filesystem::path& path) {
  if (auto existing = ReadFileIfExists(path)) {
    if (existing->size() != 32) {
      throw std::runtime_error("corrupt platform secret " + path.string());
    }
    return crypto::ToBytes(*existing);
  }
  crypto::Bytes fresh = crypto::RandomBytes(32);
  AtomicWriteFile(path, fresh, true);
  return fresh;
}

crypto::Bytes LabelAad(SealMode mode, std::string_view label) {
  const uint8_t mode_byte = static_cast<uint8_t>(mode);
  return crypto::EncodeFields({crypto::ByteView(&mode_byte, 1),
                               crypto::AsBytes(label)});
}

struct CipherCtx {
  EVP_CIPHER_CTX* ctx = EVP_CIPHER_CTX_new();
  ~CipherCtx() { EVP_CIPHER_CTX_free(ctx); }
};

}  // namespace

crypto::Bytes AttestationMessage(const crypto::Digest& measurement,
                                 crypto::ByteView payload) {
  return crypto::EncodeFields({measurement, payload});
}

bool VerifyAttestation(crypto::ByteView platform_public_key,
                       const AttestationReport& report,
                       const crypto::Digest& expected_measurement) {
  if (!crypto::ConstantTimeEquals(report.measurement, expected_measurement)) {
    return false;
  }
  return crypto::VerifySignature(
      platform_public_key, AttestationMessage(report.measurement, report.payload),
      report.signature);
}

std::shared_ptr<AttestationPlatform> AttestationPlatform::Open(
    const std::filesystem::path& platform_dir) {
  std::filesystem::create_directories(platform_dir);
  crypto::Bytes master = LoadOrCreateSecret(platform_dir / kMasterSecretFile);
  crypto::Bytes seed = LoadOrCreateSecret(platform_dir / kPlatformSeedFile);
  auto key = crypto::SigningKey::FromSeed(seed);
  crypto::SecureWipe(seed);
  return std::shared_ptr<AttestationPlatform>(
      new AttestationPlatform(std::move(master), std::move(key)));
}

AttestationPlatform::AttestationPlatform(crypto::Bytes master_seal_secret,
                                         crypto::SigningKey platform_key)
    : master_seal_secret_(std::move(master_seal_secret)),
      platform_key_(std::move(platform_key)) {}

EnclaveIdentity AttestationPlatform::Install(crypto::ByteView program_descriptor,
                                             std::string_view signer_name) {
  if (program_descriptor.empty()) {
    throw std::invalid_argument("empty program descriptor");
  }
  EnclaveIdentity id;
  id.measurement = crypto::Sha256(program_descriptor);
  id.signer_id = crypto::Sha256(crypto::AsBytes(signer_name));
  std::lock_guard lock(mu_);
  id.eid = next_eid_++;
  enclaves_.emplace(id.eid, id);
  return id;
}

EnclaveIdentity AttestationPlatform::Identity(EnclaveId eid) const {
  std::lock_guard lock(mu_);
  auto it = enclaves_.find(eid);
  if (it == enclaves_.end()) {
    throw EnclaveError("unknown enclave id " + std::to_string(eid));
  }
  return it->second;
}

crypto::Bytes AttestationPlatform::GetPublicKey() const {
  return platform_key_.public_key();
}

AttestationReport AttestationPlatform::Attest(EnclaveId eid,
                                              crypto::ByteView payload) const {
  EnclaveIdentity id = Identity(eid);
  AttestationReport report;
  report.measurement = id.measurement;
  report.payload.assign(payload.begin(), payload.end());
  report.signature =
      platform_key_.Sign(AttestationMessage(id.measurement, payload));
  return report;
}

crypto::Bytes AttestationPlatform::SealingKey(const EnclaveIdentity& id,
                                              std::string_view label,
                                              SealMode mode) const {
  const uint8_t mode_byte = static_cast<uint8_t>(mode);
  const crypto::Digest& identity =
      mode == SealMode::kMrEnclave ? id.measurement : id.signer_id;
  crypto::Digest key = crypto::HmacSha256(
      master_seal_secret_,
      crypto::EncodeFields({crypto::ByteView(&mode_byte, 1), identity,
                            crypto::AsBytes(label)}));
  return {key.begin(), key.end()};
}

SealedBlob AttestationPlatform::Seal(EnclaveId eid, std::string_view label,
                                     crypto::ByteView plaintext,
                                     SealMode mode) const {
  EnclaveIdentity id = Identity(eid);
  crypto::Bytes key = SealingKey(id, label, mode);
  crypto::Bytes aad = LabelAad(mode, label);

  SealedBlob blob;
  blob.mode = mode;
  crypto::RandomFill(blob.nonce);
  blob.ciphertext.resize(plaintext.size() + SealedBlob::kTagSize);

  CipherCtx c;
  int len = 0;
  bool ok =
      c.ctx != nullptr &&
      EVP_EncryptInit_ex(c.ctx, EVP_aes_256_gcm(), nullptr, nullptr, nullptr) == 1 &&
      EVP_CIPHER_CTX_ctrl(c.ctx, EVP_CTRL_GCM_SET_IVLEN, SealedBlob::kNonceSize,
                          nullptr) == 1 &&
      EVP_EncryptInit_ex(c.ctx, nullptr, nullptr, key.data(), blob.nonce.data()) == 1 &&
      EVP_EncryptUpdate(c.ctx, nullptr, &len, aad.data(),
                        static_cast<int>(aad.size())) == 1 &&
      (plaintext.empty() ||
       EVP_EncryptUpdate(c.ctx, blob.ciphertext.data(), &len, plaintext.data(),
                         static_cast<int>(plaintext.size())) == 1) &&
      EVP_EncryptFinal_ex(c.ctx, blob.ciphertext.data() + plaintext.size(), &len) == 1 &&
      EVP_CIPHER_CTX_ctrl(c.ctx, EVP_CTRL_GCM_GET_TAG, SealedBlob::kTagSize,
                          blob.ciphertext.data() + plaintext.size()) == 1;
  crypto::SecureWipe(key);
  if (!ok) throw std::runtime_error("AES-GCM sealing failed");
  return blob;
}

crypto::Bytes AttestationPlatform::Unseal(EnclaveId eid, std::string_view label,
                                          const SealedBlob& blob,
                                          SealMode mode) const {
  if (blob.mode != mode) throw SealTamperError("sealed blob mode mismatch");
  if (blob.ciphertext.size() < SealedBlob::kTagSize) {
    throw SealTamperError("sealed blob truncated");
  }
  EnclaveIdentity id = Identity(eid);
  crypto::Bytes key = SealingKey(id, label, mode);
  crypto::Bytes aad = LabelAad(mode, label);

  const size_t body = blob.ciphertext.size() - SealedBlob::kTagSize;
  crypto::Bytes plain(body);
  crypto::Bytes tag(blob.ciphertext.begin() + static_cast<long>(body),
                    blob.ciphertext.end());

  CipherCtx c;
  int len = 0;
  bool ok =
      c.ctx != nullptr &&
      EVP_DecryptInit_ex(c.ctx, EVP_aes_256_gcm(), nullptr, nullptr, nullptr) == 1 &&
      EVP_CIPHER_CTX_ctrl(c.ctx, EVP_CTRL_GCM_SET_IVLEN, SealedBlob::kNonceSize,
                          nullptr) == 1 &&
      EVP_DecryptInit_ex(c.ctx, nullptr, nullptr, key.data(), blob.nonce.data()) == 1 &&
      EVP_DecryptUpdate(c.ctx, nullptr, &len, aad.data(),
                        static_cast<int>(aad.size())) == 1 &&
      (body == 0 || EVP_DecryptUpdate(c.ctx, plain.data(), &len,
                                      blob.ciphertext.data(),
                                      static_cast<int>(body)) == 1) &&
      EVP_CIPHER_CTX_ctrl(c.ctx, EVP_CTRL_GCM_SET_TAG, SealedBlob::kTagSize,
                          tag.data()) == 1 &&
      EVP_DecryptFinal_ex(c.ctx, plain.data() + body, &len) == 1;
  crypto::SecureWipe(key);
  if (!ok) {
    crypto::SecureWipe(plain);
    throw SealTamperError("sealed blob failed authentication");
  }
  return plain;
}

}  // namespace miso::enclave
