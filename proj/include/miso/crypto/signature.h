#ifndef MISO_CRYPTO_SIGNATURE_H_
#define MISO_CRYPTO_SIGNATURE_H_

#include <memory>

#include "miso/crypto/bytes.h"

namespace miso::crypto {

// Ed25519 keypair. Signatures are deterministic and 64 bytes long.
class SigningKey {
 public:
  static constexpr size_t kSeedSize = 32;
  static constexpr size_t kPublicKeySize = 32;
  static constexpr size_t kSignatureSize = 64;

  static SigningKey Generate();
  // Throws EncodingError if |seed| is not 32 bytes.
  static SigningKey FromSeed(ByteView seed);

  SigningKey(SigningKey&&) noexcept;
  SigningKey& operator=(SigningKey&&) noexcept;
  ~SigningKey();

  Bytes Sign(ByteView message) const;
  Bytes public_key() const;
  // The private seed; callers seal it before it touches disk.
  Bytes seed() const;

 private:
  struct Impl;
  explicit SigningKey(std::unique_ptr<Impl> impl);
  std::unique_ptr<Impl> impl_;
};

// False on any malformed input rather than throwing.
bool VerifySignature(ByteView public_key, ByteView message, ByteView signature);

}  // namespace miso::crypto

#endif  // MISO_CRYPTO_SIGNATURE_H_
