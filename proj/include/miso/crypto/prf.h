#ifndef MISO_CRYPTO_PRF_H_
#define MISO_CRYPTO_PRF_H_

#include <array>
#include <cstdint>

#include "miso/crypto/bytes.h"

namespace miso::crypto {

Digest Sha256(ByteView data);

// Keyed hash over an arbitrary-length key (RFC 2104).
Digest HmacSha256(ByteView key, ByteView message);

// 256-bit secret keying the enclave PRF.
class PrfKey {
 public:
  static constexpr size_t kSize = 32;

  // Draws the key from the OS CSPRNG.
  static PrfKey Generate();
  // Throws EncodingError unless |bytes| is exactly 32 bytes.
  static PrfKey FromBytes(ByteView bytes);

  PrfKey(const PrfKey&) = default;
  PrfKey& operator=(const PrfKey&) = default;
  ~PrfKey();

  ByteView bytes() const { return bytes_; }

  friend bool operator==(const PrfKey& a, const PrfKey& b) {
    return ConstantTimeEquals(a.bytes(), b.bytes());
  }

 private:
  PrfKey() = default;
  std::array<uint8_t, kSize> bytes_{};
};

// PRF instantiated as HMAC-SHA256; output is 256 bits.
Digest Prf(const PrfKey& key, ByteView message);

}  // namespace miso::crypto

#endif  // MISO_CRYPTO_PRF_H_
