#include "miso/crypto/prf.h"

#include <openssl/evp.h>
#include <openssl/hmac.h>
#include <openssl/sha.h>

#include <algorithm>

#include "miso/crypto/random.h"

namespace miso::crypto {

Digest Sha256(ByteView data) {
  Digest out;
  SHA256(data.data(), data.size(), out.data());
  return out;
}

Digest HmacSha256(ByteView key, ByteView message) {
  Digest out;
  unsigned int len = 0;
  // A null key pointer is rejected by some OpenSSL builds even when empty.
  static const uint8_t kEmpty = 0;
  const uint8_t* key_ptr = key.empty() ? &kEmpty : key.data();
  const uint8_t* msg_ptr = message.empty() ? &kEmpty : message.data();
  HMAC(EVP_sha256(), key_ptr, static_cast<int>(key.size()), msg_ptr,
       message.size(), out.data(), &len);
  return out;
}

PrfKey PrfKey::Generate() {
  PrfKey key;
  RandomFill(key.bytes_);
  return key;
}

PrfKey PrfKey::FromBytes(ByteView bytes) {
  if (bytes.size() != kSize) throw EncodingError("PRF key must be 32 bytes");
  PrfKey key;
  std::copy(bytes.begin(), bytes.end(), key.bytes_.begin());
  return key;
}

PrfKey::~PrfKey() { SecureWipe(bytes_); }

Digest Prf(const PrfKey& key, ByteView message) {
  return HmacSha256(key.bytes(), message);
}

}  // namespace miso::crypto
