#include "miso/crypto/random.h"

#include <openssl/rand.h>

namespace miso::crypto {

void RandomFill(std::span<uint8_t> out) {
  if (out.empty()) return;
  if (RAND_bytes(out.data(), static_cast<int>(out.size())) != 1) {
    throw EntropyError("system entropy source unavailable");
  }
}

Bytes RandomBytes(size_t n) {
  Bytes out(n);
  RandomFill(out);
  return out;
}

Digest GenSecret() {
  Digest out;
  RandomFill(out);
  return out;
}

std::string GenSecretToken() {
  Digest secret = GenSecret();
  std::string token = Base64UrlEncode(secret);
  SecureWipe(secret);
  return token;
}

}  // namespace miso::crypto
