#ifndef MISO_CRYPTO_RANDOM_H_
#define MISO_CRYPTO_RANDOM_H_

#include <stdexcept>
#include <string>

#include "miso/crypto/bytes.h"

namespace miso::crypto {

class EntropyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Fills |out| from the OS CSPRNG. Throws EntropyError if it is unavailable.
void RandomFill(std::span<uint8_t> out);
Bytes RandomBytes(size_t n);

// 32 fresh random bytes: client secrets, salts, codes, tokens, states.
Digest GenSecret();

// GenSecret() rendered as 43 chars of unpadded base64url.
std::string GenSecretToken();

}  // namespace miso::crypto

#endif  // MISO_CRYPTO_RANDOM_H_
