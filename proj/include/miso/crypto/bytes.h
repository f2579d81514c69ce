#ifndef MISO_CRYPTO_BYTES_H_
#define MISO_CRYPTO_BYTES_H_

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace miso::crypto {

using Bytes = std::vector<uint8_t>;
using ByteView = std::span<const uint8_t>;

// 256-bit value: PRF outputs, hashes, salts, secrets.
using Digest = std::array<uint8_t, 32>;

class EncodingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline ByteView AsBytes(std::string_view s) {
  return {reinterpret_cast<const uint8_t*>(s.data()), s.size()};
}

inline Bytes ToBytes(std::string_view s) {
  auto v = AsBytes(s);
  return {v.begin(), v.end()};
}

std::string HexEncode(ByteView data);
// Throws EncodingError on odd length or non-hex characters.
Bytes HexDecode(std::string_view hex);
// Throws EncodingError unless |hex| decodes to exactly 32 bytes.
Digest DigestFromHex(std::string_view hex);

// RFC 4648 section 5 alphabet, no padding.
std::string Base64UrlEncode(ByteView data);
Bytes Base64UrlDecode(std::string_view text);

// Runs in time dependent only on the lengths.
bool ConstantTimeEquals(ByteView a, ByteView b);
inline bool ConstantTimeEquals(std::string_view a, std::string_view b) {
  return ConstantTimeEquals(AsBytes(a), AsBytes(b));
}

// Overwrites |data| in a way the optimizer may not elide.
void SecureWipe(std::span<uint8_t> data);
void SecureWipe(std::string& s);

}  // namespace miso::crypto

#endif  // MISO_CRYPTO_BYTES_H_
