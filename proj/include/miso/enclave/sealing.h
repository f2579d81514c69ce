#ifndef MISO_ENCLAVE_SEALING_H_
#define MISO_ENCLAVE_SEALING_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string_view>

#include "miso/crypto/bytes.h"

namespace miso::enclave {

// Which enclave identity a sealing key is bound to.
enum class SealMode : uint8_t {
  kMrEnclave = 0x01,  // the exact program measurement
  kMrSigner = 0x02,   // any program from the same signer
};

std::string_view SealModeName(SealMode mode);
// Accepts "mrenclave" / "mrsigner"; throws std::invalid_argument otherwise.
SealMode ParseSealMode(std::string_view name);

// Authenticated decryption failed: wrong identity, wrong label, wrong mode or
// modified bytes. Deliberately does not say which.
class SealTamperError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// On-disk layout: mode (1 byte) | nonce (12 bytes) | ciphertext | GCM tag (16).
struct SealedBlob {
  static constexpr size_t kNonceSize = 12;
  static constexpr size_t kTagSize = 16;

  SealMode mode = SealMode::kMrEnclave;
  std::array<uint8_t, kNonceSize> nonce{};
  crypto::Bytes ciphertext;  // includes the trailing tag

  crypto::Bytes Serialize() const;
  // Throws SealTamperError on truncated input or an unknown mode byte.
  static SealedBlob Parse(crypto::ByteView bytes);
};

// Files are named "<label>.sealed". Labels are restricted to [A-Za-z0-9_.-].
std::filesystem::path SealedFilePath(const std::filesystem::path& dir,
                                     std::string_view label);
void WriteSealedFile(const std::filesystem::path& dir, std::string_view label,
                     const SealedBlob& blob);
std::optional<SealedBlob> ReadSealedFile(const std::filesystem::path& dir,
                                         std::string_view label);

}  // namespace miso::enclave

#endif  // MISO_ENCLAVE_SEALING_H_
