#include "miso/enclave/sealing.h"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "miso/common/file_util.h"

namespace miso::enclave {

std::string_view SealModeName(SealMode mode) {
  return mode == SealMode::kMrSigner ? "mrsigner" : "mrenclave";
}

SealMode ParseSealMode(std::string_view name) {
  if (name == "mrenclave") return SealMode::kMrEnclave;
  if (name == "mrsigner") return SealMode::kMrSigner;
  throw std::invalid_argument("unknown seal mode: " + std::string(name));
}

crypto::Bytes SealedBlob::Serialize() const {
  crypto::Bytes out;
  out.reserve(1 + nonce.size() + ciphertext.size());
  out.push_back(static_cast<uint8_t>(mode));
  out.insert(out.end(), nonce.begin(), nonce.end());
  out.insert(out.end(), ciphertext.begin(), ciphertext.end());
  return out;
}

SealedBlob SealedBlob::Parse(crypto::ByteView bytes) {
  if (bytes.size() < 1 + kNonceSize + kTagSize) {
    throw SealTamperError("sealed blob truncated");
  }
  SealedBlob blob;
  if (bytes[0] == static_cast<uint8_t>(SealMode::kMrEnclave)) {
    blob.mode = SealMode::kMrEnclave;
  } else if (bytes[0] == static_cast<uint8_t>(SealMode::kMrSigner)) {
    blob.mode = SealMode::kMrSigner;
  } else {
    throw SealTamperError("sealed blob has unknown mode byte");
  }
  std::copy_n(bytes.begin() + 1, kNonceSize, blob.nonce.begin());
  blob.ciphertext.assign(bytes.begin() + 1 + kNonceSize, bytes.end());
  return blob;
}

std::filesystem::path SealedFilePath(const std::filesystem::path& dir,
                                     std::string_view label) {
  bool ok = !label.empty() && label != "." && label != ".." &&
            std::all_of(label.begin(), label.end(), [](char c) {
              return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                     (c >= '0' && c <= '9') || c == '_' || c == '-' || c == '.';
            });
  if (!ok) throw std::invalid_argument("invalid seal label: " + std::string(label));
  return dir / (std::string(label) + ".sealed");
}

void WriteSealedFile(const std::filesystem::path& dir, std::string_view label,
                     const SealedBlob& blob) {
  std::filesystem::create_directories(dir);
  AtomicWriteFile(SealedFilePath(dir, label), blob.Serialize(), true);
}

std::optional<SealedBlob> ReadSealedFile(const std::filesystem::path& dir,
                                         std::string_view label) {
  auto raw = ReadFileIfExists(SealedFilePath(dir, label));
  if (!raw) return std::nullopt;
  return SealedBlob::Parse(crypto::AsBytes(*raw));
}

}  // namespace miso::enclave
