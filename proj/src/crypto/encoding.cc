#include "miso/crypto/encoding.h"

#include <limits>

namespace miso::crypto {

Bytes EncodeFields(std::span<const ByteView> fields) {
  size_t total = 0;
  for (const auto& f : fields) {
    if (f.size() > std::numeric_limits<uint32_t>::max()) {
      throw EncodingError("field longer than 2^32-1 bytes");
    }
    total += 4 + f.size();
  }
  Bytes out;
  out.reserve(total);
  for (const auto& f : fields) {
    auto len = static_cast<uint32_t>(f.size());
    out.push_back(static_cast<uint8_t>(len >> 24));
    out.push_back(static_cast<uint8_t>(len >> 16));
    out.push_back(static_cast<uint8_t>(len >> 8));
    out.push_back(static_cast<uint8_t>(len));
    out.insert(out.end(), f.begin(), f.end());
  }
  return out;
}

Bytes EncodeFields(std::initializer_list<ByteView> fields) {
  return EncodeFields(std::span<const ByteView>(fields.begin(), fields.size()));
}

}  // namespace miso::crypto
