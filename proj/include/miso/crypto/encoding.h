#ifndef MISO_CRYPTO_ENCODING_H_
#define MISO_CRYPTO_ENCODING_H_

#include <initializer_list>
#include <span>

#include "miso/crypto/bytes.h"

namespace miso::crypto {

// Injective encoding of an ordered field list: each field is written as a
// 4-byte big-endian length followed by its bytes. Every PRF and hash input in
// the system goes through this, so "ali"+"ce1" never collides with
// "alice"+"1".
//
// Throws EncodingError if a field is longer than 2^32-1 bytes.
Bytes EncodeFields(std::span<const ByteView> fields);
Bytes EncodeFields(std::initializer_list<ByteView> fields);

}  // namespace miso::crypto

#endif  // MISO_CRYPTO_ENCODING_H_
