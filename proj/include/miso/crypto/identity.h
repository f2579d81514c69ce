#ifndef MISO_CRYPTO_IDENTITY_H_
#define MISO_CRYPTO_IDENTITY_H_

#include <span>
#include <string>
#include <string_view>

#include "miso/crypto/bytes.h"
#include "miso/crypto/prf.h"

namespace miso::crypto {

// A user identifier as issued by one IdP. |uid| is only unique within
// |idp_id|, so every derivation below binds both.
struct RawUserId {
  std::string idp_id;
  std::string uid;

  friend bool operator==(const RawUserId&, const RawUserId&) = default;
};

using Salt = Digest;

// Salt-table lookup key: PRF(key, idp_id | uid | cid_rp).
Digest DerivePreUid(const PrfKey& key, const RawUserId& raw,
                    std::string_view cid_rp);

// Blinded identifier handed to the RP: PRF(key, idp_id | uid | cid_rp | salt).
Digest DeriveUid(const PrfKey& key, const RawUserId& raw,
                 std::string_view cid_rp, const Salt& salt);

// Multi-IdP forms. |raws| must already be in canonical order (sorted by
// idp_id); the output depends on the order. Throws std::invalid_argument on an
// empty list. With a single element these equal DerivePreUid/DeriveUid.
Digest DeriveMultiPreUid(const PrfKey& key, std::span<const RawUserId> raws,
                         std::string_view cid_rp);
Digest DeriveMultiUid(const PrfKey& key, std::span<const RawUserId> raws,
                      std::string_view cid_rp, const Salt& salt);

// Per-identity fingerprint used for threshold matching.
Digest DeriveTag(const PrfKey& key, const RawUserId& raw);

// SHA-256(nonce | redirect_uri) as 64 lowercase hex chars.
std::string DeriveClientId(ByteView nonce, std::string_view redirect_uri);

}  // namespace miso::crypto

#endif  // MISO_CRYPTO_IDENTITY_H_
