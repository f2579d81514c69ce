#include "miso/crypto/identity.h"

#include <stdexcept>
#include <vector>

#include "miso/crypto/encoding.h"

namespace miso::crypto {
namespace {

std::vector<ByteView> PairFields(std::span<const RawUserId> raws) {
  if (raws.empty()) throw std::invalid_argument("empty identity list");
  std::vector<ByteView> fields;
  fields.reserve(raws.size() * 2 + 2);
  for (const auto& raw : raws) {
    fields.push_back(AsBytes(raw.idp_id));
    fields.push_back(AsBytes(raw.uid));
  }
  return fields;
}

}  // namespace

Digest DerivePreUid(const PrfKey& key, const RawUserId& raw,
                    std::string_view cid_rp) {
  return DeriveMultiPreUid(key, std::span(&raw, 1), cid_rp);
}

Digest DeriveUid(const PrfKey& key, const RawUserId& raw,
                 std::string_view cid_rp, const Salt& salt) {
  return DeriveMultiUid(key, std::span(&raw, 1), cid_rp, salt);
}

Digest DeriveMultiPreUid(const PrfKey& key, std::span<const RawUserId> raws,
                         std::string_view cid_rp) {
  auto fields = PairFields(raws);
  fields.push_back(AsBytes(cid_rp));
  return Prf(key, EncodeFields(fields));
}

Digest DeriveMultiUid(const PrfKey& key, std::span<const RawUserId> raws,
                      std::string_view cid_rp, const Salt& salt) {
  auto fields = PairFields(raws);
  fields.push_back(AsBytes(cid_rp));
  fields.push_back(salt);
  return Prf(key, EncodeFields(fields));
}

Digest DeriveTag(const PrfKey& key, const RawUserId& raw) {
  return Prf(key, EncodeFields({AsBytes(raw.idp_id), AsBytes(raw.uid)}));
}

std::string DeriveClientId(ByteView nonce, std::string_view redirect_uri) {
  return HexEncode(Sha256(EncodeFields({nonce, AsBytes(redirect_uri)})));
}

}  // namespace miso::crypto
