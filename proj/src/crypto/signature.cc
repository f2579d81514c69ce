#include "miso/crypto/signature.h"

#include <openssl/evp.h>

#include <stdexcept>

#include "miso/crypto/random.h"

namespace miso::crypto {

struct SigningKey::Impl {
  EVP_PKEY* pkey = nullptr;
  ~Impl() { EVP_PKEY_free(pkey); }
};

SigningKey::SigningKey(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {}
SigningKey::SigningKey(SigningKey&&) noexcept = default;
SigningKey& SigningKey::operator=(SigningKey&&) noexcept = default;
SigningKey::~SigningKey() = default;

SigningKey SigningKey::Generate() {
  Bytes seed = RandomBytes(kSeedSize);
  SigningKey key = FromSeed(seed);
  SecureWipe(seed);
  return key;
}

SigningKey SigningKey::FromSeed(ByteView seed) {
  if (seed.size() != kSeedSize) throw EncodingError("Ed25519 seed must be 32 bytes");
  auto impl = std::make_unique<Impl>();
  impl->pkey = EVP_PKEY_new_raw_private_key(EVP_PKEY_ED25519, nullptr,
                                            seed.data(), seed.size());
  if (impl->pkey == nullptr) throw std::runtime_error("Ed25519 key import failed");
  return SigningKey(std::move(impl));
}

Bytes SigningKey::Sign(ByteView message) const {
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  Bytes sig(kSignatureSize);
  size_t sig_len = sig.size();
  bool ok = ctx != nullptr &&
            EVP_DigestSignInit(ctx, nullptr, nullptr, nullptr, impl_->pkey) == 1 &&
            EVP_DigestSign(ctx, sig.data(), &sig_len, message.data(),
                           message.size()) == 1;
  EVP_MD_CTX_free(ctx);
  if (!ok) throw std::runtime_error("Ed25519 signing failed");
  sig.resize(sig_len);
  return sig;
}

Bytes SigningKey::public_key() const {
  Bytes pk(kPublicKeySize);
  size_t len = pk.size();
  if (EVP_PKEY_get_raw_public_key(impl_->pkey, pk.data(), &len) != 1) {
    throw std::runtime_error("Ed25519 public key export failed");
  }
  return pk;
}

Bytes SigningKey::seed() const {
  Bytes seed(kSeedSize);
  size_t len = seed.size();
  if (EVP_PKEY_get_raw_private_key(impl_->pkey, seed.data(), &len) != 1) {
    throw std::runtime_error("Ed25519 private key export failed");
  }
  return seed;
}

bool VerifySignature(ByteView public_key, ByteView message, ByteView signature) {
  if (public_key.size() != SigningKey::kPublicKeySize ||
      signature.size() != SigningKey::kSignatureSize) {
    return false;
  }
  EVP_PKEY* pkey = EVP_PKEY_new_raw_public_key(
      EVP_PKEY_ED25519, nullptr, public_key.data(), public_key.size());
  if (pkey == nullptr) return false;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  bool ok = ctx != nullptr &&
            EVP_DigestVerifyInit(ctx, nullptr, nullptr, nullptr, pkey) == 1 &&
            EVP_DigestVerify(ctx, signature.data(), signature.size(),
                             message.data(), message.size()) == 1;
  EVP_MD_CTX_free(ctx);
  EVP_PKEY_free(pkey);
  return ok;
}

}  // namespace miso::crypto
