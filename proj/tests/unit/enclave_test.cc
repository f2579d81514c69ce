#include <random>
#include <set>
#include <string>

#include <gtest/gtest.h>

#include "miso/crypto/random.h"
#include "miso/enclave/attestation_platform.h"
#include "miso/enclave/sealing.h"
#include "test_util.h"

namespace miso::enclave {
namespace {

using crypto::AsBytes;
using crypto::Bytes;

class EnclaveTest : public ::testing::Test {
 protected:
  void SetUp() override { platform_ = AttestationPlatform::Open(dir_.path()); }

  EnclaveIdentity InstallMixer(std::string_view descriptor = "miso-mixer-v1",
                               std::string_view signer = "miso-dev") {
    return platform_->Install(AsBytes(descriptor), signer);
  }

  testing::TempDir dir_;
  std::shared_ptr<AttestationPlatform> platform_;
};

TEST_F(EnclaveTest, InstallMeasuresDescriptor) {
  EnclaveIdentity a = InstallMixer();
  EnclaveIdentity b = InstallMixer();
  EXPECT_EQ(a.measurement, b.measurement);
  EXPECT_NE(a.eid, b.eid);
  // SHA-256("miso-mixer-v1") from tests/oracles/golden_vectors.py.
  EXPECT_EQ(crypto::HexEncode(a.measurement),
            "1fa29cbaeae27a7566254a6427e9f36930efab9d9dee6f0a99fd171154dd9f90");
  EXPECT_NE(InstallMixer("miso-mixer-v2").measurement, a.measurement);
  EXPECT_THROW(platform_->Install({}, "x"), std::invalid_argument);
}

TEST_F(EnclaveTest, AttestVerifyRoundTrip) {
  EnclaveIdentity id = InstallMixer();
  Bytes payload = crypto::RandomBytes(32);
  AttestationReport report = platform_->Attest(id.eid, payload);
  Bytes pk = platform_->GetPublicKey();
  EXPECT_EQ(report.signature.size(), 64u);
  EXPECT_TRUE(VerifyAttestation(pk, report, id.measurement));

  AttestationReport flipped = report;
  flipped.payload[0] ^= 0x01;
  EXPECT_FALSE(VerifyAttestation(pk, flipped, id.measurement));

  EXPECT_FALSE(VerifyAttestation(pk, report, InstallMixer("other").measurement));

  AttestationReport zeroed = report;
  std::fill(zeroed.signature.begin(), zeroed.signature.end(), 0);
  EXPECT_FALSE(VerifyAttestation(pk, zeroed, id.measurement));

  AttestationReport truncated = report;
  truncated.signature.pop_back();
  EXPECT_FALSE(VerifyAttestation(pk, truncated, id.measurement));
  EXPECT_FALSE(VerifyAttestation(Bytes(5), report, id.measurement));
}

TEST_F(EnclaveTest, AttestUnknownEnclave) {
  EXPECT_THROW(platform_->Attest(9999, AsBytes("x")), EnclaveError);
  EXPECT_THROW(platform_->Seal(9999, "l", AsBytes("x"), SealMode::kMrEnclave),
               EnclaveError);
}

TEST_F(EnclaveTest, RandomSingleByteTampersAllFail) {
  EnclaveIdentity id = InstallMixer();
  Bytes pk = platform_->GetPublicKey();
  AttestationReport genuine = platform_->Attest(id.eid, crypto::RandomBytes(32));
  std::mt19937 rng(42);
  int accepted = 0;
  for (int i = 0; i < 1000; ++i) {
    AttestationReport r = genuine;
    uint8_t delta = static_cast<uint8_t>(1 + rng() % 255);
    crypto::Digest expected = id.measurement;
    switch (i % 3) {
      case 0: {
        size_t pos = rng() % r.measurement.size();
        r.measurement[pos] ^= delta;
        // Verifier expects the genuine measurement; also check a verifier
        // that trusts the tampered value rejects it on the signature.
        if (VerifyAttestation(pk, r, r.measurement)) ++accepted;
        break;
      }
      case 1:
        r.payload[rng() % r.payload.size()] ^= delta;
        break;
      default:
        r.signature[rng() % r.signature.size()] ^= delta;
        break;
    }
    if (VerifyAttestation(pk, r, expected)) ++accepted;
  }
  EXPECT_EQ(accepted, 0);
}

TEST_F(EnclaveTest, SealRoundTripBothModes) {
  EnclaveIdentity id = InstallMixer();
  std::mt19937 rng(1);
  for (int i = 0; i < 100; ++i) {
    SealMode mode = i % 2 ? SealMode::kMrSigner : SealMode::kMrEnclave;
    std::string label = "label_" + std::to_string(rng() % 1000);
    Bytes plain = crypto::RandomBytes(rng() % 300);
    SealedBlob blob = platform_->Seal(id.eid, label, plain, mode);
    EXPECT_EQ(blob.mode, mode);
    EXPECT_EQ(platform_->Unseal(id.eid, label, blob, mode), plain);
    EXPECT_EQ(platform_->Unseal(id.eid, label, SealedBlob::Parse(blob.Serialize()), mode),
              plain);
  }
}

TEST_F(EnclaveTest, MrEnclaveIsolation) {
  for (int i = 0; i < 10; ++i) {
    std::string d1 = crypto::Base64UrlEncode(crypto::RandomBytes(12));
    std::string d2 = crypto::Base64UrlEncode(crypto::RandomBytes(12));
    EnclaveIdentity a = InstallMixer(d1, "signer");
    EnclaveIdentity b = InstallMixer(d2, "signer");
    SealedBlob blob = platform_->Seal(a.eid, "prf_key", AsBytes("secret"),
                                      SealMode::kMrEnclave);
    EXPECT_THROW(platform_->Unseal(b.eid, "prf_key", blob, SealMode::kMrEnclave),
                 SealTamperError);
  }
}

TEST_F(EnclaveTest, MrSignerSharedAcrossPrograms) {
  EnclaveIdentity a = InstallMixer("program-1", "acme");
  EnclaveIdentity b = InstallMixer("program-2", "acme");
  EnclaveIdentity c = InstallMixer("program-1", "mallory");
  SealedBlob blob = platform_->Seal(a.eid, "k", AsBytes("shared"), SealMode::kMrSigner);
  EXPECT_EQ(platform_->Unseal(b.eid, "k", blob, SealMode::kMrSigner),
            crypto::ToBytes("shared"));
  EXPECT_THROW(platform_->Unseal(c.eid, "k", blob, SealMode::kMrSigner),
               SealTamperError);
}

TEST_F(EnclaveTest, TamperWrongLabelAndWrongModeRejected) {
  EnclaveIdentity id = InstallMixer();
  SealedBlob blob = platform_->Seal(id.eid, "salt_table", AsBytes("payload"),
                                    SealMode::kMrEnclave);
  SealedBlob tampered = blob;
  tampered.ciphertext[0] ^= 0x80;
  EXPECT_THROW(platform_->Unseal(id.eid, "salt_table", tampered, SealMode::kMrEnclave),
               SealTamperError);
  SealedBlob bad_tag = blob;
  bad_tag.ciphertext.back() ^= 0x01;
  EXPECT_THROW(platform_->Unseal(id.eid, "salt_table", bad_tag, SealMode::kMrEnclave),
               SealTamperError);
  SealedBlob bad_nonce = blob;
  bad_nonce.nonce[3] ^= 0x01;
  EXPECT_THROW(platform_->Unseal(id.eid, "salt_table", bad_nonce, SealMode::kMrEnclave),
               SealTamperError);
  EXPECT_THROW(platform_->Unseal(id.eid, "tag_table", blob, SealMode::kMrEnclave),
               SealTamperError);
  EXPECT_THROW(platform_->Unseal(id.eid, "salt_table", blob, SealMode::kMrSigner),
               SealTamperError);
  // Relabelling the mode byte does not help either.
  SealedBlob relabelled = blob;
  relabelled.mode = SealMode::kMrSigner;
  EXPECT_THROW(platform_->Unseal(id.eid, "salt_table", relabelled, SealMode::kMrSigner),
               SealTamperError);
}

TEST_F(EnclaveTest, NoncesAreUnique) {
  EnclaveIdentity id = InstallMixer();
  std::set<std::array<uint8_t, SealedBlob::kNonceSize>> nonces;
  for (int i = 0; i < 10000; ++i) {
    nonces.insert(platform_->Seal(id.eid, "n", AsBytes("x"), SealMode::kMrEnclave).nonce);
  }
  EXPECT_EQ(nonces.size(), 10000u);
}

TEST_F(EnclaveTest, BlobLayoutIsBitExact) {
  EnclaveIdentity id = InstallMixer();
  SealedBlob blob = platform_->Seal(id.eid, "x", AsBytes("abc"), SealMode::kMrSigner);
  Bytes wire = blob.Serialize();
  ASSERT_EQ(wire.size(), 1u + 12u + 3u + 16u);
  EXPECT_EQ(wire[0], 0x02);
  EXPECT_TRUE(std::equal(blob.nonce.begin(), blob.nonce.end(), wire.begin() + 1));
  EXPECT_TRUE(std::equal(blob.ciphertext.begin(), blob.ciphertext.end(), wire.begin() + 13));
  EXPECT_EQ(platform_->Seal(id.eid, "x", AsBytes("abc"), SealMode::kMrEnclave).Serialize()[0],
            0x01);

  EXPECT_THROW(SealedBlob::Parse(Bytes(28)), SealTamperError);
  Bytes bad_mode = wire;
  bad_mode[0] = 0x07;
  EXPECT_THROW(SealedBlob::Parse(bad_mode), SealTamperError);
}

TEST_F(EnclaveTest, SealedFilesPersistAcrossPlatformReopen) {
  EnclaveIdentity id = InstallMixer();
  Bytes pk = platform_->GetPublicKey();
  auto state = dir_.path() / "state";
  std::filesystem::create_directories(state);
  WriteSealedFile(state, "prf_key",
                  platform_->Seal(id.eid, "prf_key", AsBytes("k"), SealMode::kMrEnclave));
  EXPECT_TRUE(std::filesystem::exists(state / "prf_key.sealed"));
  EXPECT_FALSE(ReadSealedFile(state, "missing").has_value());
  EXPECT_THROW(SealedFilePath(state, "../escape"), std::invalid_argument);

  auto reopened = AttestationPlatform::Open(dir_.path());
  EXPECT_EQ(reopened->GetPublicKey(), pk);
  EnclaveIdentity again = reopened->Install(AsBytes("miso-mixer-v1"), "miso-dev");
  auto blob = ReadSealedFile(state, "prf_key");
  ASSERT_TRUE(blob.has_value());
  EXPECT_EQ(reopened->Unseal(again.eid, "prf_key", *blob, SealMode::kMrEnclave),
            crypto::ToBytes("k"));
}

TEST(SealModeTest, Names) {
  EXPECT_EQ(ParseSealMode("mrenclave"), SealMode::kMrEnclave);
  EXPECT_EQ(ParseSealMode("mrsigner"), SealMode::kMrSigner);
  EXPECT_EQ(SealModeName(SealMode::kMrSigner), "mrsigner");
  EXPECT_THROW(ParseSealMode("other"), std::invalid_argument);
}

}  // namespace
}  // namespace miso::enclave
