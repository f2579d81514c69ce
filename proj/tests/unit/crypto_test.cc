#include <cstdint>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "miso/crypto/bytes.h"
#include "miso/crypto/encoding.h"
#include "miso/crypto/identity.h"
#include "miso/crypto/prf.h"
#include "miso/crypto/random.h"

namespace miso::crypto {
namespace {

// Expected values below were computed with tests/oracles/golden_vectors.py,
// which uses Python's hmac/hashlib only.
constexpr char kPreUidCid1[] =
    "76b0976ee24c645d0f9c2edfe13295ecd0cfe4931d88f590fdc3f241aadc3873";
constexpr char kPreUidCid2[] =
    "005a2c974d91eada813ffb0215f8712d405a03cb4e423f3df578b67e5541f9dc";
constexpr char kUidSalt1[] =
    "4de3556947f8e5c07be7d1ef61d48e60b492f4dd94752991351e35eab353ebc6";
constexpr char kUidSalt2[] =
    "40e5d65ec3ef880cdee635d360c4b1b152754aa3cbbc910841b31681374d81e2";
constexpr char kMultiAbc[] =
    "52ead736b1ce9177e1694de850865d99fac712478cc479b28d7c69ea1a2b4764";
constexpr char kMultiCba[] =
    "64ba1eada5cd375e1e973c0ead041b294d9c553353f1eaa475bec60a79b4e12c";
constexpr char kMultiPreAbc[] =
    "24406d6e39f3e4fd350b48ba2ce1b6b2e3e99b5768d836fc08992609e64356df";
constexpr char kTagAAlice[] =
    "65715e43058c6ccf43c623081b4b1de76e0840a52d8a71a7879300465e55da84";
constexpr char kTagBAlice[] =
    "c4eb288d25b3016d100c5f5998beb277b10b709f47c8d99b2f4f0acb092397af";
constexpr char kClientIdZeroNonce[] =
    "00e9f7e69ca723f9ecda6caf9435f422964442102a75e3e9991c33334a72121e";

PrfKey ZeroKey() { return PrfKey::FromBytes(Bytes(32, 0x00)); }
Salt FilledSalt(uint8_t v) {
  Salt s;
  s.fill(v);
  return s;
}

std::vector<RawUserId> AliceAbc() {
  return {{"idp-a", "alice"}, {"idp-b", "alice-b"}, {"idp-c", "alice-c"}};
}

TEST(HmacSha256Test, Rfc4231Vectors) {
  // RFC 4231 test cases 1, 2, 3 and 6.
  EXPECT_EQ(HexEncode(HmacSha256(Bytes(20, 0x0b), AsBytes("Hi There"))),
            "b0344c61d8db38535ca8afceaf0bf12b881dc200c9833da726e9376c2e32cff7");
  EXPECT_EQ(HexEncode(HmacSha256(AsBytes("Jefe"),
                                 AsBytes("what do ya want for nothing?"))),
            "5bdcc146bf60754e6a042426089575c75a003f089d2739839dec58b964ec3843");
  EXPECT_EQ(HexEncode(HmacSha256(Bytes(20, 0xaa), Bytes(50, 0xdd))),
            "773ea91e36800e46854db8ebd09181a72959098b3ef8c122d9635514ced565fe");
  EXPECT_EQ(HexEncode(HmacSha256(
                Bytes(131, 0xaa),
                AsBytes("Test Using Larger Than Block-Size Key - Hash Key First"))),
            "60e431591ee0b67f0d8a26aacbf5b77f8e0bc6213728c5140546040f0ee37f54");
}

TEST(PrfTest, DeterministicAndSizedOutput) {
  PrfKey key = PrfKey::Generate();
  Bytes msg = RandomBytes(57);
  Digest a = Prf(key, msg);
  Digest b = Prf(key, msg);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.size(), 32u);
}

TEST(PrfTest, SingleBitFlipsChangeOutput) {
  std::mt19937 rng(7);
  int collisions = 0;
  for (int i = 0; i < 1000; ++i) {
    PrfKey key = PrfKey::Generate();
    Bytes msg = RandomBytes(1 + rng() % 64);
    Bytes flipped = msg;
    size_t bit = rng() % (flipped.size() * 8);
    flipped[bit / 8] ^= static_cast<uint8_t>(1u << (bit % 8));
    if (Prf(key, msg) == Prf(key, flipped)) ++collisions;
  }
  EXPECT_EQ(collisions, 0);
}

TEST(PrfKeyTest, RejectsWrongLength) {
  EXPECT_THROW(PrfKey::FromBytes(Bytes(31)), EncodingError);
  EXPECT_THROW(PrfKey::FromBytes(Bytes(33)), EncodingError);
  EXPECT_NO_THROW(PrfKey::FromBytes(Bytes(32)));
}

TEST(EncodeFieldsTest, LengthPrefixedLayout) {
  Bytes expected = {0, 0, 0, 2, 'a', 'b', 0, 0, 0, 1, 'c'};
  EXPECT_EQ(EncodeFields({AsBytes("ab"), AsBytes("c")}), expected);
  EXPECT_EQ(EncodeFields({AsBytes(""), AsBytes("")}), Bytes(8, 0));
  EXPECT_NE(EncodeFields({AsBytes("abc")}), EncodeFields({AsBytes("ab"), AsBytes("c")}));
  EXPECT_TRUE(EncodeFields(std::span<const ByteView>{}).empty());
}

TEST(EncodeFieldsTest, OversizedFieldRejected) {
  uint8_t dummy = 0;
  // Never dereferenced past the first byte: the size check comes first.
  ByteView huge(&dummy, size_t{1} << 32);
  EXPECT_THROW(EncodeFields({huge}), EncodingError);
}

// All lists of at most 3 fields, each of length <= 3 over {'a','b'}.
TEST(EncodeFieldsTest, InjectiveExhaustiveSmallLists) {
  std::vector<std::string> words = {""};
  for (int len = 1; len <= 3; ++len) {
    for (int bits = 0; bits < (1 << len); ++bits) {
      std::string w;
      for (int i = 0; i < len; ++i) w.push_back((bits >> i) & 1 ? 'b' : 'a');
      words.push_back(w);
    }
  }
  std::set<Bytes> seen;
  size_t lists = 0;
  std::vector<std::vector<std::string>> frontier = {{}};
  for (int depth = 0; depth <= 3; ++depth) {
    std::vector<std::vector<std::string>> next;
    for (const auto& list : frontier) {
      std::vector<ByteView> views;
      for (const auto& f : list) views.push_back(AsBytes(f));
      EXPECT_TRUE(seen.insert(EncodeFields(views)).second);
      ++lists;
      if (depth < 3) {
        for (const auto& w : words) {
          auto extended = list;
          extended.push_back(w);
          next.push_back(std::move(extended));
        }
      }
    }
    frontier = std::move(next);
  }
  EXPECT_EQ(lists, 1u + 15u + 15u * 15u + 15u * 15u * 15u);
}

TEST(EncodeFieldsTest, InjectiveRandomized) {
  std::mt19937 rng(11);
  std::set<std::vector<std::string>> lists;
  std::set<Bytes> encodings;
  for (int i = 0; i < 5000; ++i) {
    std::vector<std::string> list(rng() % 5);
    for (auto& f : list) {
      f.resize(rng() % 6);
      for (char& c : f) c = static_cast<char>(rng() % 3);
    }
    if (!lists.insert(list).second) continue;
    std::vector<ByteView> views;
    for (const auto& f : list) views.push_back(AsBytes(f));
    EXPECT_TRUE(encodings.insert(EncodeFields(views)).second);
  }
}

TEST(DeriveTest, PreUidGoldenVectors) {
  RawUserId alice{"idp-a", "alice"};
  Digest cid1 = DerivePreUid(ZeroKey(), alice, "cid-1");
  Digest cid2 = DerivePreUid(ZeroKey(), alice, "cid-2");
  EXPECT_EQ(HexEncode(cid1), kPreUidCid1);
  EXPECT_EQ(HexEncode(cid2), kPreUidCid2);
  EXPECT_NE(cid1, cid2);
  EXPECT_EQ(DerivePreUid(ZeroKey(), alice, "cid-1"), cid1);
}

TEST(DeriveTest, UidGoldenVectors) {
  RawUserId alice{"idp-a", "alice"};
  Digest s1 = DeriveUid(ZeroKey(), alice, "cid-1", FilledSalt(0x01));
  Digest s2 = DeriveUid(ZeroKey(), alice, "cid-1", FilledSalt(0x02));
  EXPECT_EQ(HexEncode(s1), kUidSalt1);
  EXPECT_EQ(HexEncode(s2), kUidSalt2);
  EXPECT_NE(s1, s2);
}

TEST(DeriveTest, MultiUidGoldenVectorsAndOrderSensitivity) {
  auto abc = AliceAbc();
  std::vector<RawUserId> cba(abc.rbegin(), abc.rend());
  Digest forward = DeriveMultiUid(ZeroKey(), abc, "cid-1", FilledSalt(0x01));
  Digest reversed = DeriveMultiUid(ZeroKey(), cba, "cid-1", FilledSalt(0x01));
  EXPECT_EQ(HexEncode(forward), kMultiAbc);
  EXPECT_EQ(HexEncode(reversed), kMultiCba);
  EXPECT_NE(forward, reversed);
  EXPECT_EQ(HexEncode(DeriveMultiPreUid(ZeroKey(), abc, "cid-1")), kMultiPreAbc);
}

TEST(DeriveTest, MultiWithOneIdentityEqualsSingle) {
  RawUserId alice{"idp-a", "alice"};
  std::vector<RawUserId> one = {alice};
  EXPECT_EQ(DeriveMultiUid(ZeroKey(), one, "cid-1", FilledSalt(0x01)),
            DeriveUid(ZeroKey(), alice, "cid-1", FilledSalt(0x01)));
  EXPECT_EQ(DeriveMultiPreUid(ZeroKey(), one, "cid-1"),
            DerivePreUid(ZeroKey(), alice, "cid-1"));
  EXPECT_THROW(DeriveMultiUid(ZeroKey(), {}, "cid-1", FilledSalt(0x01)),
               std::invalid_argument);
}

TEST(DeriveTest, TagGoldenVectorsAndIdpNamespacing) {
  Digest a = DeriveTag(ZeroKey(), {"idp-a", "alice"});
  Digest b = DeriveTag(ZeroKey(), {"idp-b", "alice"});
  EXPECT_EQ(HexEncode(a), kTagAAlice);
  EXPECT_EQ(HexEncode(b), kTagBAlice);
  EXPECT_NE(a, b);
}

TEST(DeriveTest, ClientIdGoldenVector) {
  std::string cid = DeriveClientId(Bytes(32, 0), "https://rp.local/cb");
  EXPECT_EQ(cid, kClientIdZeroNonce);
  EXPECT_EQ(cid.size(), 64u);
  Digest n1 = GenSecret();
  Digest n2 = GenSecret();
  EXPECT_NE(DeriveClientId(n1, "https://rp.local/cb"),
            DeriveClientId(n2, "https://rp.local/cb"));
}

TEST(DeriveTest, SpliceCollisionsPrevented) {
  PrfKey key = PrfKey::Generate();
  Salt salt = GenSecret();
  EXPECT_NE(DeriveUid(key, {"idp-a", "ali"}, "ce1", salt),
            DeriveUid(key, {"idp-a", "alice"}, "1", salt));
}

TEST(DeriveTest, PureOverRandomInputs) {
  std::mt19937 rng(3);
  for (int i = 0; i < 100; ++i) {
    PrfKey key = PrfKey::Generate();
    RawUserId raw{"idp-" + std::to_string(rng() % 5), Base64UrlEncode(RandomBytes(9))};
    std::string cid = HexEncode(RandomBytes(32));
    Salt salt = GenSecret();
    EXPECT_EQ(DerivePreUid(key, raw, cid), DerivePreUid(key, raw, cid));
    EXPECT_EQ(DeriveUid(key, raw, cid, salt), DeriveUid(key, raw, cid, salt));
    EXPECT_EQ(DeriveTag(key, raw), DeriveTag(key, raw));
    std::vector<RawUserId> raws = {raw, {"idp-z", "other"}};
    EXPECT_EQ(DeriveMultiUid(key, raws, cid, salt), DeriveMultiUid(key, raws, cid, salt));
  }
}

TEST(DeriveTest, UidMonobitSanity) {
  PrfKey key = PrfKey::Generate();
  uint64_t ones = 0;
  uint64_t total = 0;
  for (int i = 0; i < 10000; ++i) {
    RawUserId raw{"idp-a", "user-" + std::to_string(i)};
    Digest uid = DeriveUid(key, raw, "cid-1", GenSecret());
    for (uint8_t b : uid) ones += static_cast<uint64_t>(__builtin_popcount(b));
    total += uid.size() * 8;
  }
  double fraction = static_cast<double>(ones) / static_cast<double>(total);
  EXPECT_GE(fraction, 0.49);
  EXPECT_LE(fraction, 0.51);
}

TEST(RandomTest, SecretsAreDistinctAndWellFormed) {
  std::set<Digest> seen;
  for (int i = 0; i < 1000; ++i) seen.insert(GenSecret());
  EXPECT_EQ(seen.size(), 1000u);
  std::string token = GenSecretToken();
  EXPECT_EQ(token.size(), 43u);
  EXPECT_EQ(token.find_first_not_of(
                "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789-_"),
            std::string::npos);
  EXPECT_EQ(Base64UrlDecode(token).size(), 32u);
}

TEST(BytesTest, HexAndBase64UrlRoundTrip) {
  std::mt19937 rng(5);
  for (int i = 0; i < 200; ++i) {
    Bytes data = RandomBytes(rng() % 70);
    EXPECT_EQ(HexDecode(HexEncode(data)), data);
    EXPECT_EQ(Base64UrlDecode(Base64UrlEncode(data)), data);
  }
  EXPECT_THROW(HexDecode("abc"), EncodingError);
  EXPECT_THROW(HexDecode("zz"), EncodingError);
  EXPECT_THROW(Base64UrlDecode("ab+c"), EncodingError);
  EXPECT_THROW(DigestFromHex("00"), EncodingError);
}

TEST(BytesTest, ConstantTimeEquals) {
  EXPECT_TRUE(ConstantTimeEquals(std::string_view("abc"), std::string_view("abc")));
  EXPECT_FALSE(ConstantTimeEquals(std::string_view("abc"), std::string_view("abd")));
  EXPECT_FALSE(ConstantTimeEquals(std::string_view("abc"), std::string_view("ab")));
  EXPECT_TRUE(ConstantTimeEquals(std::string_view(""), std::string_view("")));
}

}  // namespace
}  // namespace miso::crypto
