#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <string>

#include "oracles.hpp"
#include "padsteg/digest.hpp"
#include "padsteg/stegcodec.hpp"
#include "test_support.hpp"

namespace padsteg {
namespace {

using testing::error_of;

Bytes as_bytes(const std::string& s) { return Bytes(s.begin(), s.end()); }

template <std::size_t N>
Bytes as_bytes(const std::array<std::uint8_t, N>& a) {
  return Bytes(a.begin(), a.end());
}

TEST(Md5Test, ReferenceVectors) {
  // RFC 1321 appendix A.5.
  Md5Digest md5;
  EXPECT_EQ(as_bytes(md5.compute(Bytes{})), oracle::hex("d41d8cd98f00b204e9800998ecf8427e"));
  EXPECT_EQ(as_bytes(md5.compute(as_bytes("abc"))), oracle::hex("900150983cd24fb0d6963f7d28e17f72"));
  EXPECT_EQ(as_bytes(md5.compute(as_bytes("message digest"))), oracle::hex("f96b697d7cb7938d525a2f31aaf161d0"));
  EXPECT_EQ(digest_by_name("md5")->name(), "md5");
  EXPECT_EQ(error_of([] { digest_by_name("sha1"); }), ErrorCode::InvalidConfig);
}

TEST(AdvertisementTest, KnownVector) {
  const auto mac = MacAddress::parse("AA:BB:CC:DD:EE:FF");
  const auto ad = encode_advertisement(mac, 0x0001);
  // MD5 of 00 01 AA BB CC DD EE FF, from tests/fixtures/gen_fixtures.py (hashlib).
  EXPECT_EQ(as_bytes(ad), oracle::hex("00019bb9a2386d61bff3835d21c7aa7bcb41"));
  EXPECT_EQ(encode_advertisement(mac, 0x0001), ad);
  EXPECT_TRUE(verify_advertisement(ad, mac));
}

TEST(AdvertisementTest, ZeroNonceRejected) {
  EXPECT_EQ(error_of([] { encode_advertisement(MacAddress::parse("AA:BB:CC:DD:EE:FF"), 0); }),
            ErrorCode::ZeroNonce);
  EXPECT_FALSE(verify_advertisement(Bytes(18, 0), MacAddress::parse("AA:BB:CC:DD:EE:FF")));
}

TEST(AdvertisementTest, WrongLengthRejected) {
  const auto mac = MacAddress::parse("AA:BB:CC:DD:EE:FF");
  EXPECT_EQ(error_of([&] { verify_advertisement(Bytes(17, 1), mac); }), ErrorCode::BadLength);
  EXPECT_EQ(error_of([&] { verify_advertisement(Bytes(19, 1), mac); }), ErrorCode::BadLength);
  EXPECT_EQ(error_of([] { AdvertisingSequence::parse(Bytes(6)); }), ErrorCode::BadLength);
}

TEST(AdvertisementTest, SequenceRoundTrip) {
  const auto ad = encode_advertisement(MacAddress::parse("02:00:0A:07:00:01"), 0xBEEF);
  const auto seq = AdvertisingSequence::parse(ad);
  EXPECT_EQ(seq.nonce, 0xBEEF);
  EXPECT_EQ(seq.serialize(), ad);
}

TEST(AdvertisementTest, RoundTripAndNeverZero) {
  std::mt19937_64 rng(17);
  for (int i = 0; i < 5000; ++i) {
    const auto mac = oracle::random_mac(rng);
    const auto nonce = static_cast<std::uint16_t>(1 + rng() % 0xFFFF);
    const auto ad = encode_advertisement(mac, nonce);
    ASSERT_TRUE(verify_advertisement(ad, mac));
    ASSERT_TRUE(std::any_of(ad.begin(), ad.end(), [](auto b) { return b != 0; }));
    ASSERT_EQ(ad[0], nonce >> 8);
    ASSERT_EQ(ad[1], nonce & 0xFF);
  }
}

TEST(AdvertisementTest, BoundToSourceMac) {
  const auto a = MacAddress::parse("AA:BB:CC:DD:EE:FF");
  const auto b = MacAddress::parse("AA:BB:CC:DD:EE:FE");
  EXPECT_FALSE(verify_advertisement(encode_advertisement(a, 7), b));
}

TEST(AdvertisementTest, EverySingleBitFlipRejected) {
  const auto mac = MacAddress::parse("AA:BB:CC:DD:EE:FF");
  const auto ad = encode_advertisement(mac, 0x0001);
  for (std::size_t bit = 0; bit < kAdvertisementLen * 8; ++bit) {
    auto flipped = ad;
    flipped[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
    ASSERT_FALSE(verify_advertisement(flipped, mac)) << "bit " << bit;
  }
}

TEST(AdvertisementTest, RandomPaddingNeverAccepted) {
  std::mt19937_64 rng(99);
  const auto mac = MacAddress::parse("AA:BB:CC:DD:EE:FF");
  int accepted = 0;
  for (int i = 0; i < 100000; ++i) {
    auto pad = oracle::random_bytes(rng, kAdvertisementLen);
    if (pad[0] == 0 && pad[1] == 0) pad[1] = 1;
    accepted += verify_advertisement(pad, mac);
  }
  EXPECT_EQ(accepted, 0);
}

TEST(ChunkTest, CountArithmetic) {
  Rng rng(1);
  EXPECT_EQ(chunk_message(Bytes(4, 'x'), rng).size(), 1u);
  EXPECT_EQ(chunk_message(Bytes(12, 'x'), rng).size(), 3u);
  EXPECT_EQ(chunk_message(Bytes{}, rng).size(), 1u);
  for (std::size_t n = 0; n < 200; ++n) EXPECT_EQ(chunk_count_for(n), (2 + n + 5) / 6) << n;
}

TEST(ChunkTest, EmptyMessageFrame) {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    Rng rng(seed);
    const auto chunks = chunk_message(Bytes{}, rng);
    ASSERT_EQ(chunks.size(), 1u);
    ASSERT_EQ(chunks[0][0], 0);
    ASSERT_EQ(chunks[0][1], 0);
    ASSERT_TRUE(std::any_of(chunks[0].begin() + 2, chunks[0].end(), [](auto b) { return b != 0; }));
  }
}

TEST(ChunkTest, LayoutIsLengthThenPayload) {
  Rng rng(4);
  const Bytes msg = as_bytes("hello, world");
  Bytes joined;
  for (const auto& c : chunk_message(msg, rng)) joined.insert(joined.end(), c.begin(), c.end());
  ASSERT_EQ(joined.size(), 18u);
  EXPECT_EQ(joined[0], 0x00);
  EXPECT_EQ(joined[1], 12);
  EXPECT_TRUE(std::equal(msg.begin(), msg.end(), joined.begin() + 2));
}

TEST(ChunkTest, TooLong) {
  Rng rng(1);
  EXPECT_EQ(error_of([&] { chunk_message(Bytes(kMaxMessageLen + 1), rng); }), ErrorCode::MessageTooLong);
  EXPECT_EQ(chunk_message(Bytes(kMaxMessageLen), rng).size(), chunk_count_for(kMaxMessageLen));
}

TEST(ReassemblerTest, LengthPrefixSemantics) {
  Reassembler r;
  const auto message = r.push(StegChunk{0x00, 0x03, 'a', 'b', 'c', 0x5A});
  ASSERT_TRUE(message);
  EXPECT_EQ(*message, as_bytes("abc"));
  EXPECT_FALSE(r.in_progress());
  EXPECT_NO_THROW(r.finish());
}

TEST(ReassemblerTest, NeedMoreThenIncompleteOnClose) {
  Rng rng(8);
  const auto chunks = chunk_message(Bytes(12, 'q'), rng);
  Reassembler r;
  EXPECT_FALSE(r.push(chunks[0]));
  EXPECT_TRUE(r.in_progress());
  EXPECT_EQ(error_of([&] { r.finish(); }), ErrorCode::IncompleteOnClose);
}

TEST(ReassemblerTest, RoundTripEveryLengthUpTo4096) {
  std::mt19937_64 bytes_rng(123);
  Rng fill(5);
  Reassembler r;
  for (std::size_t n = 0; n <= 4096; ++n) {
    const Bytes msg = oracle::random_bytes(bytes_rng, n);
    const auto chunks = chunk_message(msg, fill);
    ASSERT_EQ(chunks.size(), chunk_count_for(n));
    std::optional<Bytes> out;
    for (std::size_t i = 0; i < chunks.size(); ++i) {
      out = r.push(chunks[i]);
      ASSERT_EQ(out.has_value(), i + 1 == chunks.size()) << n;
    }
    ASSERT_EQ(*out, msg) << n;
  }
  EXPECT_NO_THROW(r.finish());
}

TEST(ReassemblerTest, BackToBackMessages) {
  Rng fill(6);
  std::vector<StegChunk> stream;
  const std::vector<Bytes> msgs{as_bytes("first"), Bytes{}, as_bytes("a much longer third message")};
  for (const auto& m : msgs) {
    const auto c = chunk_message(m, fill);
    stream.insert(stream.end(), c.begin(), c.end());
  }
  Reassembler r;
  std::vector<Bytes> got;
  for (const auto& c : stream) {
    if (auto m = r.push(c)) got.push_back(*m);
  }
  EXPECT_EQ(got, msgs);
}

}  // namespace
}  // namespace padsteg
