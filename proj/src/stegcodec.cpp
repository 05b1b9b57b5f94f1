#include "padsteg/stegcodec.hpp"

#include <algorithm>
#include <string>

#include "padsteg/error.hpp"

namespace padsteg {

namespace {

Digest128 advertisement_digest(std::uint16_t nonce, const MacAddress& mac, const Digest& digest) {
  std::array<std::uint8_t, 8> message{static_cast<std::uint8_t>(nonce >> 8),
                                      static_cast<std::uint8_t>(nonce)};
  std::copy(mac.octets().begin(), mac.octets().end(), message.begin() + 2);
  return digest.compute(message);
}

}  // namespace

Advertisement AdvertisingSequence::serialize() const {
  Advertisement out{};
  out[0] = static_cast<std::uint8_t>(nonce >> 8);
  out[1] = static_cast<std::uint8_t>(nonce);
  std::copy(digest.begin(), digest.end(), out.begin() + 2);
  return out;
}

AdvertisingSequence AdvertisingSequence::parse(ByteView padding) {
  if (padding.size() != kAdvertisementLen) {
    throw Error(ErrorCode::BadLength, "advertisement must be 18 bytes, got " + std::to_string(padding.size()));
  }
  AdvertisingSequence seq;
  seq.nonce = static_cast<std::uint16_t>((padding[0] << 8) | padding[1]);
  std::copy(padding.begin() + 2, padding.end(), seq.digest.begin());
  return seq;
}

Advertisement encode_advertisement(const MacAddress& src_mac, std::uint16_t nonce, const Digest& digest) {
  if (nonce == 0) throw Error(ErrorCode::ZeroNonce, "advertisement nonce must be nonzero");
  return AdvertisingSequence{nonce, advertisement_digest(nonce, src_mac, digest)}.serialize();
}

bool verify_advertisement(ByteView padding, const MacAddress& src_mac, const Digest& digest) {
  const auto seq = AdvertisingSequence::parse(padding);
  if (seq.nonce == 0) return false;
  return advertisement_digest(seq.nonce, src_mac, digest) == seq.digest;
}

std::size_t chunk_count_for(std::size_t payload_len) {
  return (2 + payload_len + kChunkLen - 1) / kChunkLen;
}

std::vector<StegChunk> chunk_message(ByteView payload, Rng& rng) {
  if (payload.size() > kMaxMessageLen) {
    throw Error(ErrorCode::MessageTooLong,
                "message of " + std::to_string(payload.size()) + " bytes exceeds 65535");
  }
  const std::size_t count = chunk_count_for(payload.size());
  Bytes stream(count * kChunkLen);
  stream[0] = static_cast<std::uint8_t>(payload.size() >> 8);
  stream[1] = static_cast<std::uint8_t>(payload.size());
  std::copy(payload.begin(), payload.end(), stream.begin() + 2);

  std::uniform_int_distribution<int> byte(0, 255);
  const auto fill_begin = stream.begin() + 2 + static_cast<std::ptrdiff_t>(payload.size());
  do {
    std::generate(fill_begin, stream.end(), [&] { return static_cast<std::uint8_t>(byte(rng)); });
  } while (payload.empty() && std::all_of(stream.begin(), stream.end(), [](auto b) { return b == 0; }));

  std::vector<StegChunk> chunks(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::copy_n(stream.begin() + static_cast<std::ptrdiff_t>(i * kChunkLen), kChunkLen, chunks[i].begin());
  }
  return chunks;
}

std::optional<Bytes> Reassembler::push(const StegChunk& chunk) {
  buffer_.insert(buffer_.end(), chunk.begin(), chunk.end());
  const std::size_t declared = (std::size_t{buffer_[0]} << 8) | buffer_[1];
  if (buffer_.size() < 2 + declared) return std::nullopt;
  Bytes message(buffer_.begin() + 2, buffer_.begin() + 2 + static_cast<std::ptrdiff_t>(declared));
  buffer_.clear();
  return message;
}

void Reassembler::finish() {
  if (in_progress()) {
    const std::size_t have = buffer_.size();
    buffer_.clear();
    throw Error(ErrorCode::IncompleteOnClose,
                "stream closed with " + std::to_string(have) + " bytes of an unfinished message");
  }
}

}  // namespace padsteg
