#pragma once

// Covert wire protocol carried in frame padding.
//
//   ARP Request padding (18 bytes): nonce (2, big-endian, nonzero) || digest(nonce || src MAC) (16)
//   TCP-ACK padding (6 bytes each): a chunk of  length (2, big-endian) || payload || random fill

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "padsteg/digest.hpp"
#include "padsteg/frame.hpp"

namespace padsteg {

inline constexpr std::size_t kAdvertisementLen = 18;
inline constexpr std::size_t kChunkLen = 6;
inline constexpr std::size_t kMaxMessageLen = 65535;

using Advertisement = std::array<std::uint8_t, kAdvertisementLen>;
using StegChunk = std::array<std::uint8_t, kChunkLen>;
using Rng = std::mt19937_64;

struct AdvertisingSequence {
  std::uint16_t nonce = 0;
  Digest128 digest{};

  Advertisement serialize() const;
  static AdvertisingSequence parse(ByteView padding);
};

Advertisement encode_advertisement(const MacAddress& src_mac, std::uint16_t nonce,
                                   const Digest& digest = *default_digest());

/// True iff the nonce is nonzero and the digest recomputed over
/// (nonce, src_mac) matches. Throws Error(BadLength) unless 18 bytes are given.
bool verify_advertisement(ByteView padding, const MacAddress& src_mac,
                          const Digest& digest = *default_digest());

std::size_t chunk_count_for(std::size_t payload_len);

/// Splits a message into 6-byte chunks. Tail fill comes from `rng`; the one
/// chunk of an empty message never comes out all-zero.
std::vector<StegChunk> chunk_message(ByteView payload, Rng& rng);

/// In-order accumulator for one peer's chunk stream. Messages are
/// back-to-back; fill after a completed message is discarded with its chunk.
class Reassembler {
 public:
  /// Returns the completed message, or nullopt while more chunks are needed.
  std::optional<Bytes> push(const StegChunk& chunk);

  bool in_progress() const { return !buffer_.empty(); }
  std::size_t buffered() const { return buffer_.size(); }

  /// Ends the stream; throws Error(IncompleteOnClose) if a message was cut off.
  void finish();

 private:
  Bytes buffer_;
};

}  // namespace padsteg
