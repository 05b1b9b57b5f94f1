#pragma once

// Ethernet II framing with an explicit payload/padding split, plus the ARP,
// IPv4/TCP, IPv4/ICMP and IPv4/UDP encodings carried inside it. Everything on
// the wire is big-endian. The frame check sequence is not modeled.

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace padsteg {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

inline constexpr std::size_t kEthernetHeaderLen = 14;
inline constexpr std::size_t kMinPayloadLen = 46;
inline constexpr std::size_t kMaxPayloadLen = 1500;
inline constexpr std::size_t kMinFrameLen = kEthernetHeaderLen + kMinPayloadLen;
inline constexpr std::size_t kArpPacketLen = 28;
inline constexpr std::size_t kIpv4HeaderLen = 20;
inline constexpr std::size_t kTcpHeaderLen = 20;

namespace ethertype {
inline constexpr std::uint16_t kIpv4 = 0x0800;
inline constexpr std::uint16_t kArp = 0x0806;
}  // namespace ethertype

namespace ipproto {
inline constexpr std::uint8_t kIcmp = 1;
inline constexpr std::uint8_t kTcp = 6;
inline constexpr std::uint8_t kUdp = 17;
inline constexpr std::uint8_t kGre = 47;
}  // namespace ipproto

class MacAddress {
 public:
  using Octets = std::array<std::uint8_t, 6>;

  constexpr MacAddress() = default;
  constexpr explicit MacAddress(const Octets& octets) : octets_(octets) {}

  static constexpr MacAddress broadcast() { return MacAddress({0xFF, 0xFF, 0xFF, 0xFF, 0xFF, 0xFF}); }
  static constexpr MacAddress zero() { return MacAddress(); }

  /// Accepts "AA:BB:CC:DD:EE:FF" or "aa-bb-...". Throws Error(Malformed).
  static MacAddress parse(std::string_view text);
  static MacAddress from_bytes(ByteView bytes);

  const Octets& octets() const { return octets_; }
  bool is_broadcast() const { return *this == broadcast(); }

  /// Colon-separated uppercase hex pairs.
  std::string to_string() const;

  friend constexpr auto operator<=>(const MacAddress&, const MacAddress&) = default;

 private:
  Octets octets_{};
};

class Ipv4Address {
 public:
  using Octets = std::array<std::uint8_t, 4>;

  constexpr Ipv4Address() = default;
  constexpr explicit Ipv4Address(const Octets& octets) : octets_(octets) {}
  static Ipv4Address from_uint(std::uint32_t host_order);
  static Ipv4Address from_bytes(ByteView bytes);
  static Ipv4Address parse(std::string_view dotted_quad);

  const Octets& octets() const { return octets_; }
  std::uint32_t to_uint() const;
  std::string to_string() const;

  friend constexpr auto operator<=>(const Ipv4Address&, const Ipv4Address&) = default;

 private:
  Octets octets_{};
};

/// Source of padding bytes, e.g. an emulated leaky driver buffer.
class PaddingSource {
 public:
  virtual ~PaddingSource() = default;
  virtual Bytes next(std::size_t n) = 0;
};

struct ZeroFill {};
struct GivenFill {
  Bytes bytes;
};
using PaddingFill = std::variant<ZeroFill, GivenFill, std::reference_wrapper<PaddingSource>>;

enum class PaddingClass { NoPadding, ZeroPadding, ImproperPadding };
std::string_view to_string(PaddingClass c);

/// Immutable Ethernet II frame. When the payload boundary is known the
/// padding-length law holds: padding = max(0, 46 - payload).
class EthernetFrame {
 public:
  EthernetFrame() = default;

  const MacAddress& dst() const { return dst_; }
  const MacAddress& src() const { return src_; }
  std::uint16_t ethertype() const { return ethertype_; }
  const Bytes& payload() const { return payload_; }
  const Bytes& padding() const { return padding_; }

  /// False for frames parsed without a way to find the upper-layer length;
  /// such frames keep everything after the header as payload.
  bool payload_boundary_known() const { return boundary_known_; }

  std::size_t wire_size() const { return kEthernetHeaderLen + payload_.size() + padding_.size(); }

  /// Same frame with different padding content of the same length.
  EthernetFrame with_padding(Bytes padding) const;

  friend bool operator==(const EthernetFrame&, const EthernetFrame&) = default;

 private:
  friend EthernetFrame build_frame(const MacAddress&, const MacAddress&, std::uint16_t, ByteView,
                                   const PaddingFill&);
  friend EthernetFrame parse_frame(ByteView, std::optional<std::size_t>);

  MacAddress dst_;
  MacAddress src_;
  std::uint16_t ethertype_ = 0;
  Bytes payload_;
  Bytes padding_;
  bool boundary_known_ = true;
};

std::size_t padding_length_for(std::size_t payload_len);

EthernetFrame build_frame(const MacAddress& dst, const MacAddress& src, std::uint16_t ethertype,
                          ByteView payload, const PaddingFill& fill = ZeroFill{});

Bytes serialize_frame(const EthernetFrame& frame);

/// Splits payload from padding using the upper-layer length: fixed 28 bytes
/// for ARP, the total-length field for IPv4, or `expected_payload_len` when
/// given. Other ethertypes come back with payload_boundary_known() == false.
EthernetFrame parse_frame(ByteView wire, std::optional<std::size_t> expected_payload_len = std::nullopt);

PaddingClass classify_padding(const EthernetFrame& frame);

// ---------------------------------------------------------------------------
// ARP

struct ArpPacket {
  static constexpr std::uint16_t kRequest = 1;
  static constexpr std::uint16_t kReply = 2;

  std::uint16_t htype = 1;
  std::uint16_t ptype = ethertype::kIpv4;
  std::uint8_t hlen = 6;
  std::uint8_t plen = 4;
  std::uint16_t oper = kRequest;
  MacAddress sha;
  Ipv4Address spa;
  MacAddress tha;
  Ipv4Address tpa;

  bool is_request() const { return oper == kRequest; }
  bool is_gratuitous() const { return is_request() && spa == tpa; }

  std::array<std::uint8_t, kArpPacketLen> serialize() const;
  static ArpPacket parse(ByteView bytes);

  friend bool operator==(const ArpPacket&, const ArpPacket&) = default;
};

ArpPacket build_arp_request(const MacAddress& sha, const Ipv4Address& spa, const Ipv4Address& tpa);
ArpPacket build_arp_reply(const MacAddress& sha, const Ipv4Address& spa, const MacAddress& tha,
                          const Ipv4Address& tpa);

// ---------------------------------------------------------------------------
// IPv4 / TCP

namespace tcpflag {
inline constexpr std::uint8_t kFin = 0x01;
inline constexpr std::uint8_t kSyn = 0x02;
inline constexpr std::uint8_t kRst = 0x04;
inline constexpr std::uint8_t kPsh = 0x08;
inline constexpr std::uint8_t kAck = 0x10;
}  // namespace tcpflag

struct TcpEndpoints {
  Ipv4Address src_ip;
  Ipv4Address dst_ip;
  std::uint16_t src_port = 0;
  std::uint16_t dst_port = 0;

  TcpEndpoints reversed() const { return {dst_ip, src_ip, dst_port, src_port}; }
  friend auto operator<=>(const TcpEndpoints&, const TcpEndpoints&) = default;
};

/// Minimal IPv4 + TCP with no options on either header.
struct Ipv4TcpSegment {
  TcpEndpoints endpoints;
  std::uint16_t ip_id = 0;
  std::uint8_t ttl = 64;
  std::uint16_t ip_flags_fragment = 0x4000;  // DF
  std::uint32_t seq = 0;
  std::uint32_t ack = 0;
  std::uint8_t flags = 0;
  std::uint16_t window = 0;
  Bytes tcp_payload;
  std::uint16_t ip_checksum = 0;
  std::uint16_t tcp_checksum = 0;

  std::size_t total_length() const { return kIpv4HeaderLen + kTcpHeaderLen + tcp_payload.size(); }

  /// Recomputes both checksums in place.
  void update_checksums();
  bool checksums_valid() const;

  Bytes serialize() const;
  static Ipv4TcpSegment parse(ByteView ip_packet);

  friend bool operator==(const Ipv4TcpSegment&, const Ipv4TcpSegment&) = default;
};

/// Payload-free ACK; always 40 bytes on the wire, so it forces 6 bytes of padding.
Ipv4TcpSegment build_tcp_ack(const TcpEndpoints& conn, std::uint32_t seq, std::uint32_t ack,
                             std::uint16_t window, std::uint16_t ip_id = 0, std::uint8_t ttl = 64);

Ipv4TcpSegment build_tcp_data(const TcpEndpoints& conn, std::uint32_t seq, std::uint32_t ack,
                              std::uint16_t window, ByteView data, std::uint16_t ip_id = 0,
                              std::uint8_t ttl = 64);

/// Generic IPv4 datagram around an already-encoded transport payload.
Bytes build_ipv4_packet(const Ipv4Address& src, const Ipv4Address& dst, std::uint8_t protocol,
                        ByteView transport, std::uint16_t ip_id = 0, std::uint8_t ttl = 64);

Bytes build_icmp_echo(const Ipv4Address& src, const Ipv4Address& dst, bool reply,
                      std::uint16_t ident, std::uint16_t sequence, ByteView data,
                      std::uint16_t ip_id = 0);

Bytes build_udp(const Ipv4Address& src, const Ipv4Address& dst, std::uint16_t src_port,
                std::uint16_t dst_port, ByteView data, std::uint16_t ip_id = 0);

/// Ones'-complement Internet checksum (RFC 1071) over `data`, continuing from
/// a partial 32-bit sum so pseudo-headers can be folded in.
std::uint16_t internet_checksum(ByteView data, std::uint32_t initial = 0);

}  // namespace padsteg

template <>
struct std::hash<padsteg::MacAddress> {
  std::size_t operator()(const padsteg::MacAddress& mac) const noexcept {
    std::uint64_t v = 0;
    for (auto b : mac.octets()) v = (v << 8) | b;
    return std::hash<std::uint64_t>{}(v);
  }
};
