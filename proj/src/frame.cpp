#include "padsteg/frame.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>

#include "byte_order.hpp"
#include "padsteg/error.hpp"

namespace padsteg {

using detail::load_be16;
using detail::load_be32;
using detail::store_be16;
using detail::store_be32;

namespace {

int hex_nibble(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

std::uint32_t pseudo_header_sum(const Ipv4Address& src, const Ipv4Address& dst, std::uint8_t proto,
                                std::size_t length) {
  std::uint32_t sum = 0;
  sum += (src.octets()[0] << 8) | src.octets()[1];
  sum += (src.octets()[2] << 8) | src.octets()[3];
  sum += (dst.octets()[0] << 8) | dst.octets()[1];
  sum += (dst.octets()[2] << 8) | dst.octets()[3];
  sum += proto;
  sum += static_cast<std::uint32_t>(length);
  return sum;
}

void write_ipv4_header(std::span<std::uint8_t> out, const Ipv4Address& src, const Ipv4Address& dst,
                       std::uint8_t protocol, std::size_t total_len, std::uint16_t ip_id,
                       std::uint8_t ttl, std::uint16_t flags_fragment) {
  out[0] = 0x45;
  out[1] = 0;
  store_be16(out, 2, static_cast<std::uint16_t>(total_len));
  store_be16(out, 4, ip_id);
  store_be16(out, 6, flags_fragment);
  out[8] = ttl;
  out[9] = protocol;
  store_be16(out, 10, 0);
  std::copy(src.octets().begin(), src.octets().end(), out.begin() + 12);
  std::copy(dst.octets().begin(), dst.octets().end(), out.begin() + 16);
  store_be16(out, 10, internet_checksum(out.first(kIpv4HeaderLen)));
}

}  // namespace

// ---------------------------------------------------------------------------
// Addresses

MacAddress MacAddress::parse(std::string_view text) {
  if (text.size() != 17) throw Error(ErrorCode::Malformed, "MAC address must be 17 characters");
  Octets octets{};
  for (std::size_t i = 0; i < 6; ++i) {
    const std::size_t at = i * 3;
    int hi = hex_nibble(text[at]);
    int lo = hex_nibble(text[at + 1]);
    if (hi < 0 || lo < 0 || (i < 5 && text[at + 2] != ':' && text[at + 2] != '-')) {
      throw Error(ErrorCode::Malformed, "bad MAC address '" + std::string(text) + "'");
    }
    octets[i] = static_cast<std::uint8_t>((hi << 4) | lo);
  }
  return MacAddress(octets);
}

MacAddress MacAddress::from_bytes(ByteView bytes) {
  if (bytes.size() < 6) throw Error(ErrorCode::Truncated, "MAC address needs 6 bytes");
  Octets octets{};
  std::copy_n(bytes.begin(), 6, octets.begin());
  return MacAddress(octets);
}

std::string MacAddress::to_string() const {
  char buf[18];
  std::snprintf(buf, sizeof buf, "%02X:%02X:%02X:%02X:%02X:%02X", octets_[0], octets_[1],
                octets_[2], octets_[3], octets_[4], octets_[5]);
  return buf;
}

Ipv4Address Ipv4Address::from_uint(std::uint32_t v) {
  return Ipv4Address({static_cast<std::uint8_t>(v >> 24), static_cast<std::uint8_t>(v >> 16),
                      static_cast<std::uint8_t>(v >> 8), static_cast<std::uint8_t>(v)});
}

Ipv4Address Ipv4Address::from_bytes(ByteView bytes) {
  if (bytes.size() < 4) throw Error(ErrorCode::Truncated, "IPv4 address needs 4 bytes");
  return Ipv4Address({bytes[0], bytes[1], bytes[2], bytes[3]});
}

Ipv4Address Ipv4Address::parse(std::string_view text) {
  Octets octets{};
  const char* p = text.data();
  const char* end = text.data() + text.size();
  for (std::size_t i = 0; i < 4; ++i) {
    unsigned value = 0;
    auto [next, ec] = std::from_chars(p, end, value);
    if (ec != std::errc{} || next == p || value > 255 || next - p > 3) {
      throw Error(ErrorCode::Malformed, "bad IPv4 address '" + std::string(text) + "'");
    }
    octets[i] = static_cast<std::uint8_t>(value);
    p = next;
    if (i < 3) {
      if (p == end || *p != '.') throw Error(ErrorCode::Malformed, "bad IPv4 address '" + std::string(text) + "'");
      ++p;
    }
  }
  if (p != end) throw Error(ErrorCode::Malformed, "bad IPv4 address '" + std::string(text) + "'");
  return Ipv4Address(octets);
}

std::uint32_t Ipv4Address::to_uint() const {
  return (std::uint32_t{octets_[0]} << 24) | (std::uint32_t{octets_[1]} << 16) |
         (std::uint32_t{octets_[2]} << 8) | std::uint32_t{octets_[3]};
}

std::string Ipv4Address::to_string() const {
  return std::to_string(octets_[0]) + "." + std::to_string(octets_[1]) + "." +
         std::to_string(octets_[2]) + "." + std::to_string(octets_[3]);
}

// ---------------------------------------------------------------------------
// Ethernet

std::string_view to_string(PaddingClass c) {
  switch (c) {
    case PaddingClass::NoPadding: return "NoPadding";
    case PaddingClass::ZeroPadding: return "ZeroPadding";
    case PaddingClass::ImproperPadding: return "ImproperPadding";
  }
  return "?";
}

std::size_t padding_length_for(std::size_t payload_len) {
  return payload_len >= kMinPayloadLen ? 0 : kMinPayloadLen - payload_len;
}

EthernetFrame build_frame(const MacAddress& dst, const MacAddress& src, std::uint16_t ethertype,
                          ByteView payload, const PaddingFill& fill) {
  if (payload.size() > kMaxPayloadLen) {
    throw Error(ErrorCode::OversizePayload,
                "payload of " + std::to_string(payload.size()) + " bytes exceeds 1500");
  }
  const std::size_t pad_len = padding_length_for(payload.size());

  EthernetFrame frame;
  frame.dst_ = dst;
  frame.src_ = src;
  frame.ethertype_ = ethertype;
  frame.payload_.assign(payload.begin(), payload.end());

  if (std::holds_alternative<ZeroFill>(fill)) {
    frame.padding_.assign(pad_len, 0);
  } else if (const auto* given = std::get_if<GivenFill>(&fill)) {
    if (given->bytes.size() != pad_len) {
      throw Error(ErrorCode::PaddingLengthMismatch, "padding needs " + std::to_string(pad_len) +
                                                        " bytes, got " +
                                                        std::to_string(given->bytes.size()));
    }
    frame.padding_ = given->bytes;
  } else if (pad_len > 0) {
    frame.padding_ = std::get<std::reference_wrapper<PaddingSource>>(fill).get().next(pad_len);
    if (frame.padding_.size() != pad_len) {
      throw Error(ErrorCode::PaddingLengthMismatch, "padding source returned wrong length");
    }
  }
  return frame;
}

EthernetFrame EthernetFrame::with_padding(Bytes padding) const {
  if (padding.size() != padding_.size()) {
    throw Error(ErrorCode::PaddingLengthMismatch, "replacement padding must keep its length");
  }
  EthernetFrame copy = *this;
  copy.padding_ = std::move(padding);
  return copy;
}

Bytes serialize_frame(const EthernetFrame& frame) {
  Bytes out(frame.wire_size());
  std::span<std::uint8_t> view(out);
  std::copy(frame.dst().octets().begin(), frame.dst().octets().end(), out.begin());
  std::copy(frame.src().octets().begin(), frame.src().octets().end(), out.begin() + 6);
  store_be16(view, 12, frame.ethertype());
  auto it = std::copy(frame.payload().begin(), frame.payload().end(), out.begin() + kEthernetHeaderLen);
  std::copy(frame.padding().begin(), frame.padding().end(), it);
  return out;
}

EthernetFrame parse_frame(ByteView wire, std::optional<std::size_t> expected_payload_len) {
  if (wire.size() < kMinFrameLen) {
    throw Error(ErrorCode::Truncated,
                "frame of " + std::to_string(wire.size()) + " bytes is below the 60-byte minimum");
  }
  const std::size_t body = wire.size() - kEthernetHeaderLen;
  if (body > kMaxPayloadLen) throw Error(ErrorCode::OversizePayload, "frame body exceeds 1500 bytes");

  EthernetFrame frame;
  frame.dst_ = MacAddress::from_bytes(wire.subspan(0, 6));
  frame.src_ = MacAddress::from_bytes(wire.subspan(6, 6));
  frame.ethertype_ = load_be16(wire, 12);

  std::optional<std::size_t> payload_len = expected_payload_len;
  if (!payload_len) {
    if (frame.ethertype_ == ethertype::kArp) {
      payload_len = kArpPacketLen;
    } else if (frame.ethertype_ == ethertype::kIpv4) {
      payload_len = load_be16(wire, kEthernetHeaderLen + 2);
      if (*payload_len < kIpv4HeaderLen) {
        throw Error(ErrorCode::Malformed, "IPv4 total length below header size");
      }
    }
  }

  auto body_view = wire.subspan(kEthernetHeaderLen);
  if (!payload_len) {
    frame.boundary_known_ = false;
    frame.payload_.assign(body_view.begin(), body_view.end());
    return frame;
  }
  if (*payload_len > body) throw Error(ErrorCode::Truncated, "upper-layer length exceeds frame body");
  if (body != *payload_len + padding_length_for(*payload_len)) {
    throw Error(ErrorCode::Malformed, "frame carries " + std::to_string(body - *payload_len) +
                                          " bytes after a " + std::to_string(*payload_len) +
                                          "-byte payload");
  }
  frame.payload_.assign(body_view.begin(), body_view.begin() + static_cast<std::ptrdiff_t>(*payload_len));
  frame.padding_.assign(body_view.begin() + static_cast<std::ptrdiff_t>(*payload_len), body_view.end());
  return frame;
}

PaddingClass classify_padding(const EthernetFrame& frame) {
  const auto& padding = frame.padding();
  if (padding.empty()) return PaddingClass::NoPadding;
  return std::all_of(padding.begin(), padding.end(), [](std::uint8_t b) { return b == 0; })
             ? PaddingClass::ZeroPadding
             : PaddingClass::ImproperPadding;
}

// ---------------------------------------------------------------------------
// ARP

std::array<std::uint8_t, kArpPacketLen> ArpPacket::serialize() const {
  std::array<std::uint8_t, kArpPacketLen> out{};
  std::span<std::uint8_t> v(out);
  store_be16(v, 0, htype);
  store_be16(v, 2, ptype);
  out[4] = hlen;
  out[5] = plen;
  store_be16(v, 6, oper);
  std::copy(sha.octets().begin(), sha.octets().end(), out.begin() + 8);
  std::copy(spa.octets().begin(), spa.octets().end(), out.begin() + 14);
  std::copy(tha.octets().begin(), tha.octets().end(), out.begin() + 18);
  std::copy(tpa.octets().begin(), tpa.octets().end(), out.begin() + 24);
  return out;
}

ArpPacket ArpPacket::parse(ByteView bytes) {
  if (bytes.size() < kArpPacketLen) throw Error(ErrorCode::Truncated, "ARP packet needs 28 bytes");
  ArpPacket p;
  p.htype = load_be16(bytes, 0);
  p.ptype = load_be16(bytes, 2);
  p.hlen = bytes[4];
  p.plen = bytes[5];
  p.oper = load_be16(bytes, 6);
  if (p.hlen != 6 || p.plen != 4) throw Error(ErrorCode::Malformed, "only Ethernet/IPv4 ARP is supported");
  p.sha = MacAddress::from_bytes(bytes.subspan(8, 6));
  p.spa = Ipv4Address::from_bytes(bytes.subspan(14, 4));
  p.tha = MacAddress::from_bytes(bytes.subspan(18, 6));
  p.tpa = Ipv4Address::from_bytes(bytes.subspan(24, 4));
  return p;
}

ArpPacket build_arp_request(const MacAddress& sha, const Ipv4Address& spa, const Ipv4Address& tpa) {
  ArpPacket p;
  p.oper = ArpPacket::kRequest;
  p.sha = sha;
  p.spa = spa;
  p.tha = MacAddress::zero();
  p.tpa = tpa;
  return p;
}

ArpPacket build_arp_reply(const MacAddress& sha, const Ipv4Address& spa, const MacAddress& tha,
                          const Ipv4Address& tpa) {
  ArpPacket p;
  p.oper = ArpPacket::kReply;
  p.sha = sha;
  p.spa = spa;
  p.tha = tha;
  p.tpa = tpa;
  return p;
}

// ---------------------------------------------------------------------------
// IPv4 / TCP

std::uint16_t internet_checksum(ByteView data, std::uint32_t initial) {
  std::uint64_t sum = initial;
  std::size_t i = 0;
  for (; i + 1 < data.size(); i += 2) sum += (std::uint32_t{data[i]} << 8) | data[i + 1];
  if (i < data.size()) sum += std::uint32_t{data[i]} << 8;
  while (sum >> 16) sum = (sum & 0xFFFF) + (sum >> 16);
  return static_cast<std::uint16_t>(~sum & 0xFFFF);
}

Bytes Ipv4TcpSegment::serialize() const {
  Bytes out(total_length());
  std::span<std::uint8_t> v(out);
  v[0] = 0x45;
  store_be16(v, 2, static_cast<std::uint16_t>(total_length()));
  store_be16(v, 4, ip_id);
  store_be16(v, 6, ip_flags_fragment);
  v[8] = ttl;
  v[9] = ipproto::kTcp;
  store_be16(v, 10, ip_checksum);
  std::copy(endpoints.src_ip.octets().begin(), endpoints.src_ip.octets().end(), out.begin() + 12);
  std::copy(endpoints.dst_ip.octets().begin(), endpoints.dst_ip.octets().end(), out.begin() + 16);

  auto tcp = v.subspan(kIpv4HeaderLen);
  store_be16(tcp, 0, endpoints.src_port);
  store_be16(tcp, 2, endpoints.dst_port);
  store_be32(tcp, 4, seq);
  store_be32(tcp, 8, ack);
  tcp[12] = static_cast<std::uint8_t>((kTcpHeaderLen / 4) << 4);
  tcp[13] = flags;
  store_be16(tcp, 14, window);
  store_be16(tcp, 16, tcp_checksum);
  store_be16(tcp, 18, 0);
  std::copy(tcp_payload.begin(), tcp_payload.end(), tcp.begin() + kTcpHeaderLen);
  return out;
}

void Ipv4TcpSegment::update_checksums() {
  ip_checksum = 0;
  tcp_checksum = 0;
  Bytes wire = serialize();
  ByteView v(wire);
  ip_checksum = internet_checksum(v.first(kIpv4HeaderLen));
  auto tcp = v.subspan(kIpv4HeaderLen);
  tcp_checksum = internet_checksum(
      tcp, pseudo_header_sum(endpoints.src_ip, endpoints.dst_ip, ipproto::kTcp, tcp.size()));
}

bool Ipv4TcpSegment::checksums_valid() const {
  Bytes wire = serialize();
  ByteView v(wire);
  auto tcp = v.subspan(kIpv4HeaderLen);
  return internet_checksum(v.first(kIpv4HeaderLen)) == 0 &&
         internet_checksum(tcp, pseudo_header_sum(endpoints.src_ip, endpoints.dst_ip,
                                                  ipproto::kTcp, tcp.size())) == 0;
}

Ipv4TcpSegment Ipv4TcpSegment::parse(ByteView ip) {
  if (ip.size() < kIpv4HeaderLen) throw Error(ErrorCode::Truncated, "IPv4 header needs 20 bytes");
  if (ip[0] != 0x45) throw Error(ErrorCode::Malformed, "only option-free IPv4 headers are supported");
  if (ip[9] != ipproto::kTcp) throw Error(ErrorCode::Malformed, "not a TCP datagram");
  const std::size_t total = load_be16(ip, 2);
  if (total > ip.size()) throw Error(ErrorCode::Truncated, "IPv4 total length exceeds buffer");
  if (total < kIpv4HeaderLen + kTcpHeaderLen) throw Error(ErrorCode::Truncated, "TCP header missing");
  auto tcp = ip.subspan(kIpv4HeaderLen, total - kIpv4HeaderLen);
  if ((tcp[12] >> 4) != kTcpHeaderLen / 4) {
    throw Error(ErrorCode::Malformed, "TCP options are not supported");
  }

  Ipv4TcpSegment s;
  s.ip_id = load_be16(ip, 4);
  s.ip_flags_fragment = load_be16(ip, 6);
  s.ttl = ip[8];
  s.ip_checksum = load_be16(ip, 10);
  s.endpoints.src_ip = Ipv4Address::from_bytes(ip.subspan(12, 4));
  s.endpoints.dst_ip = Ipv4Address::from_bytes(ip.subspan(16, 4));
  s.endpoints.src_port = load_be16(tcp, 0);
  s.endpoints.dst_port = load_be16(tcp, 2);
  s.seq = load_be32(tcp, 4);
  s.ack = load_be32(tcp, 8);
  s.flags = tcp[13];
  s.window = load_be16(tcp, 14);
  s.tcp_checksum = load_be16(tcp, 16);
  s.tcp_payload.assign(tcp.begin() + kTcpHeaderLen, tcp.end());
  return s;
}

Ipv4TcpSegment build_tcp_ack(const TcpEndpoints& conn, std::uint32_t seq, std::uint32_t ack,
                             std::uint16_t window, std::uint16_t ip_id, std::uint8_t ttl) {
  return build_tcp_data(conn, seq, ack, window, {}, ip_id, ttl);
}

Ipv4TcpSegment build_tcp_data(const TcpEndpoints& conn, std::uint32_t seq, std::uint32_t ack,
                              std::uint16_t window, ByteView data, std::uint16_t ip_id,
                              std::uint8_t ttl) {
  if (data.size() > kMaxPayloadLen - kIpv4HeaderLen - kTcpHeaderLen) {
    throw Error(ErrorCode::OversizePayload, "TCP payload does not fit one frame");
  }
  Ipv4TcpSegment s;
  s.endpoints = conn;
  s.ip_id = ip_id;
  s.ttl = ttl;
  s.seq = seq;
  s.ack = ack;
  s.flags = data.empty() ? tcpflag::kAck : static_cast<std::uint8_t>(tcpflag::kAck | tcpflag::kPsh);
  s.window = window;
  s.tcp_payload.assign(data.begin(), data.end());
  s.update_checksums();
  return s;
}

Bytes build_ipv4_packet(const Ipv4Address& src, const Ipv4Address& dst, std::uint8_t protocol,
                        ByteView transport, std::uint16_t ip_id, std::uint8_t ttl) {
  const std::size_t total = kIpv4HeaderLen + transport.size();
  if (total > kMaxPayloadLen) throw Error(ErrorCode::OversizePayload, "IPv4 datagram exceeds 1500 bytes");
  Bytes out(total);
  write_ipv4_header(out, src, dst, protocol, total, ip_id, ttl, 0x4000);
  std::copy(transport.begin(), transport.end(), out.begin() + kIpv4HeaderLen);
  return out;
}

Bytes build_icmp_echo(const Ipv4Address& src, const Ipv4Address& dst, bool reply,
                      std::uint16_t ident, std::uint16_t sequence, ByteView data,
                      std::uint16_t ip_id) {
  Bytes icmp(8 + data.size());
  std::span<std::uint8_t> v(icmp);
  icmp[0] = reply ? 0 : 8;
  store_be16(v, 4, ident);
  store_be16(v, 6, sequence);
  std::copy(data.begin(), data.end(), icmp.begin() + 8);
  store_be16(v, 2, internet_checksum(icmp));
  return build_ipv4_packet(src, dst, ipproto::kIcmp, icmp, ip_id);
}

Bytes build_udp(const Ipv4Address& src, const Ipv4Address& dst, std::uint16_t src_port,
                std::uint16_t dst_port, ByteView data, std::uint16_t ip_id) {
  Bytes udp(8 + data.size());
  std::span<std::uint8_t> v(udp);
  store_be16(v, 0, src_port);
  store_be16(v, 2, dst_port);
  store_be16(v, 4, static_cast<std::uint16_t>(udp.size()));
  std::copy(data.begin(), data.end(), udp.begin() + 8);
  std::uint16_t sum = internet_checksum(udp, pseudo_header_sum(src, dst, ipproto::kUdp, udp.size()));
  store_be16(v, 6, sum == 0 ? 0xFFFF : sum);
  return build_ipv4_packet(src, dst, ipproto::kUdp, udp, ip_id);
}

}  // namespace padsteg
