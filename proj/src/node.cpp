#include "padsteg/node.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "padsteg/error.hpp"

namespace padsteg {

namespace {

constexpr double kTokenEpsilon = 1e-9;
constexpr std::uint16_t kOvertWindow = 65535;

}  // namespace

// ---------------------------------------------------------------------------
// TokenBucket

TokenBucket::TokenBucket(double rate, double capacity, double now, double initial_tokens)
    : rate_(rate), capacity_(capacity), tokens_(std::min(initial_tokens, capacity)), last_(now) {}

void TokenBucket::advance(double now) {
  if (now <= last_) return;
  tokens_ = std::min(capacity_, tokens_ + rate_ * (now - last_));
  last_ = now;
}

bool TokenBucket::try_take() {
  if (tokens_ + kTokenEpsilon < 1.0) return false;
  tokens_ = std::max(0.0, tokens_ - 1.0);
  return true;
}

double TokenBucket::time_until_token() const {
  return tokens_ + kTokenEpsilon >= 1.0 ? 0.0 : (1.0 - tokens_) / rate_;
}

// ---------------------------------------------------------------------------
// NodeConfig

void NodeConfig::validate() const {
  auto fail = [](const std::string& why) { throw Error(ErrorCode::InvalidConfig, why); };
  if (!(advert_interval >= 60.0)) fail("advert_interval must be at least 60 s");
  if (!(advert_interval <= expiry_interval)) fail("advert_interval must not exceed expiry_interval");
  if (!(expiry_interval <= 1200.0)) fail("expiry_interval must be at most 1200 s");
  if (!(steg_rate_limit > 0.0)) fail("steg_rate_limit must be positive");
  if (!(bucket_capacity >= 1.0)) fail("bucket_capacity must be at least one token");
  if (prefix_len < 8 || prefix_len > 30) fail("prefix_len must be within 8..30");
  if (!digest) fail("digest must be set");
}

// ---------------------------------------------------------------------------
// HiddenNode

HiddenNode::HiddenNode(NodeConfig config)
    : config_(std::move(config)),
      rng_(config_.seed),
      bucket_(config_.steg_rate_limit, config_.bucket_capacity) {
  config_.validate();
}

std::vector<EthernetFrame> HiddenNode::tick(double now) {
  clock_ = std::max(clock_, now);
  expire_peers(clock_);

  std::vector<EthernetFrame> frames;
  if (!next_advert_at_ || clock_ >= *next_advert_at_) frames.push_back(self_advertise());

  bucket_.advance(clock_);
  while (pending_chunks() > 0 && bucket_.tokens() + kTokenEpsilon >= 1.0) {
    // Round-robin over peers, resuming after the one served last.
    auto it = outbox_.upper_bound(last_drained_);
    for (std::size_t scanned = 0; scanned <= outbox_.size(); ++scanned, ++it) {
      if (it == outbox_.end()) it = outbox_.begin();
      if (!it->second.chunks.empty()) break;
    }
    bucket_.try_take();
    last_drained_ = it->first;
    frames.push_back(next_chunk_frame(peers_.at(it->first), it->second));
  }
  return frames;
}

void HiddenNode::expire_peers(double now) {
  for (auto it = peers_.begin(); it != peers_.end();) {
    if (now > it->second.expires_at) {
      outbox_.erase(it->first);
      inbound_.erase(it->first);
      it = peers_.erase(it);
    } else {
      ++it;
    }
  }
}

bool HiddenNode::peer_alive(const MacAddress& mac) const {
  auto it = peers_.find(mac);
  return it != peers_.end() && clock_ <= it->second.expires_at;
}

EthernetFrame HiddenNode::next_chunk_frame(const PeerEntry& peer, Outbound& out) {
  OvertConnection& conn = *out.connection;
  conn.ack += kOvertSegmentSize;
  const auto segment = build_tcp_ack(conn.endpoints, conn.seq, conn.ack, kOvertWindow, ip_id_++);
  const StegChunk chunk = out.chunks.front();
  out.chunks.pop_front();
  return build_frame(peer.mac, config_.mac, ethertype::kIpv4, segment.serialize(),
                     GivenFill{Bytes(chunk.begin(), chunk.end())});
}

Ipv4Address HiddenNode::random_target_ip() {
  const std::uint32_t host_bits = 32u - static_cast<std::uint32_t>(config_.prefix_len);
  const std::uint32_t mask = ~((1u << host_bits) - 1u);
  const std::uint32_t network = config_.ip.to_uint() & mask;
  std::uniform_int_distribution<std::uint32_t> host(1, (1u << host_bits) - 2u);
  for (;;) {
    const auto candidate = Ipv4Address::from_uint(network | host(rng_));
    if (candidate != config_.ip) return candidate;
  }
}

EthernetFrame HiddenNode::self_advertise() {
  std::uniform_int_distribution<int> nonce_dist(1, 0xFFFF);
  const auto nonce = static_cast<std::uint16_t>(nonce_dist(rng_));
  const auto advert = encode_advertisement(config_.mac, nonce, *config_.digest);
  const auto arp = build_arp_request(config_.mac, config_.ip, random_target_ip()).serialize();
  next_advert_at_ = clock_ + config_.advert_interval;
  return build_frame(MacAddress::broadcast(), config_.mac, ethertype::kArp, arp,
                     GivenFill{Bytes(advert.begin(), advert.end())});
}

std::vector<NodeEvent> HiddenNode::on_frame(const EthernetFrame& frame, std::optional<double> now) {
  if (now) clock_ = std::max(clock_, *now);
  if (frame.src() == config_.mac || !frame.payload_boundary_known()) return {};
  try {
    if (frame.ethertype() == ethertype::kArp) return handle_arp(frame);
    if (frame.ethertype() == ethertype::kIpv4) return handle_tcp(frame);
  } catch (const Error&) {
    // Garbled input is dropped without a trace.
  }
  return {};
}

std::vector<NodeEvent> HiddenNode::handle_arp(const EthernetFrame& frame) {
  const auto arp = ArpPacket::parse(frame.payload());
  if (!arp.is_request() || frame.padding().size() != kAdvertisementLen) return {};
  if (classify_padding(frame) != PaddingClass::ImproperPadding) return {};
  if (!verify_advertisement(frame.padding(), frame.src(), *config_.digest)) return {};

  const bool known = peer_alive(frame.src());
  PeerEntry& entry = peers_[frame.src()];
  entry.mac = frame.src();
  entry.ip = arp.spa;
  entry.last_advert = clock_;
  entry.expires_at = clock_ + config_.expiry_interval;
  if (known) return {PeerRefreshed{frame.src()}};
  return {PeerDiscovered{frame.src(), arp.spa}};
}

std::vector<NodeEvent> HiddenNode::handle_tcp(const EthernetFrame& frame) {
  if (!peer_alive(frame.src()) || frame.padding().size() != kChunkLen) return {};
  const auto segment = Ipv4TcpSegment::parse(frame.payload());
  if (!segment.tcp_payload.empty() || !(segment.flags & tcpflag::kAck)) return {};

  Inbound& in = inbound_[frame.src()];
  const bool improper = classify_padding(frame) == PaddingClass::ImproperPadding;
  const bool same_connection = in.connection && *in.connection == segment.endpoints;

  // A message starts on an improper-padded ACK; once it is underway an
  // all-zero chunk on the same connection is still payload.
  if (same_connection) {
    if (!improper && !in.reassembler.in_progress()) return {};
  } else {
    if (!improper || in.reassembler.in_progress()) return {};
    in.connection = segment.endpoints;
  }

  StegChunk chunk{};
  std::copy(frame.padding().begin(), frame.padding().end(), chunk.begin());
  if (auto message = in.reassembler.push(chunk)) {
    return {MessageReceived{frame.src(), std::move(*message)}};
  }
  return {};
}

void HiddenNode::send_secret(const MacAddress& peer, ByteView data) {
  if (!peer_alive(peer)) throw Error(ErrorCode::UnknownPeer, "no live peer " + peer.to_string());
  auto chunks = chunk_message(data, rng_);

  Outbound& out = outbox_[peer];
  if (!out.connection) {
    std::uniform_int_distribution<std::uint32_t> any32;
    std::uniform_int_distribution<int> ephemeral(49152, 65535);
    OvertConnection conn;
    conn.endpoints = {config_.ip, peers_.at(peer).ip, static_cast<std::uint16_t>(ephemeral(rng_)),
                      kOvertServerPort};
    conn.seq = any32(rng_);
    conn.ack = any32(rng_);
    out.connection = conn;
  }
  out.chunks.insert(out.chunks.end(), chunks.begin(), chunks.end());
}

std::optional<double> HiddenNode::next_wakeup() const {
  double wake = next_advert_at_ ? *next_advert_at_ : clock_;
  for (const auto& [mac, peer] : peers_) {
    wake = std::min(wake, std::nextafter(peer.expires_at, std::numeric_limits<double>::infinity()));
  }
  if (pending_chunks() > 0) {
    wake = std::min(wake, bucket_.next_token_at());
  }
  return std::max(wake, clock_);
}

std::size_t HiddenNode::pending_chunks() const {
  std::size_t total = 0;
  for (const auto& [mac, out] : outbox_) total += out.chunks.size();
  return total;
}

std::size_t HiddenNode::pending_chunks(const MacAddress& peer) const {
  auto it = outbox_.find(peer);
  return it == outbox_.end() ? 0 : it->second.chunks.size();
}

std::vector<MacAddress> HiddenNode::close() {
  std::vector<MacAddress> incomplete;
  for (auto& [mac, in] : inbound_) {
    try {
      in.reassembler.finish();
    } catch (const Error& e) {
      if (e.code() == ErrorCode::IncompleteOnClose) incomplete.push_back(mac);
    }
  }
  inbound_.clear();
  return incomplete;
}

EthernetFrame make_overt_data_segment(const EthernetFrame& ack_frame) {
  const auto ack = Ipv4TcpSegment::parse(ack_frame.payload());
  const std::uint32_t seq = ack.ack - HiddenNode::kOvertSegmentSize;
  Bytes data(HiddenNode::kOvertSegmentSize);
  for (std::size_t i = 0; i < data.size(); ++i) {
    data[i] = static_cast<std::uint8_t>((seq + i) * 0x9Eu >> 3);
  }
  const auto segment = build_tcp_data(ack.endpoints.reversed(), seq, ack.seq, kOvertWindow, data,
                                      static_cast<std::uint16_t>(ack.ip_id ^ 0x5A5Au));
  return build_frame(ack_frame.src(), ack_frame.dst(), ethertype::kIpv4, segment.serialize());
}

}  // namespace padsteg
