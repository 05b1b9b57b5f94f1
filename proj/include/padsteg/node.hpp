#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <variant>
#include <vector>

#include "padsteg/digest.hpp"
#include "padsteg/frame.hpp"
#include "padsteg/stegcodec.hpp"

namespace padsteg {

/// Fractional token bucket. Starts empty so a fresh sender cannot burst.
class TokenBucket {
 public:
  TokenBucket(double rate, double capacity, double now = 0.0, double initial_tokens = 0.0);

  void advance(double now);
  bool try_take();
  double tokens() const { return tokens_; }
  /// Seconds from the last advance() until one whole token is available.
  double time_until_token() const;
  double next_token_at() const { return last_ + time_until_token(); }

 private:
  double rate_;
  double capacity_;
  double tokens_;
  double last_;
};

struct NodeConfig {
  MacAddress mac;
  Ipv4Address ip;
  int prefix_len = 24;
  double advert_interval = 600.0;
  double expiry_interval = 1200.0;
  double steg_rate_limit = 0.5625;  // frames/s, 48600 per day
  double bucket_capacity = 5.0;
  std::shared_ptr<const Digest> digest = default_digest();
  std::uint64_t seed = 1;

  /// Throws Error(InvalidConfig).
  void validate() const;
};

struct PeerEntry {
  MacAddress mac;
  Ipv4Address ip;
  double last_advert = 0.0;
  double expires_at = 0.0;

  friend bool operator==(const PeerEntry&, const PeerEntry&) = default;
};

struct PeerDiscovered {
  MacAddress mac;
  Ipv4Address ip;
};
struct PeerRefreshed {
  MacAddress mac;
};
struct MessageReceived {
  MacAddress from;
  Bytes data;
};
using NodeEvent = std::variant<PeerDiscovered, PeerRefreshed, MessageReceived>;

/// Phase I/II state machine of one hidden host. Single owner; driven by an
/// external loop through tick() and on_frame().
class HiddenNode {
 public:
  static constexpr std::uint16_t kOvertServerPort = 80;
  static constexpr std::uint32_t kOvertSegmentSize = 1460;

  explicit HiddenNode(NodeConfig config);

  const NodeConfig& config() const { return config_; }
  const std::map<MacAddress, PeerEntry>& peers() const { return peers_; }
  double clock() const { return clock_; }

  /// Runs timers up to `now`: advertisement, peer expiry, then rate-limited
  /// outbox drain. Returns the frames to put on the wire.
  std::vector<EthernetFrame> tick(double now);

  /// Inspects one delivered frame. Never throws on hostile input.
  std::vector<NodeEvent> on_frame(const EthernetFrame& frame, std::optional<double> now = std::nullopt);

  /// Queues `data` for `peer`; the chunks leave through tick(). Throws
  /// Error(UnknownPeer) or Error(MessageTooLong).
  void send_secret(const MacAddress& peer, ByteView data);

  /// Broadcast ARP Request carrying a fresh advertisement. Resets the
  /// advertisement timer.
  EthernetFrame self_advertise();

  /// Earliest time at which tick() has work to do.
  std::optional<double> next_wakeup() const;

  std::size_t pending_chunks() const;
  std::size_t pending_chunks(const MacAddress& peer) const;

  /// Peers whose inbound stream stopped mid-message; clears them.
  std::vector<MacAddress> close();

 private:
  struct OvertConnection {
    TcpEndpoints endpoints;
    std::uint32_t seq = 0;
    std::uint32_t ack = 0;
  };
  struct Outbound {
    std::deque<StegChunk> chunks;
    std::optional<OvertConnection> connection;
  };
  struct Inbound {
    Reassembler reassembler;
    std::optional<TcpEndpoints> connection;
  };

  void expire_peers(double now);
  bool peer_alive(const MacAddress& mac) const;
  EthernetFrame next_chunk_frame(const PeerEntry& peer, Outbound& out);
  std::vector<NodeEvent> handle_arp(const EthernetFrame& frame);
  std::vector<NodeEvent> handle_tcp(const EthernetFrame& frame);
  Ipv4Address random_target_ip();

  NodeConfig config_;
  Rng rng_;
  TokenBucket bucket_;
  double clock_ = 0.0;
  std::optional<double> next_advert_at_;  // nullopt: advertise on first tick
  std::uint16_t ip_id_ = 0;
  std::map<MacAddress, PeerEntry> peers_;
  std::map<MacAddress, Outbound> outbox_;
  std::map<MacAddress, Inbound> inbound_;
  MacAddress last_drained_;
};

/// The bulk-data segment a steganographic ACK acknowledges, travelling from
/// the peer (the ACK's destination) to the ACK's sender.
EthernetFrame make_overt_data_segment(const EthernetFrame& ack_frame);

}  // namespace padsteg
