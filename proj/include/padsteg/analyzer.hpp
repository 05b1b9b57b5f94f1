#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "padsteg/frame.hpp"
#include "padsteg/trace.hpp"

namespace padsteg {

/// Traffic category attributed to a frame: ethertype, then IP protocol,
/// then well-known TCP port.
enum class Protocol { Http, Ssh, Ssl, Tcp, Udp, Icmp, Arp, Other };
std::string_view to_string(Protocol p);
Protocol attribute_protocol(const EthernetFrame& frame);

/// The four families improper padding is usually broken down into.
enum class ProtocolFamily { Tcp, Arp, Icmp, Others };
ProtocolFamily family_of(Protocol p);

struct ArpCounts {
  std::uint64_t request = 0;  // excludes gratuitous requests
  std::uint64_t reply = 0;
  std::uint64_t gratuitous = 0;

  std::uint64_t total() const { return request + reply + gratuitous; }
  friend bool operator==(const ArpCounts&, const ArpCounts&) = default;
};

struct TrafficReport {
  std::uint64_t total_frames = 0;
  std::uint64_t padded_frames = 0;
  std::uint64_t improper_frames = 0;
  std::map<Protocol, std::uint64_t> per_protocol_padded;
  std::map<Protocol, std::uint64_t> per_protocol_improper;
  ArpCounts arp_mix;
  std::map<MacAddress, std::uint64_t> per_host_improper;
  double duration = 0.0;  // seconds spanned by the trace

  // Timestamp span backing `duration`; kept so shards can be merged.
  std::optional<double> first_timestamp;
  std::optional<double> last_timestamp;

  /// Adds the counts of a disjoint shard. Associative and commutative.
  void merge(const TrafficReport& other);

  double padded_share() const;
  double improper_share_of_padded() const;
  /// Improper frames broken down by family, as shares summing to 1.
  std::map<ProtocolFamily, double> improper_family_shares() const;
  /// Shares of Request / Reply / Gratuitous among ARP frames.
  std::array<double, 3> arp_shares() const;

  std::string to_json(int indent = 2) const;
  std::string to_table() const;

  friend bool operator==(const TrafficReport&, const TrafficReport&) = default;
};

/// Throws Error(RecordError) carrying the record index of an unparseable frame.
TrafficReport compute_report(const Trace& trace);
TrafficReport compute_report(const Trace& trace, std::size_t begin, std::size_t end);

struct DetectedNode {
  MacAddress mac;
  double first_seen = 0.0;
  std::uint64_t advert_count = 0;

  friend bool operator==(const DetectedNode&, const DetectedNode&) = default;
};

/// Source MACs of ARP Requests whose padding verifies as an advertisement,
/// ordered by first sighting. Unparseable records are skipped.
std::vector<DetectedNode> detect_hidden_nodes(const Trace& trace);
bool is_advertisement(const EthernetFrame& frame);

struct BandwidthEstimate {
  double bits_per_second = 0.0;
  double frames_per_day = 0.0;
  std::uint32_t padding_bits_per_frame = 48;
};

inline constexpr std::uint32_t kTcpAckPaddingBits = 48;
inline constexpr double kSecondsPerDay = 86400.0;

BandwidthEstimate estimate_bandwidth(double frames_per_day, std::uint32_t padding_bits = kTcpAckPaddingBits);

/// Daily counts of improper-padded TCP frames from the measured campus LAN
/// (Monday through Friday).
inline constexpr std::array<double, 5> kMeasuredImproperTcpPerDay{177653, 374285, 217099, 559866, 370579};

/// Bandwidth when a daily improper-frame total is shared by `hosts` senders.
BandwidthEstimate estimate_bandwidth_shared(double total_frames_per_day, double hosts,
                                            std::uint32_t padding_bits = kTcpAckPaddingBits);

/// Zeroes the padding; everything else is untouched.
EthernetFrame active_warden(const EthernetFrame& frame);
/// Wire-level variant. Frames that cannot be split are returned unchanged.
Bytes active_warden(ByteView wire);
Trace active_warden(const Trace& trace);

/// Improper frames per second for each host that sent any.
std::map<MacAddress, double> per_host_rate_profile(const TrafficReport& report);

/// Linear-interpolated sample quantile, q in [0, 1].
double quantile(std::vector<double> values, double q);

}  // namespace padsteg
