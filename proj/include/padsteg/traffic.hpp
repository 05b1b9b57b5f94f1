#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "padsteg/frame.hpp"
#include "padsteg/node.hpp"

namespace padsteg {

enum class HostKind { Benign, Vulnerable, Hidden };
std::string_view to_string(HostKind kind);
HostKind host_kind_from_string(std::string_view text);

struct HostProfile {
  MacAddress mac;
  Ipv4Address ip;
  HostKind kind = HostKind::Benign;
  double traffic_intensity = 1.0;  // background frames/s
  std::uint64_t leak_seed = 0;
  /// Only read for Hidden hosts; mac and ip are taken from the profile.
  NodeConfig node;
};

/// Weights over the overt traffic mix of all frames.
struct ProtocolMix {
  double http = 0.75;
  double ssh = 0.08;
  double udp = 0.05;
  double ssl = 0.05;
  double other = 0.07;
};

/// Weights over the protocol families that produce padded frames.
struct PaddedMix {
  double tcp = 0.0;
  double arp = 0.0;
  double icmp = 0.0;
  double other = 0.0;
};

struct ArpMix {
  double request = 0.563;
  double reply = 0.434;
  double gratuitous = 0.002;
};

/// Background traffic calibration. Defaults reproduce the campus LAN
/// measurements the system was evaluated against.
struct TrafficProfile {
  ProtocolMix protocol_mix;
  double padded_fraction = 0.22;
  double improper_fraction = 0.22;  // of padded frames
  PaddedMix improper_mix{0.9319, 0.0417, 0.0231, 0.0032};
  PaddedMix benign_padded_mix{0.88, 0.05, 0.03, 0.04};
  ArpMix arp_mix;
  double vulnerable_host_fraction = 0.15;
  double mtu_frame_fraction = 0.4;  // of unpadded frames

  static TrafficProfile defaults();

  /// Scales every distribution to sum to one. Throws Error(InvalidConfig)
  /// for negative weights or fractions outside [0, 1].
  void normalize();
  /// Throws Error(InvalidConfig) unless each distribution sums to 1 within 1e-9.
  void validate() const;
};

/// Emulated stale-buffer contents of a leaky NIC driver: a seeded byte stream
/// read through a window that advances by a random 0..n step per read.
class LeakStream final : public PaddingSource {
 public:
  explicit LeakStream(std::uint64_t seed);

  /// Throws Error(NotVulnerable) for hosts that zero their padding.
  static LeakStream for_host(const HostProfile& host);

  /// n must lie in 1..45; throws Error(BadLength) otherwise.
  Bytes next(std::size_t n) override;

 private:
  void ensure(std::size_t bytes);

  Rng rng_;
  Bytes buffer_;
  std::size_t position_ = 0;
};

Bytes leak_padding(LeakStream& stream, std::size_t n);

struct ScheduledFrame {
  double time = 0.0;
  std::size_t host = 0;  // index into the host list
  EthernetFrame frame;
};

/// Poisson background traffic for every host over [0, duration), sorted by
/// time (ties by host index, then generation order). Hidden hosts send
/// benign background traffic.
std::vector<ScheduledFrame> generate_background(const TrafficProfile& profile,
                                                const std::vector<HostProfile>& hosts,
                                                double duration, std::uint64_t seed);

/// Builds a /16 LAN of `host_count` hosts in 10.7.0.0/16 where the last
/// `hidden_count` hosts run hidden nodes and round(vulnerable_host_fraction *
/// host_count) hosts leak. Intensities are log-spaced over
/// [min_intensity, max_intensity], with leaky hosts spread across the range.
std::vector<HostProfile> make_default_lan(std::size_t host_count, std::size_t hidden_count,
                                          const TrafficProfile& profile, std::uint64_t seed,
                                          double min_intensity = 0.5, double max_intensity = 4.0);

/// Sends-with-padding probabilities per host kind that make the trace hit
/// the profile's padded and improper fractions for the given host mix.
struct PaddingOdds {
  double vulnerable = 0.0;
  double benign = 0.0;
};
PaddingOdds padding_odds(const TrafficProfile& profile, const std::vector<HostProfile>& hosts);

}  // namespace padsteg
