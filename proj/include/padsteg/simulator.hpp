#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "padsteg/node.hpp"
#include "padsteg/trace.hpp"
#include "padsteg/traffic.hpp"

namespace padsteg {

/// A covert message a hidden host hands to its node once `to` is a known peer
/// and the clock has reached `not_before`.
struct SecretTransfer {
  MacAddress from;
  MacAddress to;
  Bytes data;
  double not_before = 0.0;
};

struct SimulationOptions {
  bool warden = false;  // zero improper padding on every delivered frame
  std::vector<SecretTransfer> transfers;
};

struct HostEvent {
  double time = 0.0;
  MacAddress host;
  NodeEvent event;
};

struct SimulationResult {
  Trace trace;  // frames as delivered, i.e. after the warden when enabled
  std::vector<HostEvent> events;
  std::map<MacAddress, std::map<MacAddress, PeerEntry>> peer_tables;
  /// (receiver, sender) pairs whose stream ended mid-message.
  std::vector<std::pair<MacAddress, MacAddress>> incomplete_streams;
  /// Transfers never handed to a node because the peer was never known.
  std::size_t undelivered_transfers = 0;

  std::vector<MessageReceived> messages_for(const MacAddress& host) const;
  double discovery_time(const MacAddress& host, const MacAddress& peer) const;  // NaN if never
};

/// Single-threaded discrete-event switched LAN. Deterministic in
/// (hosts, profile, duration, seed, options). Broadcasts reach every host
/// but the sender; unicast reaches the owner of the destination MAC.
/// Throws Error(ConfigConflict) on duplicate MAC or IP addresses.
SimulationResult run(const std::vector<HostProfile>& hosts, const TrafficProfile& profile, double duration,
                     std::uint64_t seed, const SimulationOptions& options = {});

}  // namespace padsteg
