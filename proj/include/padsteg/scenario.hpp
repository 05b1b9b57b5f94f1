#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string_view>
#include <vector>

#include "padsteg/simulator.hpp"
#include "padsteg/traffic.hpp"

namespace padsteg {

/// A complete simulation run described by a JSON document:
///
///   {
///     "seed": 7, "duration": 1500, "warden": false,
///     "lan":   {"hosts": 50, "hidden": 2, "min_intensity": 0.5, "max_intensity": 4.0},
///     "hosts": [{"mac": "02:..", "ip": "10.7.1.10", "kind": "hidden|vulnerable|benign",
///                "intensity": 1.0, "leak_seed": 3,
///                "node": {"advert_interval": 600, "expiry_interval": 1200,
///                         "steg_rate_limit": 0.5625, "bucket_capacity": 5,
///                         "prefix_len": 24, "digest": "md5", "seed": 1}}],
///     "profile": {"padded_fraction": 0.22, "improper_fraction": 0.22,
///                 "vulnerable_host_fraction": 0.15, "mtu_frame_fraction": 0.4,
///                 "protocol_mix": {"http": .75, "ssh": .08, "udp": .05, "ssl": .05, "other": .07},
///                 "improper_mix": {"tcp": .., "arp": .., "icmp": .., "other": ..},
///                 "benign_padded_mix": {...}, "arp_mix": {"request": .., "reply": .., "gratuitous": ..}},
///     "transfers": [{"from": "hidden:0", "to": "hidden:1", "at": 0,
///                    "text": "..." | "hex": "..." | "random_bytes": 1024}]
///   }
///
/// Every key is optional except that some hosts must exist. Generated LAN
/// hosts come first, explicit hosts after them. "hidden:N" names the N-th
/// hidden host in that combined list.
struct ScenarioConfig {
  std::vector<HostProfile> hosts;
  TrafficProfile profile = TrafficProfile::defaults();
  double duration = 3600.0;
  std::uint64_t seed = 1;
  bool warden = false;
  std::vector<SecretTransfer> transfers;

  /// Throws Error(InvalidConfig) or Error(ConfigConflict).
  void validate() const;

  SimulationOptions options() const { return {warden, transfers}; }
};

ScenarioConfig parse_scenario(std::string_view json, std::optional<std::uint64_t> seed_override = std::nullopt);
ScenarioConfig load_scenario(const std::filesystem::path& path,
                             std::optional<std::uint64_t> seed_override = std::nullopt);

SimulationResult run_scenario(const ScenarioConfig& config);

}  // namespace padsteg
