#include "padsteg/scenario.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "padsteg/error.hpp"

namespace padsteg {

using nlohmann::json;

namespace {

[[noreturn]] void invalid(const std::string& why) { throw Error(ErrorCode::InvalidConfig, why); }

template <typename T>
void read_opt(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    invalid(std::string("bad value for '") + key + "'");
  }
}

void read_mix(const json& j, const char* key, ProtocolMix& m) {
  if (!j.contains(key)) return;
  const auto& o = j.at(key);
  m.http = m.ssh = m.udp = m.ssl = m.other = 0.0;
  read_opt(o, "http", m.http);
  read_opt(o, "ssh", m.ssh);
  read_opt(o, "udp", m.udp);
  read_opt(o, "ssl", m.ssl);
  read_opt(o, "other", m.other);
}

void read_mix(const json& j, const char* key, PaddedMix& m) {
  if (!j.contains(key)) return;
  const auto& o = j.at(key);
  m = {};
  read_opt(o, "tcp", m.tcp);
  read_opt(o, "arp", m.arp);
  read_opt(o, "icmp", m.icmp);
  read_opt(o, "other", m.other);
}

void read_mix(const json& j, const char* key, ArpMix& m) {
  if (!j.contains(key)) return;
  const auto& o = j.at(key);
  m.request = m.reply = m.gratuitous = 0.0;
  read_opt(o, "request", m.request);
  read_opt(o, "reply", m.reply);
  read_opt(o, "gratuitous", m.gratuitous);
}

void read_node(const json& j, NodeConfig& node) {
  read_opt(j, "advert_interval", node.advert_interval);
  read_opt(j, "expiry_interval", node.expiry_interval);
  read_opt(j, "steg_rate_limit", node.steg_rate_limit);
  read_opt(j, "bucket_capacity", node.bucket_capacity);
  read_opt(j, "prefix_len", node.prefix_len);
  read_opt(j, "seed", node.seed);
  if (j.contains("digest")) node.digest = digest_by_name(j.at("digest").get<std::string>());
}

Bytes parse_hex(std::string_view text) {
  Bytes out;
  int hi = -1;
  for (char c : text) {
    if (c == ' ' || c == '\n' || c == ':') continue;
    int v = (c >= '0' && c <= '9') ? c - '0'
            : (c >= 'a' && c <= 'f') ? c - 'a' + 10
            : (c >= 'A' && c <= 'F') ? c - 'A' + 10
                                     : -1;
    if (v < 0) invalid("bad hex digit in transfer data");
    if (hi < 0) {
      hi = v;
    } else {
      out.push_back(static_cast<std::uint8_t>((hi << 4) | v));
      hi = -1;
    }
  }
  if (hi >= 0) invalid("odd number of hex digits in transfer data");
  return out;
}

MacAddress resolve_host(const std::string& ref, const std::vector<HostProfile>& hosts) {
  constexpr std::string_view kHiddenPrefix = "hidden:";
  if (ref.starts_with(kHiddenPrefix)) {
    const auto digits = ref.substr(kHiddenPrefix.size());
    if (digits.empty() || digits.size() > 9 || digits.find_first_not_of("0123456789") != std::string::npos) {
      invalid("bad host '" + ref + "'");
    }
    const auto wanted = std::stoul(digits);
    std::size_t seen = 0;
    for (const auto& h : hosts) {
      if (h.kind == HostKind::Hidden && seen++ == wanted) return h.mac;
    }
    invalid("no host '" + ref + "'");
  }
  return MacAddress::parse(ref);
}

}  // namespace

void ScenarioConfig::validate() const {
  if (!(duration > 0)) invalid("duration must be positive");
  if (hosts.empty()) invalid("scenario has no hosts");
  profile.validate();
  std::set<MacAddress> macs;
  std::set<Ipv4Address> ips;
  for (const auto& h : hosts) {
    if (!macs.insert(h.mac).second) throw Error(ErrorCode::ConfigConflict, "duplicate MAC " + h.mac.to_string());
    if (!ips.insert(h.ip).second) throw Error(ErrorCode::ConfigConflict, "duplicate IP " + h.ip.to_string());
    if (!(h.traffic_intensity >= 0)) invalid("intensity must be non-negative");
    if (h.kind == HostKind::Hidden) h.node.validate();
  }
  for (const auto& t : transfers) {
    if (t.data.size() > kMaxMessageLen) throw Error(ErrorCode::MessageTooLong, "transfer exceeds 65535 bytes");
  }
}

namespace {

ScenarioConfig from_json(const json& j, std::optional<std::uint64_t> seed_override) {
  if (!j.is_object()) invalid("scenario must be a JSON object");

  ScenarioConfig cfg;
  read_opt(j, "seed", cfg.seed);
  if (seed_override) cfg.seed = *seed_override;
  read_opt(j, "duration", cfg.duration);
  read_opt(j, "warden", cfg.warden);

  if (j.contains("profile")) {
    const auto& p = j.at("profile");
    read_opt(p, "padded_fraction", cfg.profile.padded_fraction);
    read_opt(p, "improper_fraction", cfg.profile.improper_fraction);
    read_opt(p, "vulnerable_host_fraction", cfg.profile.vulnerable_host_fraction);
    read_opt(p, "mtu_frame_fraction", cfg.profile.mtu_frame_fraction);
    read_mix(p, "protocol_mix", cfg.profile.protocol_mix);
    read_mix(p, "improper_mix", cfg.profile.improper_mix);
    read_mix(p, "benign_padded_mix", cfg.profile.benign_padded_mix);
    read_mix(p, "arp_mix", cfg.profile.arp_mix);
  }

  if (j.contains("lan")) {
    const auto& lan = j.at("lan");
    std::size_t count = 0;
    std::size_t hidden = 0;
    double lo = 0.5;
    double hi = 4.0;
    read_opt(lan, "hosts", count);
    read_opt(lan, "hidden", hidden);
    read_opt(lan, "min_intensity", lo);
    read_opt(lan, "max_intensity", hi);
    if (!(lo > 0 && hi >= lo)) invalid("lan intensities must satisfy 0 < min <= max");
    cfg.hosts = make_default_lan(count, hidden, cfg.profile, cfg.seed, lo, hi);
    if (lan.contains("node")) {
      for (auto& h : cfg.hosts) read_node(lan.at("node"), h.node);
    }
  }

  if (j.contains("hosts")) {
    for (const auto& hj : j.at("hosts")) {
      HostProfile h;
      try {
        h.mac = MacAddress::parse(hj.at("mac").get<std::string>());
        h.ip = Ipv4Address::parse(hj.at("ip").get<std::string>());
      } catch (const json::exception&) {
        invalid("every host needs string 'mac' and 'ip'");
      }
      std::string kind = "benign";
      read_opt(hj, "kind", kind);
      h.kind = host_kind_from_string(kind);
      read_opt(hj, "intensity", h.traffic_intensity);
      read_opt(hj, "leak_seed", h.leak_seed);
      h.node.seed = cfg.seed ^ (cfg.hosts.size() + 1);
      if (hj.contains("node")) read_node(hj.at("node"), h.node);
      h.node.mac = h.mac;
      h.node.ip = h.ip;
      cfg.hosts.push_back(std::move(h));
    }
  }

  if (j.contains("transfers")) {
    Rng rng(cfg.seed ^ 0x7A45FE12ULL);
    for (const auto& tj : j.at("transfers")) {
      SecretTransfer t;
      try {
        t.from = resolve_host(tj.at("from").get<std::string>(), cfg.hosts);
        t.to = resolve_host(tj.at("to").get<std::string>(), cfg.hosts);
      } catch (const json::exception&) {
        invalid("every transfer needs 'from' and 'to'");
      }
      read_opt(tj, "at", t.not_before);
      if (tj.contains("text")) {
        const auto s = tj.at("text").get<std::string>();
        t.data.assign(s.begin(), s.end());
      } else if (tj.contains("hex")) {
        t.data = parse_hex(tj.at("hex").get<std::string>());
      } else if (tj.contains("random_bytes")) {
        const auto n = tj.at("random_bytes").get<std::size_t>();
        if (n > kMaxMessageLen) throw Error(ErrorCode::MessageTooLong, "transfer exceeds 65535 bytes");
        t.data.resize(n);
        for (auto& b : t.data) b = static_cast<std::uint8_t>(rng());
      }
      cfg.transfers.push_back(std::move(t));
    }
  }

  cfg.validate();
  return cfg;
}

}  // namespace

ScenarioConfig parse_scenario(std::string_view text, std::optional<std::uint64_t> seed_override) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    invalid(std::string("scenario is not valid JSON: ") + e.what());
  }
  try {
    return from_json(j, seed_override);
  } catch (const json::exception& e) {
    invalid(std::string("malformed scenario: ") + e.what());
  }
}

ScenarioConfig load_scenario(const std::filesystem::path& path, std::optional<std::uint64_t> seed_override) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str(), seed_override);
}

SimulationResult run_scenario(const ScenarioConfig& config) {
  config.validate();
  return run(config.hosts, config.profile, config.duration, config.seed, config.options());
}

}  // namespace padsteg
