#include "padsteg/traffic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "padsteg/error.hpp"

namespace padsteg {

namespace {

constexpr double kSumTolerance = 1e-9;

Rng derive_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t salt) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    static_cast<std::uint32_t>(salt)};
  return Rng(seq);
}

double sum_of(const ProtocolMix& m) { return m.http + m.ssh + m.udp + m.ssl + m.other; }
double sum_of(const PaddedMix& m) { return m.tcp + m.arp + m.icmp + m.other; }
double sum_of(const ArpMix& m) { return m.request + m.reply + m.gratuitous; }

void require_weights(std::initializer_list<double> weights, const char* what) {
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw Error(ErrorCode::InvalidConfig, std::string(what) + " has a negative or non-finite weight");
    }
  }
}

template <typename Mix>
void scale(Mix& mix, const char* what) {
  const double total = sum_of(mix);
  if (!(total > 0.0)) throw Error(ErrorCode::InvalidConfig, std::string(what) + " has no mass");
  if constexpr (std::is_same_v<Mix, ProtocolMix>) {
    require_weights({mix.http, mix.ssh, mix.udp, mix.ssl, mix.other}, what);
    mix = {mix.http / total, mix.ssh / total, mix.udp / total, mix.ssl / total, mix.other / total};
  } else if constexpr (std::is_same_v<Mix, PaddedMix>) {
    require_weights({mix.tcp, mix.arp, mix.icmp, mix.other}, what);
    mix = {mix.tcp / total, mix.arp / total, mix.icmp / total, mix.other / total};
  } else {
    require_weights({mix.request, mix.reply, mix.gratuitous}, what);
    mix = {mix.request / total, mix.reply / total, mix.gratuitous / total};
  }
}

void require_fraction(double value, const char* what) {
  if (!(value >= 0.0 && value <= 1.0)) {
    throw Error(ErrorCode::InvalidConfig, std::string(what) + " must lie in [0, 1]");
  }
}

enum class Family { Tcp, Arp, Icmp, Other };
enum class Service { Http, Ssh, Udp, Ssl, Other };

Family pick(const PaddedMix& m, Rng& rng) {
  std::discrete_distribution<int> d({m.tcp, m.arp, m.icmp, m.other});
  return static_cast<Family>(d(rng));
}

Service pick(const ProtocolMix& m, Rng& rng) {
  std::discrete_distribution<int> d({m.http, m.ssh, m.udp, m.ssl, m.other});
  return static_cast<Service>(d(rng));
}

std::uint16_t tcp_port_for(Service s) {
  switch (s) {
    case Service::Http: return 80;
    case Service::Ssh: return 22;
    case Service::Ssl: return 443;
    default: return 8000;
  }
}

/// One host's frame factory.
class HostTraffic {
 public:
  HostTraffic(const TrafficProfile& profile, const std::vector<HostProfile>& hosts, std::size_t self,
              double padding_odds, std::uint64_t seed)
      : profile_(profile),
        hosts_(hosts),
        self_(hosts[self]),
        self_index_(self),
        padding_odds_(padding_odds),
        rng_(derive_rng(seed, self, 0xB6)) {
    if (self_.kind == HostKind::Vulnerable) leak_.emplace(LeakStream::for_host(self_));
  }

  Rng& rng() { return rng_; }

  EthernetFrame next_frame() {
    const HostProfile& peer = pick_peer();
    if (std::bernoulli_distribution(padding_odds_)(rng_)) return padded_frame(peer);
    return unpadded_frame(peer);
  }

 private:
  const HostProfile& pick_peer() {
    if (hosts_.size() < 2) return self_;
    std::uniform_int_distribution<std::size_t> d(0, hosts_.size() - 2);
    std::size_t i = d(rng_);
    if (i >= self_index_) ++i;
    return hosts_[i];
  }

  PaddingFill fill() {
    if (leak_) return std::ref<PaddingSource>(*leak_);
    return ZeroFill{};
  }

  std::uint16_t ephemeral_port() {
    return static_cast<std::uint16_t>(std::uniform_int_distribution<int>(49152, 65535)(rng_));
  }

  Bytes random_bytes(std::size_t n) {
    Bytes out(n);
    for (std::size_t i = 0; i < n; i += 8) {
      std::uint64_t word = rng_();
      for (std::size_t j = 0; j < 8 && i + j < n; ++j) out[i + j] = static_cast<std::uint8_t>(word >> (8 * j));
    }
    return out;
  }

  TcpEndpoints tcp_endpoints(const HostProfile& peer, Service service) {
    const std::uint16_t port = tcp_port_for(service);
    // Either side of the connection may be the one talking.
    if (std::bernoulli_distribution(0.5)(rng_)) return {self_.ip, peer.ip, ephemeral_port(), port};
    return {self_.ip, peer.ip, port, ephemeral_port()};
  }

  Service tcp_service() {
    const auto& m = profile_.protocol_mix;
    std::discrete_distribution<int> d({m.http, m.ssh, m.ssl});
    static constexpr Service kServices[] = {Service::Http, Service::Ssh, Service::Ssl};
    return m.http + m.ssh + m.ssl > 0 ? kServices[d(rng_)] : Service::Other;
  }

  EthernetFrame padded_frame(const HostProfile& peer) {
    const bool leaky = leak_.has_value();
    switch (pick(leaky ? profile_.improper_mix : profile_.benign_padded_mix, rng_)) {
      case Family::Tcp: {
        const auto ack = build_tcp_ack(tcp_endpoints(peer, tcp_service()), rng_() & 0xFFFFFFFF,
                                       rng_() & 0xFFFFFFFF, 64240, ip_id_++);
        return build_frame(peer.mac, self_.mac, ethertype::kIpv4, ack.serialize(), fill());
      }
      case Family::Arp: return arp_frame(peer);
      case Family::Icmp: {
        const auto data = random_bytes(std::uniform_int_distribution<std::size_t>(0, 17)(rng_));
        const bool reply = std::bernoulli_distribution(0.5)(rng_);
        const auto pkt = build_icmp_echo(self_.ip, peer.ip, reply, static_cast<std::uint16_t>(rng_()),
                                         static_cast<std::uint16_t>(rng_()), data, ip_id_++);
        return build_frame(peer.mac, self_.mac, ethertype::kIpv4, pkt, fill());
      }
      case Family::Other: {
        static constexpr std::uint16_t kSmallUdpPorts[] = {53, 123, 137, 161, 5353};
        const auto data = random_bytes(std::uniform_int_distribution<std::size_t>(0, 17)(rng_));
        const auto port = kSmallUdpPorts[std::uniform_int_distribution<std::size_t>(0, 4)(rng_)];
        const auto pkt = build_udp(self_.ip, peer.ip, ephemeral_port(), port, data, ip_id_++);
        return build_frame(peer.mac, self_.mac, ethertype::kIpv4, pkt, fill());
      }
    }
    return {};
  }

  EthernetFrame arp_frame(const HostProfile& peer) {
    const auto& m = profile_.arp_mix;
    std::discrete_distribution<int> d({m.request, m.reply, m.gratuitous});
    switch (d(rng_)) {
      case 0: {
        const auto arp = build_arp_request(self_.mac, self_.ip, peer.ip).serialize();
        return build_frame(MacAddress::broadcast(), self_.mac, ethertype::kArp, arp, fill());
      }
      case 1: {
        const auto arp = build_arp_reply(self_.mac, self_.ip, peer.mac, peer.ip).serialize();
        return build_frame(peer.mac, self_.mac, ethertype::kArp, arp, fill());
      }
      default: {
        const auto arp = build_arp_request(self_.mac, self_.ip, self_.ip).serialize();
        return build_frame(MacAddress::broadcast(), self_.mac, ethertype::kArp, arp, fill());
      }
    }
  }

  std::size_t unpadded_ip_length() {
    if (std::bernoulli_distribution(profile_.mtu_frame_fraction)(rng_)) return kMaxPayloadLen;
    return std::uniform_int_distribution<std::size_t>(kMinPayloadLen, 576)(rng_);
  }

  EthernetFrame unpadded_frame(const HostProfile& peer) {
    const std::size_t ip_len = unpadded_ip_length();
    const Service service = pick(profile_.protocol_mix, rng_);
    Bytes packet;
    switch (service) {
      case Service::Udp:
        packet = build_udp(self_.ip, peer.ip, ephemeral_port(), ephemeral_port(), random_bytes(ip_len - 28),
                           ip_id_++);
        break;
      case Service::Other:
        packet = build_ipv4_packet(self_.ip, peer.ip, ipproto::kGre, random_bytes(ip_len - 20), ip_id_++);
        break;
      default: {
        const auto seg = build_tcp_data(tcp_endpoints(peer, service), rng_() & 0xFFFFFFFF,
                                        rng_() & 0xFFFFFFFF, 64240, random_bytes(ip_len - 40), ip_id_++);
        packet = seg.serialize();
      }
    }
    return build_frame(peer.mac, self_.mac, ethertype::kIpv4, packet);
  }

  const TrafficProfile& profile_;
  const std::vector<HostProfile>& hosts_;
  const HostProfile& self_;
  std::size_t self_index_;
  double padding_odds_;
  Rng rng_;
  std::optional<LeakStream> leak_;
  std::uint16_t ip_id_ = 1;
};

}  // namespace

std::string_view to_string(HostKind kind) {
  switch (kind) {
    case HostKind::Benign: return "benign";
    case HostKind::Vulnerable: return "vulnerable";
    case HostKind::Hidden: return "hidden";
  }
  return "?";
}

HostKind host_kind_from_string(std::string_view text) {
  if (text == "benign") return HostKind::Benign;
  if (text == "vulnerable") return HostKind::Vulnerable;
  if (text == "hidden") return HostKind::Hidden;
  throw Error(ErrorCode::InvalidConfig, "unknown host kind '" + std::string(text) + "'");
}

// ---------------------------------------------------------------------------
// TrafficProfile

TrafficProfile TrafficProfile::defaults() {
  TrafficProfile p;
  p.normalize();
  return p;
}

void TrafficProfile::normalize() {
  scale(protocol_mix, "protocol_mix");
  scale(improper_mix, "improper_mix");
  scale(benign_padded_mix, "benign_padded_mix");
  scale(arp_mix, "arp_mix");
  validate();
}

void TrafficProfile::validate() const {
  auto check = [](double total, const char* what) {
    if (std::abs(total - 1.0) > kSumTolerance) {
      throw Error(ErrorCode::InvalidConfig, std::string(what) + " sums to " + std::to_string(total));
    }
  };
  require_weights({protocol_mix.http, protocol_mix.ssh, protocol_mix.udp, protocol_mix.ssl, protocol_mix.other},
                  "protocol_mix");
  require_weights({improper_mix.tcp, improper_mix.arp, improper_mix.icmp, improper_mix.other}, "improper_mix");
  require_weights({benign_padded_mix.tcp, benign_padded_mix.arp, benign_padded_mix.icmp, benign_padded_mix.other},
                  "benign_padded_mix");
  require_weights({arp_mix.request, arp_mix.reply, arp_mix.gratuitous}, "arp_mix");
  check(sum_of(protocol_mix), "protocol_mix");
  check(sum_of(improper_mix), "improper_mix");
  check(sum_of(benign_padded_mix), "benign_padded_mix");
  check(sum_of(arp_mix), "arp_mix");
  require_fraction(padded_fraction, "padded_fraction");
  require_fraction(improper_fraction, "improper_fraction");
  require_fraction(vulnerable_host_fraction, "vulnerable_host_fraction");
  require_fraction(mtu_frame_fraction, "mtu_frame_fraction");
}

// ---------------------------------------------------------------------------
// LeakStream

LeakStream::LeakStream(std::uint64_t seed) : rng_(derive_rng(seed, 0, 0x1EA4)) {}

LeakStream LeakStream::for_host(const HostProfile& host) {
  if (host.kind != HostKind::Vulnerable) {
    throw Error(ErrorCode::NotVulnerable, host.mac.to_string() + " zero-fills its padding");
  }
  return LeakStream(host.leak_seed);
}

void LeakStream::ensure(std::size_t bytes) {
  if (position_ > 4096) {
    buffer_.erase(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(position_));
    position_ = 0;
  }
  while (buffer_.size() < position_ + bytes) {
    const std::uint64_t word = rng_();
    for (int i = 0; i < 8; ++i) buffer_.push_back(static_cast<std::uint8_t>(word >> (8 * i)));
  }
}

Bytes LeakStream::next(std::size_t n) {
  if (n < 1 || n >= kMinPayloadLen) {
    throw Error(ErrorCode::BadLength, "leak reads cover 1..45 bytes, got " + std::to_string(n));
  }
  ensure(n);
  const auto begin = buffer_.begin() + static_cast<std::ptrdiff_t>(position_);
  Bytes out(begin, begin + static_cast<std::ptrdiff_t>(n));
  position_ += std::uniform_int_distribution<std::size_t>(0, n)(rng_);
  return out;
}

Bytes leak_padding(LeakStream& stream, std::size_t n) { return stream.next(n); }

// ---------------------------------------------------------------------------
// Background generation

PaddingOdds padding_odds(const TrafficProfile& profile, const std::vector<HostProfile>& hosts) {
  double total = 0.0;
  double leaky = 0.0;
  for (const auto& h : hosts) {
    const double rate = std::max(0.0, h.traffic_intensity);
    total += rate;
    if (h.kind == HostKind::Vulnerable) leaky += rate;
  }
  PaddingOdds odds;
  if (total <= 0.0) return odds;
  const double share = leaky / total;
  const double improper_target = profile.padded_fraction * profile.improper_fraction;
  if (share > 0.0) odds.vulnerable = std::min(1.0, improper_target / share);
  if (share < 1.0) {
    odds.benign = std::clamp((profile.padded_fraction - share * odds.vulnerable) / (1.0 - share), 0.0, 1.0);
  }
  return odds;
}

std::vector<ScheduledFrame> generate_background(const TrafficProfile& profile,
                                                const std::vector<HostProfile>& hosts,
                                                double duration, std::uint64_t seed) {
  profile.validate();
  const PaddingOdds odds = padding_odds(profile, hosts);

  std::vector<ScheduledFrame> schedule;
  for (std::size_t i = 0; i < hosts.size(); ++i) {
    const double rate = hosts[i].traffic_intensity;
    if (!(rate > 0.0)) continue;
    HostTraffic traffic(profile, hosts, i,
                        hosts[i].kind == HostKind::Vulnerable ? odds.vulnerable : odds.benign, seed);
    std::exponential_distribution<double> gap(rate);
    for (double t = gap(traffic.rng()); t < duration; t += gap(traffic.rng())) {
      schedule.push_back({t, i, traffic.next_frame()});
    }
  }
  std::stable_sort(schedule.begin(), schedule.end(), [](const ScheduledFrame& a, const ScheduledFrame& b) {
    return a.time < b.time || (a.time == b.time && a.host < b.host);
  });
  return schedule;
}

std::vector<HostProfile> make_default_lan(std::size_t host_count, std::size_t hidden_count,
                                          const TrafficProfile& profile, std::uint64_t seed,
                                          double min_intensity, double max_intensity) {
  if (hidden_count > host_count) throw Error(ErrorCode::InvalidConfig, "more hidden hosts than hosts");
  if (host_count == 0) return {};
  const std::size_t plain = host_count - hidden_count;
  const auto vulnerable = std::min<std::size_t>(
      plain, static_cast<std::size_t>(std::llround(profile.vulnerable_host_fraction * static_cast<double>(host_count))));

  std::vector<double> intensity(host_count);
  for (std::size_t k = 0; k < host_count; ++k) {
    const double x = host_count == 1 ? 0.5 : static_cast<double>(k) / static_cast<double>(host_count - 1);
    intensity[k] = min_intensity * std::pow(max_intensity / min_intensity, x);
  }

  // Spread leaky hosts across the intensity ranks, hidden hosts near the middle.
  std::vector<HostKind> kind_at_rank(host_count, HostKind::Benign);
  for (std::size_t j = 0; j < vulnerable; ++j) {
    kind_at_rank[(2 * j + 1) * host_count / (2 * vulnerable)] = HostKind::Vulnerable;
  }
  std::vector<std::size_t> hidden_ranks;
  for (std::size_t offset = 0; hidden_ranks.size() < hidden_count; ++offset) {
    for (long sign : {1L, -1L}) {
      const long r = static_cast<long>(host_count / 2) + sign * static_cast<long>(offset);
      if (r < 0 || r >= static_cast<long>(host_count) || hidden_ranks.size() == hidden_count) continue;
      auto idx = static_cast<std::size_t>(r);
      if (kind_at_rank[idx] != HostKind::Benign) continue;
      kind_at_rank[idx] = HostKind::Hidden;
      hidden_ranks.push_back(idx);
    }
  }

  std::vector<std::size_t> visible_ranks;
  for (std::size_t r = 0; r < host_count; ++r) {
    if (kind_at_rank[r] != HostKind::Hidden) visible_ranks.push_back(r);
  }
  Rng rng = derive_rng(seed, 0, 0x1A4);
  std::shuffle(visible_ranks.begin(), visible_ranks.end(), rng);
  visible_ranks.insert(visible_ranks.end(), hidden_ranks.begin(), hidden_ranks.end());

  std::vector<HostProfile> hosts;
  hosts.reserve(host_count);
  for (std::size_t i = 0; i < host_count; ++i) {
    const std::size_t rank = visible_ranks[i];
    HostProfile h;
    h.mac = MacAddress({0x02, 0x00, 0x0A, 0x07, static_cast<std::uint8_t>(i >> 8), static_cast<std::uint8_t>(i)});
    h.ip = Ipv4Address({10, 7, static_cast<std::uint8_t>(1 + i / 200), static_cast<std::uint8_t>(10 + i % 200)});
    h.kind = kind_at_rank[rank];
    h.traffic_intensity = intensity[rank];
    h.leak_seed = rng();
    h.node.mac = h.mac;
    h.node.ip = h.ip;
    h.node.prefix_len = 16;
    h.node.seed = rng();
    hosts.push_back(std::move(h));
  }
  return hosts;
}

}  // namespace padsteg
