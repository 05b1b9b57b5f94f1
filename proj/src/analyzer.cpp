#include "padsteg/analyzer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "padsteg/error.hpp"
#include "padsteg/stegcodec.hpp"

namespace padsteg {

std::string_view to_string(Protocol p) {
  switch (p) {
    case Protocol::Http: return "HTTP";
    case Protocol::Ssh: return "SSH";
    case Protocol::Ssl: return "SSL";
    case Protocol::Tcp: return "TCP";
    case Protocol::Udp: return "UDP";
    case Protocol::Icmp: return "ICMP";
    case Protocol::Arp: return "ARP";
    case Protocol::Other: return "Other";
  }
  return "?";
}

namespace {

std::string_view to_string(ProtocolFamily f) {
  switch (f) {
    case ProtocolFamily::Tcp: return "TCP";
    case ProtocolFamily::Arp: return "ARP";
    case ProtocolFamily::Icmp: return "ICMP";
    case ProtocolFamily::Others: return "Others";
  }
  return "?";
}

Protocol port_protocol(std::uint16_t port) {
  switch (port) {
    case 80:
    case 8080: return Protocol::Http;
    case 22: return Protocol::Ssh;
    case 443: return Protocol::Ssl;
    default: return Protocol::Tcp;
  }
}

void add_span(TrafficReport& r, double ts) {
  r.first_timestamp = r.first_timestamp ? std::min(*r.first_timestamp, ts) : ts;
  r.last_timestamp = r.last_timestamp ? std::max(*r.last_timestamp, ts) : ts;
  r.duration = *r.last_timestamp - *r.first_timestamp;
}

}  // namespace

Protocol attribute_protocol(const EthernetFrame& frame) {
  if (frame.ethertype() == ethertype::kArp) return Protocol::Arp;
  if (frame.ethertype() != ethertype::kIpv4 || frame.payload().size() < kIpv4HeaderLen) return Protocol::Other;
  const auto& ip = frame.payload();
  const std::size_t ihl = (ip[0] & 0x0F) * 4u;
  switch (ip[9]) {
    case ipproto::kIcmp: return Protocol::Icmp;
    case ipproto::kUdp: return Protocol::Udp;
    case ipproto::kTcp: {
      if (ip.size() < ihl + 4) return Protocol::Tcp;
      const auto src = static_cast<std::uint16_t>((ip[ihl] << 8) | ip[ihl + 1]);
      const auto dst = static_cast<std::uint16_t>((ip[ihl + 2] << 8) | ip[ihl + 3]);
      const Protocol by_src = port_protocol(src);
      return by_src != Protocol::Tcp ? by_src : port_protocol(dst);
    }
    default: return Protocol::Other;
  }
}

ProtocolFamily family_of(Protocol p) {
  switch (p) {
    case Protocol::Http:
    case Protocol::Ssh:
    case Protocol::Ssl:
    case Protocol::Tcp: return ProtocolFamily::Tcp;
    case Protocol::Arp: return ProtocolFamily::Arp;
    case Protocol::Icmp: return ProtocolFamily::Icmp;
    default: return ProtocolFamily::Others;
  }
}

// ---------------------------------------------------------------------------
// TrafficReport

void TrafficReport::merge(const TrafficReport& other) {
  total_frames += other.total_frames;
  padded_frames += other.padded_frames;
  improper_frames += other.improper_frames;
  for (const auto& [k, v] : other.per_protocol_padded) per_protocol_padded[k] += v;
  for (const auto& [k, v] : other.per_protocol_improper) per_protocol_improper[k] += v;
  for (const auto& [k, v] : other.per_host_improper) per_host_improper[k] += v;
  arp_mix.request += other.arp_mix.request;
  arp_mix.reply += other.arp_mix.reply;
  arp_mix.gratuitous += other.arp_mix.gratuitous;
  if (other.first_timestamp) add_span(*this, *other.first_timestamp);
  if (other.last_timestamp) add_span(*this, *other.last_timestamp);
}

double TrafficReport::padded_share() const {
  return total_frames ? static_cast<double>(padded_frames) / static_cast<double>(total_frames) : 0.0;
}

double TrafficReport::improper_share_of_padded() const {
  return padded_frames ? static_cast<double>(improper_frames) / static_cast<double>(padded_frames) : 0.0;
}

std::map<ProtocolFamily, double> TrafficReport::improper_family_shares() const {
  std::map<ProtocolFamily, double> shares{{ProtocolFamily::Tcp, 0.0},
                                          {ProtocolFamily::Arp, 0.0},
                                          {ProtocolFamily::Icmp, 0.0},
                                          {ProtocolFamily::Others, 0.0}};
  if (improper_frames == 0) return shares;
  for (const auto& [p, n] : per_protocol_improper) {
    shares[family_of(p)] += static_cast<double>(n) / static_cast<double>(improper_frames);
  }
  return shares;
}

std::array<double, 3> TrafficReport::arp_shares() const {
  const double total = static_cast<double>(arp_mix.total());
  if (total == 0) return {0, 0, 0};
  return {arp_mix.request / total, arp_mix.reply / total, arp_mix.gratuitous / total};
}

std::string TrafficReport::to_json(int indent) const {
  nlohmann::ordered_json j;
  j["total_frames"] = total_frames;
  j["padded_frames"] = padded_frames;
  j["improper_frames"] = improper_frames;
  auto protocol_map = [](const std::map<Protocol, std::uint64_t>& m) {
    nlohmann::ordered_json o = nlohmann::ordered_json::object();
    for (const auto& [k, v] : m) o[std::string(to_string(k))] = v;
    return o;
  };
  j["per_protocol_padded"] = protocol_map(per_protocol_padded);
  j["per_protocol_improper"] = protocol_map(per_protocol_improper);
  j["arp_mix"] = {{"Request", arp_mix.request}, {"Reply", arp_mix.reply}, {"Gratuitous", arp_mix.gratuitous}};
  nlohmann::ordered_json hosts = nlohmann::ordered_json::object();
  for (const auto& [mac, n] : per_host_improper) hosts[mac.to_string()] = n;
  j["per_host_improper"] = hosts;
  j["duration"] = duration;
  return j.dump(indent);
}

std::string TrafficReport::to_table() const {
  std::ostringstream out;
  char line[128];
  auto pct = [](double x) { return 100.0 * x; };
  std::snprintf(line, sizeof line, "%-28s %12llu\n", "frames", static_cast<unsigned long long>(total_frames));
  out << line;
  std::snprintf(line, sizeof line, "%-28s %12llu  (%6.2f%% of frames)\n", "padded",
                static_cast<unsigned long long>(padded_frames), pct(padded_share()));
  out << line;
  std::snprintf(line, sizeof line, "%-28s %12llu  (%6.2f%% of padded)\n", "improper padding",
                static_cast<unsigned long long>(improper_frames), pct(improper_share_of_padded()));
  out << line;
  std::snprintf(line, sizeof line, "%-28s %12.3f s\n", "duration", duration);
  out << line;

  out << "\nimproper padding by protocol\n";
  for (const auto& [family, share] : improper_family_shares()) {
    std::snprintf(line, sizeof line, "  %-26s %11.2f%%\n", std::string(to_string(family)).c_str(), pct(share));
    out << line;
  }
  out << "\npadded frames by protocol\n";
  for (const auto& [p, n] : per_protocol_padded) {
    const auto improper = per_protocol_improper.count(p) ? per_protocol_improper.at(p) : 0;
    std::snprintf(line, sizeof line, "  %-26s %12llu  improper %llu\n", std::string(to_string(p)).c_str(),
                  static_cast<unsigned long long>(n), static_cast<unsigned long long>(improper));
    out << line;
  }
  const auto arp = arp_shares();
  out << "\nARP messages\n";
  const char* names[] = {"Request", "Reply", "Gratuitous"};
  const std::uint64_t counts[] = {arp_mix.request, arp_mix.reply, arp_mix.gratuitous};
  for (int i = 0; i < 3; ++i) {
    std::snprintf(line, sizeof line, "  %-26s %12llu  (%6.2f%%)\n", names[i],
                  static_cast<unsigned long long>(counts[i]), pct(arp[i]));
    out << line;
  }
  out << "\nhosts sending improper padding: " << per_host_improper.size() << "\n";
  return out.str();
}

// ---------------------------------------------------------------------------
// Analysis

TrafficReport compute_report(const Trace& trace) { return compute_report(trace, 0, trace.records.size()); }

TrafficReport compute_report(const Trace& trace, std::size_t begin, std::size_t end) {
  TrafficReport report;
  end = std::min(end, trace.records.size());
  for (std::size_t i = begin; i < end; ++i) {
    const auto& rec = trace.records[i];
    EthernetFrame frame;
    try {
      frame = parse_frame(rec.data);
    } catch (const Error& e) {
      throw Error(ErrorCode::RecordError, "record " + std::to_string(i) + ": " + e.what(), i);
    }
    add_span(report, rec.timestamp());
    ++report.total_frames;

    const Protocol proto = attribute_protocol(frame);
    if (proto == Protocol::Arp) {
      try {
        const auto arp = ArpPacket::parse(frame.payload());
        if (arp.is_gratuitous()) {
          ++report.arp_mix.gratuitous;
        } else if (arp.is_request()) {
          ++report.arp_mix.request;
        } else if (arp.oper == ArpPacket::kReply) {
          ++report.arp_mix.reply;
        }
      } catch (const Error& e) {
        throw Error(ErrorCode::RecordError, "record " + std::to_string(i) + ": " + e.what(), i);
      }
    }

    const PaddingClass cls = classify_padding(frame);
    if (cls == PaddingClass::NoPadding) continue;
    ++report.padded_frames;
    ++report.per_protocol_padded[proto];
    if (cls == PaddingClass::ImproperPadding) {
      ++report.improper_frames;
      ++report.per_protocol_improper[proto];
      ++report.per_host_improper[frame.src()];
    }
  }
  return report;
}

bool is_advertisement(const EthernetFrame& frame) {
  if (frame.ethertype() != ethertype::kArp || frame.padding().size() != kAdvertisementLen) return false;
  if (frame.payload().size() < kArpPacketLen) return false;
  const std::uint16_t oper = static_cast<std::uint16_t>((frame.payload()[6] << 8) | frame.payload()[7]);
  if (oper != ArpPacket::kRequest) return false;
  return verify_advertisement(frame.padding(), frame.src());
}

std::vector<DetectedNode> detect_hidden_nodes(const Trace& trace) {
  std::vector<DetectedNode> found;
  std::unordered_map<MacAddress, std::size_t> index;
  for (const auto& rec : trace.records) {
    EthernetFrame frame;
    try {
      frame = parse_frame(rec.data);
    } catch (const Error&) {
      continue;
    }
    if (!is_advertisement(frame)) continue;
    auto [it, inserted] = index.try_emplace(frame.src(), found.size());
    if (inserted) found.push_back({frame.src(), rec.timestamp(), 0});
    ++found[it->second].advert_count;
  }
  return found;
}

BandwidthEstimate estimate_bandwidth(double frames_per_day, std::uint32_t padding_bits) {
  BandwidthEstimate e;
  e.frames_per_day = std::max(0.0, frames_per_day);
  e.padding_bits_per_frame = padding_bits;
  e.bits_per_second = e.frames_per_day * padding_bits / kSecondsPerDay;
  return e;
}

BandwidthEstimate estimate_bandwidth_shared(double total_frames_per_day, double hosts, std::uint32_t padding_bits) {
  if (!(hosts > 0)) throw Error(ErrorCode::InvalidConfig, "host divisor must be positive");
  return estimate_bandwidth(total_frames_per_day / hosts, padding_bits);
}

EthernetFrame active_warden(const EthernetFrame& frame) {
  if (classify_padding(frame) != PaddingClass::ImproperPadding) return frame;
  return frame.with_padding(Bytes(frame.padding().size(), 0));
}

Bytes active_warden(ByteView wire) {
  try {
    return serialize_frame(active_warden(parse_frame(wire)));
  } catch (const Error&) {
    return Bytes(wire.begin(), wire.end());
  }
}

Trace active_warden(const Trace& trace) {
  Trace out;
  out.records.reserve(trace.records.size());
  for (const auto& rec : trace.records) {
    TraceRecord copy = rec;
    copy.data = active_warden(ByteView(rec.data));
    out.records.push_back(std::move(copy));
  }
  return out;
}

std::map<MacAddress, double> per_host_rate_profile(const TrafficReport& report) {
  if (!(report.duration > 0)) throw Error(ErrorCode::InvalidConfig, "report duration must be positive");
  std::map<MacAddress, double> rates;
  for (const auto& [mac, n] : report.per_host_improper) rates[mac] = static_cast<double>(n) / report.duration;
  return rates;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw Error(ErrorCode::InvalidConfig, "quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

}  // namespace padsteg
