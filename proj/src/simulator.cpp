#include "padsteg/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <queue>
#include <set>
#include <unordered_map>

#include "padsteg/analyzer.hpp"
#include "padsteg/error.hpp"

namespace padsteg {

namespace {

constexpr double kNever = std::numeric_limits<double>::infinity();

struct Wakeup {
  double time;
  std::uint64_t order;
  std::size_t host;
  std::uint64_t generation;

  bool operator>(const Wakeup& other) const {
    return time > other.time || (time == other.time && order > other.order);
  }
};

void check_addresses(const std::vector<HostProfile>& hosts) {
  std::set<MacAddress> macs;
  std::set<Ipv4Address> ips;
  for (const auto& h : hosts) {
    if (!macs.insert(h.mac).second) throw Error(ErrorCode::ConfigConflict, "duplicate MAC " + h.mac.to_string());
    if (!ips.insert(h.ip).second) throw Error(ErrorCode::ConfigConflict, "duplicate IP " + h.ip.to_string());
    if (h.mac.is_broadcast()) throw Error(ErrorCode::ConfigConflict, "host uses the broadcast MAC");
  }
}

class Lan {
 public:
  Lan(const std::vector<HostProfile>& hosts, double duration, const SimulationOptions& options)
      : hosts_(hosts), duration_(duration), options_(options), nodes_(hosts.size()), generation_(hosts.size()) {
    for (std::size_t i = 0; i < hosts.size(); ++i) {
      owner_.emplace(hosts[i].mac, i);
      if (hosts[i].kind != HostKind::Hidden) continue;
      NodeConfig cfg = hosts[i].node;
      cfg.mac = hosts[i].mac;
      cfg.ip = hosts[i].ip;
      nodes_[i].emplace(cfg);
    }
    for (const auto& t : options.transfers) {
      auto it = owner_.find(t.from);
      if (it == owner_.end() || !nodes_[it->second]) {
        throw Error(ErrorCode::InvalidConfig, "transfer sender " + t.from.to_string() + " is not a hidden host");
      }
    }
    transfer_order_.resize(options.transfers.size());
    for (std::size_t i = 0; i < transfer_order_.size(); ++i) transfer_order_[i] = i;
    std::stable_sort(transfer_order_.begin(), transfer_order_.end(), [&](std::size_t a, std::size_t b) {
      return options.transfers[a].not_before < options.transfers[b].not_before;
    });
    transfer_done_.assign(options.transfers.size(), false);
  }

  SimulationResult run(const std::vector<ScheduledFrame>& background) {
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      if (nodes_[i]) schedule(i);
    }
    std::size_t next_bg = 0;
    std::size_t next_transfer = 0;
    for (;;) {
      while (!wakeups_.empty() && wakeups_.top().generation != generation_[wakeups_.top().host]) wakeups_.pop();
      const double t_wake = wakeups_.empty() ? kNever : wakeups_.top().time;
      const double t_transfer = next_transfer < transfer_order_.size()
                                    ? std::max(0.0, options_.transfers[transfer_order_[next_transfer]].not_before)
                                    : kNever;
      const double t_bg = next_bg < background.size() ? background[next_bg].time : kNever;
      const double now = std::min({t_wake, t_transfer, t_bg});
      if (!(now < duration_)) break;

      if (t_wake == now) {
        const std::size_t host = wakeups_.top().host;
        wakeups_.pop();
        run_tick(host, now);
      } else if (t_transfer == now) {
        const auto& t = options_.transfers[transfer_order_[next_transfer++]];
        try_transfers(owner_.at(t.from), now);
      } else {
        const auto& item = background[next_bg++];
        deliver(now, item.frame, item.host);
      }
    }
    return finish();
  }

 private:
  void schedule(std::size_t host) {
    ++generation_[host];
    if (auto when = nodes_[host]->next_wakeup(); when && *when < duration_) {
      wakeups_.push({*when, order_++, host, generation_[host]});
    }
  }

  void run_tick(std::size_t host, double now) {
    for (const auto& frame : nodes_[host]->tick(now)) {
      if (frame.ethertype() == ethertype::kIpv4) {
        // Steganographic ACKs acknowledge a bulk segment from the peer.
        auto peer = owner_.find(frame.dst());
        if (peer != owner_.end()) deliver(now, make_overt_data_segment(frame), peer->second);
      }
      deliver(now, frame, host);
    }
    schedule(host);
  }

  void try_transfers(std::size_t host, double now) {
    auto& node = *nodes_[host];
    for (std::size_t i = 0; i < options_.transfers.size(); ++i) {
      const auto& t = options_.transfers[i];
      if (transfer_done_[i] || t.from != hosts_[host].mac || now < t.not_before) continue;
      if (!node.peers().contains(t.to)) continue;
      try {
        node.send_secret(t.to, t.data);
        transfer_done_[i] = true;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::UnknownPeer) throw;
      }
    }
    schedule(host);
  }

  void deliver(double now, const EthernetFrame& sent, std::size_t origin) {
    const EthernetFrame frame = options_.warden ? active_warden(sent) : sent;
    result_.trace.append(now, frame);
    if (frame.dst().is_broadcast()) {
      for (std::size_t i = 0; i < nodes_.size(); ++i) {
        if (i != origin && nodes_[i]) hand_to_node(i, now, frame);
      }
      return;
    }
    auto it = owner_.find(frame.dst());
    if (it != owner_.end() && it->second != origin && nodes_[it->second]) hand_to_node(it->second, now, frame);
  }

  void hand_to_node(std::size_t host, double now, const EthernetFrame& frame) {
    bool discovered = false;
    for (auto& ev : nodes_[host]->on_frame(frame, now)) {
      discovered |= std::holds_alternative<PeerDiscovered>(ev);
      result_.events.push_back({now, hosts_[host].mac, std::move(ev)});
    }
    if (discovered) {
      try_transfers(host, now);
    } else {
      schedule(host);
    }
  }

  SimulationResult finish() {
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      if (!nodes_[i]) continue;
      result_.peer_tables[hosts_[i].mac] = nodes_[i]->peers();
      for (const auto& sender : nodes_[i]->close()) result_.incomplete_streams.emplace_back(hosts_[i].mac, sender);
    }
    result_.undelivered_transfers =
        static_cast<std::size_t>(std::count(transfer_done_.begin(), transfer_done_.end(), false));
    return std::move(result_);
  }

  const std::vector<HostProfile>& hosts_;
  double duration_;
  const SimulationOptions& options_;
  std::vector<std::optional<HiddenNode>> nodes_;
  std::unordered_map<MacAddress, std::size_t> owner_;
  std::vector<std::uint64_t> generation_;
  std::priority_queue<Wakeup, std::vector<Wakeup>, std::greater<>> wakeups_;
  std::uint64_t order_ = 0;
  std::vector<std::size_t> transfer_order_;
  std::vector<bool> transfer_done_;
  SimulationResult result_;
};

}  // namespace

std::vector<MessageReceived> SimulationResult::messages_for(const MacAddress& host) const {
  std::vector<MessageReceived> out;
  for (const auto& e : events) {
    if (e.host != host) continue;
    if (const auto* m = std::get_if<MessageReceived>(&e.event)) out.push_back(*m);
  }
  return out;
}

double SimulationResult::discovery_time(const MacAddress& host, const MacAddress& peer) const {
  for (const auto& e : events) {
    if (e.host != host) continue;
    if (const auto* d = std::get_if<PeerDiscovered>(&e.event); d && d->mac == peer) return e.time;
  }
  return std::numeric_limits<double>::quiet_NaN();
}

SimulationResult run(const std::vector<HostProfile>& hosts, const TrafficProfile& profile, double duration,
                     std::uint64_t seed, const SimulationOptions& options) {
  if (!(duration > 0)) throw Error(ErrorCode::InvalidConfig, "duration must be positive");
  check_addresses(hosts);
  profile.validate();
  const auto background = generate_background(profile, hosts, duration, seed);
  Lan lan(hosts, duration, options);
  return lan.run(background);
}

}  // namespace padsteg
