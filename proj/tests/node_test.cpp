#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "oracles.hpp"
#include "padsteg/node.hpp"
#include "test_support.hpp"

namespace padsteg {
namespace {

using testing::error_of;

NodeConfig config_for(int index, std::uint64_t seed = 1) {
  NodeConfig cfg;
  cfg.mac = MacAddress({0x02, 0x00, 0x0A, 0x07, 0x00, static_cast<std::uint8_t>(index)});
  cfg.ip = Ipv4Address({10, 7, 1, static_cast<std::uint8_t>(10 + index)});
  cfg.seed = seed + static_cast<std::uint64_t>(index);
  return cfg;
}

// Two or more nodes wired back to back, driven by their own wakeups.
struct Wire {
  std::vector<HiddenNode> nodes;
  std::vector<std::pair<double, EthernetFrame>> sent;  // every frame put on the wire
  std::vector<std::pair<std::size_t, std::pair<double, NodeEvent>>> events;

  explicit Wire(std::vector<NodeConfig> configs) {
    for (auto& c : configs) nodes.emplace_back(std::move(c));
  }

  void run_until(double end) {
    for (;;) {
      std::size_t who = nodes.size();
      double when = end;
      for (std::size_t i = 0; i < nodes.size(); ++i) {
        const auto w = nodes[i].next_wakeup();
        if (w && *w < when) {
          when = *w;
          who = i;
        }
      }
      if (who == nodes.size()) return;
      for (const auto& frame : nodes[who].tick(when)) {
        sent.emplace_back(when, frame);
        for (std::size_t j = 0; j < nodes.size(); ++j) {
          if (j == who) continue;
          if (!frame.dst().is_broadcast() && frame.dst() != nodes[j].config().mac) continue;
          for (auto& ev : nodes[j].on_frame(frame, when)) events.push_back({j, {when, std::move(ev)}});
        }
      }
    }
  }

  std::vector<Bytes> received(std::size_t node) const {
    std::vector<Bytes> out;
    for (const auto& [who, e] : events) {
      if (who != node) continue;
      if (const auto* m = std::get_if<MessageReceived>(&e.second)) out.push_back(m->data);
    }
    return out;
  }
};

EthernetFrame advert_from(const MacAddress& mac, std::uint16_t nonce, const Ipv4Address& spa) {
  const auto ad = encode_advertisement(mac, nonce);
  return build_frame(MacAddress::broadcast(), mac, ethertype::kArp,
                     build_arp_request(mac, spa, Ipv4Address({10, 7, 1, 99})).serialize(),
                     GivenFill{Bytes(ad.begin(), ad.end())});
}

TEST(TokenBucketTest, StartsEmptyAndRefills) {
  TokenBucket bucket(0.5, 5.0);
  EXPECT_FALSE(bucket.try_take());
  EXPECT_DOUBLE_EQ(bucket.time_until_token(), 2.0);
  bucket.advance(2.0);
  EXPECT_TRUE(bucket.try_take());
  EXPECT_FALSE(bucket.try_take());
  bucket.advance(1000.0);
  EXPECT_DOUBLE_EQ(bucket.tokens(), 5.0);
  for (int i = 0; i < 5; ++i) EXPECT_TRUE(bucket.try_take());
  EXPECT_FALSE(bucket.try_take());
  EXPECT_DOUBLE_EQ(bucket.next_token_at(), 1002.0);
}

TEST(NodeConfigTest, IntervalBounds) {
  NodeConfig cfg = config_for(1);
  EXPECT_NO_THROW(cfg.validate());
  cfg.advert_interval = 59;
  EXPECT_EQ(error_of([&] { cfg.validate(); }), ErrorCode::InvalidConfig);
  cfg.advert_interval = 900;
  cfg.expiry_interval = 800;
  EXPECT_EQ(error_of([&] { cfg.validate(); }), ErrorCode::InvalidConfig);
  cfg.expiry_interval = 1201;
  EXPECT_EQ(error_of([&] { cfg.validate(); }), ErrorCode::InvalidConfig);
  cfg.expiry_interval = 1200;
  EXPECT_NO_THROW(cfg.validate());
  EXPECT_EQ(error_of([&] { HiddenNode node(NodeConfig{.advert_interval = 10}); }), ErrorCode::InvalidConfig);
}

TEST(HiddenNodeTest, AdvertisesOnFirstTickThenEveryInterval) {
  HiddenNode node(config_for(1));
  const auto first = node.tick(0.0);
  ASSERT_EQ(first.size(), 1u);
  const auto& ad = first[0];
  EXPECT_EQ(ad.dst(), MacAddress::broadcast());
  EXPECT_EQ(ad.ethertype(), ethertype::kArp);
  EXPECT_EQ(ad.padding().size(), 18u);
  EXPECT_EQ(classify_padding(ad), PaddingClass::ImproperPadding);
  EXPECT_TRUE(ArpPacket::parse(ad.payload()).is_request());
  EXPECT_TRUE(verify_advertisement(ad.padding(), node.config().mac));

  EXPECT_TRUE(node.tick(300.0).empty());
  EXPECT_TRUE(node.tick(599.999).empty());
  EXPECT_EQ(node.tick(600.0).size(), 1u);
  EXPECT_EQ(*node.next_wakeup(), 1200.0);
}

TEST(HiddenNodeTest, AdvertisementTargetsOwnSubnet) {
  NodeConfig cfg = config_for(1);
  cfg.prefix_len = 24;
  HiddenNode node(cfg);
  for (int i = 0; i < 2000; ++i) {
    const auto arp = ArpPacket::parse(node.self_advertise().payload());
    ASSERT_EQ(arp.spa, cfg.ip);
    ASSERT_NE(arp.tpa, cfg.ip);
    ASSERT_EQ(arp.tpa.to_uint() >> 8, cfg.ip.to_uint() >> 8);
    ASSERT_NE(arp.tpa.octets()[3], 0);
    ASSERT_NE(arp.tpa.octets()[3], 255);
  }
}

TEST(HiddenNodeTest, NonceDrawsBehaveUniformly) {
  HiddenNode node(config_for(2));
  std::vector<std::uint16_t> nonces;
  for (int i = 0; i < 10000; ++i) {
    nonces.push_back(AdvertisingSequence::parse(node.self_advertise().padding()).nonce);
  }
  int successive_equal = 0;
  for (std::size_t i = 1; i < nonces.size(); ++i) successive_equal += nonces[i] == nonces[i - 1];
  // Expected repeats among 10^4 uniform 16-bit draws: n - 65535(1 - (1 - 1/65535)^n), about 725.
  const double n = 10000, m = 65535;
  const double expected_repeats = n - m * (1 - std::pow(1 - 1 / m, n));
  const auto distinct = std::set<std::uint16_t>(nonces.begin(), nonces.end()).size();
  EXPECT_LE(successive_equal, 3);
  EXPECT_LE(n - static_cast<double>(distinct), expected_repeats * 1.15);
  EXPECT_EQ(std::count(nonces.begin(), nonces.end(), 0), 0);
}

TEST(HiddenNodeTest, DiscoversAndRefreshesPeers) {
  HiddenNode node(config_for(1));
  const auto peer = MacAddress::parse("02:00:0A:07:00:09");
  const auto ip = Ipv4Address::parse("10.7.1.19");

  auto events = node.on_frame(advert_from(peer, 0x1234, ip), 10.0);
  ASSERT_EQ(events.size(), 1u);
  ASSERT_TRUE(std::holds_alternative<PeerDiscovered>(events[0]));
  EXPECT_EQ(std::get<PeerDiscovered>(events[0]).mac, peer);
  EXPECT_EQ(std::get<PeerDiscovered>(events[0]).ip, ip);
  EXPECT_EQ(node.peers().at(peer).expires_at, 10.0 + 1200.0);

  events = node.on_frame(advert_from(peer, 0x4321, ip), 500.0);
  ASSERT_EQ(events.size(), 1u);
  EXPECT_TRUE(std::holds_alternative<PeerRefreshed>(events[0]));
  EXPECT_EQ(node.peers().at(peer).last_advert, 500.0);
  EXPECT_EQ(node.peers().at(peer).expires_at, 1700.0);
}

TEST(HiddenNodeTest, IgnoresOwnAdvertisementsAndReplies) {
  HiddenNode node(config_for(1));
  EXPECT_TRUE(node.on_frame(node.self_advertise(), 1.0).empty());

  const auto peer = MacAddress::parse("02:00:0A:07:00:09");
  const auto ad = encode_advertisement(peer, 77);
  const auto reply = build_frame(node.config().mac, peer, ethertype::kArp,
                                 build_arp_reply(peer, Ipv4Address({10, 7, 1, 19}), node.config().mac,
                                                 node.config().ip)
                                     .serialize(),
                                 GivenFill{Bytes(ad.begin(), ad.end())});
  EXPECT_TRUE(node.on_frame(reply, 2.0).empty());
  EXPECT_TRUE(node.peers().empty());
}

TEST(HiddenNodeTest, RejectsEtherleakArpPadding) {
  HiddenNode node(config_for(1));
  std::mt19937_64 rng(31);
  for (int i = 0; i < 20000; ++i) {
    const auto mac = oracle::random_mac(rng);
    const auto frame = build_frame(MacAddress::broadcast(), mac, ethertype::kArp,
                                   build_arp_request(mac, Ipv4Address::from_uint(rng()),
                                                     Ipv4Address::from_uint(rng()))
                                       .serialize(),
                                   GivenFill{oracle::random_bytes(rng, 18)});
    ASSERT_TRUE(node.on_frame(frame, 1.0).empty());
  }
  EXPECT_TRUE(node.peers().empty());
}

TEST(HiddenNodeTest, IgnoresTcpFromUnknownMac) {
  HiddenNode node(config_for(1));
  const auto stranger = MacAddress::parse("02:00:0A:07:00:33");
  const auto ack = build_tcp_ack({Ipv4Address({10, 7, 1, 43}), node.config().ip, 50000, 80}, 1, 2, 100);
  const auto frame = build_frame(node.config().mac, stranger, ethertype::kIpv4, ack.serialize(),
                                 GivenFill{Bytes{0x00, 0x03, 'a', 'b', 'c', 0x00}});
  EXPECT_TRUE(node.on_frame(frame, 1.0).empty());
}

TEST(HiddenNodeTest, HostileInputNeverThrows) {
  HiddenNode node(config_for(1));
  const auto peer = MacAddress::parse("02:00:0A:07:00:09");
  node.on_frame(advert_from(peer, 5, Ipv4Address({10, 7, 1, 19})), 0.0);
  std::mt19937_64 rng(77);
  for (int i = 0; i < 20000; ++i) {
    Bytes wire = oracle::random_bytes(rng, 60 + rng() % 80);
    std::copy(peer.octets().begin(), peer.octets().end(), wire.begin() + 6);
    wire[12] = 0x08;
    wire[13] = (i % 2) ? 0x06 : 0x00;
    if (i % 4 == 0) {
      wire[14] = 0x45;
      wire[16] = 0;
      wire[17] = static_cast<std::uint8_t>(20 + rng() % 40);
    }
    EthernetFrame frame;
    try {
      frame = parse_frame(wire);
    } catch (const Error&) {
      continue;
    }
    ASSERT_NO_THROW(node.on_frame(frame, 1.0));
  }
}

TEST(HiddenNodeTest, SendSecretErrors) {
  HiddenNode node(config_for(1));
  const auto peer = MacAddress::parse("02:00:0A:07:00:09");
  EXPECT_EQ(error_of([&] { node.send_secret(peer, Bytes{1}); }), ErrorCode::UnknownPeer);
  node.on_frame(advert_from(peer, 5, Ipv4Address({10, 7, 1, 19})), 0.0);
  EXPECT_EQ(error_of([&] { node.send_secret(peer, Bytes(kMaxMessageLen + 1)); }), ErrorCode::MessageTooLong);

  node.tick(1200.0);
  EXPECT_TRUE(node.peers().contains(peer));  // expires only once now > expires_at
  node.tick(1200.5);
  EXPECT_FALSE(node.peers().contains(peer));
  EXPECT_EQ(error_of([&] { node.send_secret(peer, Bytes{1}); }), ErrorCode::UnknownPeer);
}

TEST(HiddenNodeTest, TwelveByteMessageLeavesAsThreeRateLimitedAcks) {
  HiddenNode node(config_for(1));
  const auto peer = MacAddress::parse("02:00:0A:07:00:09");
  node.tick(0.0);
  node.on_frame(advert_from(peer, 5, Ipv4Address({10, 7, 1, 19})), 0.0);
  node.send_secret(peer, Bytes(12, 'z'));
  EXPECT_EQ(node.pending_chunks(peer), 3u);

  std::vector<double> times;
  std::vector<EthernetFrame> acks;
  while (node.pending_chunks() > 0) {
    const double t = *node.next_wakeup();
    for (auto& f : node.tick(t)) {
      times.push_back(t);
      acks.push_back(std::move(f));
    }
  }
  ASSERT_EQ(acks.size(), 3u);
  for (const auto& f : acks) {
    EXPECT_EQ(serialize_frame(f).size(), 60u);
    EXPECT_EQ(f.padding().size(), 6u);
    EXPECT_EQ(f.dst(), peer);
    const auto seg = Ipv4TcpSegment::parse(f.payload());
    EXPECT_EQ(seg.flags, tcpflag::kAck);
    EXPECT_EQ(seg.endpoints.dst_port, 80);
    EXPECT_TRUE(seg.checksums_valid());
  }
  EXPECT_EQ(classify_padding(acks[0]), PaddingClass::ImproperPadding);
  EXPECT_GE(times[2] - times[0], 2 / 0.5625 - 1e-9);
  // Acknowledgment numbers advance by one segment per ACK.
  EXPECT_EQ(Ipv4TcpSegment::parse(acks[1].payload()).ack - Ipv4TcpSegment::parse(acks[0].payload()).ack, 1460u);
}

TEST(HiddenNodeTest, EmptyOutboxNoTimersDue) {
  HiddenNode node(config_for(1));
  node.tick(0.0);
  EXPECT_TRUE(node.tick(1.0).empty());
  EXPECT_EQ(*node.next_wakeup(), 600.0);
}

TEST(HiddenNodeTest, OvertDataSegmentMirrorsAck) {
  const auto ack = build_tcp_ack({Ipv4Address({10, 7, 1, 11}), Ipv4Address({10, 7, 1, 12}), 50000, 80}, 100,
                                 5000, 65535);
  const auto a = MacAddress::parse("02:00:00:00:00:01");
  const auto b = MacAddress::parse("02:00:00:00:00:02");
  const auto data = make_overt_data_segment(build_frame(b, a, ethertype::kIpv4, ack.serialize()));
  EXPECT_EQ(data.src(), b);
  EXPECT_EQ(data.dst(), a);
  EXPECT_TRUE(data.padding().empty());
  const auto seg = Ipv4TcpSegment::parse(data.payload());
  EXPECT_EQ(seg.tcp_payload.size(), 1460u);
  EXPECT_EQ(seg.seq + 1460, 5000u);
  EXPECT_EQ(seg.endpoints, ack.endpoints.reversed());
  EXPECT_TRUE(seg.checksums_valid());
}

TEST(TwoNodeTest, DiscoverWithinOneAdvertInterval) {
  Wire wire({config_for(1), config_for(2)});
  wire.run_until(600.0);
  EXPECT_TRUE(wire.nodes[0].peers().contains(wire.nodes[1].config().mac));
  EXPECT_TRUE(wire.nodes[1].peers().contains(wire.nodes[0].config().mac));
}

TEST(TwoNodeTest, MessagesUpTo4KiBArriveBitExact) {
  Wire wire({config_for(1), config_for(2)});
  wire.run_until(1.0);
  std::mt19937_64 rng(12);
  std::vector<Bytes> sent_ab, sent_ba;
  for (std::size_t len : {0u, 1u, 4u, 5u, 100u, 1024u, 4096u}) {
    sent_ab.push_back(oracle::random_bytes(rng, len));
    sent_ba.push_back(oracle::random_bytes(rng, len / 2));
    wire.nodes[0].send_secret(wire.nodes[1].config().mac, sent_ab.back());
    wire.nodes[1].send_secret(wire.nodes[0].config().mac, sent_ba.back());
  }
  // Zero runs inside a message produce all-zero chunks that must still count.
  sent_ab.push_back(Bytes(40, 0));
  wire.nodes[0].send_secret(wire.nodes[1].config().mac, sent_ab.back());

  // About 1000 chunks each way at 0.5625 chunk/s; peers refresh every 600 s.
  wire.run_until(3 * 3600.0);
  EXPECT_EQ(wire.nodes[0].pending_chunks(), 0u);
  EXPECT_EQ(wire.received(1), sent_ab);
  EXPECT_EQ(wire.received(0), sent_ba);
  EXPECT_TRUE(wire.nodes[0].close().empty());
  EXPECT_TRUE(wire.nodes[1].close().empty());
}

TEST(TwoNodeTest, RateComplianceOverAnHour) {
  Wire wire({config_for(1), config_for(2)});
  wire.run_until(1.0);
  wire.nodes[0].send_secret(wire.nodes[1].config().mac, Bytes(kMaxMessageLen, 0x41));
  wire.run_until(7200.0);
  const auto sender = wire.nodes[0].config().mac;
  const double limit = wire.nodes[0].config().steg_rate_limit;
  std::vector<double> improper;
  for (const auto& [t, f] : wire.sent) {
    if (f.src() == sender && classify_padding(f) == PaddingClass::ImproperPadding) improper.push_back(t);
  }
  ASSERT_GT(improper.size(), 3000u);
  // Slide a one-hour window across the run.
  for (double start = 0; start + 3600 <= 7200; start += 300) {
    const auto n = std::count_if(improper.begin(), improper.end(),
                                 [&](double t) { return t >= start && t < start + 3600; });
    EXPECT_LE(static_cast<double>(n) / 3600.0, limit * 1.05) << start;
  }
}

TEST(TwoNodeTest, PeerTableGrowsOnlyOnAdvertsShrinksOnlyOnExpiry) {
  Wire wire({config_for(1), config_for(2), config_for(3)});
  std::size_t previous = 0;
  for (double t = 10; t <= 1800; t += 10) {
    wire.run_until(t);
    const auto size = wire.nodes[0].peers().size();
    EXPECT_GE(size, previous);
    previous = size;
  }
  EXPECT_EQ(previous, 2u);

  // Silence the others: node 0 alone keeps ticking and its peers expire.
  HiddenNode& lone = wire.nodes[0];
  const double last = std::max(lone.peers().begin()->second.expires_at, std::next(lone.peers().begin())->second.expires_at);
  lone.tick(last + 1);
  EXPECT_TRUE(lone.peers().empty());
}

TEST(TwoNodeTest, CloseReportsTruncatedStream) {
  Wire wire({config_for(1), config_for(2)});
  wire.run_until(1.0);
  wire.nodes[0].send_secret(wire.nodes[1].config().mac, Bytes(100, 7));
  wire.run_until(10.0);  // only a few chunks have left by now
  EXPECT_TRUE(wire.received(1).empty());
  const auto incomplete = wire.nodes[1].close();
  ASSERT_EQ(incomplete.size(), 1u);
  EXPECT_EQ(incomplete[0], wire.nodes[0].config().mac);
}

}  // namespace
}  // namespace padsteg
