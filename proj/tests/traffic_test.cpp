#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "padsteg/traffic.hpp"
#include "test_support.hpp"

namespace padsteg {
namespace {

using testing::error_of;

HostProfile host(int i, HostKind kind, double intensity = 1.0) {
  HostProfile h;
  h.mac = MacAddress({0x02, 0, 0, 0, 0, static_cast<std::uint8_t>(i)});
  h.ip = Ipv4Address({10, 0, 0, static_cast<std::uint8_t>(i)});
  h.kind = kind;
  h.traffic_intensity = intensity;
  h.leak_seed = 1000 + static_cast<std::uint64_t>(i);
  return h;
}

TEST(TrafficProfileTest, DefaultsAreNormalizedMeasurements) {
  const auto p = TrafficProfile::defaults();
  EXPECT_NO_THROW(p.validate());
  // Published shares (93.19/4.17/2.31/0.32 and 56.3/43.4/0.2) rescaled by their totals.
  EXPECT_NEAR(p.improper_mix.tcp, 93.19 / 99.99, 1e-12);
  EXPECT_NEAR(p.improper_mix.other, 0.32 / 99.99, 1e-12);
  EXPECT_NEAR(p.arp_mix.request, 56.3 / 99.9, 1e-12);
  EXPECT_NEAR(p.arp_mix.gratuitous, 0.2 / 99.9, 1e-12);
  EXPECT_DOUBLE_EQ(p.padded_fraction, 0.22);
  EXPECT_DOUBLE_EQ(p.improper_fraction, 0.22);
  EXPECT_DOUBLE_EQ(p.vulnerable_host_fraction, 0.15);
  EXPECT_DOUBLE_EQ(p.protocol_mix.http, 0.75);
}

TEST(TrafficProfileTest, ValidationIsStrict) {
  TrafficProfile raw;  // measured shares as published, not yet normalized
  EXPECT_EQ(error_of([&] { raw.validate(); }), ErrorCode::InvalidConfig);

  auto p = TrafficProfile::defaults();
  p.padded_fraction = 1.2;
  EXPECT_EQ(error_of([&] { p.validate(); }), ErrorCode::InvalidConfig);

  p = TrafficProfile::defaults();
  p.arp_mix.reply = -0.1;
  EXPECT_EQ(error_of([&] { p.normalize(); }), ErrorCode::InvalidConfig);

  p = TrafficProfile::defaults();
  p.improper_mix = {0, 0, 0, 0};
  EXPECT_EQ(error_of([&] { p.normalize(); }), ErrorCode::InvalidConfig);
}

TEST(HostKindTest, NamesRoundTrip) {
  for (auto k : {HostKind::Benign, HostKind::Vulnerable, HostKind::Hidden}) {
    EXPECT_EQ(host_kind_from_string(to_string(k)), k);
  }
  EXPECT_EQ(error_of([] { host_kind_from_string("evil"); }), ErrorCode::InvalidConfig);
}

TEST(LeakStreamTest, OnlyVulnerableHostsLeak) {
  EXPECT_EQ(error_of([] { LeakStream::for_host(host(1, HostKind::Benign)); }), ErrorCode::NotVulnerable);
  EXPECT_EQ(error_of([] { LeakStream::for_host(host(1, HostKind::Hidden)); }), ErrorCode::NotVulnerable);
  EXPECT_NO_THROW(LeakStream::for_host(host(1, HostKind::Vulnerable)));
}

TEST(LeakStreamTest, LengthBounds) {
  LeakStream s(1);
  EXPECT_EQ(error_of([&] { s.next(0); }), ErrorCode::BadLength);
  EXPECT_EQ(error_of([&] { s.next(46); }), ErrorCode::BadLength);
  EXPECT_EQ(s.next(1).size(), 1u);
  EXPECT_EQ(leak_padding(s, 45).size(), 45u);
}

TEST(LeakStreamTest, DeterministicAndAdvancing) {
  LeakStream a(42), b(42), c(43);
  for (int i = 0; i < 1000; ++i) {
    const std::size_t n = 1 + static_cast<std::size_t>(i % 45);
    ASSERT_EQ(a.next(n), b.next(n));
  }
  std::size_t differing = 0;
  Bytes previous = a.next(18);
  for (int i = 0; i < 100; ++i) {
    Bytes x = a.next(18);
    differing += x != previous;
    previous = std::move(x);
  }
  EXPECT_GT(differing, 80u);
  EXPECT_NE(LeakStream(42).next(18), c.next(18));
}

TEST(LeakStreamTest, WindowOverlapsWhenStepIsShort) {
  // Stepping 0..n bytes means consecutive reads share bytes most of the time.
  LeakStream s(7);
  int overlapping = 0;
  Bytes prev = s.next(18);
  for (int i = 0; i < 1000; ++i) {
    Bytes cur = s.next(18);
    for (std::size_t shift = 0; shift < 18; ++shift) {
      if (std::equal(prev.begin() + static_cast<std::ptrdiff_t>(shift), prev.end(), cur.begin())) {
        ++overlapping;
        break;
      }
    }
    prev = std::move(cur);
  }
  EXPECT_GT(overlapping, 900);
}

TEST(LeakStreamTest, SixByteReadsAreNeverAllZero) {
  LeakStream s(2024);
  int zero = 0;
  for (int i = 0; i < 1000000; ++i) {
    const Bytes x = s.next(6);
    zero += std::all_of(x.begin(), x.end(), [](auto b) { return b == 0; });
  }
  EXPECT_EQ(zero, 0);
}

TEST(PaddingOddsTest, MatchesTargetFractions) {
  const auto p = TrafficProfile::defaults();
  std::vector<HostProfile> hosts{host(1, HostKind::Vulnerable, 2.0), host(2, HostKind::Benign, 3.0),
                                 host(3, HostKind::Benign, 5.0)};
  const auto odds = padding_odds(p, hosts);
  // Leaky share v = 0.2; improper = v * p_v; padded = v * p_v + (1 - v) * p_b.
  EXPECT_NEAR(0.2 * odds.vulnerable, 0.22 * 0.22, 1e-12);
  EXPECT_NEAR(0.2 * odds.vulnerable + 0.8 * odds.benign, 0.22, 1e-12);

  hosts[0].kind = HostKind::Benign;
  EXPECT_EQ(padding_odds(p, hosts).vulnerable, 0.0);
  EXPECT_NEAR(padding_odds(p, hosts).benign, 0.22, 1e-12);
}

TEST(BackgroundTest, ZeroVulnerableHostsMeansZeroImproper) {
  std::vector<HostProfile> hosts;
  for (int i = 1; i <= 10; ++i) hosts.push_back(host(i, HostKind::Benign, 2.0));
  const auto frames = generate_background(TrafficProfile::defaults(), hosts, 2000.0, 3);
  ASSERT_GT(frames.size(), 30000u);
  for (const auto& f : frames) ASSERT_NE(classify_padding(f.frame), PaddingClass::ImproperPadding);
}

TEST(BackgroundTest, OrderedPoissonArrivalsWithinDuration) {
  std::vector<HostProfile> hosts{host(1, HostKind::Benign, 2.0), host(2, HostKind::Vulnerable, 1.0),
                                 host(3, HostKind::Hidden, 0.5)};
  const double duration = 20000.0;
  const auto frames = generate_background(TrafficProfile::defaults(), hosts, duration, 9);
  std::vector<std::size_t> per_host(3);
  for (std::size_t i = 0; i < frames.size(); ++i) {
    ASSERT_GE(frames[i].time, 0.0);
    ASSERT_LT(frames[i].time, duration);
    if (i) ASSERT_LE(frames[i - 1].time, frames[i].time);
    ++per_host[frames[i].host];
    ASSERT_EQ(frames[i].frame.src(), hosts[frames[i].host].mac);
  }
  for (std::size_t h = 0; h < 3; ++h) {
    const double mean = hosts[h].traffic_intensity * duration;
    EXPECT_NEAR(static_cast<double>(per_host[h]), mean, 5 * std::sqrt(mean)) << h;
  }
}

TEST(BackgroundTest, OnlyVulnerableHostsSendImproperPadding) {
  std::vector<HostProfile> hosts{host(1, HostKind::Benign, 3.0), host(2, HostKind::Vulnerable, 1.0),
                                 host(3, HostKind::Hidden, 3.0)};
  const auto frames = generate_background(TrafficProfile::defaults(), hosts, 5000.0, 10);
  std::size_t improper = 0;
  for (const auto& f : frames) {
    const auto c = classify_padding(f.frame);
    if (hosts[f.host].kind != HostKind::Vulnerable) {
      ASSERT_NE(c, PaddingClass::ImproperPadding);
    } else {
      improper += c == PaddingClass::ImproperPadding;
    }
    ASSERT_LE(f.frame.payload().size(), kMaxPayloadLen);
    ASSERT_EQ(f.frame.padding().size(), padding_length_for(f.frame.payload().size()));
  }
  EXPECT_GT(improper, 0u);
}

TEST(BackgroundTest, PaddedFractionHitsTarget) {
  const auto profile = TrafficProfile::defaults();
  const auto hosts = make_default_lan(40, 0, profile, 5);
  const auto frames = generate_background(profile, hosts, 1800.0, 5);
  ASSERT_GE(frames.size(), 100000u);
  std::size_t padded = 0, improper = 0;
  for (const auto& f : frames) {
    const auto c = classify_padding(f.frame);
    padded += c != PaddingClass::NoPadding;
    improper += c == PaddingClass::ImproperPadding;
  }
  const double n = static_cast<double>(frames.size());
  EXPECT_NEAR(padded / n, 0.22, 0.02);
  EXPECT_NEAR(static_cast<double>(improper) / static_cast<double>(padded), 0.22, 0.02);
}

TEST(BackgroundTest, Deterministic) {
  const auto profile = TrafficProfile::defaults();
  const auto hosts = make_default_lan(10, 1, profile, 1);
  const auto a = generate_background(profile, hosts, 300.0, 77);
  const auto b = generate_background(profile, hosts, 300.0, 77);
  const auto c = generate_background(profile, hosts, 300.0, 78);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    ASSERT_EQ(a[i].time, b[i].time);
    ASSERT_EQ(a[i].frame, b[i].frame);
  }
  EXPECT_FALSE(a.size() == c.size() && std::equal(a.begin(), a.end(), c.begin(), [](auto& x, auto& y) {
                 return x.frame == y.frame;
               }));
}

TEST(DefaultLanTest, Shape) {
  const auto profile = TrafficProfile::defaults();
  const auto hosts = make_default_lan(50, 2, profile, 11);
  ASSERT_EQ(hosts.size(), 50u);
  std::set<MacAddress> macs;
  std::set<Ipv4Address> ips;
  std::size_t vulnerable = 0;
  for (const auto& h : hosts) {
    macs.insert(h.mac);
    ips.insert(h.ip);
    vulnerable += h.kind == HostKind::Vulnerable;
    EXPECT_GE(h.traffic_intensity, 0.5 - 1e-12);
    EXPECT_LE(h.traffic_intensity, 4.0 + 1e-12);
    EXPECT_EQ(h.ip.octets()[0], 10);
    EXPECT_EQ(h.ip.octets()[1], 7);
  }
  EXPECT_EQ(macs.size(), 50u);
  EXPECT_EQ(ips.size(), 50u);
  EXPECT_EQ(vulnerable, 8u);  // round(0.15 * 50)
  EXPECT_EQ(hosts[48].kind, HostKind::Hidden);
  EXPECT_EQ(hosts[49].kind, HostKind::Hidden);
  EXPECT_EQ(error_of([&] { make_default_lan(2, 3, profile, 1); }), ErrorCode::InvalidConfig);
}

}  // namespace
}  // namespace padsteg
