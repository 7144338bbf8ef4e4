#include <doctest.h>

#include <algorithm>
#include <random>
#include <thread>

#include "cgn/census.hpp"
#include "cgn/net.hpp"

using namespace cgn;
using namespace cgn::census;

namespace {

RttSample S(const char* d, const char* v, double rtt, std::int64_t at = 1000) {
  return RttSample(Domain(d), VantageId(v), rtt, at);
}

// Adds a fixed delay in front of every real handshake, the way a longer path
// would, and can pretend chosen names do not resolve.
class DelayedNetwork : public Network {
 public:
  DelayedNetwork(std::chrono::milliseconds delay, std::uint16_t port) : delay_(delay), port_(port) {}

  std::vector<net::SocketAddress> resolve(const std::string& host, std::uint16_t) override {
    if (host == "nowhere.invalid") return {};
    return real_.resolve("127.0.0.1", port_);
  }
  std::optional<double> handshake_ms(const net::SocketAddress& addr, std::chrono::milliseconds timeout) override {
    const auto t0 = std::chrono::steady_clock::now();
    std::this_thread::sleep_for(delay_);
    try {
      net::connect(addr, timeout);
    } catch (const net::NetError&) {
      return std::nullopt;
    }
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  }
  std::int64_t now_unix() override { return ++clock_; }

 private:
  SystemNetwork real_;
  std::chrono::milliseconds delay_;
  std::uint16_t port_;
  std::atomic<std::int64_t> clock_{1'700'000'000};
};

}  // namespace

TEST_CASE("probe config validation") {
  ProbeConfig c;
  CHECK_NOTHROW(c.validate());
  c.timeout_ms = 0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = {};
  c.attempts = 0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
}

TEST_CASE("loopback probing returns one sample per attempt") {
  net::Listener listener({"127.0.0.1", 0});
  SystemNetwork sys;
  ProbeConfig cfg;
  cfg.port = listener.port();
  cfg.attempts = 3;
  // "localhost" resolves through the system resolver to the listener.
  auto samples = probe_domain(Domain("localhost"), VantageId("here"), cfg, sys);
  CHECK(samples.size() == 3);
  for (const auto& s : samples) CHECK(s.rtt_ms < 50.0);
}

TEST_CASE("an injected 100 ms path delay is bracketed by the measurement") {
  net::Listener listener({"127.0.0.1", 0});
  DelayedNetwork netw(std::chrono::milliseconds(100), listener.port());
  ProbeConfig cfg;
  cfg.port = listener.port();
  cfg.attempts = 2;
  for (const auto& s : probe_domain(Domain("slow.test"), VantageId("v"), cfg, netw)) {
    CHECK(s.rtt_ms >= 100.0);
    CHECK(s.rtt_ms <= 150.0);
  }
}

TEST_CASE("unreachable and unresolvable are distinguished") {
  SystemNetwork sys;
  ProbeConfig cfg;
  cfg.attempts = 2;
  cfg.timeout_ms = 200;
  CHECK_THROWS_AS(probe_domain(Domain("192.0.2.1"), VantageId("v"), cfg, sys), UnreachableError);
  DelayedNetwork netw(std::chrono::milliseconds(0), 1);
  CHECK_THROWS_AS(probe_domain(Domain("nowhere.invalid"), VantageId("v"), cfg, netw), UnresolvableError);
}

TEST_CASE("a census run keeps one definitive sample and lists failures separately") {
  net::Listener listener({"127.0.0.1", 0});
  DelayedNetwork netw(std::chrono::milliseconds(0), listener.port());
  ProbeConfig cfg;
  cfg.port = listener.port();
  auto run = run_census({Domain("a.test"), Domain("nowhere.invalid"), Domain("b.test")}, VantageId("v"), cfg, netw, 2);
  CHECK(run.table.size() == 2);
  REQUIRE(run.failures.size() == 1);
  CHECK(run.failures[0].reason == "unresolvable");
}

TEST_CASE("min_rtt picks the smallest sample with ties to the smaller vantage") {
  RttTable t;
  t.add(S("x.test", "a", 20));
  t.add(S("x.test", "b", 5));
  t.add(S("x.test", "c", 9));
  auto m = min_rtt(t, Domain("x.test"));
  CHECK(m.vantage.str() == "b");
  CHECK(m.rtt_ms == 5);
  RttTable single;
  single.add(S("y.test", "a", 42));
  CHECK(min_rtt(single, Domain("y.test")).rtt_ms == 42);
  RttTable tie;
  tie.add(S("z.test", "m", 7));
  tie.add(S("z.test", "k", 7));
  CHECK(min_rtt(tie, Domain("z.test")).vantage.str() == "k");
  CHECK_THROWS_AS(min_rtt(t, Domain("other.test")), MissingDomainError);
}

TEST_CASE("min_rtt matches an exhaustive scan on random tables") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.5, 300.0);
  for (int trial = 0; trial < 50; ++trial) {
    RttTable t;
    std::vector<std::pair<std::string, double>> raw;
    for (int v = 0; v < 14; ++v) {
      const std::string vid = "v" + std::to_string(v);
      const double r = std::round(u(rng));  // rounding creates ties
      t.add(RttSample(Domain("d.test"), VantageId(vid), r, 100));
      raw.emplace_back(vid, r);
    }
    auto best = raw.front();
    for (const auto& p : raw) {
      if (p.second < best.second || (p.second == best.second && p.first < best.first)) best = p;
    }
    auto m = min_rtt(t, Domain("d.test"));
    CHECK(m.vantage.str() == best.first);
    CHECK(m.rtt_ms == best.second);
    for (const auto& p : raw) CHECK(m.rtt_ms <= p.second);
  }
}

TEST_CASE("definitive rtt is the minimum") {
  CHECK(definitive_rtt({S("a.test", "v", 12, 1), S("a.test", "v", 10, 2), S("a.test", "v", 31, 3)}) == 10);
  CHECK(definitive_rtt({S("a.test", "v", 7)}) == 7);
  CHECK_THROWS_AS(definitive_rtt({}), ValidationError);
  // base + nonnegative noise, one sample noiseless
  std::mt19937_64 rng(5);
  std::exponential_distribution<double> noise(0.2);
  std::vector<RttSample> samples;
  for (int i = 0; i < 10; ++i) samples.push_back(S("a.test", "v", 40.0 + (i == 6 ? 0.0 : noise(rng)), 10 + i));
  CHECK(definitive_rtt(samples) == 40.0);
}

TEST_CASE("stability diff") {
  RttTable before, after;
  before.add(S("a.test", "v", 10));
  after.add(S("a.test", "v", 12));
  std::map<Domain, VantageId> pairing{{Domain("a.test"), VantageId("v")}};
  auto r = stability_diff(before, after, pairing);
  REQUIRE(r.changes.size() == 1);
  CHECK(r.changes[0].change_ms == 2);
  CHECK(r.median_ms == 2);
  auto same = stability_diff(before, before, pairing);
  CHECK(same.median_ms == 0);
  pairing.emplace(Domain("gone.test"), VantageId("v"));
  CHECK(stability_diff(before, after, pairing).missing.size() == 1);
  CHECK_THROWS_AS(stability_diff(before, RttTable{}, pairing), ValidationError);
}

TEST_CASE("stability quantiles match a sort-based oracle and are symmetric") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> base(1, 200);
  std::normal_distribution<double> shift(0.0, 4.0);
  RttTable before, after;
  std::map<Domain, VantageId> pairing;
  std::vector<double> expected;
  for (int i = 0; i < 1000; ++i) {
    const std::string d = "d" + std::to_string(i) + ".test";
    const double b = base(rng);
    const double a = std::max(0.0, b + shift(rng));
    before.add(RttSample(Domain(d), VantageId("v"), b, 1));
    after.add(RttSample(Domain(d), VantageId("v"), a, 2));
    pairing.emplace(Domain(d), VantageId("v"));
    expected.push_back(std::fabs(a - b));
  }
  std::sort(expected.begin(), expected.end());
  auto r = stability_diff(before, after, pairing);
  CHECK(r.median_ms == expected[499]);  // rank ceil(0.5*1000) = 500
  CHECK(r.p80_ms == expected[799]);
  CHECK(r.median_ms <= r.p80_ms);
  auto swapped = stability_diff(after, before, pairing);
  for (std::size_t i = 0; i < r.changes.size(); ++i) CHECK(r.changes[i].change_ms == swapped.changes[i].change_ms);
}

TEST_CASE("mean weighted rtt") {
  CHECK(mean_weighted_rtt({{Domain("d.test"), 1000, 25}}) == 25);
  CHECK(mean_weighted_rtt({{Domain("a.test"), 10, 10}, {Domain("b.test"), 10, 30}}) == 20);
  CHECK(mean_weighted_rtt({{Domain("a.test"), 100, 5}, {Domain("b.test"), 300, 45}}) == doctest::Approx(35));
  CHECK_THROWS_AS(mean_weighted_rtt({{Domain("a.test"), 0, 5}}), UndefinedWeightError);
  CHECK_THROWS_AS(mean_weighted_rtt({}), UndefinedWeightError);
}

TEST_CASE("mean weighted rtt is bounded and scale invariant") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> r(1, 300);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<WeightedRtt> e;
    double lo = 1e9, hi = 0;
    const int n = 1 + int(rng() % 20);
    for (int i = 0; i < n; ++i) {
      const auto bytes = rng() % 100000;
      const double rtt = r(rng);
      e.push_back({Domain("d" + std::to_string(i) + ".test"), bytes, rtt});
      if (bytes > 0) {
        lo = std::min(lo, rtt);
        hi = std::max(hi, rtt);
      }
    }
    if (hi == 0) continue;
    const double m = mean_weighted_rtt(e);
    CHECK(m >= lo - 1e-9);
    CHECK(m <= hi + 1e-9);
    auto scaled = e;
    for (auto& x : scaled) x.bytes *= 8;
    CHECK(mean_weighted_rtt(scaled) == doctest::Approx(m).epsilon(1e-12));
  }
}

TEST_CASE("provider shares") {
  OrgTable all_x;
  for (int i = 0; i < 10; ++i) all_x.rows.emplace_back(Domain("d" + std::to_string(i) + ".test"), "X");
  auto s = provider_share(all_x, 5);
  REQUIRE(s.size() == 1);
  CHECK(s[0].fraction == 1.0);

  OrgTable abc;
  for (int i = 0; i < 10; ++i) abc.rows.emplace_back(Domain("d" + std::to_string(i) + ".test"), i < 6 ? "A" : i < 9 ? "B" : "C");
  auto top2 = provider_share(abc, 2);
  REQUIRE(top2.size() == 2);
  CHECK(top2[0].organization == "A");
  CHECK(top2[0].fraction == doctest::Approx(0.6));
  CHECK(top2[1].organization == "B");
  CHECK(top2[1].fraction == doctest::Approx(0.3));
  CHECK_THROWS_AS(provider_share(abc, 0), ValidationError);

  OrgTable amazon;
  amazon.rows = {{Domain("a.test"), "Amazon Technologies Inc."}, {Domain("b.test"), "Amazon.com Inc."},
                 {Domain("c.test"), "Other"}, {Domain("d.test"), ""}};
  amazon.alias_map = {{"Amazon Technologies Inc.", "Amazon.com Inc."}};
  auto merged = provider_share(amazon, 3);
  CHECK(merged[0].organization == "Amazon.com Inc.");
  CHECK(merged[0].fraction == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("provider shares are bounded and non-increasing") {
  std::mt19937_64 rng(8);
  OrgTable t;
  for (int i = 0; i < 500; ++i) t.rows.emplace_back(Domain("d" + std::to_string(i) + ".test"), "org" + std::to_string(rng() % 17));
  auto s = provider_share(t, 17);
  double total = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    CHECK(s[i].fraction >= 0);
    CHECK(s[i].fraction <= 1);
    if (i > 0) CHECK(s[i].fraction <= s[i - 1].fraction);
    total += s[i].fraction;
  }
  CHECK(total <= 1.0 + 1e-12);
}

TEST_CASE("non-idempotent alias maps are rejected") {
  OrgTable t;
  t.rows = {{Domain("a.test"), "A"}};
  t.alias_map = {{"A", "B"}, {"B", "C"}};
  CHECK_THROWS_AS(provider_share(t, 1), ValidationError);
}

TEST_CASE("file formats") {
  auto targets = parse_targets("# comment\nExample.com\n\n  b.test  \n");
  REQUIRE(targets.size() == 2);
  CHECK(targets[0].str() == "example.com");

  RttTable t;
  t.add(S("b.test", "v1", 1.23456, 5));
  t.add(S("a.test", "v2", 10, 6));
  const auto csv = format_rtt_csv(t);
  CHECK(csv == "domain,vantage,rtt_ms,measured_at\na.test,v2,10.000,6\nb.test,v1,1.235,5\n");
  CHECK(format_rtt_csv(parse_rtt_csv(csv)) == csv);
  CHECK_THROWS_AS(parse_rtt_csv("domain,vantage,rtt_ms,measured_at\na.test,v,-1,5\n"), ValidationError);
  CHECK_THROWS_AS(parse_rtt_csv("domain,rtt_ms\n"), ValidationError);

  auto geo = parse_geo_csv("domain,lat,lon\na.test,40.04,-74.01\nb.test,39.96,-73.99\n");
  RttTable g;
  g.add(S("a.test", "v", 10));
  g.add(S("b.test", "v", 20));
  auto agg = location_aggregates(g, geo);
  REQUIRE(agg.size() == 1);
  CHECK(agg[0].domain_count == 2);
  CHECK(agg[0].mean_rtt_ms == 15);
  CHECK(format_location_csv(agg) == "lat,lon,domain_count,mean_rtt_ms\n40.0,-74.0,2,15.000\n");
}
