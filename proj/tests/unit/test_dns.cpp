#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "generators.hpp"
#include "qsk/dns/authority.hpp"
#include "qsk/dns/message.hpp"
#include "qsk/dns/resolver.hpp"
#include "qsk/dns/zone.hpp"
#include "qsk/netsim/network.hpp"

using namespace qsk;
using namespace qsk::dns;

namespace {

IpAddress ip(const char* s) { return *IpAddress::parse(s); }

constexpr const char* kZone = R"(
# fixture zone
www.example.test   A    120  10.0.0.5
www.example.test   AAAA 120  fd00::5
v4only.example.test A   999  10.0.0.7
*.probe.test       A    1    10.0.0.9
)";

// client -- resolver -- authority, 10 ms each way.
netsim::TopologySpec topo() {
  return netsim::TopologySpec::parse(R"(
host client 10.0.0.2
host resolver 10.0.0.4
host authority 10.0.0.6
link client resolver 10 10
link resolver authority 10 10
seed 1
)");
}

struct DnsWorld {
  netsim::Network net{topo()};
  AuthoritativeResponder authority{net.host("authority"), 5353, Zone::parse(kZone)};
  ForwardingResolver resolver{net.host("resolver"), 53, {ip("10.0.0.6"), 5353}, true, 3};

  StubResolver stub(StubOptions o = {}) {
    o.seed = o.seed ? o.seed : 5;
    return StubResolver(net.host("client"), {ip("10.0.0.4"), 53}, o);
  }
};

ResolveResult run_resolve(DnsWorld& w, StubResolver& stub, const std::string& name, RecordType t = RecordType::A) {
  std::optional<ResolveResult> got;
  stub.resolve(name, t, [&](const ResolveResult& r) { got = r; });
  w.net.run_until([&] { return got.has_value(); }, w.net.now_ms() + 60000);
  EXPECT_TRUE(got);
  return got.value_or(ResolveResult{});
}

std::string field_of(const Bytes& b) {
  try {
    decode(b);
  } catch (const DecodeError& e) {
    return e.field();
  }
  return "";
}

}  // namespace

// ---------------------------------------------------------------- codec

TEST(DnsCodec, QueryBytesByHand) {
  auto q = make_query(0xBEEF, "www.Example.com", RecordType::A, true);
  const Bytes expected = from_hex(
      "BEEF" "0100" "0001" "0000" "0000" "0000"
      "03777777" "074578616D706C65" "03636F6D" "00"
      "0001" "0001");
  EXPECT_EQ(encode(q), expected);
  EXPECT_EQ(decode(expected), q);
}

TEST(DnsCodec, CompressedAnswerDecoded) {
  const Bytes wire = from_hex(
      "1234" "8580" "0001" "0001" "0000" "0000"
      "076578616D706C65" "047465737400" "0001" "0001"
      "C00C" "0001" "0001" "0000003C" "0004" "0A000005");
  auto m = decode(wire);
  EXPECT_TRUE(m.response);
  EXPECT_TRUE(m.authoritative);
  EXPECT_TRUE(m.recursion_desired);
  EXPECT_TRUE(m.recursion_available);
  ASSERT_EQ(m.answers.size(), 1u);
  EXPECT_EQ(m.answers[0].name, "example.test");
  EXPECT_EQ(m.answers[0].ttl, 60u);
  EXPECT_EQ(m.answers[0].address, ip("10.0.0.5"));
  // Re-encoding expands the pointer.
  EXPECT_GT(encode(m).size(), wire.size());
}

TEST(DnsCodec, PointerLoopsRejected) {
  // Answer name points at itself.
  const Bytes self = from_hex(
      "1234" "8180" "0001" "0001" "0000" "0000"
      "016100" "0001" "0001"
      "C013" "0001" "0001" "00000001" "0004" "01020304");
  EXPECT_THROW(decode(self), DecodeError);
  // Forward pointer.
  const Bytes forward = from_hex("1234" "0100" "0001" "0000" "0000" "0000" "C00E" "0001" "0001" "0161" "00");
  EXPECT_THROW(decode(forward), DecodeError);
}

TEST(DnsCodec, OtherRecordTypesSkipped) {
  const Bytes wire = from_hex(
      "0001" "8180" "0001" "0002" "0000" "0000"
      "016100" "0001" "0001"
      "C00C" "0005" "0001" "00000010" "0003" "016200"
      "C00C" "0001" "0001" "00000010" "0004" "01020304");
  auto m = decode(wire);
  ASSERT_EQ(m.answers.size(), 1u);
  EXPECT_EQ(m.answers[0].address, ip("1.2.3.4"));
}

TEST(DnsCodec, Limits) {
  EXPECT_NO_THROW(normalize_name(std::string(63, 'a')));
  EXPECT_THROW(normalize_name(std::string(64, 'a')), EncodeError);
  std::string long_name;
  for (int i = 0; i < 5; ++i) long_name += std::string(60, 'a') + ".";
  EXPECT_THROW(normalize_name(long_name), EncodeError);
  EXPECT_THROW(normalize_name("a..b"), EncodeError);
  EXPECT_EQ(normalize_name("Example.Test."), "Example.Test");
  EXPECT_TRUE(names_equal("WWW.example.TEST", "www.EXAMPLE.test"));
}

TEST(DnsCodec, HeaderErrors) {
  EXPECT_FALSE(field_of(from_hex("1234")).empty());
  // two questions
  EXPECT_FALSE(field_of(from_hex("1234" "0100" "0002" "0000" "0000" "0000" "016100" "0001" "0001")).empty());
  // truncated bit
  EXPECT_FALSE(field_of(from_hex("1234" "0300" "0001" "0000" "0000" "0000" "016100" "0001" "0001")).empty());
  // question type MX
  EXPECT_FALSE(field_of(from_hex("1234" "0100" "0001" "0000" "0000" "0000" "016100" "000F" "0001")).empty());
}

TEST(DnsCodec, RoundTripProperty) {
  gen::Rng rng(61);
  for (int i = 0; i < 10000; ++i) {
    auto m = gen::dns_message(rng);
    ASSERT_EQ(decode(encode(m)), m);
  }
}

TEST(DnsCodec, FuzzNeverCrashes) {
  gen::Rng rng(62);
  std::size_t rejected = 0;
  for (int i = 0; i < 100000; ++i) {
    auto wire = gen::mutate(rng, encode(gen::dns_message(rng)));
    try {
      decode(wire);
    } catch (const DecodeError&) {
      ++rejected;
    }
  }
  EXPECT_GT(rejected, 0u);
}

// ---------------------------------------------------------------- zone

TEST(DnsZone, LookupOutcomes) {
  auto z = Zone::parse(kZone);
  EXPECT_EQ(z.size(), 4u);
  auto a = z.lookup("WWW.example.test", RecordType::A);
  EXPECT_EQ(a.outcome, Zone::Outcome::Found);
  ASSERT_EQ(a.answers.size(), 1u);
  EXPECT_EQ(a.answers[0].address, ip("10.0.0.5"));
  EXPECT_EQ(z.lookup("v4only.example.test", RecordType::AAAA).outcome, Zone::Outcome::NoData);
  EXPECT_EQ(z.lookup("nope.example.test", RecordType::A).outcome, Zone::Outcome::NxDomain);
  auto w = z.lookup("abc123.probe.test", RecordType::A);
  EXPECT_EQ(w.outcome, Zone::Outcome::Found);
  EXPECT_EQ(w.answers.at(0).name, "abc123.probe.test");
  EXPECT_EQ(z.lookup("probe.test", RecordType::A).outcome, Zone::Outcome::NxDomain);
}

TEST(DnsZone, ParseErrors) {
  EXPECT_ANY_THROW(Zone::parse("www.x A 10"));
  EXPECT_ANY_THROW(Zone::parse("www.x MX 10 1.2.3.4"));
  EXPECT_ANY_THROW(Zone::parse("www.x A 10 fd00::1"));
  EXPECT_ANY_THROW(Zone::parse("www.x A ten 1.2.3.4"));
}

TEST(DnsResolver, ClampTtl) {
  EXPECT_EQ(clamp_ttl(0), 1u);
  EXPECT_EQ(clamp_ttl(1), 1u);
  EXPECT_EQ(clamp_ttl(120), 120u);
  EXPECT_EQ(clamp_ttl(300), 300u);
  EXPECT_EQ(clamp_ttl(86400), 300u);
}

// ---------------------------------------------------------------- resolver over netsim

TEST(DnsResolver, FixtureAddress) {
  DnsWorld w;
  auto stub = w.stub();
  auto r = run_resolve(w, stub, "www.example.test");
  EXPECT_EQ(r.status, ResolveStatus::Ok);
  ASSERT_EQ(r.addresses.size(), 1u);
  EXPECT_EQ(r.addresses[0], ip("10.0.0.5"));
  EXPECT_EQ(r.min_ttl, 120u);
  EXPECT_DOUBLE_EQ(r.elapsed_ms, 40.0);
  auto r6 = run_resolve(w, stub, "www.example.test", RecordType::AAAA);
  EXPECT_EQ(r6.addresses.at(0), ip("fd00::5"));
}

TEST(DnsResolver, TtlClampedAndCached) {
  DnsWorld w;
  auto stub = w.stub();
  auto r = run_resolve(w, stub, "v4only.example.test");
  EXPECT_EQ(r.min_ttl, 300u);
  auto again = run_resolve(w, stub, "V4ONLY.example.test");
  EXPECT_TRUE(again.from_cache);
  EXPECT_EQ(stub.queries_sent(), 1u);
}

TEST(DnsResolver, NonexistentLabelIsNxdomain) {
  DnsWorld w;
  auto stub = w.stub();
  LabelGenerator labels(9);
  auto r = run_resolve(w, stub, labels.next() + ".example.test");
  EXPECT_EQ(r.status, ResolveStatus::NxDomain);
  EXPECT_EQ(to_string(r.status), "nxdomain");
}

TEST(DnsResolver, UnresponsiveUpstreamTimesOut) {
  DnsWorld w;
  StubOptions o;
  o.timeout_ms = 100;
  o.retries = 2;
  o.seed = 7;
  StubResolver stub(w.net.host("client"), {ip("10.0.0.4"), 9999}, o);
  auto r = run_resolve(w, stub, "www.example.test");
  EXPECT_EQ(r.status, ResolveStatus::Timeout);
  EXPECT_EQ(to_string(r.status), "resolution-timeout");
  EXPECT_DOUBLE_EQ(r.elapsed_ms, 300.0);
  EXPECT_EQ(stub.queries_sent(), 3u);
}

TEST(DnsResolver, WrongIdIgnored) {
  DnsWorld w;
  auto& rogue_host = w.net.host("resolver");
  std::optional<SocketId> sock;
  sock = rogue_host.open_udp(5300, [&](const SocketAddress& from, ByteView payload) {
    auto q = decode(payload);
    auto bad = make_response(q, Rcode::NoError, {{q.question.name, RecordType::A, 60, ip("6.6.6.6")}}, true);
    bad.id = static_cast<std::uint16_t>(q.id + 1);
    rogue_host.send_udp(*sock, from, encode(bad));
    auto good = make_response(q, Rcode::NoError, {{q.question.name, RecordType::A, 60, ip("10.0.0.5")}}, true);
    rogue_host.send_udp(*sock, from, encode(good));
  });
  StubOptions o;
  o.seed = 8;
  StubResolver stub(w.net.host("client"), {ip("10.0.0.4"), 5300}, o);
  auto r = run_resolve(w, stub, "www.example.test");
  ASSERT_EQ(r.status, ResolveStatus::Ok);
  EXPECT_EQ(r.addresses.at(0), ip("10.0.0.5"));
}

TEST(DnsResolver, ConcurrentQueriesDistinctIds) {
  DnsWorld w;
  auto stub = w.stub();
  std::set<std::uint16_t> ids;
  auto& rhost = w.net.host("resolver");
  SocketId s = rhost.open_udp(5301, [&](const SocketAddress&, ByteView payload) { ids.insert(decode(payload).id); });
  (void)s;
  StubOptions o;
  o.seed = 4;
  o.retries = 0;
  StubResolver quiet(w.net.host("client"), {ip("10.0.0.4"), 5301}, o);
  int done = 0;
  for (int i = 0; i < 200; ++i)
    quiet.resolve("n" + std::to_string(i) + ".example.test", RecordType::A, [&](const ResolveResult&) { ++done; });
  EXPECT_EQ(quiet.in_flight(), 200u);
  w.net.run_until_quiescent(10000);
  EXPECT_EQ(ids.size(), 200u);
  EXPECT_EQ(done, 200);
}

// ---------------------------------------------------------------- discovery

TEST(DnsDiscovery, ObservesResolverAddress) {
  DnsWorld w;
  auto stub = w.stub();
  LabelGenerator labels(1);
  std::optional<DiscoveryResult> res;
  discover_resolver(w.net.host("client"), stub, labels, "probe.test",
                    [&](const std::string& n) { return w.authority.find(n); }, 5000,
                    [&](DiscoveryResult r) { res = r; });
  w.net.run_until([&] { return res.has_value(); }, 10000);
  ASSERT_TRUE(res && res->observation);
  EXPECT_EQ(res->observation->resolver_address.ip, ip("10.0.0.4"));
  EXPECT_EQ(res->observation->configured_resolver, (SocketAddress{ip("10.0.0.4"), 53}));
  EXPECT_TRUE(res->observation->queried_name.ends_with(".probe.test"));
}

TEST(DnsDiscovery, ConcurrentProbesPairedByName) {
  DnsWorld w;
  auto stub = w.stub();
  LabelGenerator labels(2);
  std::vector<DiscoveryResult> results;
  for (int i = 0; i < 2; ++i)
    discover_resolver(w.net.host("client"), stub, labels, "probe.test",
                      [&](const std::string& n) { return w.authority.find(n); }, 5000,
                      [&](DiscoveryResult r) { results.push_back(r); });
  w.net.run_until_quiescent(10000);
  ASSERT_EQ(results.size(), 2u);
  ASSERT_TRUE(results[0].observation && results[1].observation);
  EXPECT_NE(results[0].observation->queried_name, results[1].observation->queried_name);
  for (auto& r : results) {
    auto logged = w.authority.find(r.observation->queried_name);
    ASSERT_TRUE(logged);
    EXPECT_EQ(logged->source, r.observation->resolver_address);
  }
}

TEST(DnsDiscovery, CacheOnlyTimesOut) {
  DnsWorld w;
  StubOptions o;
  o.cache_only = true;
  auto stub = w.stub(o);
  LabelGenerator labels(3);
  std::optional<DiscoveryResult> res;
  discover_resolver(w.net.host("client"), stub, labels, "probe.test",
                    [&](const std::string& n) { return w.authority.find(n); }, 500,
                    [&](DiscoveryResult r) { res = r; });
  w.net.run_until_quiescent(10000);
  ASSERT_TRUE(res);
  EXPECT_FALSE(res->observation);
  ASSERT_TRUE(res->error);
  EXPECT_EQ(*res->error, DiscoveryError::Timeout);
  EXPECT_TRUE(w.authority.queries().empty());
}

TEST(DnsDiscovery, LabelsUniqueAndWellFormed) {
  LabelGenerator labels(4);
  std::set<std::string> seen;
  for (int i = 0; i < 100000; ++i) {
    auto l = labels.next();
    ASSERT_EQ(l.size(), 16u);
    for (char c : l) ASSERT_TRUE((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9'));
    ASSERT_TRUE(seen.insert(l).second);
  }
}

TEST(DnsAuthority, LogLineJson) {
  std::ostringstream log;
  DnsWorld w;
  AuthoritativeResponder logged(w.net.host("authority"), 5400, Zone::parse(kZone), &log);
  StubOptions o;
  o.seed = 6;
  StubResolver stub(w.net.host("resolver"), {ip("10.0.0.6"), 5400}, o);
  run_resolve(w, stub, "www.example.test");
  ASSERT_EQ(logged.queries().size(), 1u);
  EXPECT_EQ(logged.queries()[0].source.ip, ip("10.0.0.4"));
  EXPECT_NE(log.str().find("\"resolver_ip\":\"10.0.0.4\""), std::string::npos);
  EXPECT_NE(log.str().find("\"name\":\"www.example.test\""), std::string::npos);
}
