#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include "qsk/dns/authority.hpp"
#include "qsk/dns/resolver.hpp"
#include "qsk/endpoint/client.hpp"
#include "qsk/endpoint/scenario.hpp"
#include "qsk/endpoint/server.hpp"
#include "qsk/endpoint/timing.hpp"
#include "qsk/netsim/network.hpp"
#include "qsk/proxy/daemon.hpp"

using namespace qsk;
using namespace qsk::endpoint;

namespace {

// Reference topology with every actor running; clients are created by tests.
struct World {
  netsim::Network net;
  dns::AuthoritativeResponder authority;
  dns::ForwardingResolver resolver;
  DemoServer server;
  proxy::ProxyDaemon daemon;

  explicit World(bool retry, netsim::TopologySpec spec = reference_topology())
      : net(spec),
        authority(net.host("dns"), kAuthorityPort,
                  dns::Zone::parse("www.example.test A 60 " + net.host("server").host_ip().to_string())),
        resolver(net.host("dns"), kResolverPort, {net.host("dns").host_ip(), kAuthorityPort}, true, 11),
        server(net.host("server"), kServerPort,
               {quic::ServerSecret::generate(quic::seeded_random(12)), {retry}, quic::seeded_random(13), true}),
        daemon(net.host("proxy"), daemon_config(net)) {}

  static proxy::DaemonConfig daemon_config(netsim::Network& net) {
    proxy::DaemonConfig dc;
    dc.upstream_dns = {net.host("dns").host_ip(), kResolverPort};
    dc.dns.seed = 14;
    return dc;
  }

  ConnectConfig config(Mode mode, std::uint64_t seed) {
    ConnectConfig cc;
    cc.target_name = "www.example.test";
    cc.mode = mode;
    cc.resolver = {net.host("dns").host_ip(), kResolverPort};
    cc.dns.seed = seed * 3 + 1;
    cc.random = quic::seeded_random(seed * 3 + 2);
    if (mode != Mode::Default) cc.proxy = SocketAddress{net.host("proxy").host_ip(), kControlPort};
    return cc;
  }

  Driver driver() {
    return [this](const std::function<bool()>& pred, double timeout) {
      net.run_until(pred, net.now_ms() + timeout);
      return pred();
    };
  }
};

}  // namespace

TEST(EndpointConfig, ModeParsing) {
  EXPECT_EQ(parse_mode("default"), Mode::Default);
  EXPECT_EQ(parse_mode("cold"), Mode::Cold);
  EXPECT_EQ(parse_mode("warm"), Mode::Warm);
  EXPECT_FALSE(parse_mode("hot"));
  EXPECT_EQ(to_string(Mode::Warm), "warm");
}

TEST(EndpointConfig, ProxyRequiredForProxiedModes) {
  ConnectConfig cc;
  cc.target_name = "x.test";
  EXPECT_NO_THROW(cc.validate());
  cc.mode = Mode::Warm;
  EXPECT_THROW(cc.validate(), std::invalid_argument);
  cc.proxy = SocketAddress::parse("10.0.0.3:1080");
  EXPECT_NO_THROW(cc.validate());
}

TEST(EndpointTiming, RecordJson) {
  TimingRecord r;
  r.mode = Mode::Cold;
  r.ok = true;
  r.t_connect_ms = 12.5;
  auto j = nlohmann::json::parse(r.to_json());
  EXPECT_EQ(j["mode"], "cold");
  EXPECT_EQ(j["t_connect_ms"], 12.5);
  EXPECT_TRUE(j["t_migrate_ms"].is_null());
  EXPECT_FALSE(j.contains("error"));
}

TEST(EndpointTiming, SummaryMinMedian) {
  std::vector<TimingRecord> recs(5);
  const double t[] = {9, 3, 7, 1, 5};
  for (int i = 0; i < 5; ++i) {
    recs[static_cast<std::size_t>(i)].ok = true;
    recs[static_cast<std::size_t>(i)].t_connect_ms = t[i];
  }
  recs[1].ok = false;
  auto s = summarize(Mode::Warm, recs);
  EXPECT_EQ(s.runs, 5u);
  EXPECT_EQ(s.failures, 1u);
  EXPECT_DOUBLE_EQ(s.min_ms, 1);
  EXPECT_DOUBLE_EQ(s.median_ms, 6);  // of {1,5,7,9}
  auto j = nlohmann::json::parse(s.to_json());
  EXPECT_EQ(j["summary"], true);
}

TEST(EndpointTiming, SingleRepetitionMinEqualsMedian) {
  World w(false);
  auto res = run_timing_suite(w.net.host("client"), w.driver(), w.config(Mode::Warm, 1), 1);
  ASSERT_EQ(res.records.size(), 1u);
  ASSERT_TRUE(res.records[0].ok);
  EXPECT_EQ(res.summary.min_ms, res.summary.median_ms);
  EXPECT_DOUBLE_EQ(res.summary.min_ms, 60.0);
}

TEST(EndpointTiming, ColdExceedsWarmBySetup) {
  World w(false);
  auto warm = run_timing_suite(w.net.host("client"), w.driver(), w.config(Mode::Warm, 2), 5);
  auto cold = run_timing_suite(w.net.host("client"), w.driver(), w.config(Mode::Cold, 3), 5);
  auto dflt = run_timing_suite(w.net.host("client"), w.driver(), w.config(Mode::Default, 4), 5);
  EXPECT_EQ(warm.summary.failures + cold.summary.failures + dflt.summary.failures, 0u);
  EXPECT_GT(cold.summary.median_ms, warm.summary.median_ms);
  EXPECT_DOUBLE_EQ(dflt.summary.median_ms, 90.0);
}

TEST(EndpointServer, RetryOffOneRoundTripAfterInitial) {
  ScenarioOptions o;
  o.mode = Mode::Default;
  o.settle_ms = 0;
  auto r = run_scenario(o);
  ASSERT_TRUE(r.record.ok);
  ASSERT_GE(r.server_steps.size(), 1u);
  EXPECT_EQ(r.server_steps[0].tag, "INITIAL[CLIENTHELLO]");
  // INITIAL at server +30, reply back at client +30: one direct RTT.
  EXPECT_DOUBLE_EQ(r.record.t_connect_ms, 30.0 + 60.0);
  EXPECT_EQ(r.server_stats.retries_sent, 0u);
}

TEST(EndpointServer, HundredConcurrentClientsOneRetryEach) {
  World w(true);
  auto& client = w.net.host("client");
  std::vector<std::unique_ptr<ClientSession>> sessions;
  for (std::uint64_t i = 0; i < 100; ++i) {
    sessions.push_back(std::make_unique<ClientSession>(client, w.config(Mode::Cold, 100 + i)));
    sessions.back()->start();
  }
  w.net.run_until(
      [&] {
        return std::all_of(sessions.begin(), sessions.end(), [](auto& s) { return s->finished(); });
      },
      30000);
  w.net.run_until([] { return false; }, w.net.now_ms() + 1000);
  std::size_t ok = 0, client_saw_retry = 0;
  for (auto& s : sessions) {
    ok += s->record().ok;
    client_saw_retry += s->record().retry_occurred;
  }
  EXPECT_EQ(ok, 100u);
  EXPECT_EQ(client_saw_retry, 0u);
  EXPECT_EQ(w.server.endpoint().stats().retries_sent, 100u);
  EXPECT_EQ(w.server.endpoint().stats().handshakes_completed, 100u);
  EXPECT_EQ(w.daemon.core().metrics().snapshot().retries_replayed, 100u);
}

TEST(EndpointClient, DirectRetryVisibleToClient) {
  World w(true);
  ClientSession s(w.net.host("client"), w.config(Mode::Default, 5));
  s.start();
  w.net.run_until([&] { return s.finished(); }, 20000);
  ASSERT_TRUE(s.record().ok);
  EXPECT_TRUE(s.record().retry_occurred);
  EXPECT_DOUBLE_EQ(s.record().t_connect_ms, 150.0);
}

TEST(EndpointClient, NxdomainThroughProxyFails) {
  World w(false);
  auto cc = w.config(Mode::Cold, 6);
  cc.target_name = "missing.example.test";
  ClientSession s(w.net.host("client"), cc);
  s.start();
  w.net.run_until([&] { return s.finished(); }, 20000);
  ASSERT_TRUE(s.finished());
  EXPECT_FALSE(s.record().ok);
  EXPECT_NE(s.record().error.find("nxdomain"), std::string::npos);
}

TEST(EndpointClient, AssociationFailure) {
  World w(false);
  auto cc = w.config(Mode::Cold, 7);
  cc.proxy = SocketAddress{w.net.host("proxy").host_ip(), 9};
  ClientSession s(w.net.host("client"), cc);
  s.start();
  w.net.run_until([&] { return s.finished(); }, 20000);
  EXPECT_TRUE(s.finished());
  EXPECT_FALSE(s.record().ok);
  EXPECT_FALSE(s.record().error.empty());
}

TEST(EndpointClient, HandshakeTimeoutWhenServerSilent) {
  auto spec = reference_topology();
  World w(false, spec);
  auto cc = w.config(Mode::Default, 8);
  cc.target_port = 4999;
  ClientSession s(w.net.host("client"), cc);
  s.start();
  w.net.run_until([&] { return s.finished(); }, 30000);
  ASSERT_TRUE(s.finished());
  EXPECT_FALSE(s.record().ok);
  EXPECT_NE(s.record().error.find("handshake-timeout"), std::string::npos);
}

TEST(EndpointMigration, AppDataAfterMigrationTravelsDirect) {
  ScenarioOptions o;
  o.mode = Mode::Warm;
  o.migrate = true;
  o.app_messages = 5;
  auto r = run_scenario(o);
  ASSERT_TRUE(r.record.ok);
  ASSERT_TRUE(r.record.migrated);
  const double t_migrate = r.session_start_ms + *r.record.t_migrate_ms;
  std::size_t appdata = 0;
  for (const auto& e : r.trace.events()) {
    if (e.kind != netsim::TraceKind::Send || e.time_ms < t_migrate) continue;
    if (e.tag.find("APPDATA") == std::string::npos) continue;
    ++appdata;
    EXPECT_TRUE(e.tag.rfind("socks(", 0) != 0) << e.tag;
    const bool client_to_server = e.src == r.client_direct && e.dst == r.server;
    const bool server_to_client = e.src == r.server && e.dst == r.client_direct;
    EXPECT_TRUE(client_to_server || server_to_client) << e.src.to_string() << " -> " << e.dst.to_string();
  }
  EXPECT_EQ(appdata, 10u);
  EXPECT_EQ(r.echoes_received, 5u);
}

TEST(EndpointMigration, EarlyProbeWithinOneDirectRtt) {
  ScenarioOptions o;
  o.mode = Mode::Warm;
  o.migrate = true;
  o.probe_early = true;
  auto r = run_scenario(o);
  ASSERT_TRUE(r.record.migrated);
  EXPECT_LE(*r.record.t_migrate_ms - r.record.t_connect_ms, 60.0);
}

TEST(EndpointMigration, OnFirstResponseStillMigrates) {
  ScenarioOptions o;
  o.mode = Mode::Warm;
  o.migrate = true;
  o.notify = proxy::NotifyMode::OnFirstResponse;
  auto r = run_scenario(o);
  ASSERT_TRUE(r.record.ok);
  EXPECT_TRUE(r.record.migrated);
  EXPECT_DOUBLE_EQ(r.record.t_connect_ms, 60.0);
}

TEST(EndpointMigration, BlockedDirectPathSoftFails) {
  auto spec = reference_topology();
  std::erase_if(spec.links, [](const netsim::LinkProfile& l) {
    return (l.a == "client" && l.b == "server") || (l.a == "server" && l.b == "client");
  });
  ScenarioOptions o;
  o.mode = Mode::Warm;
  o.migrate = true;
  o.topology = spec;
  o.app_messages = 3;
  auto r = run_scenario(o);
  ASSERT_TRUE(r.finished);
  EXPECT_TRUE(r.record.ok);
  EXPECT_FALSE(r.record.migrated);
  EXPECT_EQ(r.echoes_received, 3u);
}
