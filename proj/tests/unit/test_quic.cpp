#include <gtest/gtest.h>

#include <algorithm>

#include "generators.hpp"
#include "qsk/quic/connection.hpp"
#include "qsk/quic/crypto.hpp"
#include "qsk/quic/handshake.hpp"
#include "qsk/quic/rtt.hpp"
#include "qsk/quic/server.hpp"
#include "qsk/quic/token.hpp"
#include "sha256_oracle.hpp"

using namespace qsk;
using namespace qsk::quic;

namespace {

std::vector<std::uint8_t> vec(ByteView b) { return {b.begin(), b.end()}; }
std::vector<std::uint8_t> vec(std::string_view s) { return {s.begin(), s.end()}; }

SocketAddress addr(const char* s) { return *SocketAddress::parse(s); }

Bytes oracle_token_mac_input(const SocketAddress& a, std::uint64_t t) {
  Bytes in(10, 0x00);
  if (a.ip.is_v4()) {
    in.push_back(0xFF);
    in.push_back(0xFF);
  } else {
    in.clear();
  }
  for (auto b : a.ip.octets()) in.push_back(b);
  in.push_back(static_cast<std::uint8_t>(a.port >> 8));
  in.push_back(static_cast<std::uint8_t>(a.port));
  for (int s = 56; s >= 0; s -= 8) in.push_back(static_cast<std::uint8_t>(t >> s));
  return in;
}

ServerSecret secret_of(std::uint8_t fill) {
  ServerSecret s;
  s.key.fill(fill);
  return s;
}

}  // namespace

// ---------------------------------------------------------------- crypto

TEST(QuicCrypto, Sha256KnownVector) {
  EXPECT_EQ(to_hex(oracle::sha256(vec(std::string_view("abc")))),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(oracle::sha256(vec(std::string_view("abc"))), sha256({to_bytes("abc")}));
}

TEST(QuicCrypto, HmacMatchesOracle) {
  gen::Rng rng(31);
  for (int i = 0; i < 300; ++i) {
    auto key = gen::bytes(rng, static_cast<std::size_t>(gen::uniform(rng, 0, 100)));
    auto msg = gen::bytes(rng, static_cast<std::size_t>(gen::uniform(rng, 0, 300)));
    ASSERT_EQ(hmac_sha256(key, msg), oracle::hmac_sha256(key, msg));
  }
}

TEST(QuicCrypto, KeyScheduleMatchesOracle) {
  gen::Rng rng(32);
  auto cr = gen::array<32>(rng);
  auto sr = gen::array<32>(rng);
  std::vector<std::uint8_t> both(cr.begin(), cr.end());
  both.insert(both.end(), sr.begin(), sr.end());
  const auto shared = oracle::sha256(both);
  EXPECT_EQ(derive_shared_secret(cr, sr), shared);
  auto fs_in = vec(ByteView(shared));
  fs_in.push_back('f');
  fs_in.push_back('s');
  const auto fs = oracle::sha256(fs_in);
  EXPECT_EQ(derive_forward_secure_key(shared), fs);
  auto transcript = gen::bytes(rng, 90);
  const auto th = oracle::sha256(transcript);
  EXPECT_EQ(fin_mac(fs, transcript), oracle::hmac_sha256(vec(ByteView(fs)), vec(ByteView(th))));
}

TEST(QuicCrypto, ConstantTimeEqual) {
  EXPECT_TRUE(constant_time_equal(from_hex("0102"), from_hex("0102")));
  EXPECT_FALSE(constant_time_equal(from_hex("0102"), from_hex("0103")));
  EXPECT_FALSE(constant_time_equal(from_hex("0102"), from_hex("01")));
}

TEST(QuicCrypto, SeededRandomIsDeterministic) {
  auto a = seeded_random(5), b = seeded_random(5), c = seeded_random(6);
  EXPECT_EQ(random32(a), random32(b));
  EXPECT_NE(random32(seeded_random(5)), random32(c));
}

// ---------------------------------------------------------------- token

TEST(QuicToken, IssuedTokenMacMatchesOracle) {
  gen::Rng rng(41);
  for (int i = 0; i < 1000; ++i) {
    SocketAddress src{gen::ip(rng, gen::uniform(rng, 0, 1)), static_cast<std::uint16_t>(gen::uniform(rng, 0, 65535))};
    const std::uint64_t now = rng() >> 20;
    auto key = gen::array<32>(rng);
    ServerSecret secret;
    secret.key = key;
    auto token = RetryToken::issue(src, now, secret).encode();
    ASSERT_EQ(token.size(), RetryToken::kEncodedSize);
    auto input = oracle_token_mac_input(src, now);
    ASSERT_EQ(Bytes(token.begin(), token.begin() + 26), input);
    auto mac = oracle::hmac_sha256(vec(ByteView(key)), input);
    ASSERT_EQ(Bytes(token.begin() + 26, token.end()), Bytes(mac.begin(), mac.end()));
    ASSERT_EQ(validate_token(token, src, secret, now), TokenVerdict::Accept);
  }
}

TEST(QuicToken, Verdicts) {
  const auto s = secret_of(1);
  const auto src = addr("10.0.0.2:5000");
  auto token = RetryToken::issue(src, 1000, s).encode();
  EXPECT_EQ(validate_token(token, src, s, 1000 + kDefaultTokenFreshnessMs), TokenVerdict::Accept);
  EXPECT_EQ(validate_token(token, src, s, 1001 + kDefaultTokenFreshnessMs), TokenVerdict::Stale);
  EXPECT_EQ(validate_token(token, src, s, 999), TokenVerdict::Stale);
  EXPECT_EQ(validate_token(token, addr("10.0.0.2:5001"), s, 1000), TokenVerdict::AddressMismatch);
  EXPECT_EQ(validate_token(token, addr("10.0.0.9:5000"), s, 1000), TokenVerdict::AddressMismatch);
  EXPECT_EQ(validate_token(token, src, secret_of(2), 1000), TokenVerdict::BadMac);
  token[3] ^= 1;
  EXPECT_EQ(validate_token(token, src, s, 1000), TokenVerdict::BadMac);
  EXPECT_EQ(validate_token(from_hex("0102"), src, s, 1000), TokenVerdict::BadMac);
}

TEST(QuicToken, AnyBitFlipRejected) {
  gen::Rng rng(42);
  const auto s = secret_of(3);
  const auto src = addr("192.0.2.1:443");
  auto token = RetryToken::issue(src, 50, s).encode();
  for (std::size_t i = 0; i < token.size() * 8; ++i) {
    auto t = token;
    t[i / 8] ^= static_cast<std::uint8_t>(1 << (i % 8));
    ASSERT_NE(validate_token(t, src, s, 50), TokenVerdict::Accept) << i;
  }
}

TEST(QuicToken, RetryPacketSwapsCids) {
  gen::Rng rng(43);
  Packet initial;
  initial.dcid = gen::cid(rng, false);
  initial.scid = gen::cid(rng, false);
  auto retry = issue_retry(initial, addr("10.0.0.2:1"), secret_of(1), 0);
  EXPECT_EQ(retry.type, PacketType::Retry);
  EXPECT_EQ(retry.dcid, initial.scid);
  EXPECT_EQ(retry.scid, initial.dcid);
  EXPECT_TRUE(retry.frames.empty());
  EXPECT_FALSE(retry.token.empty());
}

// ---------------------------------------------------------------- handshake

namespace {

struct HandshakeHarness {
  ServerSecret secret = secret_of(7);
  SocketAddress client_addr = addr("10.0.0.2:50000");
  ServerPolicy policy;
  std::uint64_t now = 0;
  std::optional<HandshakeState> server;
  HandshakeState client = HandshakeState::client("example.com", seeded_random(1));

  HandshakeOutput to_server(const Packet& p) {
    return server_handshake_step(server, p, {secret, policy, client_addr, now, seeded_random(2)});
  }
};

}  // namespace

TEST(QuicHandshake, TwoFlightsNoRetry) {
  HandshakeHarness h;
  auto c1 = client_handshake_step(h.client, nullptr);
  ASSERT_EQ(c1.outgoing.size(), 1u);
  EXPECT_EQ(h.client.phase, Phase::InitialSent);
  EXPECT_EQ(c1.outgoing[0].dcid, h.client.original_dcid);
  auto s1 = h.to_server(c1.outgoing[0]);
  ASSERT_EQ(s1.outgoing.size(), 1u);
  EXPECT_EQ(h.server->phase, Phase::HandshakeKeysReady);
  EXPECT_FALSE(h.server->forward_secure_key);
  auto c2 = client_handshake_step(h.client, &s1.outgoing[0]);
  EXPECT_EQ(h.client.phase, Phase::ForwardSecure);
  ASSERT_EQ(c2.outgoing.size(), 1u);
  EXPECT_EQ(c2.events, std::vector<HandshakeEvent>{HandshakeEvent::HandshakeComplete});
  auto s2 = h.to_server(c2.outgoing[0]);
  EXPECT_EQ(h.server->phase, Phase::ForwardSecure);
  EXPECT_EQ(s2.events, std::vector<HandshakeEvent>{HandshakeEvent::HandshakeComplete});
  EXPECT_EQ(*h.client.forward_secure_key, *h.server->forward_secure_key);
  EXPECT_EQ(h.client.transcript, h.server->transcript);
  EXPECT_EQ(h.server->server_name, "example.com");
}

TEST(QuicHandshake, RetryKeepsServerStateless) {
  HandshakeHarness h;
  h.policy.retry = true;
  auto first = client_handshake_step(h.client, nullptr).outgoing.at(0);
  auto s1 = h.to_server(first);
  EXPECT_FALSE(h.server);
  ASSERT_EQ(s1.outgoing.size(), 1u);
  ASSERT_EQ(s1.outgoing[0].type, PacketType::Retry);
  auto c2 = client_handshake_step(h.client, &s1.outgoing[0]);
  EXPECT_EQ(h.client.phase, Phase::RetryReceived);
  ASSERT_EQ(c2.outgoing.size(), 1u);
  const auto& second = c2.outgoing[0];
  EXPECT_EQ(second.token, s1.outgoing[0].token);
  EXPECT_EQ(second.dcid, first.dcid);
  EXPECT_EQ(encode_frame(second.frames.at(0)), encode_frame(first.frames.at(0)));
  auto s2 = h.to_server(second);
  ASSERT_TRUE(h.server);
  client_handshake_step(h.client, &s2.outgoing.at(0));
  EXPECT_EQ(h.client.phase, Phase::ForwardSecure);
}

TEST(QuicHandshake, SecondRetryIsViolation) {
  HandshakeHarness h;
  h.policy.retry = true;
  auto first = client_handshake_step(h.client, nullptr).outgoing.at(0);
  auto retry = h.to_server(first).outgoing.at(0);
  client_handshake_step(h.client, &retry);
  auto out = client_handshake_step(h.client, &retry);
  EXPECT_EQ(h.client.phase, Phase::Closed);
  EXPECT_EQ(h.client.close_reason, CloseReason::ProtocolViolation);
}

TEST(QuicHandshake, InvalidTokenDroppedSilently) {
  HandshakeHarness h;
  h.policy.retry = true;
  auto first = client_handshake_step(h.client, nullptr).outgoing.at(0);
  first.token = RetryToken::issue(addr("10.0.0.99:1"), 0, h.secret).encode();
  EXPECT_TRUE(h.to_server(first).outgoing.empty());
  EXPECT_FALSE(h.server);
}

TEST(QuicHandshake, TamperedServerFinFailsAuth) {
  HandshakeHarness h;
  auto first = client_handshake_step(h.client, nullptr).outgoing.at(0);
  auto reply = h.to_server(first).outgoing.at(0);
  for (auto& f : reply.frames)
    if (f.type == FrameType::Fin) f.value[0] ^= 0xFF;
  auto out = client_handshake_step(h.client, &reply);
  EXPECT_EQ(h.client.phase, Phase::Closed);
  EXPECT_EQ(h.client.close_reason, CloseReason::HandshakeAuthFailure);
  EXPECT_FALSE(h.client.forward_secure_key);
  EXPECT_TRUE(out.outgoing.empty());
}

TEST(QuicHandshake, TamperedClientFinFailsAuth) {
  HandshakeHarness h;
  auto first = client_handshake_step(h.client, nullptr).outgoing.at(0);
  auto reply = h.to_server(first).outgoing.at(0);
  auto fin = client_handshake_step(h.client, &reply).outgoing.at(0);
  fin.frames[0].value[5] ^= 1;
  h.to_server(fin);
  EXPECT_EQ(h.server->phase, Phase::Closed);
  EXPECT_EQ(h.server->close_reason, CloseReason::HandshakeAuthFailure);
}

TEST(QuicHandshake, RetransmitsRepeatFlights) {
  HandshakeHarness h;
  auto a = client_handshake_step(h.client, nullptr).outgoing.at(0);
  auto b = client_handshake_step(h.client, nullptr).outgoing.at(0);
  EXPECT_EQ(a.frames, b.frames);
  EXPECT_NE(a.packet_number, b.packet_number);
  auto s1 = h.to_server(a).outgoing.at(0);
  auto s2 = h.to_server(b).outgoing.at(0);
  EXPECT_EQ(s1.frames, s2.frames);
}

// ---------------------------------------------------------------- rtt

TEST(QuicRtt, EwmaMatchesOracle) {
  gen::Rng rng(51);
  RttEstimator est;
  EXPECT_FALSE(est.smoothed_ms());
  double oracle_s = 0;
  for (int i = 0; i < 200; ++i) {
    const double sample = gen::uniform(rng, 1, 500);
    oracle_s = i == 0 ? sample : oracle_s - oracle_s / 8 + sample / 8;
    est.on_sample(sample);
    ASSERT_NEAR(*est.smoothed_ms(), oracle_s, 1e-9);
    ASSERT_EQ(*est.latest_ms(), sample);
  }
  est.reset();
  EXPECT_EQ(est.sample_count(), 0u);
  EXPECT_FALSE(est.smoothed_ms());
}

TEST(QuicRtt, WorkedExample) {
  RttEstimator est;
  est.on_sample(100);
  est.on_sample(20);
  EXPECT_DOUBLE_EQ(*est.smoothed_ms(), 90.0);
}

// ---------------------------------------------------------------- connection + server

namespace {

constexpr PathId kA = 0;
constexpr PathId kB = 1;

// Client connection and server endpoint wired by hand. Path A is
// 10.0.0.2:40000, path B is 10.0.0.2:40001; delivery is instantaneous unless
// the test holds packets back.
struct Pair {
  ClientConnection client{"example.com", kA, seeded_random(3)};
  ServerEndpoint server;
  std::map<PathId, SocketAddress> path_addr{{kA, addr("10.0.0.2:40000")}, {kB, addr("10.0.0.2:40001")}};

  explicit Pair(bool retry = false) : server(make_config(retry)) {}

  static ServerConfig make_config(bool retry) {
    ServerConfig c;
    c.secret = secret_of(9);
    c.policy.retry = retry;
    c.random = seeded_random(4);
    return c;
  }

  PathId path_of(const SocketAddress& a) {
    for (auto& [id, sa] : path_addr)
      if (sa == a) return id;
    return 99;
  }

  // Delivers until nothing is in flight; returns server datagrams seen.
  std::vector<Packet> pump(std::vector<ClientTransmit> tx, double now) {
    std::vector<Packet> seen;
    while (!tx.empty()) {
      std::vector<ClientTransmit> next;
      for (auto& t : tx) {
        for (auto& st : server.on_datagram(path_addr.at(t.path), encode_packet(t.packet), now)) {
          auto p = decode_packet(st.datagram);
          seen.push_back(p);
          auto more = client.on_packet(path_of(st.to), p, now);
          next.insert(next.end(), more.begin(), more.end());
        }
      }
      tx = std::move(next);
    }
    return seen;
  }

  void handshake() { pump(client.start(0), 0); }
};

}  // namespace

TEST(QuicConnection, HandshakeCompletesAndConfirms) {
  Pair p;
  p.handshake();
  EXPECT_EQ(p.client.phase(), Phase::ForwardSecure);
  EXPECT_TRUE(p.client.handshake().handshake_confirmed);
  EXPECT_EQ(p.server.state_store_size(), 1u);
  EXPECT_EQ(p.server.stats().handshakes_completed, 1u);
}

TEST(QuicConnection, RetryThenComplete) {
  Pair p(true);
  p.handshake();
  EXPECT_EQ(p.client.phase(), Phase::ForwardSecure);
  EXPECT_EQ(p.server.stats().retries_sent, 1u);
  auto events = p.client.take_events();
  EXPECT_EQ(std::count_if(events.begin(), events.end(),
                          [](auto& e) { return e.type == ClientEventType::RetryReceived; }),
            1);
}

TEST(QuicConnection, TokenlessInitialCreatesNoState) {
  Pair p(true);
  auto tx = p.client.start(0);
  auto out = p.server.on_datagram(p.path_addr[kA], encode_packet(tx[0].packet), 0);
  EXPECT_EQ(out.size(), 1u);
  EXPECT_EQ(p.server.state_store_size(), 0u);
}

TEST(QuicConnection, MigrateBeforeForwardSecureIsTooEarly) {
  Pair p;
  p.client.start(0);
  auto r = p.client.migrate(kB, 1);
  ASSERT_TRUE(r.error);
  EXPECT_EQ(*r.error, MigrateError::TooEarly);
  EXPECT_EQ(p.client.active_path(), kA);
}

TEST(QuicConnection, MigrateToActivePath) {
  Pair p;
  p.handshake();
  EXPECT_EQ(*p.client.migrate(kA, 1).error, MigrateError::AlreadyOnPath);
}

TEST(QuicConnection, MigrationValidatesAndSwitches) {
  Pair p;
  p.handshake();
  auto r = p.client.migrate(kB, 10);
  ASSERT_FALSE(r.error);
  EXPECT_EQ(p.client.phase(), Phase::Migrating);
  p.pump(std::move(r.transmits), 20);
  EXPECT_EQ(p.client.phase(), Phase::EstablishedOnNewPath);
  EXPECT_EQ(p.client.active_path(), kB);
  auto events = p.server.take_events();
  ASSERT_FALSE(events.empty());
  EXPECT_EQ(events.back().type, ServerEvent::Type::PeerMigrated);
  EXPECT_EQ(events.back().new_peer, p.path_addr[kB]);
  EXPECT_EQ(p.client.rtt().sample_count(), 1u);
}

TEST(QuicConnection, WrongPathResponseIgnored) {
  Pair p;
  p.handshake();
  auto r = p.client.migrate(kB, 10);
  ASSERT_EQ(r.transmits.size(), 1u);
  auto challenge = parse_path_data(r.transmits[0].packet.frames.at(0));
  challenge[0] ^= 1;
  Packet bogus;
  bogus.type = PacketType::OneRtt;
  bogus.frames = {Frame::path_response(challenge)};
  auto tx = p.client.on_packet(kB, bogus, 11);
  EXPECT_TRUE(tx.empty());
  EXPECT_EQ(p.client.phase(), Phase::Migrating);
  EXPECT_FALSE(p.client.path_validated(kB));
  // The genuine response still works afterwards.
  bogus.frames = {Frame::path_response(parse_path_data(r.transmits[0].packet.frames.at(0)))};
  p.client.on_packet(kB, bogus, 12);
  EXPECT_EQ(p.client.phase(), Phase::EstablishedOnNewPath);
}

TEST(QuicConnection, ResponseOnOtherPathIgnored) {
  Pair p;
  p.handshake();
  auto r = p.client.migrate(kB, 10);
  Packet resp;
  resp.type = PacketType::OneRtt;
  resp.frames = {Frame::path_response(parse_path_data(r.transmits[0].packet.frames.at(0)))};
  p.client.on_packet(kA, resp, 11);
  EXPECT_EQ(p.client.phase(), Phase::Migrating);
}

TEST(QuicConnection, EarlyProbeThenInstantMigration) {
  Pair p;
  auto start = p.client.start(0);
  auto probe = p.client.probe_path(kB, 0);
  ASSERT_EQ(probe.size(), 1u);
  start.insert(start.end(), probe.begin(), probe.end());
  p.pump(std::move(start), 0);
  EXPECT_EQ(p.client.phase(), Phase::ForwardSecure);
}

TEST(QuicConnection, AppDataEchoedAndSampled) {
  Pair p;
  p.handshake();
  const auto before = p.client.rtt().sample_count();
  p.pump(p.client.send_app_data(to_bytes("hi"), 5), 5);
  auto data = p.client.take_app_data();
  ASSERT_EQ(data.size(), 1u);
  EXPECT_EQ(data[0], to_bytes("hi"));
  EXPECT_EQ(p.client.rtt().sample_count(), before + 1);
}

TEST(QuicConnection, HandshakeTimeout) {
  Pair p;
  p.client.start(0);
  ClientOptions defaults;
  p.client.on_timer(defaults.handshake_timeout_ms);
  EXPECT_EQ(p.client.phase(), Phase::Closed);
  EXPECT_EQ(p.client.handshake().close_reason, CloseReason::HandshakeTimeout);
}

TEST(QuicConnection, RetransmitTimer) {
  Pair p;
  p.client.start(0);
  ASSERT_TRUE(p.client.next_timeout());
  EXPECT_DOUBLE_EQ(*p.client.next_timeout(), 300);
  auto tx = p.client.on_timer(300);
  ASSERT_EQ(tx.size(), 1u);
  EXPECT_EQ(tx[0].packet.type, PacketType::Initial);
}

TEST(QuicServer, UnvalidatedBudgetIsThree) {
  Pair p;
  p.handshake();
  const auto& hs = p.client.handshake();
  const auto attacker = addr("203.0.113.7:9999");
  std::size_t replies = 0;
  for (int i = 0; i < 10; ++i) {
    Packet ping;
    ping.type = PacketType::OneRtt;
    ping.dcid = hs.peer_cid;
    ping.packet_number = 100 + static_cast<std::uint32_t>(i);
    ping.frames = {Frame::ping()};
    for (auto& t : p.server.on_datagram(attacker, encode_packet(ping), 50))
      if (t.to == attacker) ++replies;
  }
  EXPECT_EQ(replies, static_cast<std::size_t>(kUnvalidatedSendBudget));
  EXPECT_EQ(p.server.stats().dropped_budget, 10u - kUnvalidatedSendBudget);
  EXPECT_EQ(p.server.find(hs.peer_cid)->peer, p.path_addr[kA]);
}

TEST(QuicServer, OneRttBeforeFinIsHeldUntilForwardSecure) {
  Pair p;
  const auto from = p.path_addr[kA];
  std::vector<ClientTransmit> fin;
  for (auto& t : p.client.start(0))
    for (auto& st : p.server.on_datagram(from, encode_packet(t.packet), 0)) {
      auto more = p.client.on_packet(kA, decode_packet(st.datagram), 10);
      fin.insert(fin.end(), more.begin(), more.end());
    }
  ASSERT_EQ(p.client.phase(), Phase::ForwardSecure);
  ASSERT_EQ(fin.size(), 1u);

  auto app = p.client.send_app_data(to_bytes("early"), 11);
  ASSERT_EQ(app.size(), 1u);
  EXPECT_TRUE(p.server.on_datagram(from, encode_packet(app[0].packet), 12).empty());
  EXPECT_EQ(p.server.stats().early_buffered, 1u);
  EXPECT_EQ(p.server.stats().handshakes_completed, 0u);

  std::size_t echoes = 0;
  for (auto& st : p.server.on_datagram(from, encode_packet(fin[0].packet), 20)) {
    EXPECT_EQ(st.to, from);
    auto reply = decode_packet(st.datagram);
    if (reply.find(FrameType::AppData)) ++echoes;
    p.client.on_packet(kA, reply, 30);
  }
  EXPECT_EQ(echoes, 1u);
  EXPECT_EQ(p.server.stats().handshakes_completed, 1u);
  auto data = p.client.take_app_data();
  ASSERT_EQ(data.size(), 1u);
  EXPECT_EQ(data[0], to_bytes("early"));
}

TEST(QuicServer, EarlyBufferIsBounded) {
  Pair p;
  const auto from = p.path_addr[kA];
  for (auto& t : p.client.start(0))
    for (auto& st : p.server.on_datagram(from, encode_packet(t.packet), 0))
      p.client.on_packet(kA, decode_packet(st.datagram), 10);
  for (std::size_t i = 0; i < kMaxEarlyPackets + 4; ++i)
    for (auto& t : p.client.send_app_data(to_bytes("x"), 11)) p.server.on_datagram(from, encode_packet(t.packet), 12);
  EXPECT_EQ(p.server.stats().early_buffered, kMaxEarlyPackets);
  EXPECT_EQ(p.server.stats().dropped_early, 4u);
}

TEST(QuicServer, DropsMalformedUnknownAndOversize) {
  Pair p;
  p.server.on_datagram(p.path_addr[kA], from_hex("FF00"), 0);
  EXPECT_EQ(p.server.stats().dropped_malformed, 1u);
  Packet stray;
  stray.type = PacketType::OneRtt;
  std::array<std::uint8_t, 8> raw{};
  raw.fill(1);
  stray.dcid = ConnectionId(raw);
  p.server.on_datagram(p.path_addr[kA], encode_packet(stray), 0);
  EXPECT_EQ(p.server.stats().dropped_unknown, 1u);
}

TEST(QuicServer, ManyConnectionsIndependent) {
  ServerEndpoint server(Pair::make_config(true));
  for (int i = 0; i < 100; ++i) {
    ClientConnection c("example.com", 0, seeded_random(1000 + static_cast<std::uint64_t>(i)));
    const SocketAddress from{*IpAddress::parse("10.0.1.1"), static_cast<std::uint16_t>(20000 + i)};
    auto tx = c.start(0);
    int retries = 0;
    while (!tx.empty()) {
      std::vector<ClientTransmit> next;
      for (auto& t : tx)
        for (auto& st : server.on_datagram(from, encode_packet(t.packet), 0)) {
          auto pk = decode_packet(st.datagram);
          if (pk.type == PacketType::Retry) ++retries;
          auto more = c.on_packet(0, pk, 0);
          next.insert(next.end(), more.begin(), more.end());
        }
      tx = std::move(next);
    }
    ASSERT_EQ(retries, 1);
    ASSERT_EQ(c.phase(), Phase::ForwardSecure);
  }
  EXPECT_EQ(server.state_store_size(), 100u);
  EXPECT_EQ(server.stats().handshakes_completed, 100u);
}
