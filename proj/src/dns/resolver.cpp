#include "qsk/dns/resolver.hpp"

#include <algorithm>
#include <cctype>

namespace qsk::dns {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::mt19937 seeded(std::uint64_t seed) {
  if (seed == 0) return std::mt19937(std::random_device{}());
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  return std::mt19937(seq);
}

}  // namespace

std::uint32_t clamp_ttl(std::uint32_t ttl) { return std::clamp(ttl, kMinCacheTtl, kMaxCacheTtl); }

std::string_view to_string(ResolveStatus s) {
  switch (s) {
    case ResolveStatus::Ok: return "ok";
    case ResolveStatus::NxDomain: return "nxdomain";
    case ResolveStatus::Timeout: return "resolution-timeout";
    case ResolveStatus::Malformed: return "malformed";
    case ResolveStatus::ServerFailure: return "server-failure";
  }
  return "?";
}

// ---------------------------------------------------------------- stub

StubResolver::StubResolver(Environment& env, SocketAddress upstream, StubOptions options)
    : env_(env), upstream_(upstream), options_(options), rng_(seeded(options.seed)) {
  socket_ = env_.open_udp(0, [this](const SocketAddress& from, ByteView p) { on_datagram(from, p); });
}

StubResolver::~StubResolver() {
  for (auto& [id, p] : pending_) env_.cancel(p.timer);
  env_.close_udp(socket_);
}

std::uint16_t StubResolver::fresh_id() {
  std::uniform_int_distribution<int> dist(0, 0xFFFF);
  for (;;) {
    auto id = static_cast<std::uint16_t>(dist(rng_));
    if (!pending_.count(id)) return id;
  }
}

void StubResolver::resolve(std::string_view name, RecordType type, ResolveCallback done) {
  std::string normal;
  try {
    normal = normalize_name(name);
  } catch (const EncodeError&) {
    done(ResolveResult{ResolveStatus::Malformed, {}, 0, false, 0});
    return;
  }
  const auto key = std::pair{lower(normal), type};
  if (options_.use_cache || options_.cache_only) {
    auto it = cache_.find(key);
    if (it != cache_.end() && it->second.expires_ms > env_.now_ms()) {
      done(ResolveResult{ResolveStatus::Ok, it->second.addresses, it->second.ttl, true, 0});
      return;
    }
  }
  if (options_.cache_only) {
    done(ResolveResult{ResolveStatus::Timeout, {}, 0, false, 0});
    return;
  }
  if (pending_.size() >= 0xFFFF) {
    done(ResolveResult{ResolveStatus::ServerFailure, {}, 0, false, 0});
    return;
  }
  const auto id = fresh_id();
  Pending p;
  p.question = {normal, type};
  p.done = std::move(done);
  p.started_ms = env_.now_ms();
  p.wire = encode(make_query(id, normal, type));
  pending_.emplace(id, std::move(p));
  arm(id);
}

void StubResolver::arm(std::uint16_t id) {
  auto& p = pending_.at(id);
  ++p.attempts;
  ++queries_sent_;
  env_.send_udp(socket_, upstream_, p.wire);
  p.timer = env_.schedule(options_.timeout_ms, [this, id] {
    auto it = pending_.find(id);
    if (it == pending_.end()) return;
    if (it->second.attempts > options_.retries) {
      finish(id, ResolveResult{ResolveStatus::Timeout, {}, 0, false, 0});
    } else {
      arm(id);
    }
  });
}

void StubResolver::finish(std::uint16_t id, ResolveResult result) {
  auto it = pending_.find(id);
  if (it == pending_.end()) return;
  env_.cancel(it->second.timer);
  result.elapsed_ms = env_.now_ms() - it->second.started_ms;
  auto done = std::move(it->second.done);
  pending_.erase(it);
  done(result);
}

void StubResolver::on_datagram(const SocketAddress& from, ByteView payload) {
  if (from != upstream_) return;
  Message m;
  try {
    m = decode(payload);
  } catch (const DecodeError&) {
    if (payload.size() >= 2) {
      const auto id = static_cast<std::uint16_t>(payload[0] << 8 | payload[1]);
      if (pending_.count(id)) finish(id, ResolveResult{ResolveStatus::Malformed, {}, 0, false, 0});
    }
    return;
  }
  auto it = pending_.find(m.id);
  if (it == pending_.end() || !m.response) return;
  const auto& q = it->second.question;
  if (m.question.type != q.type || !names_equal(m.question.name, q.name)) return;

  ResolveResult r;
  switch (m.rcode) {
    case Rcode::NoError: r.status = ResolveStatus::Ok; break;
    case Rcode::NxDomain: r.status = ResolveStatus::NxDomain; break;
    default: r.status = ResolveStatus::ServerFailure; break;
  }
  std::optional<std::uint32_t> min_ttl;
  for (const auto& a : m.answers) {
    if (a.type != q.type) continue;
    r.addresses.push_back(a.address);
    min_ttl = min_ttl ? std::min(*min_ttl, a.ttl) : a.ttl;
  }
  if (r.status == ResolveStatus::Ok && r.addresses.empty()) r.status = ResolveStatus::NxDomain;
  if (min_ttl) r.min_ttl = clamp_ttl(*min_ttl);
  if (r.status == ResolveStatus::Ok && (options_.use_cache || options_.cache_only)) {
    cache_[{lower(q.name), q.type}] = CacheEntry{r.addresses, r.min_ttl, env_.now_ms() + r.min_ttl * 1000.0};
  }
  finish(m.id, std::move(r));
}

// ---------------------------------------------------------------- forwarder

ForwardingResolver::ForwardingResolver(Environment& env, std::uint16_t port, SocketAddress upstream,
                                       bool use_cache, std::uint64_t seed)
    : env_(env), upstream_(upstream), use_cache_(use_cache), rng_(seeded(seed)) {
  socket_ = env_.open_udp(port, [this](const SocketAddress& from, ByteView p) { on_datagram(from, p); });
}

ForwardingResolver::~ForwardingResolver() {
  for (auto& [id, w] : waiting_) env_.cancel(w.expiry);
  env_.close_udp(socket_);
}

void ForwardingResolver::on_datagram(const SocketAddress& from, ByteView payload) {
  Message m;
  try {
    m = decode(payload);
  } catch (const DecodeError&) {
    return;
  }

  if (from == upstream_ && m.response) {
    auto it = waiting_.find(m.id);
    if (it == waiting_.end()) return;
    auto w = std::move(it->second);
    env_.cancel(w.expiry);
    waiting_.erase(it);
    if (use_cache_ && (m.rcode == Rcode::NoError || m.rcode == Rcode::NxDomain)) {
      std::uint32_t ttl = kMaxCacheTtl;
      for (const auto& a : m.answers) ttl = std::min(ttl, a.ttl);
      cache_[{lower(w.query.question.name), w.query.question.type}] =
          CacheEntry{m.rcode, m.answers, env_.now_ms() + clamp_ttl(ttl) * 1000.0};
    }
    auto reply = make_response(w.query, m.rcode, m.answers, false);
    reply.recursion_available = true;
    env_.send_udp(socket_, w.client, encode(reply));
    return;
  }
  if (m.response) return;

  if (use_cache_) {
    auto it = cache_.find({lower(m.question.name), m.question.type});
    if (it != cache_.end() && it->second.expires_ms > env_.now_ms()) {
      ++cache_hits_;
      auto answers = it->second.answers;
      for (auto& a : answers) a.name = m.question.name;
      auto reply = make_response(m, it->second.rcode, std::move(answers), false);
      reply.recursion_available = true;
      env_.send_udp(socket_, from, encode(reply));
      return;
    }
  }

  if (waiting_.size() >= 0xFFFF) return;
  std::uniform_int_distribution<int> dist(0, 0xFFFF);
  std::uint16_t id;
  do {
    id = static_cast<std::uint16_t>(dist(rng_));
  } while (waiting_.count(id));
  auto upstream_query = make_query(id, m.question.name, m.question.type, false);
  const TimerId expiry = env_.schedule(5000, [this, id] { waiting_.erase(id); });
  waiting_.emplace(id, Waiting{from, m, expiry});
  ++forwarded_;
  env_.send_udp(socket_, upstream_, encode(upstream_query));
}

}  // namespace qsk::dns
