#pragma once

#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include "qsk/common/env.hpp"
#include "qsk/dns/message.hpp"

namespace qsk::dns {

inline constexpr std::uint32_t kMinCacheTtl = 1;
inline constexpr std::uint32_t kMaxCacheTtl = 300;

std::uint32_t clamp_ttl(std::uint32_t ttl);

enum class ResolveStatus { Ok, NxDomain, Timeout, Malformed, ServerFailure };
std::string_view to_string(ResolveStatus s);

struct ResolveResult {
  ResolveStatus status = ResolveStatus::Timeout;
  std::vector<IpAddress> addresses;
  std::uint32_t min_ttl = 0;  // clamped
  bool from_cache = false;
  double elapsed_ms = 0;
};

using ResolveCallback = std::function<void(const ResolveResult&)>;

struct StubOptions {
  double timeout_ms = 1000;
  int retries = 2;
  bool use_cache = true;
  // Answer from the cache or fail with Timeout; no query leaves the host.
  bool cache_only = false;
  std::uint64_t seed = 0;  // 0 draws from std::random_device
};

// Sends queries to one upstream recursive resolver. Many queries may be in
// flight; each has a distinct id and a response only completes the query
// whose id, question and upstream address all match.
class StubResolver {
public:
  StubResolver(Environment& env, SocketAddress upstream, StubOptions options = {});
  ~StubResolver();
  StubResolver(const StubResolver&) = delete;
  StubResolver& operator=(const StubResolver&) = delete;

  void resolve(std::string_view name, RecordType type, ResolveCallback done);
  std::size_t in_flight() const noexcept { return pending_.size(); }
  std::size_t queries_sent() const noexcept { return queries_sent_; }
  const SocketAddress& upstream() const noexcept { return upstream_; }
  void clear_cache() { cache_.clear(); }

private:
  struct Pending {
    Question question;
    ResolveCallback done;
    int attempts = 0;
    TimerId timer = 0;
    double started_ms = 0;
    Bytes wire;
  };
  struct CacheEntry {
    std::vector<IpAddress> addresses;
    std::uint32_t ttl = 0;
    double expires_ms = 0;
  };

  void on_datagram(const SocketAddress& from, ByteView payload);
  void arm(std::uint16_t id);
  void finish(std::uint16_t id, ResolveResult result);
  std::uint16_t fresh_id();

  Environment& env_;
  SocketAddress upstream_;
  StubOptions options_;
  SocketId socket_;
  std::mt19937 rng_;
  std::map<std::uint16_t, Pending> pending_;
  std::map<std::pair<std::string, RecordType>, CacheEntry> cache_;
  std::size_t queries_sent_ = 0;
};

// Recursive-resolver stand-in: answers clients from its cache or by asking
// one upstream authority from its own address.
class ForwardingResolver {
public:
  ForwardingResolver(Environment& env, std::uint16_t port, SocketAddress upstream, bool use_cache = true,
                     std::uint64_t seed = 0);
  ~ForwardingResolver();

  SocketAddress address() const { return env_.local_address(socket_); }
  std::size_t forwarded() const noexcept { return forwarded_; }
  std::size_t cache_hits() const noexcept { return cache_hits_; }

private:
  struct Waiting {
    SocketAddress client;
    Message query;
    TimerId expiry = 0;
  };
  struct CacheEntry {
    Rcode rcode = Rcode::NoError;
    std::vector<Answer> answers;
    double expires_ms = 0;
  };

  void on_datagram(const SocketAddress& from, ByteView payload);

  Environment& env_;
  SocketAddress upstream_;
  bool use_cache_;
  SocketId socket_;
  std::mt19937 rng_;
  std::map<std::uint16_t, Waiting> waiting_;
  std::map<std::pair<std::string, RecordType>, CacheEntry> cache_;
  std::size_t forwarded_ = 0;
  std::size_t cache_hits_ = 0;
};

}  // namespace qsk::dns
