#pragma once

#include <functional>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "qsk/common/env.hpp"
#include "qsk/dns/resolver.hpp"
#include "qsk/dns/zone.hpp"

namespace qsk::dns {

// One query seen at the authority: who asked, for what, when.
struct QueryLogEntry {
  std::string name;
  SocketAddress source;
  double ts_ms = 0;
};
std::string to_json_line(const QueryLogEntry& e);

// Answers from a static zone with AA set and logs the source address of
// every query it receives. Single sequential loop.
class AuthoritativeResponder {
public:
  AuthoritativeResponder(Environment& env, std::uint16_t port, Zone zone, std::ostream* log = nullptr);
  ~AuthoritativeResponder();

  SocketAddress address() const { return env_.local_address(socket_); }
  const std::vector<QueryLogEntry>& queries() const noexcept { return queries_; }
  std::optional<QueryLogEntry> find(std::string_view name) const;
  std::size_t malformed() const noexcept { return malformed_; }

private:
  void on_datagram(const SocketAddress& from, ByteView payload);

  Environment& env_;
  Zone zone_;
  std::ostream* log_;
  SocketId socket_;
  std::vector<QueryLogEntry> queries_;
  std::size_t malformed_ = 0;
};

// 16 characters from [a-z0-9].
class LabelGenerator {
public:
  explicit LabelGenerator(std::uint64_t seed = 0);
  std::string next();

private:
  std::mt19937_64 rng_;
};

struct ResolverObservation {
  std::string queried_name;
  SocketAddress resolver_address;  // as seen by the authority
  SocketAddress configured_resolver;
  double timestamp_ms = 0;
};

enum class DiscoveryError { Timeout };

struct DiscoveryResult {
  std::optional<ResolverObservation> observation;
  std::optional<DiscoveryError> error;
};

using ObservationLookup = std::function<std::optional<QueryLogEntry>(const std::string& name)>;

// Queries <random label>.<zone> through the stub's configured resolver and,
// once that query settles or the deadline passes, pairs the name with the
// query the authority logged for it.
void discover_resolver(Environment& env, StubResolver& stub, LabelGenerator& labels, std::string_view zone,
                       ObservationLookup lookup, double deadline_ms, std::function<void(DiscoveryResult)> done);

}  // namespace qsk::dns
