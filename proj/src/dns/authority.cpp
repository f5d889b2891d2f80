#include "qsk/dns/authority.hpp"

#include <memory>
#include <nlohmann/json.hpp>

namespace qsk::dns {

std::string to_json_line(const QueryLogEntry& e) {
  return nlohmann::json{{"name", e.name},
                        {"resolver_ip", e.source.ip.to_string()},
                        {"resolver_port", e.source.port},
                        {"ts_ms", e.ts_ms}}
      .dump();
}

AuthoritativeResponder::AuthoritativeResponder(Environment& env, std::uint16_t port, Zone zone, std::ostream* log)
    : env_(env), zone_(std::move(zone)), log_(log) {
  socket_ = env_.open_udp(port, [this](const SocketAddress& from, ByteView p) { on_datagram(from, p); });
}

AuthoritativeResponder::~AuthoritativeResponder() { env_.close_udp(socket_); }

std::optional<QueryLogEntry> AuthoritativeResponder::find(std::string_view name) const {
  for (const auto& q : queries_)
    if (names_equal(q.name, name)) return q;
  return std::nullopt;
}

void AuthoritativeResponder::on_datagram(const SocketAddress& from, ByteView payload) {
  Message q;
  try {
    q = decode(payload);
  } catch (const DecodeError&) {
    ++malformed_;
    return;
  }
  if (q.response) return;
  QueryLogEntry entry{q.question.name, from, env_.now_ms()};
  queries_.push_back(entry);
  if (log_) *log_ << to_json_line(entry) << '\n' << std::flush;

  auto found = zone_.lookup(q.question.name, q.question.type);
  const Rcode rcode = found.outcome == Zone::Outcome::NxDomain ? Rcode::NxDomain : Rcode::NoError;
  env_.send_udp(socket_, from, encode(make_response(q, rcode, std::move(found.answers), true)));
}

LabelGenerator::LabelGenerator(std::uint64_t seed)
    : rng_(seed == 0 ? std::mt19937_64(std::random_device{}()) : std::mt19937_64(seed)) {}

std::string LabelGenerator::next() {
  static constexpr char kAlphabet[] = "abcdefghijklmnopqrstuvwxyz0123456789";
  std::uniform_int_distribution<int> pick(0, 35);
  std::string s(16, 'a');
  for (auto& c : s) c = kAlphabet[pick(rng_)];
  return s;
}

void discover_resolver(Environment& env, StubResolver& stub, LabelGenerator& labels, std::string_view zone,
                       ObservationLookup lookup, double deadline_ms, std::function<void(DiscoveryResult)> done) {
  struct Probe {
    std::string name;
    bool settled = false;
    TimerId timer = 0;
  };
  auto probe = std::make_shared<Probe>();
  probe->name = labels.next() + "." + std::string(zone);
  const auto configured = stub.upstream();
  const double started = env.now_ms();

  auto settle = [probe, lookup = std::move(lookup), done = std::move(done), configured, started, &env]() {
    if (probe->settled) return;
    probe->settled = true;
    env.cancel(probe->timer);
    DiscoveryResult r;
    if (auto seen = lookup(probe->name); seen && seen->ts_ms >= started) {
      r.observation = ResolverObservation{probe->name, seen->source, configured, seen->ts_ms};
    } else {
      r.error = DiscoveryError::Timeout;
    }
    done(std::move(r));
  };
  probe->timer = env.schedule(deadline_ms, settle);
  stub.resolve(probe->name, RecordType::A, [settle](const ResolveResult&) { settle(); });
}

}  // namespace qsk::dns
