#pragma once

#include <istream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace qsk::latmodel {

struct RttTriple {
  std::string node_id;
  double rtt_dns_ms = 0;
  double rtt_server_ms = 0;
  double rtt_direct_ms = 0;
};

enum class Scenario { StatusQuo, Proposal };
std::string_view to_string(Scenario s);

// Connection establishment latency including DNS.
//   status quo: dns + direct        (retry: dns + 2 direct)
//   proposal:   dns + server        (retry: dns + 2 server)
double model_latency(const RttTriple& t, Scenario scenario, bool retry);

struct Savings {
  double no_retry_ms = 0;
  double retry_ms = 0;
  double no_retry_fraction = 0;  // of the status-quo latency, 0 when that is 0
  double retry_fraction = 0;
};
Savings savings(const RttTriple& t);

struct ModelResult {
  Scenario scenario;
  bool retry;
  double latency_ms;
  double savings_ms;  // status quo minus proposal at the same retry flag
  double savings_fraction;
};
ModelResult evaluate(const RttTriple& t, Scenario scenario, bool retry);

enum class Metric {
  RttDns,
  RttServer,
  RttDirect,
  HandshakeStatusQuo,
  HandshakeStatusQuoRetry,
  HandshakeProposal,
  HandshakeProposalRetry,
};
inline constexpr Metric kAllMetrics[] = {Metric::RttDns,
                                         Metric::RttServer,
                                         Metric::RttDirect,
                                         Metric::HandshakeStatusQuo,
                                         Metric::HandshakeStatusQuoRetry,
                                         Metric::HandshakeProposal,
                                         Metric::HandshakeProposalRetry};
std::string_view to_string(Metric m);
std::optional<Metric> parse_metric(std::string_view name);
double metric_value(const RttTriple& t, Metric m);

struct CdfPoint {
  double value;
  double fraction;  // share of nodes with metric <= value
  friend bool operator==(const CdfPoint&, const CdfPoint&) = default;
};
std::vector<CdfPoint> emit_cdf(const std::vector<RttTriple>& data, Metric m);
// Throws std::invalid_argument for an unknown metric name.
std::vector<CdfPoint> emit_cdf(const std::vector<RttTriple>& data, std::string_view metric);

struct ThresholdShare {
  double threshold_ms;
  std::size_t count;
  double fraction;
  friend bool operator==(const ThresholdShare&, const ThresholdShare&) = default;
};

inline constexpr double kMarginThresholds[] = {5, 10, 40, 50};
inline constexpr double kDnsBelowMs = 10;
inline constexpr double kNoRetrySavingThresholds[] = {15, 30};
inline constexpr double kRetrySavingThresholds[] = {30, 60};

struct StatsReport {
  std::size_t nodes = 0;
  std::vector<ThresholdShare> margin_at_least;  // rtt_direct - rtt_server >= t
  ThresholdShare dns_below;                      // rtt_dns < 10
  std::vector<ThresholdShare> saving_no_retry_at_least;
  std::vector<ThresholdShare> saving_retry_at_least;
  std::map<Metric, std::vector<CdfPoint>> cdfs;
  friend bool operator==(const StatsReport&, const StatsReport&) = default;
  std::string to_json() const;
};

// Parallel over nodes with OpenMP. Throws std::invalid_argument when empty.
StatsReport dataset_stats(const std::vector<RttTriple>& data);
// Single-threaded reference with the same output.
StatsReport dataset_stats_serial(const std::vector<RttTriple>& data);

// Header row required. Either four columns
//   node_id,rtt_dns_ms,rtt_server_ms,rtt_direct_ms
// or sixteen: node_id then five raw samples each of dns, server, direct,
// which are averaged. Throws std::invalid_argument with the line number.
std::vector<RttTriple> load_csv(std::istream& in);
std::vector<RttTriple> load_csv_file(const std::string& path);

}  // namespace qsk::latmodel
