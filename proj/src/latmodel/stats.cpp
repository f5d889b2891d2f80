#include <nlohmann/json.hpp>
#include <stdexcept>

#include "qsk/latmodel/model.hpp"

namespace qsk::latmodel {

namespace {

// Counters in fixed order: 4 margins, dns, 2 no-retry savings, 2 retry savings.
constexpr std::size_t kCounters = 9;

void classify(const RttTriple& t, std::size_t* c) {
  const auto s = savings(t);
  const double margin = t.rtt_direct_ms - t.rtt_server_ms;
  for (std::size_t i = 0; i < 4; ++i) c[i] += margin >= kMarginThresholds[i];
  c[4] += t.rtt_dns_ms < kDnsBelowMs;
  for (std::size_t i = 0; i < 2; ++i) c[5 + i] += s.no_retry_ms >= kNoRetrySavingThresholds[i];
  for (std::size_t i = 0; i < 2; ++i) c[7 + i] += s.retry_ms >= kRetrySavingThresholds[i];
}

StatsReport assemble(const std::vector<RttTriple>& data, const std::size_t* c) {
  const double n = static_cast<double>(data.size());
  StatsReport r;
  r.nodes = data.size();
  auto share = [&](double t, std::size_t k) { return ThresholdShare{t, k, static_cast<double>(k) / n}; };
  for (std::size_t i = 0; i < 4; ++i) r.margin_at_least.push_back(share(kMarginThresholds[i], c[i]));
  r.dns_below = share(kDnsBelowMs, c[4]);
  for (std::size_t i = 0; i < 2; ++i) r.saving_no_retry_at_least.push_back(share(kNoRetrySavingThresholds[i], c[5 + i]));
  for (std::size_t i = 0; i < 2; ++i) r.saving_retry_at_least.push_back(share(kRetrySavingThresholds[i], c[7 + i]));
  return r;
}

}  // namespace

StatsReport dataset_stats_serial(const std::vector<RttTriple>& data) {
  if (data.empty()) throw std::invalid_argument("empty dataset");
  std::size_t c[kCounters] = {};
  for (const auto& t : data) classify(t, c);
  auto r = assemble(data, c);
  for (auto m : kAllMetrics) r.cdfs[m] = emit_cdf(data, m);
  return r;
}

StatsReport dataset_stats(const std::vector<RttTriple>& data) {
  if (data.empty()) throw std::invalid_argument("empty dataset");
  std::size_t c[kCounters] = {};
  const auto n = static_cast<std::ptrdiff_t>(data.size());
#pragma omp parallel for reduction(+ : c[:kCounters]) schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) classify(data[i], c);
  auto r = assemble(data, c);

  constexpr int kMetrics = static_cast<int>(std::size(kAllMetrics));
  std::vector<CdfPoint> cdfs[kMetrics];
#pragma omp parallel for schedule(dynamic, 1)
  for (int m = 0; m < kMetrics; ++m) cdfs[m] = emit_cdf(data, kAllMetrics[m]);
  for (int m = 0; m < kMetrics; ++m) r.cdfs[kAllMetrics[m]] = std::move(cdfs[m]);
  return r;
}

std::string StatsReport::to_json() const {
  using nlohmann::json;
  auto shares = [](const std::vector<ThresholdShare>& v) {
    json a = json::array();
    for (const auto& s : v) a.push_back({{"threshold_ms", s.threshold_ms}, {"count", s.count}, {"fraction", s.fraction}});
    return a;
  };
  json j{{"nodes", nodes},
         {"margin_at_least", shares(margin_at_least)},
         {"dns_below", {{"threshold_ms", dns_below.threshold_ms}, {"count", dns_below.count}, {"fraction", dns_below.fraction}}},
         {"saving_no_retry_at_least", shares(saving_no_retry_at_least)},
         {"saving_retry_at_least", shares(saving_retry_at_least)}};
  json c = json::object();
  for (const auto& [m, pts] : cdfs) {
    json a = json::array();
    for (const auto& p : pts) a.push_back({p.value, p.fraction});
    c[std::string(to_string(m))] = a;
  }
  j["cdfs"] = c;
  return j.dump(2);
}

}  // namespace qsk::latmodel
