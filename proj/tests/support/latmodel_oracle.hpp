#pragma once

#include <map>
#include <vector>

#include "qsk/latmodel/model.hpp"

namespace oracle {

// Brute-force recount of every threshold, straight from the definitions.
struct Recount {
  std::size_t margin[4]{}, dns = 0, no_retry[2]{}, retry[2]{};
};

inline Recount recount(const std::vector<qsk::latmodel::RttTriple>& data) {
  const double margins[] = {5, 10, 40, 50};
  Recount r;
  for (const auto& t : data) {
    const double m = t.rtt_direct_ms - t.rtt_server_ms;
    for (int i = 0; i < 4; ++i)
      if (m >= margins[i]) ++r.margin[i];
    if (t.rtt_dns_ms < 10) ++r.dns;
    if (m >= 15) ++r.no_retry[0];
    if (m >= 30) ++r.no_retry[1];
    if (2 * m >= 30) ++r.retry[0];
    if (2 * m >= 60) ++r.retry[1];
  }
  return r;
}

// k/n with k the count of values <= v, one point per distinct value.
inline std::vector<qsk::latmodel::CdfPoint> cdf(const std::vector<double>& values) {
  std::map<double, std::size_t> counts;
  for (double v : values) ++counts[v];
  std::vector<qsk::latmodel::CdfPoint> out;
  std::size_t k = 0;
  for (auto& [v, c] : counts) {
    k += c;
    out.push_back({v, static_cast<double>(k) / static_cast<double>(values.size())});
  }
  return out;
}

}  // namespace oracle
