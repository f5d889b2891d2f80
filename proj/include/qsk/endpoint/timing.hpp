#pragma once

#include <functional>
#include <string>
#include <vector>

#include "qsk/endpoint/client.hpp"

namespace qsk::endpoint {

// Runs the environment until pred() holds or timeout_ms passes; returns pred().
using Driver = std::function<bool(const std::function<bool()>& pred, double timeout_ms)>;

struct TimingSummary {
  Mode mode = Mode::Default;
  std::size_t runs = 0;
  std::size_t failures = 0;
  double min_ms = 0;
  double median_ms = 0;
  std::string to_json() const;
};

struct TimingSuiteResult {
  std::vector<TimingRecord> records;
  TimingSummary summary;
};

// Minimum and median over successful records; failures are only counted.
TimingSummary summarize(Mode mode, const std::vector<TimingRecord>& records);

// Sequential repetitions. Warm mode sets up one association first (untimed)
// and reuses it; cold mode builds a fresh one inside each timed attempt;
// default mode resolves afresh every time.
TimingSuiteResult run_timing_suite(Environment& env, const Driver& drive, const ConnectConfig& config,
                                   int repetitions, const std::function<void(const TimingRecord&)>& on_record = {});

}  // namespace qsk::endpoint
