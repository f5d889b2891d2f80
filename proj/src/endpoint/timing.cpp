#include "qsk/endpoint/timing.hpp"

#include <algorithm>
#include <nlohmann/json.hpp>
#include <stdexcept>

namespace qsk::endpoint {

std::string TimingSummary::to_json() const {
  return nlohmann::json{{"summary", true},  {"mode", to_string(mode)},   {"runs", runs},
                        {"failures", failures}, {"min_ms", min_ms},     {"median_ms", median_ms}}
      .dump();
}

TimingSummary summarize(Mode mode, const std::vector<TimingRecord>& records) {
  TimingSummary s;
  s.mode = mode;
  s.runs = records.size();
  std::vector<double> ok;
  for (const auto& r : records) {
    if (r.ok) {
      ok.push_back(r.t_connect_ms);
    } else {
      ++s.failures;
    }
  }
  if (ok.empty()) return s;
  std::sort(ok.begin(), ok.end());
  s.min_ms = ok.front();
  const auto n = ok.size();
  s.median_ms = n % 2 ? ok[n / 2] : (ok[n / 2 - 1] + ok[n / 2]) / 2.0;
  return s;
}

TimingSuiteResult run_timing_suite(Environment& env, const Driver& drive, const ConnectConfig& config,
                                   int repetitions, const std::function<void(const TimingRecord&)>& on_record) {
  if (repetitions < 1) throw std::invalid_argument("repetitions must be at least 1");
  config.validate();
  const double attempt_timeout = config.quic.handshake_timeout_ms + config.migration_timeout_ms + 5000;

  std::unique_ptr<ProxyAssociation> warm;
  auto ensure_warm = [&]() -> bool {
    if (warm && warm->ready()) return true;
    warm = std::make_unique<ProxyAssociation>(env, *config.proxy);
    bool settled = false;
    warm->open([&settled](bool) { settled = true; });
    drive([&] { return settled; }, attempt_timeout);
    return warm->ready();
  };

  TimingSuiteResult result;
  for (int i = 0; i < repetitions; ++i) {
    TimingRecord rec;
    if (config.mode == Mode::Warm && !ensure_warm()) {
      rec.mode = Mode::Warm;
      rec.error = "association failure: " + (warm ? warm->error() : std::string("none"));
    } else {
      ClientSession session(env, config, warm.get());
      session.start();
      drive([&] { return session.finished(); }, attempt_timeout);
      rec = session.record();
      if (!session.finished()) {
        rec.ok = false;
        rec.error = "timeout";
      }
    }
    if (on_record) on_record(rec);
    result.records.push_back(std::move(rec));
  }
  result.summary = summarize(config.mode, result.records);
  return result;
}

}  // namespace qsk::endpoint
