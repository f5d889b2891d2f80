#pragma once

#include <cstddef>
#include <optional>
#include <vector>

namespace qsk::quic {

// Exponentially weighted RTT estimate, 1/8 weight on each new sample.
class RttEstimator {
public:
  void on_sample(double rtt_ms);
  void reset();

  std::optional<double> smoothed_ms() const noexcept { return smoothed_; }
  std::optional<double> latest_ms() const noexcept { return latest_; }
  std::size_t sample_count() const noexcept { return samples_.size(); }
  // Every sample since the last reset, oldest first.
  const std::vector<double>& samples() const noexcept { return samples_; }

private:
  std::optional<double> smoothed_;
  std::optional<double> latest_;
  std::vector<double> samples_;
};

}  // namespace qsk::quic
